use proptest::prelude::*;
use ssr::logic::{canonicalize_atom, parse_formula, ArithOp, CmpOp, Formula, NumExpr, PredicateAtom, Sort, Term};

fn obj() -> impl Strategy<Value = String> {
    prop_oneof![Just("a".to_string()), Just("bob".to_string()), Just("Fae".to_string())]
}

fn num_expr() -> impl Strategy<Value = NumExpr> {
    let leaf = prop_oneof![
        (-20i64..20).prop_map(NumExpr::Int),
        (prop_oneof![Just("Pos"), Just("Age")], obj()).prop_map(|(n, o)| NumExpr::Atom(PredicateAtom::numeric(n, o))),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (
            prop_oneof![
                Just(ArithOp::Pow),
                Just(ArithOp::Mul),
                Just(ArithOp::FloorDiv),
                Just(ArithOp::Div),
                Just(ArithOp::Add),
                Just(ArithOp::Sub)
            ],
            inner.clone(),
            inner,
        )
            .prop_map(|(op, l, r)| {
                let r = match (op, r) {
                    (ArithOp::Div | ArithOp::FloorDiv, NumExpr::Int(0)) => NumExpr::Int(1),
                    (_, r) => r,
                };
                NumExpr::Arith(op, Box::new(l), Box::new(r))
            })
    })
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Lt),
        Just(CmpOp::Gt),
        Just(CmpOp::Le),
        Just(CmpOp::Ge),
        Just(CmpOp::Eq),
        Just(CmpOp::Ne)
    ]
}

/// Quantifier-free formulas; `var` may appear as an argument when set.
fn qf_formula(var: Option<&'static str>) -> BoxedStrategy<Formula> {
    let term = match var {
        Some(v) => prop_oneof![obj().prop_map(Term::Obj), Just(Term::Var(v.to_string()))].boxed(),
        None => obj().prop_map(Term::Obj).boxed(),
    };
    let leaf = prop_oneof![
        (prop_oneof![Just("Happy"), Just("Red"), Just("Wumpus")], term)
            .prop_map(|(n, t)| Formula::Atom(PredicateAtom::new(n, vec![t], Sort::Boolean))),
        any::<bool>().prop_map(Formula::Bool),
        (cmp_op(), num_expr(), num_expr()).prop_map(|(op, l, r)| Formula::Compare(op, l, r)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::Iff(Box::new(a), Box::new(b))),
        ]
    })
    .boxed()
}

fn mentions_x(f: &Formula) -> bool {
    f.atoms().iter().any(|a| a.args.iter().any(Term::is_var))
}

fn formula() -> impl Strategy<Value = Formula> {
    prop_oneof![
        qf_formula(None),
        (any::<bool>(), qf_formula(Some("x")), qf_formula(None)).prop_map(|(universal, body, other)| {
            let body = if mentions_x(&body) {
                body
            } else {
                Formula::And(vec![
                    Formula::Atom(PredicateAtom::new("Jompus", vec![Term::Var("x".into())], Sort::Boolean)),
                    body,
                ])
            };
            let q = if universal {
                Formula::ForAll("x".into(), Box::new(body))
            } else {
                Formula::Exists("x".into(), Box::new(body))
            };
            Formula::And(vec![other, q])
        }),
    ]
}

fn full_parens_num(e: &NumExpr) -> String {
    match e {
        NumExpr::Int(v) => format!("({v})"),
        NumExpr::Atom(a) => format!("{a}"),
        NumExpr::Arith(op, l, r) => format!("({} {} {})", full_parens_num(l), op.symbol(), full_parens_num(r)),
    }
}

fn full_parens(f: &Formula) -> String {
    let join = |xs: &[Formula], sep: &str| xs.iter().map(full_parens).collect::<Vec<_>>().join(sep);
    match f {
        Formula::Atom(a) => format!("{a}"),
        Formula::Bool(b) => format!("BoolVal({})", if *b { "True" } else { "False" }),
        Formula::Not(x) => format!("(not {})", full_parens(x)),
        Formula::And(xs) => format!("({})", join(xs, " and ")),
        Formula::Or(xs) => format!("({})", join(xs, " or ")),
        Formula::Implies(a, b) => format!("({} -> {})", full_parens(a), full_parens(b)),
        Formula::Iff(a, b) => format!("({} <-> {})", full_parens(a), full_parens(b)),
        Formula::ForAll(v, b) => format!("(forall {v}. {})", full_parens(b)),
        Formula::Exists(v, b) => format!("(exists {v}. {})", full_parens(b)),
        Formula::Compare(op, l, r) => format!("({} {} {})", full_parens_num(l), op.symbol(), full_parens_num(r)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn pretty_print_round_trips(f in formula()) {
        let text = f.to_string();
        let back = parse_formula(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(back, f);
    }

    #[test]
    fn redundant_parentheses_do_not_matter(f in formula()) {
        let full = parse_formula(&full_parens(&f)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let minimal = parse_formula(&f.to_string()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&full, &minimal);
        prop_assert_eq!(full, f);
    }

    #[test]
    fn canonicalization_is_idempotent(name in "[A-Z][a-z]{1,5}", args in prop::collection::vec(obj(), 0..4)) {
        let a = PredicateAtom::new(name, args.into_iter().map(Term::Obj).collect(), Sort::Boolean);
        let once = canonicalize_atom(&a);
        prop_assert!(once.args.len() <= 1);
        prop_assert_eq!(canonicalize_atom(&once), once);
    }
}
