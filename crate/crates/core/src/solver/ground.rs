use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Serialize;

use super::engine::apply_arith;
use super::{GroundAtomTable, GroundConstraint, SolveError, SolverConfig};
use crate::logic::{canonicalize_atom, ArithOp, CmpOp, Formula, NumExpr, PredicateAtom, Problem, QuerySpec, Schema, Sort, Term};
use crate::sanitize::SanitizedFactSet;

/// The query after grounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GroundedQuery {
    Boolean(Formula),
    Candidates(Vec<(String, Formula)>),
    FreeNumeric(PredicateAtom),
}

/// Everything the solver needs for one problem.
#[derive(Debug, Clone, Serialize)]
pub struct Grounding {
    pub table: GroundAtomTable,
    /// One constraint per sanitized fact, in fact order.
    pub facts: Vec<GroundConstraint>,
    /// Constraints injected by the schema (ordering distinctness).
    pub side: Vec<GroundConstraint>,
    pub query: GroundedQuery,
}

impl Grounding {
    /// Facts followed by side constraints.
    pub fn all_constraints(&self) -> Vec<GroundConstraint> {
        self.facts.iter().chain(self.side.iter()).cloned().collect()
    }

    /// The grounded constraints in the surface syntax, one per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in self.facts.iter().chain(self.side.iter()) {
            let tag = c.origin.map(|i| format!("fact {i}")).unwrap_or_else(|| "side".into());
            let _ = writeln!(out, "[{tag}] {}", c.formula);
        }
        out
    }
}

/// Expand quantifiers over `objects` and fold every atom to canonical form.
pub fn ground_formula(f: &Formula, objects: &[String]) -> Formula {
    match f {
        Formula::Atom(a) => Formula::Atom(canonicalize_atom(a)),
        Formula::Bool(b) => Formula::Bool(*b),
        Formula::Not(x) => Formula::not(ground_formula(x, objects)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| ground_formula(x, objects)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| ground_formula(x, objects)).collect()),
        Formula::Implies(a, b) => Formula::implies(ground_formula(a, objects), ground_formula(b, objects)),
        Formula::Iff(a, b) => Formula::Iff(Box::new(ground_formula(a, objects)), Box::new(ground_formula(b, objects))),
        Formula::ForAll(v, body) | Formula::Exists(v, body) => {
            let universal = matches!(f, Formula::ForAll(..));
            let mut items: Vec<Formula> = objects
                .iter()
                .map(|o| ground_formula(&substitute(body, v, o), objects))
                .collect();
            match items.len() {
                0 => Formula::Bool(universal),
                1 => items.pop().unwrap_or(Formula::Bool(universal)),
                _ if universal => Formula::And(items),
                _ => Formula::Or(items),
            }
        }
        Formula::Compare(op, l, r) => Formula::Compare(*op, ground_num(l), ground_num(r)),
    }
}

fn ground_num(e: &NumExpr) -> NumExpr {
    match e {
        NumExpr::Int(v) => NumExpr::Int(*v),
        NumExpr::Atom(a) => NumExpr::Atom(canonicalize_atom(a)),
        NumExpr::Arith(op, l, r) => NumExpr::Arith(*op, Box::new(ground_num(l)), Box::new(ground_num(r))),
    }
}

fn subst_atom(a: &PredicateAtom, var: &str, obj: &str) -> PredicateAtom {
    PredicateAtom {
        name: a.name.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) if v == var => Term::Obj(obj.to_string()),
                t => t.clone(),
            })
            .collect(),
        sort: a.sort,
    }
}

fn subst_num(e: &NumExpr, var: &str, obj: &str) -> NumExpr {
    match e {
        NumExpr::Int(v) => NumExpr::Int(*v),
        NumExpr::Atom(a) => NumExpr::Atom(subst_atom(a, var, obj)),
        NumExpr::Arith(op, l, r) => NumExpr::Arith(*op, Box::new(subst_num(l, var, obj)), Box::new(subst_num(r, var, obj))),
    }
}

fn substitute(f: &Formula, var: &str, obj: &str) -> Formula {
    match f {
        Formula::Atom(a) => Formula::Atom(subst_atom(a, var, obj)),
        Formula::Bool(b) => Formula::Bool(*b),
        Formula::Not(x) => Formula::not(substitute(x, var, obj)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| substitute(x, var, obj)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| substitute(x, var, obj)).collect()),
        Formula::Implies(a, b) => Formula::implies(substitute(a, var, obj), substitute(b, var, obj)),
        Formula::Iff(a, b) => Formula::Iff(Box::new(substitute(a, var, obj)), Box::new(substitute(b, var, obj))),
        // An inner binder of the same name shadows the outer one.
        Formula::ForAll(v, _) | Formula::Exists(v, _) if v == var => f.clone(),
        Formula::ForAll(v, b) => Formula::ForAll(v.clone(), Box::new(substitute(b, var, obj))),
        Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(substitute(b, var, obj))),
        Formula::Compare(op, l, r) => Formula::Compare(*op, subst_num(l, var, obj), subst_num(r, var, obj)),
    }
}

fn collect_arith(f: &Formula, ops: &mut BTreeSet<ArithOp>) {
    fn num(e: &NumExpr, ops: &mut BTreeSet<ArithOp>) {
        if let NumExpr::Arith(op, l, r) = e {
            ops.insert(*op);
            num(l, ops);
            num(r, ops);
        }
    }
    match f {
        Formula::Atom(_) | Formula::Bool(_) => {}
        Formula::Not(x) | Formula::ForAll(_, x) | Formula::Exists(_, x) => collect_arith(x, ops),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| collect_arith(x, ops)),
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            collect_arith(a, ops);
            collect_arith(b, ops);
        }
        Formula::Compare(_, l, r) => {
            num(l, ops);
            num(r, ops);
        }
    }
}

/// Constants of the problem plus every value one arithmetic step away.
fn default_domain(formulas: &[&Formula], bound: i64) -> Vec<i64> {
    let mut consts = Vec::new();
    let mut ops = BTreeSet::new();
    for f in formulas {
        f.int_constants(&mut consts);
        collect_arith(f, &mut ops);
    }
    let base: BTreeSet<i64> = consts.into_iter().collect();
    let mut out = base.clone();
    for &a in &base {
        for &b in &base {
            for &op in &ops {
                if let Some(v) = apply_arith(op, Ratio::from_integer(a), Ratio::from_integer(b)) {
                    if v.is_integer() {
                        out.insert(v.to_integer());
                    }
                }
            }
        }
    }
    out.into_iter().filter(|v| v.abs() <= bound).collect()
}

/// Ground the sanitized facts and the query of a problem.
pub fn ground(problem: &Problem, facts: &SanitizedFactSet, config: &SolverConfig) -> Result<Grounding, SolveError> {
    let objects = &problem.objects;
    let fact_forms: Vec<Formula> = facts.facts.iter().map(|f| ground_formula(&f.formula, objects)).collect();
    let query = match &problem.query {
        QuerySpec::Boolean(f) => GroundedQuery::Boolean(ground_formula(f, objects)),
        QuerySpec::Candidates(c) => GroundedQuery::Candidates(c.iter().map(|(l, f)| (l.clone(), ground_formula(f, objects))).collect()),
        QuerySpec::FreeNumeric(a) => GroundedQuery::FreeNumeric(canonicalize_atom(a)),
        QuerySpec::Malformed { reason, .. } => return Err(SolveError::InvariantViolation(format!("query malformed: {reason}"))),
    };

    let mut ordered: Vec<PredicateAtom> = Vec::new();
    fn push(ordered: &mut Vec<PredicateAtom>, a: &PredicateAtom) {
        if !ordered.contains(a) {
            ordered.push(a.clone());
        }
    }
    for f in &fact_forms {
        f.visit_atoms(&mut |a| push(&mut ordered, a));
    }
    let query_forms: Vec<&Formula> = match &query {
        GroundedQuery::Boolean(f) => vec![f],
        GroundedQuery::Candidates(c) => c.iter().map(|(_, f)| f).collect(),
        GroundedQuery::FreeNumeric(_) => Vec::new(),
    };
    for f in &query_forms {
        f.visit_atoms(&mut |a| push(&mut ordered, a));
    }
    if let GroundedQuery::FreeNumeric(a) = &query {
        push(&mut ordered, a);
    }
    let ordering = problem.schema == Schema::Ordering;
    if ordering {
        let pos_name = ordered
            .iter()
            .find(|a| Problem::is_position_atom(a))
            .map(|a| a.name.clone())
            .unwrap_or_else(|| "Pos".to_string());
        for o in objects {
            push(&mut ordered, &PredicateAtom::numeric(pos_name.clone(), o.clone()));
        }
    }

    let mut sorts: HashMap<(String, Vec<Term>), Sort> = HashMap::new();
    for a in &ordered {
        if let Some(s) = sorts.insert((a.name.clone(), a.args.clone()), a.sort) {
            if s != a.sort {
                return Err(SolveError::SortConflict(a.to_string()));
            }
        }
        if a.args.iter().any(Term::is_var) {
            return Err(SolveError::InvariantViolation(format!("free variable in `{a}`")));
        }
    }

    let mut all_forms: Vec<&Formula> = fact_forms.iter().collect();
    all_forms.extend(query_forms.iter().copied());
    let fallback = default_domain(&all_forms, config.domain_bound);
    let n = objects.len() as i64;

    let mut table = GroundAtomTable::new();
    for a in ordered {
        let domain = match a.sort {
            Sort::Boolean => vec![0, 1],
            Sort::Numeric => {
                let d = if let Some(d) = config.numeric_domains.get(&a.name) {
                    let mut d = d.clone();
                    d.sort_unstable();
                    d.dedup();
                    d
                } else if ordering && Problem::is_position_atom(&a) {
                    (1..=n).collect()
                } else {
                    fallback.clone()
                };
                if d.is_empty() {
                    return Err(SolveError::DomainEmpty(a.to_string()));
                }
                d
            }
        };
        table.insert(a, domain);
    }

    let mut side = Vec::new();
    if ordering {
        let pos: Vec<PredicateAtom> = table
            .entries()
            .iter()
            .filter(|e| Problem::is_position_atom(&e.atom))
            .map(|e| e.atom.clone())
            .collect();
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                side.push(GroundConstraint {
                    formula: Formula::Compare(CmpOp::Ne, NumExpr::Atom(pos[i].clone()), NumExpr::Atom(pos[j].clone())),
                    origin: None,
                });
            }
        }
    }

    let facts = fact_forms
        .into_iter()
        .zip(&facts.facts)
        .map(|(formula, wf)| GroundConstraint {
            formula,
            origin: Some(wf.index),
        })
        .collect();
    Ok(Grounding { table, facts, side, query })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_problem};
    use crate::sanitize::sanitized_facts;

    #[test]
    fn single_object_forall() {
        let f = parse_formula("forall x. Jompus(x) -> Zumpus(x)").unwrap();
        let g = ground_formula(&f, &["Fae".to_string()]);
        assert_eq!(g, parse_formula("Jompus(Fae) -> Zumpus(Fae)").unwrap());
    }

    #[test]
    fn folding_after_substitution() {
        let f = parse_formula("forall x. Likes(bear, x) -> Kind(x)").unwrap();
        let g = ground_formula(&f, &["mouse".to_string(), "tiger".to_string()]);
        assert_eq!(
            g,
            parse_formula("(Likes_mouse(bear) -> Kind(mouse)) and (Likes_tiger(bear) -> Kind(tiger))").unwrap()
        );
    }

    #[test]
    fn raven_injection() {
        let doc = r#"{
            "objects": ["cardinal", "robin", "blue_jay", "quail", "raven"],
            "facts": ["Pos(robin) > Pos(raven)", "Pos(cardinal) = 1", "Pos(raven) > Pos(blue_jay)", "Pos(blue_jay) = 3"],
            "query": {"A": "Pos(cardinal) = 4", "B": "Pos(robin) = 4", "C": "Pos(blue_jay) = 4", "D": "Pos(quail) = 4", "E": "Pos(raven) = 4"}
        }"#;
        let p = parse_problem(doc).unwrap();
        let g = ground(&p, &sanitized_facts(&p), &SolverConfig::default()).unwrap();
        assert_eq!(g.table.len(), 5);
        assert!(g.table.numeric_atoms().all(|(_, d)| d == [1, 2, 3, 4, 5]));
        assert_eq!(g.side.len(), 10);
        assert_eq!(g.facts.len(), 4);
    }

    #[test]
    fn empty_facts_table_from_query() {
        let p = parse_problem(r#"{"objects": ["Anne"], "facts": [], "query": "Happy(Anne)"}"#).unwrap();
        let g = ground(&p, &sanitized_facts(&p), &SolverConfig::default()).unwrap();
        assert!(g.facts.is_empty());
        assert_eq!(g.table.len(), 1);
    }

    #[test]
    fn numeric_without_constants_is_domain_empty() {
        let p = parse_problem(r#"{"objects": ["a", "b"], "facts": ["Age(a) > Age(b)"], "query": "Age(a) > Age(b)"}"#).unwrap();
        assert!(matches!(
            ground(&p, &sanitized_facts(&p), &SolverConfig::default()),
            Err(SolveError::DomainEmpty(_))
        ));
    }
}
