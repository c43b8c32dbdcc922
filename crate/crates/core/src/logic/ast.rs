use std::fmt;

use serde::{Deserialize, Serialize};

/// Whether a predicate returns a truth value or a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Boolean,
    Numeric,
}

/// An argument position of a predicate application.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    /// A variable bound by an enclosing quantifier.
    Var(String),
    /// A named object of the problem universe.
    Obj(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Obj(s) => s,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

/// A predicate application.
///
/// The canonical form has at most one argument. Applications whose trailing
/// arguments are objects are folded into the name when parsed
/// (`Eats(bear, tiger)` becomes `Eats_tiger(bear)`); applications whose
/// trailing arguments are still variables keep their argument list until
/// grounding substitutes them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredicateAtom {
    pub name: String,
    pub args: Vec<Term>,
    pub sort: Sort,
}

impl PredicateAtom {
    pub fn new(name: impl Into<String>, args: Vec<Term>, sort: Sort) -> Self {
        Self {
            name: name.into(),
            args,
            sort,
        }
    }

    /// Unary boolean atom over an object.
    pub fn unary(name: impl Into<String>, obj: impl Into<String>) -> Self {
        Self::new(name, vec![Term::Obj(obj.into())], Sort::Boolean)
    }

    pub fn numeric(name: impl Into<String>, obj: impl Into<String>) -> Self {
        Self::new(name, vec![Term::Obj(obj.into())], Sort::Numeric)
    }

    pub fn is_canonical(&self) -> bool {
        self.args.len() <= 1
    }

    pub fn arg(&self) -> Option<&Term> {
        self.args.first()
    }
}

impl fmt::Display for PredicateAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", a.name())?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    /// The operator obtained by swapping the operands.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Le,
            op => op,
        }
    }

    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArithOp {
    Pow,
    Mul,
    FloorDiv,
    Div,
    Add,
    Sub,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Pow => "**",
            ArithOp::Mul => "*",
            ArithOp::FloorDiv => "//",
            ArithOp::Div => "/",
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
        }
    }

    /// Binding power; larger binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            ArithOp::Pow => 3,
            ArithOp::Mul | ArithOp::FloorDiv | ArithOp::Div => 2,
            ArithOp::Add | ArithOp::Sub => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NumExpr {
    Int(i64),
    Atom(PredicateAtom),
    Arith(ArithOp, Box<NumExpr>, Box<NumExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Atom(PredicateAtom),
    Bool(bool),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    ForAll(String, Box<Formula>),
    Exists(String, Box<Formula>),
    Compare(CmpOp, NumExpr, NumExpr),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Visit every predicate atom, in left-to-right order.
    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a PredicateAtom)) {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Bool(_) => {}
            Formula::Not(x) | Formula::ForAll(_, x) | Formula::Exists(_, x) => x.visit_atoms(f),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit_atoms(f)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
            Formula::Compare(_, l, r) => {
                l.visit_atoms(f);
                r.visit_atoms(f);
            }
        }
    }

    pub fn atoms(&self) -> Vec<&PredicateAtom> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| out.push(a));
        out
    }

    /// Integer constants appearing anywhere in the formula.
    pub fn int_constants(&self, out: &mut Vec<i64>) {
        match self {
            Formula::Atom(_) | Formula::Bool(_) => {}
            Formula::Not(x) | Formula::ForAll(_, x) | Formula::Exists(_, x) => x.int_constants(out),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.int_constants(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.int_constants(out);
                b.int_constants(out);
            }
            Formula::Compare(_, l, r) => {
                l.int_constants(out);
                r.int_constants(out);
            }
        }
    }

    /// Binding strength of the top connective, used by the printer.
    fn level(&self) -> u8 {
        match self {
            Formula::ForAll(..) | Formula::Exists(..) => 0,
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(_) => 3,
            Formula::And(_) => 4,
            Formula::Not(_) => 5,
            Formula::Compare(..) => 6,
            Formula::Atom(_) | Formula::Bool(_) => 7,
        }
    }
}

impl NumExpr {
    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a PredicateAtom)) {
        match self {
            NumExpr::Int(_) => {}
            NumExpr::Atom(a) => f(a),
            NumExpr::Arith(_, l, r) => {
                l.visit_atoms(f);
                r.visit_atoms(f);
            }
        }
    }

    pub fn int_constants(&self, out: &mut Vec<i64>) {
        match self {
            NumExpr::Int(v) => out.push(*v),
            NumExpr::Atom(_) => {}
            NumExpr::Arith(_, l, r) => {
                l.int_constants(out);
                r.int_constants(out);
            }
        }
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumExpr::Int(v) => write!(f, "{v}"),
            NumExpr::Atom(a) => write!(f, "{a}"),
            NumExpr::Arith(op, l, r) => {
                let p = op.precedence();
                // `**` is right-associative, the rest are left-associative.
                let (lp, rp) = if *op == ArithOp::Pow { (p + 1, p) } else { (p, p + 1) };
                write_num(f, l, lp)?;
                write!(f, " {} ", op.symbol())?;
                write_num(f, r, rp)
            }
        }
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, e: &NumExpr, min: u8) -> fmt::Result {
    match e {
        NumExpr::Arith(op, ..) if op.precedence() < min => write!(f, "({e})"),
        // A negative literal on the left of `**` would re-parse as a negated power.
        NumExpr::Int(v) if *v < 0 && min > 1 => write!(f, "({v})"),
        _ => write!(f, "{e}"),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Bool(b) => write!(f, "BoolVal({})", if *b { "True" } else { "False" }),
            Formula::Not(x) => {
                write!(f, "not ")?;
                write_child(f, x, 5)
            }
            Formula::And(xs) => write_list(f, xs, " and ", 4),
            Formula::Or(xs) => write_list(f, xs, " or ", 3),
            Formula::Implies(a, b) => {
                write_child(f, a, 3)?;
                write!(f, " -> ")?;
                write_child(f, b, 2)
            }
            Formula::Iff(a, b) => {
                write_child(f, a, 2)?;
                write!(f, " <-> ")?;
                write_child(f, b, 2)
            }
            Formula::ForAll(v, body) => write!(f, "forall {v}. {body}"),
            Formula::Exists(v, body) => write!(f, "exists {v}. {body}"),
            Formula::Compare(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
        }
    }
}

/// Writes `x`, parenthesized unless its top connective binds at least `min`.
fn write_child(f: &mut fmt::Formatter<'_>, x: &Formula, min: u8) -> fmt::Result {
    if x.level() >= min {
        write!(f, "{x}")
    } else {
        write!(f, "({x})")
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[Formula], sep: &str, level: u8) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        // Same-connective children are kept nested, so they need parentheses.
        write_child(f, x, level + 1)?;
    }
    Ok(())
}
