use std::collections::HashSet;

use super::{Chain, Property, Via};
use crate::logic::{CmpOp, Formula, NumExpr, PredicateAtom, Term};
use crate::solver::Value;

fn words(name: &str) -> String {
    name.replace('_', " ").to_lowercase()
}

fn object(a: &PredicateAtom) -> Option<String> {
    a.args.first().map(Term::name).map(|s| s.replace('_', " "))
}

fn article(w: &str) -> &'static str {
    if w.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

fn is_position(a: &PredicateAtom) -> bool {
    matches!(a.name.as_str(), "Pos" | "Position")
}

fn numeric(a: &PredicateAtom, v: i64, holds: bool) -> String {
    let o = object(a).unwrap_or_default();
    let not = if holds { "" } else { "not " };
    if is_position(a) {
        format!("the {o} is {not}in position {v}")
    } else if o.is_empty() {
        format!("{} is {not}{v}", words(&a.name))
    } else {
        format!("the {} of {o} is {not}{v}", words(&a.name))
    }
}

fn boolean(a: &PredicateAtom, holds: bool, kinds: &HashSet<&str>) -> String {
    let w = words(&a.name);
    let Some(o) = object(a) else {
        return if holds { w } else { format!("it is not the case that {w}") };
    };
    let not = if holds { "" } else { "not " };
    if kinds.contains(a.name.as_str()) {
        format!("{o} is {not}{} {w}", article(&w))
    } else if !w.contains(' ') {
        format!("{o} is {not}{w}")
    } else if holds {
        format!("{o} {w}")
    } else {
        format!("it is not the case that {o} {w}")
    }
}

fn sentence(p: &Property, kinds: &HashSet<&str>) -> String {
    match p {
        Property::Is(a, Value::Bool(b)) => boolean(a, *b, kinds),
        Property::Is(a, Value::Int(v)) => numeric(a, *v, true),
        Property::IsNot(a, v) => numeric(a, *v, false),
    }
}

fn target_property(f: &Formula) -> Option<Property> {
    match f {
        Formula::Atom(a) => Some(Property::Is(a.clone(), Value::Bool(true))),
        Formula::Not(x) => match &**x {
            Formula::Atom(a) => Some(Property::Is(a.clone(), Value::Bool(false))),
            _ => None,
        },
        Formula::Compare(CmpOp::Eq, NumExpr::Atom(a), NumExpr::Int(v)) => Some(Property::Is(a.clone(), Value::Int(*v))),
        Formula::Compare(CmpOp::Ne, NumExpr::Atom(a), NumExpr::Int(v)) => Some(Property::IsNot(a.clone(), *v)),
        _ => None,
    }
}

fn constraint(f: &Formula) -> String {
    if let Formula::Compare(op, NumExpr::Atom(l), NumExpr::Atom(r)) = f {
        if is_position(l) && is_position(r) {
            let (lo, ro) = (object(l).unwrap_or_default(), object(r).unwrap_or_default());
            let rel = match op {
                CmpOp::Lt => "is to the left of",
                CmpOp::Gt => "is to the right of",
                CmpOp::Le => "is not to the right of",
                CmpOp::Ge => "is not to the left of",
                CmpOp::Eq => "is in the same position as",
                CmpOp::Ne => "is in a different position from",
            };
            return format!("the {lo} {rel} the {ro}");
        }
    }
    f.to_string()
}

fn join(parts: Vec<String>) -> String {
    match parts.len() {
        0 => String::new(),
        1 => parts.into_iter().next().unwrap_or_default(),
        n => format!("{} and {}", parts[..n - 1].join(", "), parts[n - 1]),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// One numbered sentence per step, then the answer.
pub fn render_template(chain: &Chain) -> String {
    if chain.steps.is_empty() {
        return String::new();
    }
    let kinds: HashSet<&str> = chain
        .steps
        .iter()
        .filter_map(|s| match &s.via {
            Via::Rule(r) => Some(r.premises.iter().map(|p| p.atom().name.as_str())),
            _ => None,
        })
        .flatten()
        .collect();
    let mut out = String::new();
    for (i, s) in chain.steps.iter().enumerate() {
        let derived = sentence(&s.derived, &kinds);
        let supports: Vec<String> = s.supports.iter().map(|p| sentence(p, &kinds)).collect();
        let text = match &s.via {
            Via::Given => capitalize(&derived),
            Via::Rule(_) | Via::Elimination => format!("Since {}, {derived}", join(supports)),
            Via::Propagation { constraint: c, .. } => {
                let mut parts = vec![constraint(c)];
                parts.extend(supports);
                format!("Since {}, {derived}", join(parts))
            }
        };
        out.push_str(&format!("{}. {text}.\n", i + 1));
    }
    let label = &chain.conclusion.label;
    match target_property(&chain.conclusion.target) {
        Some(p) => out.push_str(&format!("Therefore, {}, so the answer is {label}.\n", sentence(&p, &kinds))),
        None => out.push_str(&format!("Therefore, the answer is {label}.\n")),
    }
    out
}
