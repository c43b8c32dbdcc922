use serde::Serialize;

use super::{IRule, Lit, Property, Residual, Rule};
use crate::logic::{CmpOp, Formula, NumExpr, Sort};
use crate::solver::{Engine, GroundAtomTable, GroundConstraint, SolveError};

/// Constraints beyond this many clauses stay residual.
const MAX_CLAUSES: usize = 256;
/// Comparisons against a constant are expanded only over domains this small.
const MAX_EXPANSION: usize = 16;

/// Clause-form view of a constraint set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalized {
    pub properties: Vec<Property>,
    pub rules: Vec<Rule>,
    pub residual: Vec<Formula>,
}

pub(crate) struct NormalizedLits {
    pub givens: Vec<Lit>,
    pub rules: Vec<IRule>,
    pub residual: Vec<Residual>,
}

/// Split constraints into unit properties, rules and residual constraints.
pub fn normalize(table: &GroundAtomTable, constraints: &[GroundConstraint]) -> Result<Normalized, SolveError> {
    let engine = Engine::new(table, u64::MAX);
    let n = normalize_lits(&engine, constraints)?;
    let prop = |l: &Lit| {
        let atom = table.entry(l.atom).atom.clone();
        if l.eq {
            Property::Is(atom, table.value(l.atom, l.value))
        } else {
            Property::IsNot(atom, l.value)
        }
    };
    Ok(Normalized {
        properties: n.givens.iter().map(prop).collect(),
        rules: n
            .rules
            .iter()
            .map(|r| Rule {
                premises: r.premises.iter().map(prop).collect(),
                conclusions: r.conclusions.iter().map(prop).collect(),
                origin: r.origin,
            })
            .collect(),
        residual: n.residual.into_iter().map(|r| r.formula).collect(),
    })
}

/// Negation normal form with each literal tagged by the side of the
/// implication it came from (`true` for the conclusion side).
enum N {
    Lit(Lit, bool),
    True,
    False,
    And(Vec<N>),
    Or(Vec<N>),
    Opaque,
}

struct Conv<'a, 't> {
    engine: &'a Engine<'t>,
}

impl Conv<'_, '_> {
    fn is_bool(&self, i: usize) -> bool {
        self.engine.table().entry(i).atom.sort == Sort::Boolean
    }

    fn neg(&self, l: Lit) -> Lit {
        if self.is_bool(l.atom) {
            Lit::eq(l.atom, 1 - l.value)
        } else {
            Lit { eq: !l.eq, ..l }
        }
    }

    fn nnf(&self, f: &Formula, pos: bool, concl: bool) -> Result<N, SolveError> {
        Ok(match f {
            Formula::Atom(a) => N::Lit(Lit::eq(self.engine.atom_index(a, Sort::Boolean)?, pos as i64), concl),
            Formula::Bool(b) => {
                if *b == pos {
                    N::True
                } else {
                    N::False
                }
            }
            Formula::Not(x) => self.nnf(x, !pos, concl)?,
            Formula::And(xs) | Formula::Or(xs) => {
                let parts = xs.iter().map(|x| self.nnf(x, pos, concl)).collect::<Result<Vec<_>, _>>()?;
                if matches!(f, Formula::And(_)) == pos {
                    N::And(parts)
                } else {
                    N::Or(parts)
                }
            }
            Formula::Implies(a, b) => {
                if pos {
                    N::Or(vec![self.nnf(a, false, false)?, self.nnf(b, true, concl)?])
                } else {
                    N::And(vec![self.nnf(a, true, concl)?, self.nnf(b, false, concl)?])
                }
            }
            Formula::Iff(a, b) => {
                let fwd = Formula::Implies(a.clone(), b.clone());
                let bwd = Formula::Implies(b.clone(), a.clone());
                self.nnf(&Formula::And(vec![fwd, bwd]), pos, concl)?
            }
            Formula::ForAll(..) | Formula::Exists(..) => N::Opaque,
            Formula::Compare(op, l, r) => {
                let op = if pos { *op } else { op.negate() };
                let (atom, c, op) = match (l, r) {
                    (NumExpr::Atom(a), NumExpr::Int(c)) => (a, *c, op),
                    (NumExpr::Int(c), NumExpr::Atom(a)) => (a, *c, op.flip()),
                    _ => return Ok(N::Opaque),
                };
                let i = self.engine.atom_index(atom, Sort::Numeric)?;
                let domain = &self.engine.table().entry(i).domain;
                match op {
                    CmpOp::Eq if domain.contains(&c) => N::Lit(Lit::eq(i, c), concl),
                    CmpOp::Eq => N::False,
                    CmpOp::Ne if domain.contains(&c) => N::Lit(Lit { atom: i, value: c, eq: false }, concl),
                    CmpOp::Ne => N::True,
                    _ if domain.len() <= MAX_EXPANSION => {
                        N::Or(domain.iter().filter(|v| op.holds(*v, &c)).map(|v| N::Lit(Lit::eq(i, *v), concl)).collect())
                    }
                    _ => N::Opaque,
                }
            }
        })
    }

    /// Clauses of `n`, or `None` when it cannot be put in clause form cheaply.
    fn cnf(&self, n: &N) -> Option<Vec<Vec<(Lit, bool)>>> {
        match n {
            N::Lit(l, c) => Some(vec![vec![(*l, *c)]]),
            N::True => Some(Vec::new()),
            N::False => Some(vec![Vec::new()]),
            N::Opaque => None,
            N::And(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    out.extend(self.cnf(x)?);
                    if out.len() > MAX_CLAUSES {
                        return None;
                    }
                }
                Some(out)
            }
            N::Or(xs) => {
                let mut acc: Vec<Vec<(Lit, bool)>> = vec![Vec::new()];
                for x in xs {
                    let cs = self.cnf(x)?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for c in &cs {
                            let mut m = a.clone();
                            m.extend(c.iter().copied());
                            next.push(m);
                        }
                    }
                    if next.len() > MAX_CLAUSES {
                        return None;
                    }
                    acc = next;
                }
                Some(acc)
            }
        }
    }

    /// Drop duplicate literals; `None` for tautologies.
    fn simplify(&self, clause: Vec<(Lit, bool)>) -> Option<Vec<(Lit, bool)>> {
        let mut out: Vec<(Lit, bool)> = Vec::new();
        for (l, c) in clause {
            if out.iter().any(|(m, _)| *m == self.neg(l)) {
                return None;
            }
            if !l.eq && out.iter().any(|(m, _)| m.atom == l.atom && !m.eq && m.value != l.value) {
                // a != u or a != v always holds.
                return None;
            }
            if let Some(e) = out.iter_mut().find(|(m, _)| *m == l) {
                e.1 |= c;
            } else {
                out.push((l, c));
            }
        }
        Some(out)
    }
}

pub(crate) fn normalize_lits(engine: &Engine<'_>, constraints: &[GroundConstraint]) -> Result<NormalizedLits, SolveError> {
    let conv = Conv { engine };
    let mut out = NormalizedLits {
        givens: Vec::new(),
        rules: Vec::new(),
        residual: Vec::new(),
    };
    for c in constraints {
        let n = conv.nnf(&c.formula, true, true)?;
        let clauses = match conv.cnf(&n) {
            Some(cs) if cs.iter().all(|c| !c.is_empty()) => cs,
            _ => {
                out.residual.push(Residual {
                    formula: c.formula.clone(),
                    compiled: engine.compile(&c.formula)?,
                    origin: c.origin,
                });
                continue;
            }
        };
        for clause in clauses {
            let Some(clause) = conv.simplify(clause) else { continue };
            if let [(l, _)] = clause.as_slice() {
                if !out.givens.contains(l) {
                    out.givens.push(*l);
                }
                continue;
            }
            let all_premise_side = clause.iter().all(|(_, c)| !c);
            let mut rule = IRule {
                premises: Vec::new(),
                conclusions: Vec::new(),
                origin: c.origin,
            };
            for (l, concl) in clause {
                if concl || all_premise_side {
                    rule.conclusions.push(l);
                } else {
                    rule.premises.push(conv.neg(l));
                }
            }
            out.rules.push(rule);
        }
    }
    Ok(out)
}

/// For an implication query `P -> Q` whose premise is a conjunction of
/// literals, the premise literals and the new target `Q`.
pub(crate) fn query_as_rule(engine: &Engine<'_>, q: &Formula) -> Result<Option<(Vec<Lit>, Formula)>, SolveError> {
    let Formula::Implies(p, concl) = q else { return Ok(None) };
    let conv = Conv { engine };
    let Some(clauses) = conv.cnf(&conv.nnf(p, true, true)?) else {
        return Ok(None);
    };
    let mut lits = Vec::new();
    for c in clauses {
        match c.as_slice() {
            [(l, _)] => lits.push(*l),
            _ => return Ok(None),
        }
    }
    Ok(Some((lits, (**concl).clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_problem;
    use crate::sanitize::sanitized_facts;
    use crate::solver::{ground, SolverConfig};

    fn norm(json: &str) -> Normalized {
        let p = parse_problem(json).unwrap();
        let g = ground(&p, &sanitized_facts(&p), &SolverConfig::default()).unwrap();
        normalize(&g.table, &g.all_constraints()).unwrap()
    }

    #[test]
    fn unit_facts_and_rules() {
        let n = norm(
            r#"{"objects":["Fae"],"facts":["forall x. Jompus(x) -> Zumpus(x)","forall x. (Modern(x) and Building(x)) -> (Concrete(x) or Steel(x))","Jompus(Fae)"],"query":"Zumpus(Fae)"}"#,
        );
        assert_eq!(n.properties.len(), 1);
        assert_eq!(n.rules.len(), 2);
        assert_eq!(n.rules[0].to_string(), "Jompus(Fae) -> Zumpus(Fae)");
        assert_eq!(n.rules[1].to_string(), "Modern(Fae) and Building(Fae) -> Concrete(Fae) or Steel(Fae)");
        assert!(n.residual.is_empty());
    }

    #[test]
    fn disjunctive_conclusion() {
        let n = norm(
            r#"{"objects":["Tom"],"facts":["forall x. Wild_turkey(x) -> (Eastern(x) or Osceola(x) or Goulds(x) or Merriams(x) or Rio_Grande(x) or Ocellated(x))"],"query":"Ocellated(Tom)"}"#,
        );
        assert_eq!(n.rules.len(), 1);
        assert_eq!(n.rules[0].premises.len(), 1);
        assert_eq!(n.rules[0].conclusions.len(), 6);
    }

    #[test]
    fn comparisons_between_atoms_are_residual() {
        let n = norm(r#"{"objects":["robin","raven"],"facts":["Pos(robin) > Pos(raven)","Pos(robin) = 2"],"query":"Pos(raven) = 1"}"#);
        assert_eq!(n.properties.len(), 1);
        // The fact plus the distinctness side constraint.
        assert_eq!(n.residual.len(), 2);
    }

    #[test]
    fn iff_splits() {
        let n = norm(r#"{"objects":["a"],"facts":["Red(a) <-> Big(a)"],"query":"Big(a)"}"#);
        assert_eq!(n.rules.len(), 2);
    }
}
