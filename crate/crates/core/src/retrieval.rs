//! Targeted premise retrieval for ambiguous answers.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{Formula, NumExpr, PredicateAtom};
use crate::solver::{Compiled, Engine, GroundAtomTable, SolveError, Value};

/// `atom = value` for one table atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub atom: PredicateAtom,
    pub value: Value,
}

impl Assignment {
    pub fn from_raw(table: &GroundAtomTable, index: usize, raw: i64) -> Self {
        Self {
            atom: table.entry(index).atom.clone(),
            value: table.value(index, raw),
        }
    }

    /// The assignment as a formula in the surface syntax.
    pub fn to_formula(&self) -> Formula {
        match self.value {
            Value::Bool(true) => Formula::Atom(self.atom.clone()),
            Value::Bool(false) => Formula::not(Formula::Atom(self.atom.clone())),
            Value::Int(v) => Formula::Compare(crate::logic::CmpOp::Eq, NumExpr::Atom(self.atom.clone()), NumExpr::Int(v)),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RetrievalOutcome {
    Resolved {
        label: String,
        final_assignment: Assignment,
        /// Every assignment visited, starting with the discriminator.
        chain: Vec<Assignment>,
    },
    Declined {
        reason: String,
        /// The assignment that was put to the verifier, if any.
        asked: Option<Assignment>,
    },
}

/// Confirms whether a premise follows from the problem statement.
pub trait PremiseVerifier {
    /// `Ok(true)` only on a strict confirmation.
    fn verify_premise(&mut self, assignment: &str) -> Result<bool, String>;
}

/// A labelled candidate compiled against the table.
pub struct CompiledCandidate {
    pub label: String,
    pub constraint: Compiled,
}

struct Probe<'e, 't> {
    engine: &'e Engine<'t>,
    base: &'e [&'e Compiled],
    candidates: &'e [CompiledCandidate],
}

impl Probe<'_, '_> {
    fn sat_with(&self, extra: &[&Compiled]) -> Result<bool, SolveError> {
        let mut cs = self.base.to_vec();
        cs.extend_from_slice(extra);
        self.engine.sat(&cs)
    }

    /// The unique satisfiable candidate under `base ∧ a`, if exactly one.
    fn unique_label(&self, a: &Compiled) -> Result<Option<usize>, SolveError> {
        let mut found = None;
        for (i, c) in self.candidates.iter().enumerate() {
            if self.sat_with(&[a, &c.constraint])? {
                if found.is_some() {
                    return Ok(None);
                }
                found = Some(i);
            }
        }
        Ok(found)
    }

    fn discriminates(&self, atom: usize, value: i64) -> Result<Option<usize>, SolveError> {
        let a = self.engine.compile_assignment(atom, value);
        if !self.sat_with(&[&a])? {
            return Ok(None);
        }
        // Already entailed by the facts: fixing it adds nothing.
        if !self.sat_with(&[&self.engine.negate(&a)])? {
            return Ok(None);
        }
        self.unique_label(&a)
    }

    fn each_assignment(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        let table = self.engine.table();
        (0..table.len()).flat_map(move |i| table.entry(i).domain.iter().map(move |&v| (i, v)))
    }
}

/// Every single-atom assignment that leaves exactly one candidate satisfiable,
/// in table order then value order, with the index of that candidate.
pub fn find_discriminators(
    engine: &Engine<'_>,
    base: &[&Compiled],
    candidates: &[CompiledCandidate],
) -> Result<Vec<(Assignment, String)>, SolveError> {
    let probe = Probe { engine, base, candidates };
    let mut out = Vec::new();
    for (i, v) in probe.each_assignment() {
        if let Some(l) = probe.discriminates(i, v)? {
            out.push((Assignment::from_raw(engine.table(), i, v), candidates[l].label.clone()));
        }
    }
    Ok(out)
}

fn first_discriminator(probe: &Probe<'_, '_>) -> Result<Option<(usize, i64, usize)>, SolveError> {
    for (i, v) in probe.each_assignment() {
        if let Some(l) = probe.discriminates(i, v)? {
            return Ok(Some((i, v, l)));
        }
    }
    Ok(None)
}

/// Replace a discriminator by assignments that entail it, until none does.
///
/// Returns the visited assignments in order; the last one is the result.
pub fn strengthen(
    engine: &Engine<'_>,
    base: &[&Compiled],
    candidates: &[CompiledCandidate],
    start: (usize, i64),
    label: usize,
) -> Result<Vec<(usize, i64)>, SolveError> {
    let probe = Probe { engine, base, candidates };
    let mut visited: HashSet<(usize, i64)> = HashSet::from([start]);
    let mut chain = vec![start];
    let mut current = start;
    'outer: loop {
        let a = engine.compile_assignment(current.0, current.1);
        let not_a = engine.negate(&a);
        for (j, w) in probe.each_assignment() {
            if visited.contains(&(j, w)) {
                continue;
            }
            let b = engine.compile_assignment(j, w);
            if !probe.sat_with(&[&b])? || !probe.sat_with(&[&b, &a])? || probe.sat_with(&[&b, &not_a])? {
                continue;
            }
            if !probe.sat_with(&[&b, &candidates[label].constraint])? {
                continue;
            }
            visited.insert((j, w));
            chain.push((j, w));
            current = (j, w);
            continue 'outer;
        }
        return Ok(chain);
    }
}

/// Find the first discriminator, strengthen it and ask the verifier.
pub fn resolve(
    engine: &Engine<'_>,
    base: &[&Compiled],
    candidates: &[CompiledCandidate],
    verifier: &mut dyn PremiseVerifier,
) -> Result<RetrievalOutcome, SolveError> {
    let probe = Probe { engine, base, candidates };
    let Some((i, v, label)) = first_discriminator(&probe)? else {
        return Ok(RetrievalOutcome::Declined {
            reason: "no discriminator".into(),
            asked: None,
        });
    };
    let chain = strengthen(engine, base, candidates, (i, v), label)?;
    let table = engine.table();
    let chain: Vec<Assignment> = chain.into_iter().map(|(j, w)| Assignment::from_raw(table, j, w)).collect();
    let final_assignment = chain.last().cloned().unwrap_or_else(|| Assignment::from_raw(table, i, v));
    match verifier.verify_premise(&final_assignment.to_string()) {
        Ok(true) => Ok(RetrievalOutcome::Resolved {
            label: candidates[label].label.clone(),
            final_assignment,
            chain,
        }),
        Ok(false) => Ok(RetrievalOutcome::Declined {
            reason: "premise not confirmed".into(),
            asked: Some(final_assignment),
        }),
        Err(e) => Ok(RetrievalOutcome::Declined {
            reason: format!("verifier unavailable: {e}"),
            asked: Some(final_assignment),
        }),
    }
}

/// A verifier with a fixed answer.
pub struct FixedVerifier(pub bool);

impl PremiseVerifier for FixedVerifier {
    fn verify_premise(&mut self, _: &str) -> Result<bool, String> {
        Ok(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn setup(atoms: &[&str]) -> GroundAtomTable {
        let mut t = GroundAtomTable::new();
        for a in atoms {
            let Formula::Atom(a) = parse_formula(a).unwrap() else { panic!() };
            t.insert(a, vec![0, 1]);
        }
        t
    }

    fn cands(engine: &Engine<'_>, q: &str) -> Vec<CompiledCandidate> {
        let q = engine.compile(&parse_formula(q).unwrap()).unwrap();
        vec![
            CompiledCandidate {
                label: "True".into(),
                constraint: q.clone(),
            },
            CompiledCandidate {
                label: "False".into(),
                constraint: engine.negate(&q),
            },
        ]
    }

    #[test]
    fn query_atom_discriminates_itself() {
        let t = setup(&["P(a)"]);
        let e = Engine::new(&t, 1_000_000);
        let c = cands(&e, "P(a)");
        let d = find_discriminators(&e, &[], &c).unwrap();
        let shown: Vec<String> = d.iter().map(|(a, l)| format!("{a}:{l}")).collect();
        assert_eq!(shown, ["not P(a):False", "P(a):True"]);
    }

    #[test]
    fn antecedent_discriminates() {
        let t = setup(&["P(a)", "Q(a)"]);
        let e = Engine::new(&t, 1_000_000);
        let rule = e.compile(&parse_formula("P(a) -> Q(a)").unwrap()).unwrap();
        let c = cands(&e, "Q(a)");
        let d = find_discriminators(&e, &[&rule], &c).unwrap();
        assert!(d.iter().any(|(a, l)| a.to_string() == "P(a)" && l == "True"));
    }

    #[test]
    fn strengthening_walks_back_the_chain() {
        let t = setup(&["A(a)", "B(a)", "C(a)"]);
        let e = Engine::new(&t, 1_000_000);
        let r1 = e.compile(&parse_formula("A(a) -> B(a)").unwrap()).unwrap();
        let r2 = e.compile(&parse_formula("B(a) -> C(a)").unwrap()).unwrap();
        let c = cands(&e, "C(a)");
        let chain = strengthen(&e, &[&r1, &r2], &c, (2, 1), 0).unwrap();
        assert_eq!(chain, [(2, 1), (0, 1)]);
    }

    #[test]
    fn fixpoint_at_input() {
        let t = setup(&["A(a)"]);
        let e = Engine::new(&t, 1_000_000);
        let c = cands(&e, "A(a)");
        assert_eq!(strengthen(&e, &[], &c, (0, 1), 0).unwrap(), [(0, 1)]);
    }

    #[test]
    fn independent_candidates_have_no_discriminator() {
        let t = setup(&["A(a)", "B(a)"]);
        let e = Engine::new(&t, 1_000_000);
        let a = e.compile(&parse_formula("A(a) or B(a)").unwrap()).unwrap();
        let b = e.compile(&parse_formula("not A(a) or not B(a)").unwrap()).unwrap();
        let c = vec![
            CompiledCandidate { label: "A".into(), constraint: a },
            CompiledCandidate { label: "B".into(), constraint: b },
        ];
        let out = resolve(&e, &[], &c, &mut FixedVerifier(true)).unwrap();
        assert!(matches!(out, RetrievalOutcome::Declined { .. }));
    }
}
