//! Finite-domain grounding and satisfiability.

mod engine;
mod ground;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Formula, PredicateAtom, Sort};

pub use engine::{check_sat, entail_boolean, entailment_flags, evaluate, solve_numeric, Compiled, Engine};
pub use ground::{ground, ground_formula, GroundedQuery, Grounding};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SolveError {
    #[error("node budget of {0} exhausted")]
    BudgetExceeded(u64),
    #[error("atom `{0}` is not in the table")]
    MissingAtom(String),
    #[error("numeric atom `{0}` has an empty domain")]
    DomainEmpty(String),
    #[error("`{0}` is used both as a boolean and as a number")]
    SortConflict(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

/// Solver and grounding limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub node_budget: u64,
    /// Default numeric domains are clamped to `[-domain_bound, domain_bound]`.
    pub domain_bound: i64,
    /// Explicit domains per numeric predicate name.
    pub numeric_domains: HashMap<String, Vec<i64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            node_budget: 10_000_000,
            domain_bound: 10_000,
            numeric_domains: HashMap::new(),
        }
    }
}

/// The value of one atom in a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            Value::Int(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableAtom {
    pub atom: PredicateAtom,
    /// Ascending; booleans use `[0, 1]` for False, True.
    pub domain: Vec<i64>,
}

/// Every ground atom with its finite domain, in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroundAtomTable {
    entries: Vec<TableAtom>,
    #[serde(skip)]
    index: HashMap<PredicateAtom, usize>,
}

impl GroundAtomTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an atom if absent; returns its index.
    pub fn insert(&mut self, atom: PredicateAtom, domain: Vec<i64>) -> usize {
        if let Some(&i) = self.index.get(&atom) {
            return i;
        }
        let i = self.entries.len();
        self.index.insert(atom.clone(), i);
        self.entries.push(TableAtom { atom, domain });
        i
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, atom: &PredicateAtom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn entry(&self, i: usize) -> &TableAtom {
        &self.entries[i]
    }

    pub fn entries(&self) -> &[TableAtom] {
        &self.entries
    }

    pub fn boolean_atoms(&self) -> impl Iterator<Item = &PredicateAtom> {
        self.entries.iter().filter(|e| e.atom.sort == Sort::Boolean).map(|e| &e.atom)
    }

    pub fn numeric_atoms(&self) -> impl Iterator<Item = (&PredicateAtom, &[i64])> {
        self.entries
            .iter()
            .filter(|e| e.atom.sort == Sort::Numeric)
            .map(|e| (&e.atom, e.domain.as_slice()))
    }

    /// Convert a raw search value to a typed one.
    pub fn value(&self, i: usize, raw: i64) -> Value {
        match self.entries[i].atom.sort {
            Sort::Boolean => Value::Bool(raw != 0),
            Sort::Numeric => Value::Int(raw),
        }
    }

    pub fn raw(value: Value) -> i64 {
        match value {
            Value::Bool(b) => b as i64,
            Value::Int(v) => v,
        }
    }
}

/// A total assignment, in table order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub assignment: Vec<(PredicateAtom, Value)>,
}

impl Model {
    pub fn get(&self, atom: &PredicateAtom) -> Option<Value> {
        self.assignment.iter().find(|(a, _)| a == atom).map(|(_, v)| *v)
    }

    pub fn from_raw(table: &GroundAtomTable, raw: &[i64]) -> Model {
        Model {
            assignment: raw
                .iter()
                .enumerate()
                .map(|(i, v)| (table.entry(i).atom.clone(), table.value(i, *v)))
                .collect(),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, v)) in self.assignment.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SatResult {
    Sat(Model),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// A quantifier-free constraint over table atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundConstraint {
    pub formula: Formula,
    /// Index of the fact it came from; `None` for injected constraints.
    pub origin: Option<usize>,
}

/// Three-valued answer to a Boolean query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truth {
    True,
    False,
    Unknown,
}
