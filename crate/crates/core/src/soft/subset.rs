use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::SoftError;
use crate::solver::{Compiled, Engine, GroundAtomTable, GroundConstraint, SolveError, SolverConfig};

/// Subset searches give up after this many drop-sets.
const MAX_POPS: usize = 1 << 20;

/// A maximum-weight satisfiable selection of facts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    /// Positions in the input list, ascending.
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    pub total_weight: f64,
}

pub(crate) fn quantize(w: f64) -> i64 {
    (w * 1e9).round() as i64
}

/// Best-first search over drop-sets ordered by dropped weight, then size, then
/// preferring to drop later facts (equivalently, the lexicographically
/// smallest kept set). The first satisfiable drop-set popped is optimal.
pub fn subset_search(engine: &Engine<'_>, weights: &[f64], facts: &[&Compiled], side: &[&Compiled]) -> Result<SubsetResult, SoftError> {
    if !engine.sat(side)? {
        return Err(SoftError::SideUnsat);
    }
    let n = facts.len();
    let q: Vec<i64> = weights.iter().map(|w| quantize(*w)).collect();
    let mut heap: BinaryHeap<Reverse<(i64, usize, Reverse<Vec<usize>>)>> = BinaryHeap::new();
    heap.push(Reverse((0, 0, Reverse(Vec::new()))));
    let mut pops = 0;
    while let Some(Reverse((cost, _, Reverse(dropped)))) = heap.pop() {
        pops += 1;
        if pops > MAX_POPS {
            return Err(SolveError::BudgetExceeded(MAX_POPS as u64).into());
        }
        let mut cs: Vec<&Compiled> = side.to_vec();
        let mut d = dropped.iter().peekable();
        for (i, f) in facts.iter().enumerate() {
            if d.peek() == Some(&&i) {
                d.next();
            } else {
                cs.push(f);
            }
        }
        if engine.sat(&cs)? {
            let kept: Vec<usize> = (0..n).filter(|i| !dropped.contains(i)).collect();
            let total_weight = kept.iter().map(|&i| weights[i]).sum();
            return Ok(SubsetResult {
                kept,
                dropped,
                total_weight,
            });
        }
        let start = dropped.last().map_or(0, |&m| m + 1);
        for j in start..n {
            let mut child = dropped.clone();
            child.push(j);
            heap.push(Reverse((cost + q[j], child.len(), Reverse(child))));
        }
    }
    Err(SoftError::SideUnsat)
}

/// Maximum-weight subset of `facts` satisfiable together with `side`.
pub fn max_weight_sat_subset(
    table: &GroundAtomTable,
    facts: &[(f64, GroundConstraint)],
    side: &[GroundConstraint],
) -> Result<SubsetResult, SoftError> {
    let engine = Engine::with_config(table, &SolverConfig::default());
    let compiled: Vec<Compiled> = facts.iter().map(|(_, c)| engine.compile(&c.formula)).collect::<Result<_, _>>()?;
    let side_c = engine.compile_all(side)?;
    let weights: Vec<f64> = facts.iter().map(|(w, _)| *w).collect();
    subset_search(
        &engine,
        &weights,
        &compiled.iter().collect::<Vec<_>>(),
        &side_c.iter().collect::<Vec<_>>(),
    )
}
