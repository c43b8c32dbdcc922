//! Confidence weighting and soft-logic relaxation.

mod solve;
mod subset;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::TokenRecord;
use crate::logic::Formula;

pub use solve::{candidate_set, hard_solve, soft_solve, Candidate, Case, SoftReport, Verdict};
pub use subset::{max_weight_sat_subset, subset_search, SubsetResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SoftError {
    #[error("empty token trace")]
    EmptyTrace,
    #[error("side constraints are unsatisfiable")]
    SideUnsat,
    #[error(transparent)]
    Solve(#[from] crate::solver::SolveError),
}

/// A fact with its confidence weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedFact {
    pub index: usize,
    pub sentence: String,
    pub formula: Formula,
    pub weight: f64,
}

impl WeightedFact {
    pub fn placeholder(index: usize, sentence: &str) -> Self {
        Self {
            index,
            sentence: sentence.to_string(),
            formula: Formula::Bool(true),
            weight: 0.0,
        }
    }

    pub fn is_placeholder(&self) -> bool {
        self.weight == 0.0 && self.formula == Formula::Bool(true)
    }
}

/// How fact weights are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// `exp(-H)` from token probabilities.
    #[default]
    Entropy,
    /// Every non-placeholder fact weighs 1.
    Uniform,
}

/// Mean per-token entropy of a trace.
///
/// A token contributes the Shannon entropy of its full distribution when one
/// is present, otherwise the surprisal of the chosen token.
pub fn mean_entropy(trace: &[TokenRecord]) -> Result<f64, SoftError> {
    if trace.is_empty() {
        return Err(SoftError::EmptyTrace);
    }
    let total: f64 = trace
        .iter()
        .map(|t| match t.full_distribution() {
            Some(d) => d.iter().filter(|(_, p)| *p > 0.0).map(|(_, p)| -p * p.ln()).sum(),
            None => -t.prob.ln(),
        })
        .sum();
    Ok(total / trace.len() as f64)
}

/// `exp(-H)` where `H` is the mean token entropy.
pub fn entropy_weight(trace: &[TokenRecord]) -> Result<f64, SoftError> {
    Ok((-mean_entropy(trace)?).exp())
}

/// Assign weights in place. Placeholders keep weight 0; facts without a usable
/// trace get weight 1.
pub fn assign_weights(facts: &mut [WeightedFact], traces: Option<&[Vec<TokenRecord>]>, mode: WeightMode) {
    for f in facts.iter_mut() {
        if f.is_placeholder() {
            continue;
        }
        f.weight = match (mode, traces.and_then(|t| t.get(f.index))) {
            (WeightMode::Entropy, Some(trace)) => entropy_weight(trace).unwrap_or(1.0).max(f64::MIN_POSITIVE),
            _ => 1.0,
        };
    }
}
