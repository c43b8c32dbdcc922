//! Benchmark problems, perturbation, the end-to-end pipeline and its statistics.

mod analyze;
mod dataset;
mod perturb;
mod pipeline;
mod stats;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::logic::Schema;

pub use analyze::{analyze, verify_chain_file, Analysis, ChainDirection, ChainFile, ChainReport};
pub use dataset::{load_dataset, parse_dataset, problem_seed, sample, write_dataset};
pub use perturb::{envelope_context, inject_contradiction, perturb, split_sentences, PerturbSpec, POOL};
pub use pipeline::{map_verdict, run_bench, run_pipeline, write_results, BenchConfig, Branch, ChainFlag, EvalRecord, LabelMap};
pub use stats::{chi_square, summarize, BranchStats, ContingencyTable, Summary};
pub use synth::{generate_synthetic, SynthKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("{needed} premises needed, {available} available")]
    TooFewPremises { needed: usize, available: usize },
    #[error("a marginal of the contingency table is zero")]
    DegenerateMarginal,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetTag {
    Prontoqa,
    Proofwriter,
    Folio,
    Logicaldeduction,
    Synthetic,
}

impl std::str::FromStr for DatasetTag {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_lowercase())).map_err(|_| BenchError::Invalid(format!("unknown dataset `{s}`")))
    }
}

impl std::fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchProblem {
    pub id: String,
    pub context: String,
    pub question: String,
    /// Label to option text.
    pub options: BTreeMap<String, String>,
    pub gold_label: String,
    pub dataset: DatasetTag,
    #[serde(default)]
    pub schema: Schema,
    /// Reference translation; synthetic problems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_envelope: Option<Value>,
    /// Per-fact confidences used with the reference translation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_weights: Option<Vec<f64>>,
    /// Indices of the facts the answer depends on.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub key_premises: Vec<usize>,
}

impl BenchProblem {
    pub fn option_list(&self) -> Vec<(String, String)> {
        self.options.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}
