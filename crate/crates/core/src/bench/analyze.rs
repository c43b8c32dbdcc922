use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::pipeline::{prepare, sat_flags};
use super::BenchError;
use crate::chain::{backward_chain, forward_chain, verify_chain, Chain, ChainContext, ChainOutcome, Violation, DEFAULT_DEPTH_LIMIT};
use crate::retrieval::PremiseVerifier;
use crate::soft::{soft_solve, SoftReport};
use crate::solver::SolverConfig;

/// Which chains to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ChainDirection {
    Fwd,
    Bwd,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub outcome: ChainOutcome,
    /// `None` when no chain was found.
    pub check: Option<Result<(), Violation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Solver output plus chains for one envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub report: SoftReport,
    pub placeholders: usize,
    pub sat_query: Option<bool>,
    pub sat_not_query: Option<bool>,
    pub forward: Option<ChainReport>,
    pub backward: Option<ChainReport>,
}

/// A chain with what is needed to check it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    pub envelope: Value,
    /// Facts the chain may use; all when absent.
    #[serde(default)]
    pub kept: Option<Vec<usize>>,
    pub verdict: crate::soft::Verdict,
    pub chain: Chain,
}

/// Solve an envelope with the soft solver and build the requested chains.
/// Weights default to 1 per fact.
pub fn analyze(
    envelope: &Value,
    weights: Option<&[f64]>,
    direction: Option<ChainDirection>,
    config: &SolverConfig,
    verifier: Option<&mut dyn PremiseVerifier>,
) -> Result<Analysis, BenchError> {
    let p = match prepare(envelope, config) {
        Ok(p) => p,
        Err((reason, placeholders)) => {
            return Ok(Analysis {
                report: SoftReport::fallback(reason),
                placeholders,
                sat_query: None,
                sat_not_query: None,
                forward: None,
                backward: None,
            })
        }
    };
    let n = p.facts.facts.len();
    let w = match weights {
        Some(w) if w.len() == n => w.to_vec(),
        Some(w) => return Err(BenchError::Invalid(format!("{} weights for {n} facts", w.len()))),
        None => vec![1.0; n],
    };
    let report = soft_solve(&p.grounding, &w, config, verifier);
    let kept = report.restored.as_ref().map(|r| r.kept.clone());
    let mut out = Analysis {
        placeholders: p.facts.placeholder_count,
        sat_query: None,
        sat_not_query: None,
        forward: None,
        backward: None,
        report,
    };
    if out.report.verdict.is_fallback() {
        return Ok(out);
    }
    if let Some((q, nq)) = sat_flags(&p.grounding, kept.as_deref(), config) {
        out.sat_query = Some(q);
        out.sat_not_query = Some(nq);
    }
    let Some(direction) = direction else { return Ok(out) };
    let ctx = ChainContext::new(&p.grounding, kept.as_deref(), config).map_err(|e| BenchError::Invalid(e.to_string()))?;
    let chain_report = |o: ChainOutcome| {
        let check = o.chain().map(|c| verify_chain(c, &ctx, &out.report.verdict));
        let text = o.chain().map(crate::chain::render_template);
        ChainReport { outcome: o, check, text }
    };
    let err = |e: crate::solver::SolveError| BenchError::Invalid(e.to_string());
    if direction != ChainDirection::Bwd {
        out.forward = Some(chain_report(forward_chain(&ctx).map_err(err)?));
    }
    if direction != ChainDirection::Fwd {
        out.backward = Some(chain_report(backward_chain(&ctx, DEFAULT_DEPTH_LIMIT).map_err(err)?));
    }
    Ok(out)
}

impl Analysis {
    /// Chain files for every chain found, to be checked later.
    pub fn chain_files(&self, envelope: &Value) -> Vec<ChainFile> {
        [&self.forward, &self.backward]
            .into_iter()
            .flatten()
            .filter_map(|r| r.outcome.chain())
            .map(|c| ChainFile {
                envelope: envelope.clone(),
                kept: self.report.restored.as_ref().map(|r| r.kept.clone()),
                verdict: self.report.verdict.clone(),
                chain: c.clone(),
            })
            .collect()
    }
}

/// Check a stored chain against its envelope.
pub fn verify_chain_file(file: &ChainFile, config: &SolverConfig) -> Result<Result<(), Violation>, BenchError> {
    let p = prepare(&file.envelope, config).map_err(|(e, _)| BenchError::Invalid(e))?;
    let ctx = ChainContext::new(&p.grounding, file.kept.as_deref(), config).map_err(|e| BenchError::Invalid(e.to_string()))?;
    Ok(verify_chain(&file.chain, &ctx, &file.verdict))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn envelope() -> Value {
        serde_json::json!({"objects": ["a"], "facts": ["P(a)", "forall x. P(x) -> Q(x)"], "query": "Q(a)"})
    }

    #[test]
    fn both_chains_verify() {
        let a = analyze(&envelope(), None, Some(ChainDirection::Both), &SolverConfig::default(), None).unwrap();
        assert_eq!(a.report.verdict.to_string(), "True");
        for r in [&a.forward, &a.backward] {
            assert_eq!(r.as_ref().unwrap().check, Some(Ok(())));
        }
    }

    #[test]
    fn stored_chain_round_trips() {
        let env = envelope();
        let a = analyze(&env, None, Some(ChainDirection::Fwd), &SolverConfig::default(), None).unwrap();
        let files = a.chain_files(&env);
        assert_eq!(files.len(), 1);
        let text = serde_json::to_string(&files[0]).unwrap();
        let mut back: ChainFile = serde_json::from_str(&text).unwrap();
        assert_eq!(verify_chain_file(&back, &SolverConfig::default()).unwrap(), Ok(()));
        back.verdict = crate::soft::Verdict::Boolean(crate::solver::Truth::False);
        assert!(verify_chain_file(&back, &SolverConfig::default()).unwrap().is_err());
    }

    #[test]
    fn weight_count_must_match() {
        assert!(analyze(&envelope(), Some(&[1.0]), None, &SolverConfig::default(), None).is_err());
    }

    #[test]
    fn placeholders_give_fallback() {
        let env = serde_json::json!({"objects": ["a"], "facts": ["P(a)", "It rains.", "It snows."], "query": "P(a)"});
        let a = analyze(&env, None, Some(ChainDirection::Both), &SolverConfig::default(), None).unwrap();
        assert!(a.report.verdict.is_fallback());
        assert_eq!(a.placeholders, 2);
    }
}
