use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{perturb, problem_seed, BenchError, BenchProblem, DatasetTag, PerturbSpec, Summary};
use crate::chain::{generate_chains, verify_chain, ChainContext, ChainOutcome, NoChainReason};
use crate::gateway::{Gateway, GatewayConfig, TokenTrace};
use crate::logic::Problem;
use crate::retrieval::PremiseVerifier;
use crate::sanitize::{sanitize, sanitized_facts, GateDecision, SanitizedFactSet};
use crate::soft::{assign_weights, hard_solve, soft_solve, Verdict, WeightMode};
use crate::solver::{ground, Engine, GroundedQuery, Grounding, SolverConfig, Truth};

/// Option labels for Boolean verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    #[serde(rename = "true")]
    pub true_label: String,
    #[serde(rename = "false")]
    pub false_label: String,
    /// Used only when the problem offers this option.
    #[serde(default, rename = "unknown")]
    pub unknown_label: Option<String>,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self {
            true_label: "A".into(),
            false_label: "B".into(),
            unknown_label: Some("C".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub seed: u64,
    pub sample: usize,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    /// Perturbation strength applied before evaluation.
    pub perturb: i32,
    /// Use reference translations when a problem has one.
    pub use_gold: bool,
    /// Relax inconsistent facts; `false` runs the strict solver.
    pub relax: bool,
    pub retrieval: bool,
    pub chains: bool,
    pub weights: WeightMode,
    /// Record wall-clock time per problem (makes results non-reproducible).
    pub timings: bool,
    pub solver: SolverConfig,
    pub gateway: GatewayConfig,
    pub labels: BTreeMap<DatasetTag, LabelMap>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sample: 200,
            workers: 0,
            perturb: 0,
            use_gold: true,
            relax: true,
            retrieval: true,
            chains: true,
            weights: WeightMode::Entropy,
            timings: false,
            solver: SolverConfig::default(),
            gateway: GatewayConfig::default(),
            labels: BTreeMap::new(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Invalid(format!("config: {e}")))
    }

    pub fn labels_for(&self, tag: DatasetTag) -> LabelMap {
        self.labels.get(&tag).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Symbolic,
    CotFallback,
}

/// Outcome of one chain direction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainFlag {
    pub pass: bool,
    /// `found`, `no_chain:<reason>`, `error` or `skipped`.
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
}

impl ChainFlag {
    fn skipped() -> Self {
        Self {
            outcome: "skipped".into(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub dataset: DatasetTag,
    pub branch: Branch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    pub label: Option<String>,
    pub gold: String,
    pub correct: bool,
    pub placeholders: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sat_query: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sat_not_query: Option<bool>,
    pub forward: ChainFlag,
    pub backward: ChainFlag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

/// The option a verdict selects, if the problem offers it.
pub fn map_verdict(verdict: &Verdict, problem: &BenchProblem, labels: &LabelMap) -> Option<String> {
    let label = match verdict {
        Verdict::Boolean(Truth::True) => Some(labels.true_label.clone()),
        Verdict::Boolean(Truth::False) => Some(labels.false_label.clone()),
        Verdict::Boolean(Truth::Unknown) => labels.unknown_label.clone(),
        Verdict::Option(l) => Some(l.clone()),
        Verdict::ValueSet(vs) if vs.len() == 1 => problem
            .options
            .iter()
            .find(|(_, t)| t.trim().parse::<i64>().ok() == Some(vs[0]))
            .map(|(l, _)| l.clone()),
        _ => None,
    };
    label.filter(|l| problem.options.contains_key(l))
}

/// A parsed, sanitized and grounded envelope.
pub(crate) struct Prepared {
    pub problem: Problem,
    pub facts: SanitizedFactSet,
    pub grounding: Grounding,
}

/// Errors carry the placeholder count seen so far.
pub(crate) fn prepare(envelope: &Value, config: &SolverConfig) -> Result<Prepared, (String, usize)> {
    let problem = Problem::from_value(envelope).map_err(|e| (format!("unparseable envelope: {e}"), 0))?;
    let facts = match sanitize(&problem) {
        GateDecision::Proceed(s) => s,
        GateDecision::FallbackToCoT(r) => return Err((r, sanitized_facts(&problem).placeholder_count)),
    };
    let grounding = ground(&problem, &facts, config).map_err(|e| (e.to_string(), facts.placeholder_count))?;
    Ok(Prepared { problem, facts, grounding })
}

/// Strict verdict of an envelope, for labelling generated problems.
pub(crate) fn hard_verdict(envelope: &Value, config: &SolverConfig) -> Verdict {
    match prepare(envelope, config) {
        Ok(p) => hard_solve(&p.grounding, config),
        Err((e, _)) => Verdict::Fallback(e),
    }
}

struct Symbolic {
    verdict: Verdict,
    placeholders: usize,
    sat: Option<(bool, bool)>,
    grounding: Grounding,
    kept: Option<Vec<usize>>,
}

fn symbolic(problem: &BenchProblem, gateway: Option<&Gateway>, config: &BenchConfig) -> Result<Symbolic, (String, usize)> {
    let (envelope, traces, weights): (Value, Option<TokenTrace>, Option<&[f64]>) = match (&problem.gold_envelope, gateway) {
        (Some(env), _) if config.use_gold => (env.clone(), None, problem.gold_weights.as_deref()),
        (_, Some(gw)) => match gw.translate(&problem.context, &problem.question, problem.schema) {
            Ok(t) => (t.envelope, t.traces, None),
            Err(e) => return Err((format!("translation failed: {e}"), 0)),
        },
        _ => return Err(("no translation available".into(), 0)),
    };
    let Prepared { mut facts, grounding, .. } = prepare(&envelope, &config.solver)?;
    let placeholders = facts.placeholder_count;
    match weights {
        Some(w) if w.len() == facts.facts.len() => {
            for f in facts.facts.iter_mut().filter(|f| !f.is_placeholder()) {
                f.weight = w[f.index];
            }
        }
        _ => {
            let mode = if traces.is_some() { config.weights } else { WeightMode::Uniform };
            assign_weights(&mut facts.facts, traces.as_deref(), mode);
        }
    }
    let w: Vec<f64> = facts.facts.iter().map(|f| f.weight).collect();

    let (verdict, kept) = if config.relax {
        let mut verifier = gateway.filter(|_| config.retrieval).map(|g| g.verifier(&problem.context, &problem.question));
        let report = soft_solve(&grounding, &w, &config.solver, verifier.as_mut().map(|v| v as &mut dyn PremiseVerifier));
        (report.verdict, report.restored.map(|r| r.kept))
    } else {
        (hard_solve(&grounding, &config.solver), None)
    };
    if let Verdict::Fallback(r) = verdict {
        return Err((r, placeholders));
    }
    let sat = sat_flags(&grounding, kept.as_deref(), &config.solver);
    Ok(Symbolic {
        verdict,
        placeholders,
        sat,
        grounding,
        kept,
    })
}

pub(crate) fn sat_flags(g: &Grounding, kept: Option<&[usize]>, config: &SolverConfig) -> Option<(bool, bool)> {
    let GroundedQuery::Boolean(q) = &g.query else {
        return None;
    };
    let engine = Engine::with_config(&g.table, config);
    let mut cs: Vec<_> = match kept {
        Some(k) => k.iter().map(|&i| g.facts[i].clone()).collect(),
        None => g.facts.clone(),
    };
    cs.extend(g.side.iter().cloned());
    let compiled = engine.compile_all(&cs).ok()?;
    let base: Vec<_> = compiled.iter().collect();
    engine.entailment_flags(&base, &engine.compile(q).ok()?).ok()
}

fn chain_flags(s: &Symbolic, correct: bool, config: &SolverConfig) -> (ChainFlag, ChainFlag) {
    let error = |e: String| ChainFlag {
        outcome: "error".into(),
        violation: Some(e),
        ..ChainFlag::default()
    };
    let ctx = match ChainContext::new(&s.grounding, s.kept.as_deref(), config) {
        Ok(c) => c,
        Err(e) => return (error(e.to_string()), error(e.to_string())),
    };
    let (fwd, bwd) = match generate_chains(&ctx) {
        Ok(p) => p,
        Err(e) => return (error(e.to_string()), error(e.to_string())),
    };
    let unknown = s.verdict == Verdict::Boolean(Truth::Unknown);
    let flag = |o: &ChainOutcome, accepted: NoChainReason| match o {
        ChainOutcome::Found(c) => {
            let v = verify_chain(c, &ctx, &s.verdict);
            ChainFlag {
                pass: correct && v.is_ok(),
                outcome: "found".into(),
                pattern: Some(c.pattern()),
                violation: v.err().map(|e| e.to_string()),
            }
        }
        ChainOutcome::NoChain(r) => ChainFlag {
            pass: correct && unknown && *r == accepted,
            outcome: format!("no_chain:{}", format!("{r:?}").to_lowercase()),
            ..ChainFlag::default()
        },
    };
    (flag(&fwd, NoChainReason::Fixpoint), flag(&bwd, NoChainReason::DeadEnd))
}

/// Translate, solve, and explain one problem. Failures on the symbolic path
/// divert to chain-of-thought; nothing aborts.
pub fn run_pipeline(problem: &BenchProblem, gateway: Option<&Gateway>, config: &BenchConfig) -> EvalRecord {
    let start = Instant::now();
    let labels = config.labels_for(problem.dataset);
    let mut rec = EvalRecord {
        id: problem.id.clone(),
        dataset: problem.dataset,
        branch: Branch::Symbolic,
        reason: None,
        verdict: None,
        label: None,
        gold: problem.gold_label.clone(),
        correct: false,
        placeholders: 0,
        sat_query: None,
        sat_not_query: None,
        forward: ChainFlag::skipped(),
        backward: ChainFlag::skipped(),
        elapsed_ms: None,
    };
    match symbolic(problem, gateway, config) {
        Ok(s) => {
            rec.label = map_verdict(&s.verdict, problem, &labels);
            rec.correct = rec.label.as_deref() == Some(problem.gold_label.as_str());
            rec.placeholders = s.placeholders;
            rec.sat_query = s.sat.map(|f| f.0);
            rec.sat_not_query = s.sat.map(|f| f.1);
            if config.chains {
                (rec.forward, rec.backward) = chain_flags(&s, rec.correct, &config.solver);
            }
            rec.verdict = Some(s.verdict);
        }
        Err((reason, placeholders)) => {
            rec.branch = Branch::CotFallback;
            rec.placeholders = placeholders;
            let mut reason = reason;
            match gateway {
                Some(gw) => match gw.cot_fallback(&problem.context, &problem.question, &problem.option_list()) {
                    Ok(a) => rec.label = a.label.filter(|l| problem.options.contains_key(l)),
                    Err(e) => reason.push_str(&format!("; chain-of-thought failed: {e}")),
                },
                None => reason.push_str("; no gateway for chain-of-thought"),
            }
            rec.correct = rec.label.as_deref() == Some(problem.gold_label.as_str());
            rec.reason = Some(reason);
        }
    }
    if config.timings {
        rec.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    rec
}

/// Evaluate problems on a worker pool; records come back in input order.
pub fn run_bench(problems: &[BenchProblem], gateway: Option<&Gateway>, config: &BenchConfig) -> Result<Vec<EvalRecord>, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| BenchError::Invalid(e.to_string()))?;
    Ok(pool.install(|| {
        problems
            .par_iter()
            .map(|p| {
                if config.perturb == 0 {
                    return run_pipeline(p, gateway, config);
                }
                let spec = PerturbSpec {
                    strength: config.perturb,
                    seed: problem_seed(config.seed, &p.id),
                };
                match perturb(p, &spec, &config.solver) {
                    Ok(q) => run_pipeline(&q, gateway, config),
                    Err(e) => {
                        tracing::warn!(id = %p.id, error = %e, "perturbation skipped");
                        run_pipeline(p, gateway, config)
                    }
                }
            })
            .collect()
    }))
}

/// Write records as JSON lines and the summary next to them.
pub fn write_results(path: &Path, records: &[EvalRecord], summary: &Summary) -> Result<PathBuf, BenchError> {
    let io = |e: std::io::Error| BenchError::Io(format!("{}: {e}", path.display()));
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| BenchError::Io(e.to_string()))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(io)?;
    let summary_path = path.with_extension("summary.json");
    let text = serde_json::to_string_pretty(summary).map_err(|e| BenchError::Io(e.to_string()))?;
    fs::write(&summary_path, text + "\n").map_err(io)?;
    Ok(summary_path)
}
