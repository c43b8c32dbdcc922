use std::fmt;

use serde::{Deserialize, Serialize};

use super::subset::{quantize, subset_search, SubsetResult};
use super::SoftError;
use crate::logic::{CmpOp, Formula, NumExpr};
use crate::retrieval::{resolve, CompiledCandidate, PremiseVerifier, RetrievalOutcome};
use crate::solver::{Compiled, Engine, GroundAtomTable, GroundedQuery, Grounding, SolveError, SolverConfig, Truth};

/// Final answer of the symbolic path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Boolean(Truth),
    Option(String),
    ValueSet(Vec<i64>),
    /// The symbolic path gave up; the caller should use chain-of-thought.
    Fallback(String),
}

impl Verdict {
    pub fn is_fallback(&self) -> bool {
        matches!(self, Verdict::Fallback(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Boolean(t) => write!(f, "{t:?}"),
            Verdict::Option(l) => write!(f, "Option({l})"),
            Verdict::ValueSet(vs) => {
                let vs: Vec<String> = vs.iter().map(i64::to_string).collect();
                write!(f, "{{{}}}", vs.join(", "))
            }
            Verdict::Fallback(r) => write!(f, "Fallback({r})"),
        }
    }
}

/// Which branch of the soft solver produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Exactly one candidate is consistent.
    Unique,
    /// No candidate is consistent; the best-supported one wins.
    NoneConsistent,
    /// Several candidates are consistent; retrieval decides.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftReport {
    pub verdict: Verdict,
    pub case: Option<Case>,
    /// Set when the facts were inconsistent and had to be relaxed.
    pub restored: Option<SubsetResult>,
    /// Per candidate, whether it is consistent with the (restored) facts.
    pub candidate_sat: Vec<(String, bool)>,
    pub retrieval: Option<RetrievalOutcome>,
}

impl SoftReport {
    pub(crate) fn fallback(reason: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Fallback(reason.into()),
            case: None,
            restored: None,
            candidate_sat: Vec::new(),
            retrieval: None,
        }
    }
}

/// The answer candidates of a grounded query.
pub fn candidate_set(query: &GroundedQuery, table: &GroundAtomTable) -> Vec<Candidate> {
    match query {
        GroundedQuery::Boolean(q) => vec![
            Candidate {
                label: "True".into(),
                formula: q.clone(),
            },
            Candidate {
                label: "False".into(),
                formula: Formula::not(q.clone()),
            },
        ],
        GroundedQuery::Candidates(cs) => cs
            .iter()
            .map(|(l, f)| Candidate {
                label: l.clone(),
                formula: f.clone(),
            })
            .collect(),
        GroundedQuery::FreeNumeric(a) => {
            let domain = table.index_of(a).map(|i| table.entry(i).domain.clone()).unwrap_or_default();
            domain
                .into_iter()
                .map(|v| Candidate {
                    label: v.to_string(),
                    formula: Formula::Compare(CmpOp::Eq, NumExpr::Atom(a.clone()), NumExpr::Int(v)),
                })
                .collect()
        }
    }
}

fn unique_verdict(query: &GroundedQuery, label: &str) -> Verdict {
    match query {
        GroundedQuery::Boolean(_) => Verdict::Boolean(if label == "True" { Truth::True } else { Truth::False }),
        GroundedQuery::Candidates(_) => Verdict::Option(label.to_string()),
        GroundedQuery::FreeNumeric(_) => Verdict::ValueSet(vec![label.parse().unwrap_or_default()]),
    }
}

fn several_verdict(query: &GroundedQuery, labels: &[&str], reason: &str) -> Verdict {
    match query {
        GroundedQuery::Boolean(_) => Verdict::Boolean(Truth::Unknown),
        GroundedQuery::Candidates(_) => Verdict::Fallback(reason.into()),
        GroundedQuery::FreeNumeric(_) => Verdict::ValueSet(labels.iter().filter_map(|l| l.parse().ok()).collect()),
    }
}

fn err_reason(e: &SoftError) -> String {
    match e {
        SoftError::Solve(SolveError::BudgetExceeded(_)) => "solver budget exceeded".into(),
        other => other.to_string(),
    }
}

/// Relax inconsistent facts by weight, then decide among the candidates.
///
/// `weights` is aligned with `grounding.facts`. Without a verifier, ambiguous
/// answers stay ambiguous.
pub fn soft_solve(
    grounding: &Grounding,
    weights: &[f64],
    config: &SolverConfig,
    verifier: Option<&mut dyn PremiseVerifier>,
) -> SoftReport {
    match soft_solve_inner(grounding, weights, config, verifier) {
        Ok(r) => r,
        Err(e) => SoftReport::fallback(err_reason(&e)),
    }
}

fn soft_solve_inner(
    grounding: &Grounding,
    weights: &[f64],
    config: &SolverConfig,
    verifier: Option<&mut dyn PremiseVerifier>,
) -> Result<SoftReport, SoftError> {
    let engine = Engine::with_config(&grounding.table, config);
    let facts = engine.compile_all(&grounding.facts)?;
    let side = engine.compile_all(&grounding.side)?;
    let side_refs: Vec<&Compiled> = side.iter().collect();
    let fact_refs: Vec<&Compiled> = facts.iter().collect();

    let mut all: Vec<&Compiled> = side_refs.clone();
    all.extend(fact_refs.iter().copied());
    let (kept, restored) = if engine.sat(&all)? {
        ((0..facts.len()).collect::<Vec<_>>(), None)
    } else {
        let r = subset_search(&engine, weights, &fact_refs, &side_refs)?;
        (r.kept.clone(), Some(r))
    };
    let kept_refs: Vec<&Compiled> = kept.iter().map(|&i| &facts[i]).collect();
    let mut base = side_refs.clone();
    base.extend(kept_refs.iter().copied());

    let cands = candidate_set(&grounding.query, &grounding.table);
    let compiled: Vec<CompiledCandidate> = cands
        .iter()
        .map(|c| {
            Ok(CompiledCandidate {
                label: c.label.clone(),
                constraint: engine.compile(&c.formula)?,
            })
        })
        .collect::<Result<_, SolveError>>()?;
    let mut candidate_sat = Vec::with_capacity(compiled.len());
    for c in &compiled {
        let mut cs = base.clone();
        cs.push(&c.constraint);
        candidate_sat.push((c.label.clone(), engine.sat(&cs)?));
    }
    let sat_labels: Vec<&str> = candidate_sat.iter().filter(|(_, s)| *s).map(|(l, _)| l.as_str()).collect();

    let mut report = SoftReport {
        verdict: Verdict::Fallback(String::new()),
        case: None,
        restored,
        candidate_sat: candidate_sat.clone(),
        retrieval: None,
    };

    match sat_labels.len() {
        1 => {
            report.case = Some(Case::Unique);
            report.verdict = unique_verdict(&grounding.query, sat_labels[0]);
        }
        0 => {
            report.case = Some(Case::NoneConsistent);
            if compiled.is_empty() {
                report.verdict = Verdict::Fallback("no candidates".into());
                return Ok(report);
            }
            let kept_weights: Vec<f64> = kept.iter().map(|&i| weights[i]).collect();
            let mut best: Option<i64> = None;
            let mut winners: Vec<&str> = Vec::new();
            for c in &compiled {
                let mut s = side_refs.clone();
                s.push(&c.constraint);
                let w = match subset_search(&engine, &kept_weights, &kept_refs, &s) {
                    Ok(r) => quantize(r.total_weight),
                    Err(SoftError::SideUnsat) => continue,
                    Err(e) => return Err(e),
                };
                match best {
                    Some(b) if w < b => {}
                    Some(b) if w == b => winners.push(&c.label),
                    _ => {
                        best = Some(w);
                        winners = vec![&c.label];
                    }
                }
            }
            report.verdict = match winners.len() {
                0 => Verdict::Fallback("no consistent candidate".into()),
                1 => unique_verdict(&grounding.query, winners[0]),
                _ => several_verdict(&grounding.query, &winners, "soft tie"),
            };
        }
        _ => {
            report.case = Some(Case::Ambiguous);
            let outcome = match verifier {
                Some(v) => {
                    let live: Vec<CompiledCandidate> = compiled
                        .into_iter()
                        .zip(&candidate_sat)
                        .filter(|(_, (_, s))| *s)
                        .map(|(c, _)| c)
                        .collect();
                    Some(resolve(&engine, &base, &live, v)?)
                }
                None => None,
            };
            report.verdict = match &outcome {
                Some(RetrievalOutcome::Resolved { label, .. }) => unique_verdict(&grounding.query, label),
                _ => several_verdict(&grounding.query, &sat_labels, "ambiguous options"),
            };
            report.retrieval = outcome;
        }
    }
    Ok(report)
}

/// Strict symbolic answer with no relaxation and no retrieval.
pub fn hard_solve(grounding: &Grounding, config: &SolverConfig) -> Verdict {
    match hard_solve_inner(grounding, config) {
        Ok(v) => v,
        Err(e) => Verdict::Fallback(err_reason(&e.into())),
    }
}

fn hard_solve_inner(grounding: &Grounding, config: &SolverConfig) -> Result<Verdict, SolveError> {
    let engine = Engine::with_config(&grounding.table, config);
    let all = engine.compile_all(&grounding.all_constraints())?;
    let base: Vec<&Compiled> = all.iter().collect();
    if !engine.sat(&base)? {
        return Ok(Verdict::Fallback("inconsistent facts".into()));
    }
    match &grounding.query {
        GroundedQuery::Boolean(q) => Ok(Verdict::Boolean(engine.entail(&base, &engine.compile(q)?)?)),
        GroundedQuery::FreeNumeric(a) => {
            let i = grounding
                .table
                .index_of(a)
                .ok_or_else(|| SolveError::MissingAtom(a.to_string()))?;
            Ok(Verdict::ValueSet(engine.value_set(&base, i)?))
        }
        GroundedQuery::Candidates(cs) => {
            let mut sat = Vec::new();
            for (l, f) in cs {
                let c = engine.compile(f)?;
                let mut b = base.clone();
                b.push(&c);
                if engine.sat(&b)? {
                    sat.push(l.clone());
                }
            }
            Ok(match sat.len() {
                0 => Verdict::Fallback("no option".into()),
                1 => Verdict::Option(sat.remove(0)),
                _ => Verdict::Fallback("ambiguous options".into()),
            })
        }
    }
}
