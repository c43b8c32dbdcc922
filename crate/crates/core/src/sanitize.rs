//! Syntax-level filter: malformed facts become `BoolVal(True)` placeholders.

use serde::{Deserialize, Serialize};

use crate::logic::{Fact, FactForm, Formula, Problem, QuerySpec};
use crate::soft::WeightedFact;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanitizedFactSet {
    pub facts: Vec<WeightedFact>,
    pub placeholder_count: usize,
    pub query_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateDecision {
    Proceed(SanitizedFactSet),
    FallbackToCoT(String),
}

impl GateDecision {
    pub fn proceed(&self) -> Option<&SanitizedFactSet> {
        match self {
            GateDecision::Proceed(s) => Some(s),
            GateDecision::FallbackToCoT(_) => None,
        }
    }
}

/// Characters a well-formed fact may contain.
fn allowed_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_()., <>=!+*/&|^'\"-".contains(c)
}

/// Why a fact is unusable, if it is.
pub fn malformed_reason(fact: &Fact) -> Option<String> {
    if let Some(c) = fact.raw.chars().find(|c| !allowed_char(*c)) {
        return Some(format!("garbled character `{c}`"));
    }
    match &fact.form {
        FactForm::Malformed(r) => Some(r.clone()),
        FactForm::Parsed(_) => None,
    }
}

fn query_reason(problem: &Problem) -> Option<String> {
    match &problem.query {
        QuerySpec::Malformed { reason, .. } => Some(reason.clone()),
        QuerySpec::Boolean(Formula::Bool(true)) => Some("query is a placeholder".into()),
        _ => None,
    }
}

/// Build the sanitized fact set without applying the fallback gate.
pub fn sanitized_facts(problem: &Problem) -> SanitizedFactSet {
    let mut placeholder_count = 0;
    let facts = problem
        .facts
        .iter()
        .enumerate()
        .map(|(index, fact)| match malformed_reason(fact) {
            Some(_) => {
                placeholder_count += 1;
                WeightedFact::placeholder(index, &fact.sentence)
            }
            None => WeightedFact {
                index,
                sentence: fact.sentence.clone(),
                formula: fact.formula().cloned().unwrap_or(Formula::Bool(true)),
                weight: 1.0,
            },
        })
        .collect();
    SanitizedFactSet {
        facts,
        placeholder_count,
        query_ok: query_reason(problem).is_none(),
    }
}

/// Replace malformed facts and decide whether symbolic solving may proceed.
pub fn sanitize(problem: &Problem) -> GateDecision {
    let set = sanitized_facts(problem);
    if !set.query_ok {
        return GateDecision::FallbackToCoT("query malformed".into());
    }
    if set.placeholder_count > 1 {
        return GateDecision::FallbackToCoT(format!("{} placeholders", set.placeholder_count));
    }
    GateDecision::Proceed(set)
}

/// The problem with every malformed fact rewritten to the placeholder.
pub fn sanitize_problem(problem: &Problem) -> Problem {
    let mut out = problem.clone();
    for fact in &mut out.facts {
        if malformed_reason(fact).is_some() {
            fact.raw = "BoolVal(True)".into();
            fact.form = FactForm::Parsed(Formula::Bool(true));
        }
    }
    out
}
