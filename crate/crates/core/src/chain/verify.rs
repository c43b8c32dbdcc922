use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{build_tree, Chain, ChainContext, Lit, Via};
use crate::soft::Verdict;
use crate::solver::{SolveError, Truth};

/// The first problem found in a chain.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{}: {reason}", step.map(|s| format!("step {s}")).unwrap_or_else(|| "conclusion".into()))]
pub struct Violation {
    /// `None` for the conclusion or the tree.
    pub step: Option<usize>,
    pub reason: String,
}

fn fail<T>(step: Option<usize>, reason: impl Into<String>) -> Result<T, Violation> {
    Err(Violation {
        step,
        reason: reason.into(),
    })
}

/// The candidate label a verdict commits to, if any.
pub fn verdict_label(verdict: &Verdict) -> Option<String> {
    match verdict {
        Verdict::Boolean(Truth::True) => Some("True".into()),
        Verdict::Boolean(Truth::False) => Some("False".into()),
        Verdict::Option(l) => Some(l.clone()),
        Verdict::ValueSet(vs) if vs.len() == 1 => Some(vs[0].to_string()),
        _ => None,
    }
}

fn entails(s: Lit, g: Lit) -> bool {
    s == g || (s.eq && !g.eq && s.atom == g.atom && s.value != g.value)
}

/// Check every step against the problem, the conclusion against the verdict,
/// and the tree against the steps.
pub fn verify_chain(chain: &Chain, ctx: &ChainContext<'_>, verdict: &Verdict) -> Result<(), Violation> {
    let solver = |e: SolveError| Violation {
        step: None,
        reason: format!("solver error: {e}"),
    };
    let mut derived: Vec<Lit> = Vec::new();
    for (i, step) in chain.steps.iter().enumerate() {
        let at = Some(i);
        let Some(d) = ctx.lit(&step.derived) else {
            return fail(at, format!("unknown atom in `{}`", step.derived));
        };
        let mut sup = Vec::with_capacity(step.supports.len());
        for p in &step.supports {
            let Some(l) = ctx.lit(p) else {
                return fail(at, format!("unknown atom in `{p}`"));
            };
            if !derived.contains(&l) {
                return fail(at, format!("support `{p}` is not established earlier"));
            }
            sup.push(l);
        }
        let has = |g: Lit| sup.iter().any(|&s| entails(s, g));
        match &step.via {
            Via::Given => {
                if !ctx.givens.contains(&d) {
                    return fail(at, format!("`{}` is not a given property", step.derived));
                }
            }
            Via::Rule(rule) => {
                let Some(r) = ctx.rules.iter().find(|r| &ctx.rule(r) == rule) else {
                    return fail(at, format!("rule `{rule}` is not in the problem"));
                };
                if let Some(p) = r.premises.iter().find(|p| !has(**p)) {
                    return fail(at, format!("premise `{}` is not supported", ctx.property(*p)));
                }
                if !r.conclusions.contains(&d) {
                    return fail(at, "derived property is not a conclusion of the rule");
                }
                if let Some(c) = r.conclusions.iter().find(|c| **c != d && !has(ctx.neg(**c))) {
                    return fail(at, format!("alternative `{}` is not excluded", ctx.property(*c)));
                }
            }
            Via::Elimination => {
                if ctx.is_bool(d.atom) || !d.eq {
                    return fail(at, "elimination must derive a numeric value");
                }
                let dom = &ctx.table.entry(d.atom).domain;
                if !dom.contains(&d.value) {
                    return fail(at, "value outside the domain");
                }
                if let Some(w) = dom.iter().find(|&&w| w != d.value && !has(Lit { atom: d.atom, value: w, eq: false })) {
                    return fail(at, format!("value {w} is not excluded"));
                }
            }
            Via::Propagation { constraint, .. } => {
                let Some(res) = ctx.residual.iter().find(|r| &r.formula == constraint) else {
                    return fail(at, format!("constraint `{constraint}` is not in the problem"));
                };
                let Some(w) = ctx.excluded_value(d) else {
                    return fail(at, "propagation must exclude a value");
                };
                let assign = ctx.engine.compile_assignment(d.atom, w);
                if !ctx.refuted(&[&res.compiled, &assign], &sup).map_err(solver)? {
                    return fail(at, "constraint does not rule the value out");
                }
            }
        }
        derived.push(d);
    }

    let Some(ti) = ctx.targets.iter().position(|t| t.label == chain.conclusion.label && t.formula == chain.conclusion.target) else {
        return fail(None, format!("`{}` is not a query candidate", chain.conclusion.target));
    };
    let mut sup = Vec::new();
    for p in &chain.conclusion.supports {
        match ctx.lit(p) {
            Some(l) if derived.contains(&l) => sup.push(l),
            _ => return fail(None, format!("conclusion support `{p}` is not established")),
        }
    }
    let neg = ctx.engine.negate(&ctx.targets[ti].compiled);
    if !ctx.refuted(&[&neg], &sup).map_err(solver)? {
        return fail(None, "supports do not settle the query");
    }
    match verdict_label(verdict) {
        Some(l) if l == chain.conclusion.label => {}
        other => {
            return fail(
                None,
                format!("conclusion `{}` does not match the verdict {}", chain.conclusion.label, other.unwrap_or_else(|| verdict.to_string())),
            )
        }
    }
    if build_tree(&chain.steps, &chain.conclusion) != chain.tree {
        return fail(None, "tree does not match the steps");
    }
    Ok(())
}
