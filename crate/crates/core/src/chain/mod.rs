//! Reasoning chains: clause normalization, forward and backward chaining,
//! verification and rendering.

mod backward;
mod forward;
mod normalize;
mod render;
mod verify;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{CmpOp, Formula, NumExpr, PredicateAtom, Sort};
use crate::solver::{Compiled, Engine, GroundAtomTable, GroundConstraint, GroundedQuery, Grounding, SolveError, SolverConfig, Value};

pub use backward::{backward_chain, DEFAULT_DEPTH_LIMIT};
pub use forward::forward_chain;
pub use normalize::{normalize, Normalized};
pub use render::render_template;
pub use verify::{verdict_label, verify_chain, Violation};

/// A known value of one ground atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    /// `P(o)` / `not P(o)` for booleans, `a = v` for numbers.
    Is(PredicateAtom, Value),
    /// `a != v`.
    IsNot(PredicateAtom, i64),
}

impl Property {
    pub fn atom(&self) -> &PredicateAtom {
        match self {
            Property::Is(a, _) | Property::IsNot(a, _) => a,
        }
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            Property::Is(a, Value::Bool(true)) => Formula::Atom(a.clone()),
            Property::Is(a, Value::Bool(false)) => Formula::not(Formula::Atom(a.clone())),
            Property::Is(a, Value::Int(v)) => Formula::Compare(CmpOp::Eq, NumExpr::Atom(a.clone()), NumExpr::Int(*v)),
            Property::IsNot(a, v) => Formula::Compare(CmpOp::Ne, NumExpr::Atom(a.clone()), NumExpr::Int(*v)),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// Premises imply the disjunction of the conclusions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub premises: Vec<Property>,
    pub conclusions: Vec<Property>,
    pub origin: Option<usize>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ps: &[Property], sep: &str| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(sep);
        match (self.premises.len(), self.conclusions.len()) {
            (0, _) => write!(f, "{}", join(&self.conclusions, " or ")),
            (_, 0) => write!(f, "not ({})", join(&self.premises, " and ")),
            _ => write!(f, "{} -> {}", join(&self.premises, " and "), join(&self.conclusions, " or ")),
        }
    }
}

/// How a step's property was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Via {
    Given,
    Rule(Rule),
    /// Every other value of the atom is excluded by the supports.
    Elimination,
    /// A residual constraint rules the value out, given the supports.
    Propagation { constraint: Formula, origin: Option<usize> },
}

impl Via {
    pub fn tag(&self) -> &'static str {
        match self {
            Via::Given => "given",
            Via::Rule(_) => "rule",
            Via::Elimination => "elimination",
            Via::Propagation { .. } => "propagation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub derived: Property,
    pub via: Via,
    pub supports: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// The answer a chain establishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    pub label: String,
    pub target: Formula,
    pub supports: Vec<Property>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub label: String,
    pub via: String,
    /// Index of the step this node stands for.
    pub step: Option<usize>,
    /// Set on repeated occurrences of a step, which carry no children.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reference: bool,
    pub children: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub direction: Direction,
    pub steps: Vec<ChainStep>,
    pub conclusion: Conclusion,
    /// Rooted at the conclusion; leaves are given properties.
    pub tree: TreeNode,
}

impl Chain {
    /// Step tags and their counts, as used for grouping chains.
    pub fn pattern(&self) -> String {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &self.steps {
            *counts.entry(s.via.tag()).or_default() += 1;
        }
        counts.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoChainReason {
    /// Forward chaining stopped without determining the query.
    Fixpoint,
    /// Backward search only failed on goals already on the path.
    Cycle,
    /// Backward search hit the depth limit or its call budget.
    Depth,
    /// Backward search ran out of applicable rules.
    DeadEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChainOutcome {
    Found(Chain),
    NoChain(NoChainReason),
}

impl ChainOutcome {
    pub fn chain(&self) -> Option<&Chain> {
        match self {
            ChainOutcome::Found(c) => Some(c),
            ChainOutcome::NoChain(_) => None,
        }
    }
}

/// Group chains by their step pattern.
pub fn group_by_pattern<'c>(chains: impl IntoIterator<Item = &'c Chain>) -> BTreeMap<String, Vec<&'c Chain>> {
    let mut out: BTreeMap<String, Vec<&Chain>> = BTreeMap::new();
    for c in chains {
        out.entry(c.pattern()).or_default().push(c);
    }
    out
}

/// `atom = value` (`eq`) or `atom != value`, over table indices.
/// Boolean literals always have `eq` set, with value 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Lit {
    pub atom: usize,
    pub value: i64,
    pub eq: bool,
}

impl Lit {
    pub fn eq(atom: usize, value: i64) -> Self {
        Lit { atom, value, eq: true }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct IRule {
    pub premises: Vec<Lit>,
    pub conclusions: Vec<Lit>,
    pub origin: Option<usize>,
}

pub(crate) struct Residual {
    pub formula: Formula,
    pub compiled: Compiled,
    pub origin: Option<usize>,
}

pub(crate) struct Target {
    pub label: String,
    pub formula: Formula,
    pub compiled: Compiled,
}

/// Everything chain generation and verification need for one problem.
pub struct ChainContext<'g> {
    pub(crate) table: &'g GroundAtomTable,
    pub(crate) engine: Engine<'g>,
    pub(crate) givens: Vec<Lit>,
    pub(crate) rules: Vec<IRule>,
    pub(crate) residual: Vec<Residual>,
    pub(crate) targets: Vec<Target>,
    /// The retained constraints, for checking that an option is the only one.
    pub(crate) base: Vec<Compiled>,
    pub(crate) candidates: bool,
    /// Premises added from an implication query.
    pub augmented: Vec<Property>,
}

impl<'g> ChainContext<'g> {
    /// Build from a grounding, keeping only the facts at `kept` (all when `None`).
    pub fn new(grounding: &'g Grounding, kept: Option<&[usize]>, config: &SolverConfig) -> Result<Self, SolveError> {
        let table = &grounding.table;
        let engine = Engine::with_config(table, config);
        let mut constraints: Vec<GroundConstraint> = match kept {
            Some(k) => k.iter().map(|&i| grounding.facts[i].clone()).collect(),
            None => grounding.facts.clone(),
        };
        constraints.extend(grounding.side.iter().cloned());
        let base = engine.compile_all(&constraints)?;
        let n = normalize::normalize_lits(&engine, &constraints)?;

        let mut ctx = ChainContext {
            table,
            givens: n.givens,
            rules: n.rules,
            residual: n.residual,
            targets: Vec::new(),
            base,
            candidates: matches!(grounding.query, GroundedQuery::Candidates(_)),
            augmented: Vec::new(),
            engine,
        };
        let targets: Vec<(String, Formula)> = match &grounding.query {
            GroundedQuery::Boolean(q) => match normalize::query_as_rule(&ctx.engine, q)? {
                Some((premises, conclusion)) => {
                    for l in premises {
                        ctx.augmented.push(ctx.property(l));
                        if !ctx.givens.contains(&l) {
                            ctx.givens.push(l);
                        }
                    }
                    vec![("True".into(), conclusion)]
                }
                None => vec![("True".into(), q.clone()), ("False".into(), Formula::not(q.clone()))],
            },
            GroundedQuery::Candidates(cs) => cs.clone(),
            GroundedQuery::FreeNumeric(a) => {
                let i = ctx.engine.atom_index(a, Sort::Numeric)?;
                table
                    .entry(i)
                    .domain
                    .iter()
                    .map(|v| (v.to_string(), Formula::Compare(CmpOp::Eq, NumExpr::Atom(a.clone()), NumExpr::Int(*v))))
                    .collect()
            }
        };
        for (label, formula) in targets {
            let compiled = ctx.engine.compile(&formula)?;
            ctx.targets.push(Target { label, formula, compiled });
        }
        Ok(ctx)
    }

    pub fn properties(&self) -> Vec<Property> {
        self.givens.iter().map(|l| self.property(*l)).collect()
    }

    pub fn rules(&self) -> Vec<Rule> {
        self.rules.iter().map(|r| self.rule(r)).collect()
    }

    pub fn residual(&self) -> Vec<&Formula> {
        self.residual.iter().map(|r| &r.formula).collect()
    }

    pub(crate) fn is_bool(&self, atom: usize) -> bool {
        self.table.entry(atom).atom.sort == Sort::Boolean
    }

    pub(crate) fn neg(&self, l: Lit) -> Lit {
        if self.is_bool(l.atom) {
            Lit::eq(l.atom, 1 - l.value)
        } else {
            Lit { eq: !l.eq, ..l }
        }
    }

    /// The literal ruling out `value` for `atom`.
    pub(crate) fn exclusion(&self, atom: usize, value: i64) -> Lit {
        if self.is_bool(atom) {
            Lit::eq(atom, 1 - value)
        } else {
            Lit { atom, value, eq: false }
        }
    }

    /// The value a literal rules out, if it is an exclusion.
    pub(crate) fn excluded_value(&self, l: Lit) -> Option<i64> {
        if self.is_bool(l.atom) {
            Some(1 - l.value)
        } else if !l.eq {
            Some(l.value)
        } else {
            None
        }
    }

    pub(crate) fn compile_lit(&self, l: Lit) -> Compiled {
        let c = self.engine.compile_assignment(l.atom, l.value);
        if l.eq {
            c
        } else {
            self.engine.negate(&c)
        }
    }

    /// Whether the literals together with `extra` are unsatisfiable.
    pub(crate) fn refuted(&self, extra: &[&Compiled], lits: &[Lit]) -> Result<bool, SolveError> {
        let compiled: Vec<Compiled> = lits.iter().map(|l| self.compile_lit(*l)).collect();
        let mut cs: Vec<&Compiled> = extra.to_vec();
        cs.extend(compiled.iter());
        Ok(!self.engine.sat(&cs)?)
    }

    pub(crate) fn property(&self, l: Lit) -> Property {
        let atom = self.table.entry(l.atom).atom.clone();
        if l.eq {
            Property::Is(atom, self.table.value(l.atom, l.value))
        } else {
            Property::IsNot(atom, l.value)
        }
    }

    pub(crate) fn lit(&self, p: &Property) -> Option<Lit> {
        match p {
            Property::Is(a, Value::Bool(b)) => self.engine.atom_index(a, Sort::Boolean).ok().map(|i| Lit::eq(i, *b as i64)),
            Property::Is(a, Value::Int(v)) => self.engine.atom_index(a, Sort::Numeric).ok().map(|i| Lit::eq(i, *v)),
            Property::IsNot(a, v) => self.engine.atom_index(a, Sort::Numeric).ok().map(|i| Lit {
                atom: i,
                value: *v,
                eq: false,
            }),
        }
    }

    pub(crate) fn rule(&self, r: &IRule) -> Rule {
        Rule {
            premises: r.premises.iter().map(|l| self.property(*l)).collect(),
            conclusions: r.conclusions.iter().map(|l| self.property(*l)).collect(),
            origin: r.origin,
        }
    }

    /// Whether `target` is the only candidate left by the retained facts.
    pub(crate) fn unique_target(&self, target: usize) -> Result<bool, SolveError> {
        if !self.candidates {
            return Ok(true);
        }
        let base: Vec<&Compiled> = self.base.iter().collect();
        for (j, t) in self.targets.iter().enumerate() {
            if j == target {
                continue;
            }
            let mut cs = base.clone();
            cs.push(&t.compiled);
            if self.engine.sat(&cs)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Turn internal steps into a chain with its tree.
    pub(crate) fn assemble(
        &self,
        direction: Direction,
        steps: Vec<(Lit, IVia, Vec<Lit>)>,
        target: usize,
        supports: Vec<Lit>,
    ) -> Chain {
        let public: Vec<ChainStep> = steps
            .iter()
            .map(|(d, via, sup)| ChainStep {
                derived: self.property(*d),
                via: match via {
                    IVia::Given => Via::Given,
                    IVia::Rule(i) => Via::Rule(self.rule(&self.rules[*i])),
                    IVia::Elimination => Via::Elimination,
                    IVia::Propagation(i) => Via::Propagation {
                        constraint: self.residual[*i].formula.clone(),
                        origin: self.residual[*i].origin,
                    },
                },
                supports: sup.iter().map(|l| self.property(*l)).collect(),
            })
            .collect();
        let t = &self.targets[target];
        let conclusion = Conclusion {
            label: t.label.clone(),
            target: t.formula.clone(),
            supports: supports.iter().map(|l| self.property(*l)).collect(),
        };
        let tree = build_tree(&public, &conclusion);
        Chain {
            direction,
            steps: public,
            conclusion,
            tree,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IVia {
    Given,
    Rule(usize),
    Elimination,
    Propagation(usize),
}

pub(crate) fn build_tree(steps: &[ChainStep], conclusion: &Conclusion) -> TreeNode {
    fn node(steps: &[ChainStep], p: &Property, seen: &mut Vec<bool>) -> TreeNode {
        let Some(i) = steps.iter().position(|s| &s.derived == p) else {
            return TreeNode {
                label: p.to_string(),
                via: "missing".into(),
                step: None,
                reference: false,
                children: Vec::new(),
            };
        };
        let s = &steps[i];
        if seen[i] {
            return TreeNode {
                label: p.to_string(),
                via: s.via.tag().into(),
                step: Some(i),
                reference: true,
                children: Vec::new(),
            };
        }
        seen[i] = true;
        TreeNode {
            label: p.to_string(),
            via: s.via.tag().into(),
            step: Some(i),
            reference: false,
            children: s.supports.iter().map(|c| node(steps, c, seen)).collect(),
        }
    }
    let mut seen = vec![false; steps.len()];
    TreeNode {
        label: format!("{} ({})", conclusion.target, conclusion.label),
        via: "conclusion".into(),
        step: None,
        reference: false,
        children: conclusion.supports.iter().map(|c| node(steps, c, &mut seen)).collect(),
    }
}

/// Forward and backward chains for one problem.
pub fn generate_chains(ctx: &ChainContext<'_>) -> Result<(ChainOutcome, ChainOutcome), SolveError> {
    Ok((forward_chain(ctx)?, backward_chain(ctx, DEFAULT_DEPTH_LIMIT)?))
}

#[cfg(test)]
mod tests;
