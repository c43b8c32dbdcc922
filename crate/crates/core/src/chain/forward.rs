use std::collections::{BTreeSet, HashMap};

use super::{ChainContext, ChainOutcome, Direction, IVia, Lit, NoChainReason};
use crate::solver::{Compiled, SolveError};

type Step = (Lit, IVia, Vec<Lit>);

struct State {
    fixed: Vec<Option<i64>>,
    excluded: Vec<BTreeSet<i64>>,
    known: HashMap<Lit, usize>,
}

impl State {
    fn add(&mut self, l: Lit, step: usize) {
        self.known.entry(l).or_insert(step);
        if l.eq {
            self.fixed[l.atom].get_or_insert(l.value);
        } else {
            self.excluded[l.atom].insert(l.value);
        }
    }

    /// A known literal that entails `goal`.
    fn witness(&self, goal: Lit) -> Option<Lit> {
        if self.known.contains_key(&goal) {
            return Some(goal);
        }
        if !goal.eq {
            if let Some(u) = self.fixed[goal.atom] {
                if u != goal.value {
                    return Some(Lit::eq(goal.atom, u));
                }
            }
        }
        None
    }

    fn alive(&self, ctx: &ChainContext<'_>, atom: usize) -> Vec<i64> {
        match self.fixed[atom] {
            Some(u) => vec![u],
            None => ctx
                .table
                .entry(atom)
                .domain
                .iter()
                .copied()
                .filter(|v| !self.excluded[atom].contains(v))
                .collect(),
        }
    }

    /// Known literals restricting `atom`.
    fn restrictions(&self, atom: usize) -> Vec<Lit> {
        match self.fixed[atom] {
            Some(u) => vec![Lit::eq(atom, u)],
            None => self.excluded[atom].iter().map(|&w| Lit { atom, value: w, eq: false }).collect(),
        }
    }
}

/// Greedily drop supports while `still` holds.
pub(crate) fn minimize(
    mut supports: Vec<Lit>,
    mut still: impl FnMut(&[Lit]) -> Result<bool, SolveError>,
) -> Result<Vec<Lit>, SolveError> {
    let mut i = 0;
    while i < supports.len() {
        let mut trial = supports.clone();
        trial.remove(i);
        if still(&trial)? {
            supports = trial;
        } else {
            i += 1;
        }
    }
    Ok(supports)
}

/// The target settled by the known literals, with a minimal support.
fn determined(ctx: &ChainContext<'_>, state: &State) -> Result<Option<(usize, Vec<Lit>)>, SolveError> {
    for (i, t) in ctx.targets.iter().enumerate() {
        let neg = ctx.engine.negate(&t.compiled);
        let lits: Vec<Lit> = t.compiled.vars().iter().flat_map(|&a| state.restrictions(a)).collect();
        let entails = |ls: &[Lit]| ctx.refuted(&[&neg], ls);
        if entails(&lits)? && ctx.unique_target(i)? {
            return Ok(Some((i, minimize(lits, entails)?)));
        }
    }
    Ok(None)
}

fn fire(ctx: &ChainContext<'_>, state: &State, r: usize) -> Option<(Lit, Vec<Lit>)> {
    let rule = &ctx.rules[r];
    let mut supports = Vec::new();
    for p in &rule.premises {
        supports.push(state.witness(*p)?);
    }
    let mut open = None;
    for c in &rule.conclusions {
        match state.witness(ctx.neg(*c)) {
            Some(w) => supports.push(w),
            None if open.is_none() => open = Some(*c),
            None => return None,
        }
    }
    let c = open?;
    if state.witness(c).is_some() {
        return None;
    }
    Some((c, supports))
}

fn propagate(ctx: &ChainContext<'_>, state: &State, res: &Compiled, atom: usize, value: i64) -> Result<Option<Vec<Lit>>, SolveError> {
    let assign = ctx.engine.compile_assignment(atom, value);
    let lits: Vec<Lit> = res.vars().iter().filter(|&&b| b != atom).flat_map(|&b| state.restrictions(b)).collect();
    let unsat = |ls: &[Lit]| ctx.refuted(&[res, &assign], ls);
    if !unsat(&lits)? {
        return Ok(None);
    }
    Ok(Some(minimize(lits, unsat)?))
}

/// Fire rules and prune domains to a fixpoint, then keep only the steps the
/// conclusion depends on.
pub fn forward_chain(ctx: &ChainContext<'_>) -> Result<ChainOutcome, SolveError> {
    let n = ctx.table.len();
    let mut state = State {
        fixed: vec![None; n],
        excluded: vec![BTreeSet::new(); n],
        known: HashMap::new(),
    };
    let mut steps: Vec<Step> = Vec::new();
    for &g in &ctx.givens {
        if state.witness(g).is_none() {
            state.add(g, steps.len());
            steps.push((g, IVia::Given, Vec::new()));
        }
    }
    loop {
        if let Some((target, supports)) = determined(ctx, &state)? {
            return Ok(ChainOutcome::Found(finish(ctx, steps, &state, target, supports)));
        }
        let mut fresh: Vec<Step> = Vec::new();
        let push = |fresh: &mut Vec<Step>, l: Lit, via: IVia, sup: Vec<Lit>| {
            if state.witness(l).is_none() && !fresh.iter().any(|(m, _, _)| *m == l) {
                fresh.push((l, via, sup));
            }
        };
        for r in 0..ctx.rules.len() {
            if let Some((l, sup)) = fire(ctx, &state, r) {
                push(&mut fresh, l, IVia::Rule(r), sup);
            }
        }
        for (ri, res) in ctx.residual.iter().enumerate() {
            for &a in res.compiled.vars() {
                if state.fixed[a].is_some() {
                    continue;
                }
                for w in state.alive(ctx, a) {
                    if let Some(sup) = propagate(ctx, &state, &res.compiled, a, w)? {
                        push(&mut fresh, ctx.exclusion(a, w), IVia::Propagation(ri), sup);
                    }
                }
            }
        }
        for a in 0..n {
            if ctx.is_bool(a) || state.fixed[a].is_some() {
                continue;
            }
            if let [v] = state.alive(ctx, a).as_slice() {
                let sup = state.restrictions(a);
                push(&mut fresh, Lit::eq(a, *v), IVia::Elimination, sup);
            }
        }
        if fresh.is_empty() {
            return Ok(ChainOutcome::NoChain(NoChainReason::Fixpoint));
        }
        for s in fresh {
            state.add(s.0, steps.len());
            steps.push(s);
        }
    }
}

fn finish(ctx: &ChainContext<'_>, steps: Vec<Step>, state: &State, target: usize, supports: Vec<Lit>) -> super::Chain {
    let mut needed = vec![false; steps.len()];
    let mut stack: Vec<Lit> = supports.clone();
    while let Some(l) = stack.pop() {
        let i = state.known[&l];
        if !needed[i] {
            needed[i] = true;
            stack.extend(steps[i].2.iter().copied());
        }
    }
    let kept: Vec<Step> = steps.into_iter().zip(needed).filter(|(_, k)| *k).map(|(s, _)| s).collect();
    ctx.assemble(Direction::Forward, kept, target, supports)
}
