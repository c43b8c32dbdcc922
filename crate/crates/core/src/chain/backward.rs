use std::collections::{HashMap, HashSet};

use super::{ChainContext, ChainOutcome, Direction, IVia, Lit, NoChainReason};
use crate::logic::{CmpOp, Formula, NumExpr, Sort};
use crate::solver::SolveError;

pub const DEFAULT_DEPTH_LIMIT: usize = 64;
const CALL_BUDGET: u64 = 2_000_000;

type Step = (Lit, IVia, Vec<Lit>);

/// A goal formula in negation normal form.
enum Goal {
    Lit(Lit),
    All(Vec<Goal>),
    Any(Vec<Goal>),
    Trivial,
    Impossible,
}

struct Search<'c, 'g> {
    ctx: &'c ChainContext<'g>,
    by_conclusion: HashMap<Lit, Vec<usize>>,
    by_atom: HashMap<usize, Vec<usize>>,
    steps: Vec<Step>,
    proven: HashSet<Lit>,
    path: Vec<Lit>,
    /// Goals that failed, with the depth tried and whether the limit mattered.
    failed: HashMap<Lit, (usize, bool)>,
    calls: u64,
    cycle: bool,
    depth_hit: bool,
}

impl Search<'_, '_> {
    fn given(&self, g: Lit) -> Option<Lit> {
        self.ctx.givens.iter().copied().find(|&s| s == g || (s.eq && !g.eq && s.atom == g.atom && s.value != g.value))
    }

    fn prove(&mut self, g: Lit, depth: usize) -> Result<Option<Lit>, SolveError> {
        self.calls += 1;
        if self.calls > CALL_BUDGET {
            self.depth_hit = true;
            return Ok(None);
        }
        if let Some(s) = self.given(g) {
            if self.proven.insert(s) {
                self.steps.push((s, IVia::Given, Vec::new()));
            }
            return Ok(Some(s));
        }
        if self.proven.contains(&g) {
            return Ok(Some(g));
        }
        if self.path.contains(&g) {
            self.cycle = true;
            return Ok(None);
        }
        if depth == 0 {
            self.depth_hit = true;
            return Ok(None);
        }
        if let Some(&(d, limited)) = self.failed.get(&g) {
            if d >= depth {
                self.depth_hit |= limited;
                return Ok(None);
            }
        }
        let before = self.depth_hit;
        self.depth_hit = false;
        self.path.push(g);
        let found = self.prove_inner(g, depth)?;
        self.path.pop();
        let limited = self.depth_hit;
        self.depth_hit |= before;
        if found.is_none() {
            self.failed.insert(g, (depth, limited));
        }
        Ok(found)
    }

    fn checkpoint(&self) -> usize {
        self.steps.len()
    }

    fn rollback(&mut self, mark: usize) {
        for (l, _, _) in self.steps.drain(mark..) {
            self.proven.remove(&l);
        }
    }

    fn conclude(&mut self, g: Lit, via: IVia, sup: Vec<Lit>) -> Option<Lit> {
        self.proven.insert(g);
        self.steps.push((g, via, sup));
        Some(g)
    }

    fn prove_all(&mut self, goals: &[Lit], depth: usize) -> Result<Option<Vec<Lit>>, SolveError> {
        let mut sup = Vec::with_capacity(goals.len());
        for &p in goals {
            match self.prove(p, depth)? {
                Some(s) => sup.push(s),
                None => return Ok(None),
            }
        }
        Ok(Some(sup))
    }

    fn prove_inner(&mut self, g: Lit, depth: usize) -> Result<Option<Lit>, SolveError> {
        let ctx = self.ctx;
        let rules = self.by_conclusion.get(&g).cloned().unwrap_or_default();
        for r in rules {
            let mark = self.checkpoint();
            if let Some(sup) = self.prove_all(&ctx.rules[r].premises, depth - 1)? {
                return Ok(self.conclude(g, IVia::Rule(r), sup));
            }
            self.rollback(mark);
        }

        if g.eq && !ctx.is_bool(g.atom) {
            let mark = self.checkpoint();
            let others: Vec<Lit> = ctx
                .table
                .entry(g.atom)
                .domain
                .iter()
                .filter(|&&w| w != g.value)
                .map(|&w| Lit { atom: g.atom, value: w, eq: false })
                .collect();
            if let Some(sup) = self.prove_all(&others, depth - 1)? {
                return Ok(self.conclude(g, IVia::Elimination, sup));
            }
            self.rollback(mark);
        }

        let Some(w) = ctx.excluded_value(g) else { return Ok(None) };
        let assign = ctx.engine.compile_assignment(g.atom, w);
        let residuals = self.by_atom.get(&g.atom).cloned().unwrap_or_default();
        for &ri in &residuals {
            if ctx.refuted(&[&ctx.residual[ri].compiled, &assign], &[])? {
                return Ok(self.conclude(g, IVia::Propagation(ri), Vec::new()));
            }
        }
        for &ri in &residuals {
            let res = &ctx.residual[ri].compiled;
            for &b in res.vars() {
                if b == g.atom {
                    continue;
                }
                for &u in &ctx.table.entry(b).domain {
                    let premise = Lit::eq(b, u);
                    if !ctx.refuted(&[res, &assign], &[premise])? {
                        continue;
                    }
                    let mark = self.checkpoint();
                    if let Some(s) = self.prove(premise, depth - 1)? {
                        return Ok(self.conclude(g, IVia::Propagation(ri), vec![s]));
                    }
                    self.rollback(mark);
                }
            }
        }
        Ok(None)
    }

    fn prove_goal(&mut self, goal: &Goal, depth: usize) -> Result<Option<Vec<Lit>>, SolveError> {
        match goal {
            Goal::Trivial => Ok(Some(Vec::new())),
            Goal::Impossible => Ok(None),
            Goal::Lit(l) => Ok(self.prove(*l, depth)?.map(|s| vec![s])),
            Goal::All(gs) => {
                let mut out = Vec::new();
                for g in gs {
                    match self.prove_goal(g, depth)? {
                        Some(s) => out.extend(s),
                        None => return Ok(None),
                    }
                }
                Ok(Some(out))
            }
            Goal::Any(gs) => {
                for g in gs {
                    let mark = self.checkpoint();
                    if let Some(s) = self.prove_goal(g, depth)? {
                        return Ok(Some(s));
                    }
                    self.rollback(mark);
                }
                Ok(None)
            }
        }
    }
}

fn goal(ctx: &ChainContext<'_>, f: &Formula, pos: bool) -> Goal {
    match f {
        Formula::Atom(a) => match ctx.engine.atom_index(a, Sort::Boolean) {
            Ok(i) => Goal::Lit(Lit::eq(i, pos as i64)),
            Err(_) => Goal::Impossible,
        },
        Formula::Bool(b) => {
            if *b == pos {
                Goal::Trivial
            } else {
                Goal::Impossible
            }
        }
        Formula::Not(x) => goal(ctx, x, !pos),
        Formula::And(xs) | Formula::Or(xs) => {
            let gs = xs.iter().map(|x| goal(ctx, x, pos)).collect();
            if matches!(f, Formula::And(_)) == pos {
                Goal::All(gs)
            } else {
                Goal::Any(gs)
            }
        }
        Formula::Implies(a, b) => {
            if pos {
                Goal::Any(vec![goal(ctx, a, false), goal(ctx, b, true)])
            } else {
                Goal::All(vec![goal(ctx, a, true), goal(ctx, b, false)])
            }
        }
        Formula::Compare(op, l, r) => {
            let op = if pos { *op } else { op.negate() };
            let (atom, c, op) = match (l, r) {
                (NumExpr::Atom(a), NumExpr::Int(c)) => (a, *c, op),
                (NumExpr::Int(c), NumExpr::Atom(a)) => (a, *c, op.flip()),
                _ => return Goal::Impossible,
            };
            let Ok(i) = ctx.engine.atom_index(atom, Sort::Numeric) else { return Goal::Impossible };
            match op {
                CmpOp::Eq => Goal::Lit(Lit::eq(i, c)),
                CmpOp::Ne => Goal::Lit(Lit { atom: i, value: c, eq: false }),
                _ => Goal::Impossible,
            }
        }
        Formula::Iff(..) | Formula::ForAll(..) | Formula::Exists(..) => Goal::Impossible,
    }
}

/// Goal-directed proof search by iterative deepening, trying the targets in
/// order at each depth. Only single-conclusion rules are used backwards.
pub fn backward_chain(ctx: &ChainContext<'_>, depth_limit: usize) -> Result<ChainOutcome, SolveError> {
    let mut by_conclusion: HashMap<Lit, Vec<usize>> = HashMap::new();
    for (i, r) in ctx.rules.iter().enumerate() {
        if let [c] = r.conclusions.as_slice() {
            by_conclusion.entry(*c).or_default().push(i);
        }
    }
    let mut by_atom: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, r) in ctx.residual.iter().enumerate() {
        for &a in r.compiled.vars() {
            by_atom.entry(a).or_default().push(i);
        }
    }
    let goals: Vec<Goal> = ctx.targets.iter().map(|t| goal(ctx, &t.formula, true)).collect();
    let mut s = Search {
        ctx,
        by_conclusion,
        by_atom,
        steps: Vec::new(),
        proven: HashSet::new(),
        path: Vec::new(),
        failed: HashMap::new(),
        calls: 0,
        cycle: false,
        depth_hit: false,
    };
    for depth in 1..=depth_limit {
        s.depth_hit = false;
        s.cycle = false;
        s.failed.clear();
        for (ti, g) in goals.iter().enumerate() {
            s.steps.clear();
            s.proven.clear();
            if let Some(sup) = s.prove_goal(g, depth)? {
                if ctx.unique_target(ti)? {
                    let steps = std::mem::take(&mut s.steps);
                    return Ok(ChainOutcome::Found(ctx.assemble(Direction::Backward, steps, ti, sup)));
                }
            }
        }
        if s.calls > CALL_BUDGET {
            return Ok(ChainOutcome::NoChain(NoChainReason::Depth));
        }
        if !s.depth_hit {
            let reason = if s.cycle { NoChainReason::Cycle } else { NoChainReason::DeadEnd };
            return Ok(ChainOutcome::NoChain(reason));
        }
    }
    Ok(ChainOutcome::NoChain(NoChainReason::Depth))
}
