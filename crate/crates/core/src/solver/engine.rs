use std::cell::Cell;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};

use super::{GroundAtomTable, GroundConstraint, Model, SatResult, SolveError, SolverConfig, Truth, Value};
use crate::logic::{ArithOp, CmpOp, Formula, NumExpr, PredicateAtom, Sort};

type Q = Ratio<i64>;

/// Exact rational arithmetic; `None` when undefined or out of range.
pub(crate) fn apply_arith(op: ArithOp, a: Q, b: Q) -> Option<Q> {
    match op {
        ArithOp::Add => a.checked_add(&b),
        ArithOp::Sub => a.checked_sub(&b),
        ArithOp::Mul => a.checked_mul(&b),
        ArithOp::Div => {
            if b.is_zero() {
                None
            } else {
                a.checked_div(&b)
            }
        }
        ArithOp::FloorDiv => {
            if b.is_zero() {
                None
            } else {
                a.checked_div(&b).map(|q| q.floor())
            }
        }
        ArithOp::Pow => {
            if !b.is_integer() {
                return None;
            }
            let e = b.to_integer();
            if e.abs() > 64 {
                return None;
            }
            let mut acc = Q::from_integer(1);
            for _ in 0..e.abs() {
                acc = acc.checked_mul(&a)?;
            }
            if e < 0 {
                if acc.is_zero() {
                    return None;
                }
                acc = Q::from_integer(1).checked_div(&acc)?;
            }
            Some(acc)
        }
    }
}

#[derive(Debug, Clone)]
enum CExpr {
    Const(bool),
    Var(usize),
    Not(Box<CExpr>),
    And(Vec<CExpr>),
    Or(Vec<CExpr>),
    Implies(Box<CExpr>, Box<CExpr>),
    Iff(Box<CExpr>, Box<CExpr>),
    Cmp(CmpOp, NExpr, NExpr),
}

#[derive(Debug, Clone)]
enum NExpr {
    Const(Q),
    Var(usize),
    Arith(ArithOp, Box<NExpr>, Box<NExpr>),
}

enum Num {
    Unknown,
    Undefined,
    Known(Q),
}

/// A constraint compiled against a table.
#[derive(Debug, Clone)]
pub struct Compiled {
    expr: CExpr,
    vars: Vec<usize>,
}

impl Compiled {
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    fn new(expr: CExpr) -> Self {
        let mut vars = Vec::new();
        collect_vars(&expr, &mut vars);
        vars.sort_unstable();
        vars.dedup();
        Self { expr, vars }
    }

    /// Top-level conjuncts as separate constraints, so each can propagate.
    fn split_into(&self, out: &mut Vec<Compiled>) {
        fn go(e: &CExpr, out: &mut Vec<Compiled>) {
            match e {
                CExpr::And(xs) => xs.iter().for_each(|x| go(x, out)),
                CExpr::Not(inner) => match inner.as_ref() {
                    CExpr::Or(xs) => xs.iter().for_each(|x| go(&CExpr::Not(Box::new(x.clone())), out)),
                    CExpr::Not(x) => go(x, out),
                    _ => out.push(Compiled::new(e.clone())),
                },
                _ => out.push(Compiled::new(e.clone())),
            }
        }
        match &self.expr {
            CExpr::And(_) | CExpr::Not(_) => go(&self.expr, out),
            _ => out.push(self.clone()),
        }
    }
}

fn known(dom: &[Vec<i64>], i: usize) -> Option<i64> {
    match dom[i].as_slice() {
        [v] => Some(*v),
        _ => None,
    }
}

fn eval_num(e: &NExpr, dom: &[Vec<i64>]) -> Num {
    match e {
        NExpr::Const(q) => Num::Known(*q),
        NExpr::Var(i) => match known(dom, *i) {
            Some(v) => Num::Known(Q::from_integer(v)),
            None => Num::Unknown,
        },
        NExpr::Arith(op, l, r) => match (eval_num(l, dom), eval_num(r, dom)) {
            (Num::Undefined, _) | (_, Num::Undefined) => Num::Undefined,
            (Num::Known(a), Num::Known(b)) => match apply_arith(*op, a, b) {
                Some(q) => Num::Known(q),
                None => Num::Undefined,
            },
            _ => Num::Unknown,
        },
    }
}

/// Kleene evaluation: `None` when not yet determined.
fn eval(e: &CExpr, dom: &[Vec<i64>]) -> Option<bool> {
    match e {
        CExpr::Const(b) => Some(*b),
        CExpr::Var(i) => known(dom, *i).map(|v| v != 0),
        CExpr::Not(x) => eval(x, dom).map(|b| !b),
        CExpr::And(xs) => {
            let mut all = true;
            for x in xs {
                match eval(x, dom) {
                    Some(false) => return Some(false),
                    None => all = false,
                    Some(true) => {}
                }
            }
            all.then_some(true)
        }
        CExpr::Or(xs) => {
            let mut none = true;
            for x in xs {
                match eval(x, dom) {
                    Some(true) => return Some(true),
                    None => none = false,
                    Some(false) => {}
                }
            }
            none.then_some(false)
        }
        CExpr::Implies(a, b) => match (eval(a, dom), eval(b, dom)) {
            (Some(false), _) | (_, Some(true)) => Some(true),
            (Some(true), Some(false)) => Some(false),
            _ => None,
        },
        CExpr::Iff(a, b) => Some(eval(a, dom)? == eval(b, dom)?),
        CExpr::Cmp(op, l, r) => match (eval_num(l, dom), eval_num(r, dom)) {
            (Num::Undefined, _) | (_, Num::Undefined) => Some(false),
            (Num::Known(a), Num::Known(b)) => Some(op.holds(&a, &b)),
            _ => None,
        },
    }
}

/// Compiles formulas against a table and decides satisfiability.
pub struct Engine<'t> {
    table: &'t GroundAtomTable,
    /// Branch nodes allowed per satisfiability search.
    budget: u64,
    nodes: Cell<u64>,
    search_nodes: Cell<u64>,
}

impl<'t> Engine<'t> {
    pub fn new(table: &'t GroundAtomTable, budget: u64) -> Self {
        Self {
            table,
            budget,
            nodes: Cell::new(0),
            search_nodes: Cell::new(0),
        }
    }

    pub fn with_config(table: &'t GroundAtomTable, config: &SolverConfig) -> Self {
        Self::new(table, config.node_budget)
    }

    pub fn table(&self) -> &GroundAtomTable {
        self.table
    }

    /// Total branch nodes explored by this engine so far.
    pub fn nodes(&self) -> u64 {
        self.nodes.get()
    }

    pub(crate) fn atom_index(&self, a: &PredicateAtom, sort: Sort) -> Result<usize, SolveError> {
        let mut key = a.clone();
        key.sort = sort;
        self.table.index_of(&key).ok_or_else(|| SolveError::MissingAtom(a.to_string()))
    }

    pub fn compile(&self, f: &Formula) -> Result<Compiled, SolveError> {
        Ok(Compiled::new(self.compile_expr(f)?))
    }

    /// `atom = value` as a compiled constraint.
    pub fn compile_assignment(&self, atom: usize, value: i64) -> Compiled {
        let expr = match self.table.entry(atom).atom.sort {
            Sort::Boolean if value != 0 => CExpr::Var(atom),
            Sort::Boolean => CExpr::Not(Box::new(CExpr::Var(atom))),
            Sort::Numeric => CExpr::Cmp(CmpOp::Eq, NExpr::Var(atom), NExpr::Const(Q::from_integer(value))),
        };
        Compiled { expr, vars: vec![atom] }
    }

    pub fn negate(&self, c: &Compiled) -> Compiled {
        Compiled {
            expr: CExpr::Not(Box::new(c.expr.clone())),
            vars: c.vars.clone(),
        }
    }

    pub fn compile_all(&self, cs: &[GroundConstraint]) -> Result<Vec<Compiled>, SolveError> {
        cs.iter().map(|c| self.compile(&c.formula)).collect()
    }

    fn compile_expr(&self, f: &Formula) -> Result<CExpr, SolveError> {
        Ok(match f {
            Formula::Atom(a) => CExpr::Var(self.atom_index(a, Sort::Boolean)?),
            Formula::Bool(b) => CExpr::Const(*b),
            Formula::Not(x) => CExpr::Not(Box::new(self.compile_expr(x)?)),
            Formula::And(xs) => CExpr::And(xs.iter().map(|x| self.compile_expr(x)).collect::<Result<_, _>>()?),
            Formula::Or(xs) => CExpr::Or(xs.iter().map(|x| self.compile_expr(x)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => CExpr::Implies(Box::new(self.compile_expr(a)?), Box::new(self.compile_expr(b)?)),
            Formula::Iff(a, b) => CExpr::Iff(Box::new(self.compile_expr(a)?), Box::new(self.compile_expr(b)?)),
            Formula::ForAll(..) | Formula::Exists(..) => {
                return Err(SolveError::InvariantViolation("quantifier in a ground constraint".into()))
            }
            Formula::Compare(op, l, r) => CExpr::Cmp(*op, self.compile_num(l)?, self.compile_num(r)?),
        })
    }

    fn compile_num(&self, e: &NumExpr) -> Result<NExpr, SolveError> {
        Ok(match e {
            NumExpr::Int(v) => NExpr::Const(Q::from_integer(*v)),
            NumExpr::Atom(a) => NExpr::Var(self.atom_index(a, Sort::Numeric)?),
            NumExpr::Arith(op, l, r) => NExpr::Arith(*op, Box::new(self.compile_num(l)?), Box::new(self.compile_num(r)?)),
        })
    }

    /// Lexicographically least model of the conjunction, if any.
    pub fn solve(&self, cs: &[&Compiled]) -> Result<Option<Vec<i64>>, SolveError> {
        self.search_nodes.set(0);
        let mut flat = Vec::with_capacity(cs.len());
        for c in cs {
            c.split_into(&mut flat);
        }
        let cs: Vec<&Compiled> = flat.iter().collect();
        let cs = cs.as_slice();
        let n = self.table.len();
        let mut dom: Vec<Vec<i64>> = self.table.entries().iter().map(|e| e.domain.clone()).collect();
        if dom.iter().any(Vec::is_empty) {
            return Ok(None);
        }

        // Union-find over atoms sharing a constraint.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for c in cs {
            if c.vars.is_empty() {
                if eval(&c.expr, &dom) == Some(false) {
                    return Ok(None);
                }
                continue;
            }
            let r0 = find(&mut parent, c.vars[0]);
            for &v in &c.vars[1..] {
                let r = find(&mut parent, v);
                if r != r0 {
                    parent[r] = r0;
                }
            }
        }
        let mut comp_of: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        // Renumber components by their smallest atom.
        let mut first: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            let r = comp_of[i];
            if first[r].is_none() {
                first[r] = Some(i);
            }
            comp_of[i] = first[r].unwrap_or(i);
        }

        let mut comp_constraints: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ci, c) in cs.iter().enumerate() {
            if let Some(&v) = c.vars.first() {
                comp_constraints[comp_of[v]].push(ci);
            }
        }
        let mut watch: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ci, c) in cs.iter().enumerate() {
            for &v in &c.vars {
                watch[v].push(ci);
            }
        }

        for root in 0..n {
            if comp_of[root] != root || comp_constraints[root].is_empty() {
                continue;
            }
            let vars: Vec<usize> = (root..n).filter(|&i| comp_of[i] == root).collect();
            let queue = comp_constraints[root].clone();
            if !self.propagate(cs, &watch, &mut dom, queue) {
                return Ok(None);
            }
            if !self.dfs(cs, &watch, &vars, &mut dom)? {
                return Ok(None);
            }
        }
        Ok(Some(dom.iter().map(|d| d[0]).collect()))
    }

    fn propagate(&self, cs: &[&Compiled], watch: &[Vec<usize>], dom: &mut [Vec<i64>], mut queue: Vec<usize>) -> bool {
        let mut queued = vec![false; cs.len()];
        for &c in &queue {
            queued[c] = true;
        }
        while let Some(ci) = queue.pop() {
            queued[ci] = false;
            let c = cs[ci];
            let mut open = c.vars.iter().filter(|&&v| dom[v].len() > 1);
            let first = open.next().copied();
            let several = open.next().is_some();
            match (first, several) {
                (None, _) | (Some(_), true) => {
                    if eval(&c.expr, dom) == Some(false) {
                        return false;
                    }
                }
                (Some(j), false) => {
                    let values = std::mem::take(&mut dom[j]);
                    let mut kept = Vec::with_capacity(values.len());
                    for &v in &values {
                        dom[j] = vec![v];
                        if eval(&c.expr, dom) != Some(false) {
                            kept.push(v);
                        }
                    }
                    let changed = kept.len() != values.len();
                    dom[j] = kept;
                    if dom[j].is_empty() {
                        return false;
                    }
                    if changed {
                        for &other in &watch[j] {
                            if other != ci && !queued[other] {
                                queued[other] = true;
                                queue.push(other);
                            }
                        }
                    }
                }
            }
        }
        true
    }

    fn dfs(&self, cs: &[&Compiled], watch: &[Vec<usize>], vars: &[usize], dom: &mut Vec<Vec<i64>>) -> Result<bool, SolveError> {
        let Some(&var) = vars.iter().find(|&&v| dom[v].len() > 1) else {
            return Ok(true);
        };
        for v in dom[var].clone() {
            self.nodes.set(self.nodes.get() + 1);
            let n = self.search_nodes.get() + 1;
            self.search_nodes.set(n);
            if n > self.budget {
                return Err(SolveError::BudgetExceeded(self.budget));
            }
            let saved = dom.clone();
            dom[var] = vec![v];
            if self.propagate(cs, watch, dom, watch[var].clone()) && self.dfs(cs, watch, vars, dom)? {
                return Ok(true);
            }
            *dom = saved;
        }
        Ok(false)
    }

    pub fn sat(&self, cs: &[&Compiled]) -> Result<bool, SolveError> {
        Ok(self.solve(cs)?.is_some())
    }

    /// Solve and convert to a [`SatResult`], verifying the model.
    pub fn check(&self, cs: &[&Compiled]) -> Result<SatResult, SolveError> {
        match self.solve(cs)? {
            None => Ok(SatResult::Unsat),
            Some(raw) => {
                let full: Vec<Vec<i64>> = raw.iter().map(|v| vec![*v]).collect();
                if cs.iter().any(|c| eval(&c.expr, &full) != Some(true)) {
                    return Err(SolveError::InvariantViolation("model fails a constraint".into()));
                }
                Ok(SatResult::Sat(Model::from_raw(self.table, &raw)))
            }
        }
    }

    /// Sat flags for `base ∧ q` and `base ∧ ¬q`.
    pub fn entailment_flags(&self, base: &[&Compiled], q: &Compiled) -> Result<(bool, bool), SolveError> {
        let nq = self.negate(q);
        let mut with_q: Vec<&Compiled> = base.to_vec();
        with_q.push(q);
        let sat_q = self.sat(&with_q)?;
        with_q.pop();
        with_q.push(&nq);
        let sat_nq = self.sat(&with_q)?;
        Ok((sat_q, sat_nq))
    }

    pub fn entail(&self, base: &[&Compiled], q: &Compiled) -> Result<Truth, SolveError> {
        truth_from_flags(self.entailment_flags(base, q)?)
    }

    /// Values `v` of `atom` with `base ∧ atom = v` satisfiable, ascending.
    pub fn value_set(&self, base: &[&Compiled], atom: usize) -> Result<Vec<i64>, SolveError> {
        let mut out = Vec::new();
        for &v in &self.table.entry(atom).domain {
            let eq = self.compile_assignment(atom, v);
            let mut cs = base.to_vec();
            cs.push(&eq);
            if self.sat(&cs)? {
                out.push(v);
            }
        }
        Ok(out)
    }
}

pub(crate) fn truth_from_flags(flags: (bool, bool)) -> Result<Truth, SolveError> {
    match flags {
        (true, false) => Ok(Truth::True),
        (false, true) => Ok(Truth::False),
        (true, true) => Ok(Truth::Unknown),
        (false, false) => Err(SolveError::InvariantViolation("excluded middle".into())),
    }
}

fn collect_vars(e: &CExpr, out: &mut Vec<usize>) {
    fn num(e: &NExpr, out: &mut Vec<usize>) {
        match e {
            NExpr::Const(_) => {}
            NExpr::Var(i) => out.push(*i),
            NExpr::Arith(_, l, r) => {
                num(l, out);
                num(r, out);
            }
        }
    }
    match e {
        CExpr::Const(_) => {}
        CExpr::Var(i) => out.push(*i),
        CExpr::Not(x) => collect_vars(x, out),
        CExpr::And(xs) | CExpr::Or(xs) => xs.iter().for_each(|x| collect_vars(x, out)),
        CExpr::Implies(a, b) | CExpr::Iff(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        CExpr::Cmp(_, l, r) => {
            num(l, out);
            num(r, out);
        }
    }
}

/// Decide satisfiability of a constraint list with the default budget.
pub fn check_sat(table: &GroundAtomTable, constraints: &[GroundConstraint]) -> Result<SatResult, SolveError> {
    let engine = Engine::with_config(table, &SolverConfig::default());
    let compiled = engine.compile_all(constraints)?;
    let refs: Vec<&Compiled> = compiled.iter().collect();
    engine.check(&refs)
}

/// Sat flags for `Φ ∧ q` and `Φ ∧ ¬q`.
pub fn entailment_flags(table: &GroundAtomTable, constraints: &[GroundConstraint], q: &Formula) -> Result<(bool, bool), SolveError> {
    let engine = Engine::with_config(table, &SolverConfig::default());
    let compiled = engine.compile_all(constraints)?;
    let refs: Vec<&Compiled> = compiled.iter().collect();
    engine.entailment_flags(&refs, &engine.compile(q)?)
}

pub fn entail_boolean(table: &GroundAtomTable, constraints: &[GroundConstraint], q: &Formula) -> Result<Truth, SolveError> {
    truth_from_flags(entailment_flags(table, constraints, q)?)
}

pub fn solve_numeric(table: &GroundAtomTable, constraints: &[GroundConstraint], a: &PredicateAtom) -> Result<Vec<i64>, SolveError> {
    let engine = Engine::with_config(table, &SolverConfig::default());
    let compiled = engine.compile_all(constraints)?;
    let refs: Vec<&Compiled> = compiled.iter().collect();
    let idx = engine.atom_index(a, Sort::Numeric)?;
    engine.value_set(&refs, idx)
}

fn eval_model_num(model: &Model, e: &NumExpr) -> Result<Option<Q>, SolveError> {
    Ok(match e {
        NumExpr::Int(v) => Some(Q::from_integer(*v)),
        NumExpr::Atom(a) => match model.get(a) {
            Some(Value::Int(v)) => Some(Q::from_integer(v)),
            _ => return Err(SolveError::MissingAtom(a.to_string())),
        },
        NumExpr::Arith(op, l, r) => {
            let (l, r) = (eval_model_num(model, l)?, eval_model_num(model, r)?);
            match (l, r) {
                (Some(a), Some(b)) => apply_arith(*op, a, b),
                _ => None,
            }
        }
    })
}

/// Truth of a ground formula under a total model.
pub fn evaluate(model: &Model, formula: &Formula) -> Result<bool, SolveError> {
    Ok(match formula {
        Formula::Atom(a) => match model.get(a) {
            Some(Value::Bool(b)) => b,
            _ => return Err(SolveError::MissingAtom(a.to_string())),
        },
        Formula::Bool(b) => *b,
        Formula::Not(x) => !evaluate(model, x)?,
        Formula::And(xs) => {
            let mut all = true;
            for x in xs {
                all &= evaluate(model, x)?;
            }
            all
        }
        Formula::Or(xs) => {
            let mut any = false;
            for x in xs {
                any |= evaluate(model, x)?;
            }
            any
        }
        Formula::Implies(a, b) => !evaluate(model, a)? || evaluate(model, b)?,
        Formula::Iff(a, b) => evaluate(model, a)? == evaluate(model, b)?,
        Formula::ForAll(..) | Formula::Exists(..) => {
            return Err(SolveError::InvariantViolation("quantifier in a ground constraint".into()))
        }
        Formula::Compare(op, l, r) => match (eval_model_num(model, l)?, eval_model_num(model, r)?) {
            (Some(a), Some(b)) => op.holds(&a, &b),
            _ => false,
        },
    })
}
