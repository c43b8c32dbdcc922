#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;
use ssr::bench::BenchProblem;
use ssr::logic::{canonicalize_atom, ArithOp, CmpOp, Formula, NumExpr, PredicateAtom, Sort, Term};
use ssr::solver::{ground_formula, GroundAtomTable, GroundConstraint};

pub fn pack_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/worked_cases")
}

#[derive(Deserialize)]
pub struct Case {
    #[serde(flatten)]
    pub problem: BenchProblem,
    pub translation: Value,
}

pub fn worked_cases() -> Vec<Case> {
    let text = std::fs::read_to_string(pack_dir().join("cases.json")).expect("case pack");
    serde_json::from_str(&text).expect("case pack json")
}

/// Signature of a random problem.
#[derive(Debug, Clone)]
pub struct Signature {
    pub objects: Vec<String>,
    pub unary: Vec<String>,
    pub binary: Vec<String>,
    /// Numeric predicates with their domain `1..=size`.
    pub numeric: Vec<(String, i64)>,
}

/// A random ground problem small enough to enumerate.
#[derive(Debug, Clone)]
pub struct RandomProblem {
    pub sig: Signature,
    /// Formulas before grounding; may contain quantifiers.
    pub facts: Vec<Formula>,
    pub query: Formula,
    pub target: PredicateAtom,
    pub table: GroundAtomTable,
    pub constraints: Vec<GroundConstraint>,
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    sig: &'a Signature,
}

impl Gen<'_> {
    fn term(&mut self, scope: &[String]) -> Term {
        if !scope.is_empty() && self.rng.gen_bool(0.6) {
            Term::Var(scope[self.rng.gen_range(0..scope.len())].clone())
        } else {
            Term::Obj(self.sig.objects.choose(self.rng).unwrap().clone())
        }
    }

    fn num(&mut self, scope: &[String]) -> NumExpr {
        let (name, _) = self.sig.numeric.choose(self.rng).unwrap().clone();
        let atom = NumExpr::Atom(PredicateAtom::new(name, vec![self.term(scope)], Sort::Numeric));
        if self.rng.gen_bool(0.25) {
            let op = *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul].choose(self.rng).unwrap();
            let rhs = if self.rng.gen_bool(0.5) { NumExpr::Int(self.rng.gen_range(1..=2)) } else { self.num_atom(scope) };
            NumExpr::Arith(op, Box::new(atom), Box::new(rhs))
        } else {
            atom
        }
    }

    fn num_atom(&mut self, scope: &[String]) -> NumExpr {
        let (name, _) = self.sig.numeric.choose(self.rng).unwrap().clone();
        NumExpr::Atom(PredicateAtom::new(name, vec![self.term(scope)], Sort::Numeric))
    }

    fn leaf(&mut self, scope: &[String]) -> Formula {
        let numeric = !self.sig.numeric.is_empty() && self.rng.gen_bool(0.35);
        if numeric {
            let op = *[CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne].choose(self.rng).unwrap();
            let lhs = self.num(scope);
            let rhs = if self.rng.gen_bool(0.5) { NumExpr::Int(self.rng.gen_range(0..=6)) } else { self.num_atom(scope) };
            return Formula::Compare(op, lhs, rhs);
        }
        if !self.sig.binary.is_empty() && self.rng.gen_bool(0.25) {
            let name = self.sig.binary.choose(self.rng).unwrap().clone();
            return Formula::Atom(PredicateAtom::new(name, vec![self.term(scope), self.term(scope)], Sort::Boolean));
        }
        let name = self.sig.unary.choose(self.rng).unwrap().clone();
        Formula::Atom(PredicateAtom::new(name, vec![self.term(scope)], Sort::Boolean))
    }

    fn formula(&mut self, scope: &[String], depth: u32) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf(scope);
        }
        match self.rng.gen_range(0..5) {
            0 => Formula::not(self.formula(scope, depth - 1)),
            1 => Formula::And((0..self.rng.gen_range(2..=3)).map(|_| self.formula(scope, depth - 1)).collect()),
            2 => Formula::Or((0..self.rng.gen_range(2..=3)).map(|_| self.formula(scope, depth - 1)).collect()),
            3 => Formula::implies(self.formula(scope, depth - 1), self.formula(scope, depth - 1)),
            _ => Formula::Iff(Box::new(self.formula(scope, depth - 1)), Box::new(self.formula(scope, depth - 1))),
        }
    }

    fn fact(&mut self) -> Formula {
        if self.rng.gen_bool(0.4) {
            let var = "x".to_string();
            let body = self.formula(std::slice::from_ref(&var), 2);
            if self.rng.gen_bool(0.6) {
                Formula::ForAll(var, Box::new(body))
            } else {
                Formula::Exists(var, Box::new(body))
            }
        } else {
            self.formula(&[], 2)
        }
    }
}

/// Random problem over at most 4 objects and 6 predicates, numeric domains
/// of at most 5 values, and at most `max_space` total assignments.
pub fn random_problem(seed: u64, n_facts: std::ops::RangeInclusive<usize>, max_space: u128) -> RandomProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n_obj = rng.gen_range(1..=4);
        let n_pred = rng.gen_range(1..=6);
        let n_num = rng.gen_range(0..=n_pred.min(2));
        let n_bin = if n_pred - n_num > 1 { rng.gen_range(0..=1) } else { 0 };
        let sig = Signature {
            objects: (0..n_obj).map(|i| format!("o{i}")).collect(),
            unary: (0..n_pred - n_num - n_bin).map(|i| format!("P{i}")).collect(),
            binary: (0..n_bin).map(|i| format!("R{i}")).collect(),
            numeric: (0..n_num).map(|i| (format!("N{i}"), rng.gen_range(2..=5))).collect(),
        };
        if sig.unary.is_empty() {
            continue;
        }
        let mut g = Gen { rng: &mut rng, sig: &sig };
        let count = g.rng.gen_range(n_facts.clone());
        let facts: Vec<Formula> = (0..count).map(|_| g.fact()).collect();
        let query = g.formula(&[], 1);
        let target = match sig.numeric.first() {
            Some((n, _)) => PredicateAtom::numeric(n.clone(), sig.objects.choose(g.rng).unwrap().clone()),
            None => PredicateAtom::unary(sig.unary[0].clone(), sig.objects[0].clone()),
        };
        let grounded: Vec<Formula> = facts.iter().map(|f| ground_formula(f, &sig.objects)).collect();
        let gq = ground_formula(&query, &sig.objects);
        let mut table = GroundAtomTable::new();
        let domain = |a: &PredicateAtom| match a.sort {
            Sort::Boolean => vec![0, 1],
            Sort::Numeric => {
                let size = sig.numeric.iter().find(|(n, _)| *n == a.name).map_or(1, |(_, s)| *s);
                (1..=size).collect()
            }
        };
        for f in grounded.iter().chain(std::iter::once(&gq)) {
            f.visit_atoms(&mut |a| {
                if table.index_of(a).is_none() {
                    table.insert(a.clone(), domain(a));
                }
            });
        }
        if table.index_of(&target).is_none() {
            table.insert(target.clone(), domain(&target));
        }
        let space: u128 = table.entries().iter().map(|e| e.domain.len() as u128).product();
        if space > max_space {
            continue;
        }
        let constraints = grounded
            .into_iter()
            .enumerate()
            .map(|(i, formula)| GroundConstraint { formula, origin: Some(i) })
            .collect();
        return RandomProblem {
            sig,
            facts,
            query,
            target,
            table,
            constraints,
        };
    }
}

/// Every total assignment of `table`, as raw values in table order.
pub fn assignments(table: &GroundAtomTable) -> impl Iterator<Item = Vec<i64>> + '_ {
    let domains: Vec<&[i64]> = table.entries().iter().map(|e| e.domain.as_slice()).collect();
    let total: usize = domains.iter().map(|d| d.len()).product();
    (0..total).map(move |mut k| {
        domains
            .iter()
            .map(|d| {
                let v = d[k % d.len()];
                k /= d.len();
                v
            })
            .collect()
    })
}

/// Reference semantics: quantifiers range over `objects`, atoms are looked up
/// in `raw` after substitution.
pub struct Oracle<'a> {
    pub table: &'a GroundAtomTable,
    pub objects: &'a [String],
}

impl Oracle<'_> {
    fn lookup(&self, a: &PredicateAtom, env: &HashMap<String, String>, raw: &[i64]) -> i64 {
        let args = a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::Obj(env[v].clone()),
                o => o.clone(),
            })
            .collect();
        let ground = canonicalize_atom(&PredicateAtom::new(a.name.clone(), args, a.sort));
        let i = self.table.index_of(&ground).unwrap_or_else(|| panic!("atom {ground} not in table"));
        raw[i]
    }

    fn num(&self, e: &NumExpr, env: &HashMap<String, String>, raw: &[i64]) -> i64 {
        match e {
            NumExpr::Int(v) => *v,
            NumExpr::Atom(a) => self.lookup(a, env, raw),
            NumExpr::Arith(op, l, r) => {
                let (l, r) = (self.num(l, env, raw), self.num(r, env, raw));
                match op {
                    ArithOp::Add => l + r,
                    ArithOp::Sub => l - r,
                    ArithOp::Mul => l * r,
                    other => panic!("oracle does not model {other:?}"),
                }
            }
        }
    }

    pub fn eval(&self, f: &Formula, env: &mut HashMap<String, String>, raw: &[i64]) -> bool {
        match f {
            Formula::Atom(a) => self.lookup(a, env, raw) == 1,
            Formula::Bool(b) => *b,
            Formula::Not(x) => !self.eval(x, env, raw),
            Formula::And(xs) => xs.iter().all(|x| self.eval(x, env, raw)),
            Formula::Or(xs) => xs.iter().any(|x| self.eval(x, env, raw)),
            Formula::Implies(a, b) => !self.eval(a, env, raw) || self.eval(b, env, raw),
            Formula::Iff(a, b) => self.eval(a, env, raw) == self.eval(b, env, raw),
            Formula::ForAll(v, body) | Formula::Exists(v, body) => {
                let all = matches!(f, Formula::ForAll(..));
                let saved = env.get(v).cloned();
                let mut result = all;
                for o in self.objects {
                    env.insert(v.clone(), o.clone());
                    if self.eval(body, env, raw) != all {
                        result = !all;
                        break;
                    }
                }
                match saved {
                    Some(s) => env.insert(v.clone(), s),
                    None => env.remove(v),
                };
                result
            }
            Formula::Compare(op, l, r) => op.holds(&self.num(l, env, raw), &self.num(r, env, raw)),
        }
    }

    pub fn holds(&self, f: &Formula, raw: &[i64]) -> bool {
        self.eval(f, &mut HashMap::new(), raw)
    }
}

/// Exhaustive answers for a random problem.
#[derive(Debug, PartialEq)]
pub struct Expected {
    pub sat: bool,
    /// (query satisfiable, negation satisfiable)
    pub flags: (bool, bool),
    pub values: Vec<i64>,
}

pub fn brute_force(p: &RandomProblem) -> Expected {
    let oracle = Oracle {
        table: &p.table,
        objects: &p.sig.objects,
    };
    let t = p.table.index_of(&p.target).unwrap();
    let mut out = Expected {
        sat: false,
        flags: (false, false),
        values: Vec::new(),
    };
    for raw in assignments(&p.table) {
        if p.facts.iter().all(|f| oracle.holds(f, &raw)) {
            out.sat = true;
            if oracle.holds(&p.query, &raw) {
                out.flags.0 = true;
            } else {
                out.flags.1 = true;
            }
            if !out.values.contains(&raw[t]) {
                out.values.push(raw[t]);
            }
        }
    }
    out.values.sort_unstable();
    out
}

/// Best achievable kept weight: the heaviest set of facts one model satisfies.
pub fn brute_force_subset(p: &RandomProblem, weights: &[f64]) -> f64 {
    let oracle = Oracle {
        table: &p.table,
        objects: &p.sig.objects,
    };
    let mut best = 0.0f64;
    let mut seen = std::collections::HashSet::new();
    for raw in assignments(&p.table) {
        let mask: u64 = p.facts.iter().enumerate().filter(|(_, f)| oracle.holds(f, &raw)).fold(0, |m, (i, _)| m | 1 << i);
        if seen.insert(mask) {
            let w: f64 = (0..p.facts.len()).filter(|i| mask >> i & 1 == 1).map(|i| weights[i]).sum();
            best = best.max(w);
        }
    }
    best
}

/// Tally of labelled outcomes, for reports.
pub fn tally<'a>(items: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i.to_string()).or_default() += 1;
    }
    m
}
