use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::pipeline::{hard_verdict, map_verdict, prepare, LabelMap};
use super::synth::{capitalize, position_sentence, ORDINALS};
use super::{BenchError, BenchProblem, DatasetTag};
use crate::logic::{parse_formula, CmpOp, Formula, NumExpr, Problem};
use crate::solver::{Engine, SolverConfig, Value as AtomValue};

/// Distractor sentences inserted by positive strengths.
pub const POOL: [&str; 20] = [
    "This sentence is included for completeness but does not affect the problem.",
    "The following text contains multiple independent statements.",
    "Logical reasoning tasks may vary in difficulty.",
    "Please note that not all sentences are equally important.",
    "Water boils at 100 degrees Celsius at sea level.",
    "The Earth completes one full rotation every 24 hours.",
    "A standard chessboard has 64 squares.",
    "Most modern buildings are made of concrete or steel.",
    "It was raining lightly outside the room.",
    "The room was quiet except for the sound of a ticking clock.",
    "After a long day, the reader might feel slightly tired.",
    "The experiment was conducted late in the afternoon.",
    "The meeting lasted for 45 minutes.",
    "There are seven continents on Earth.",
    "The building has three elevators and twelve floors.",
    "A triangle has exactly three sides.",
    "If today is Monday, then tomorrow is Tuesday.",
    "All squares are rectangles, but not all rectangles are squares.",
    "If A implies B, the reverse does not necessarily hold.",
    "Either the statement is true, or it is false.",
];

/// Reference translations of the pool, free of object constants.
const POOL_FORMS: [&str; 20] = [
    "Included_for_completeness()",
    "Text_contains_independent_statements()",
    "Reasoning_tasks_vary_in_difficulty()",
    "not All_sentences_equally_important()",
    "Water_boils_at_100_celsius()",
    "Earth_rotates_every_24_hours()",
    "Chessboard_has_64_squares()",
    "forall x. (Modern(x) and Building(x)) -> (Made_of_concrete(x) or Made_of_steel(x))",
    "Raining_lightly_outside()",
    "Room_quiet_except_clock()",
    "Reader_might_feel_tired()",
    "Experiment_late_afternoon()",
    "Meeting_lasted_45_minutes()",
    "Seven_continents_on_earth()",
    "Building_has_three_elevators() and Building_has_twelve_floors()",
    "Triangle_has_three_sides()",
    "Today_is_monday() -> Tomorrow_is_tuesday()",
    "forall x. Square(x) -> Rectangle(x)",
    "Reverse_implication_holds() or not Reverse_implication_holds()",
    "Statement_true() or not Statement_true()",
];

const LOW_WEIGHT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbSpec {
    /// `+k` adds `k` distractors; `-k` removes or modifies `k` premises.
    pub strength: i32,
    pub seed: u64,
}

/// Sentences with their trailing whitespace; concatenation gives `text` back.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'?' | b'!') && (i + 1 == bytes.len() || bytes[i + 1].is_ascii_whitespace()) {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            out.push(&text[start..j]);
            start = j;
            i = j;
        } else {
            i += 1;
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

/// The context rebuilt from the sentence text of an envelope's facts.
pub fn envelope_context(envelope: &Value) -> String {
    facts_of(envelope).iter().filter_map(|f| sentence_of(f)).collect::<Vec<_>>().join(" ")
}

fn facts_of(envelope: &Value) -> Vec<Value> {
    envelope.get("facts").and_then(Value::as_array).cloned().unwrap_or_default()
}

fn sentence_of(fact: &Value) -> Option<&str> {
    fact.as_array().and_then(|p| p.first()).and_then(Value::as_str)
}

fn form_of(fact: &Value) -> Option<&str> {
    match fact {
        Value::String(s) => Some(s),
        Value::Array(p) => p.get(1).and_then(Value::as_str),
        _ => None,
    }
}

/// A problem split into editable parts.
struct Doc {
    segs: Vec<String>,
    facts: Option<Vec<Value>>,
    weights: Option<Vec<f64>>,
    keys: Vec<usize>,
    n_objects: usize,
}

impl Doc {
    fn new(p: &BenchProblem) -> Self {
        let facts = p.gold_envelope.as_ref().map(facts_of);
        let n_objects = p
            .gold_envelope
            .as_ref()
            .and_then(|e| e.get("objects"))
            .and_then(Value::as_array)
            .map_or(0, Vec::len);
        Self {
            segs: split_sentences(&p.context).into_iter().map(String::from).collect(),
            weights: p.gold_weights.clone().filter(|w| Some(w.len()) == facts.as_ref().map(Vec::len)),
            facts,
            keys: p.key_premises.clone(),
            n_objects,
        }
    }

    /// Index of the fact stated by segment `seg`, walking both in order.
    fn fact_at_segment(&self, seg: usize) -> usize {
        let Some(facts) = &self.facts else { return 0 };
        let mut k = 0;
        for s in &self.segs[..seg] {
            if k < facts.len() && sentence_of(&facts[k]) == Some(s.trim_end()) {
                k += 1;
            }
        }
        k
    }

    fn segment_of(&self, sentence: &str) -> Option<usize> {
        self.segs.iter().position(|s| s.trim_end() == sentence)
    }

    fn insert_fact(&mut self, at: usize, fact: Value, weight: f64) {
        if let Some(f) = &mut self.facts {
            f.insert(at, fact);
        }
        if let Some(w) = &mut self.weights {
            w.insert(at, weight);
        }
        for k in &mut self.keys {
            if *k >= at {
                *k += 1;
            }
        }
    }

    fn remove_fact(&mut self, at: usize) {
        if let Some(f) = &mut self.facts {
            f.remove(at);
        }
        if let Some(w) = &mut self.weights {
            w.remove(at);
        }
        self.keys.retain(|&k| k != at);
        for k in &mut self.keys {
            if *k > at {
                *k -= 1;
            }
        }
    }

    fn replace_segment(&mut self, i: usize, sentence: &str) {
        let ws = &self.segs[i][self.segs[i].trim_end().len()..];
        self.segs[i] = format!("{sentence}{ws}");
    }

    fn finish(self, p: &BenchProblem, relabel: Option<&SolverConfig>) -> BenchProblem {
        let mut out = p.clone();
        out.context = self.segs.concat();
        out.key_premises = self.keys;
        out.gold_weights = self.weights;
        if let (Some(env), Some(facts)) = (&mut out.gold_envelope, self.facts) {
            env["facts"] = Value::Array(facts);
        }
        if let (Some(config), Some(env), DatasetTag::Synthetic) = (relabel, &out.gold_envelope, p.dataset) {
            if let Some(l) = map_verdict(&hard_verdict(env, config), &out, &LabelMap::default()) {
                out.gold_label = l;
            }
        }
        out
    }
}

const LOWER_STARTS: [&str; 12] = ["The", "A", "An", "Every", "Each", "All", "Some", "If", "Either", "Most", "No", "There"];

fn negate_sentence(s: &str) -> String {
    const PREFIX: &str = "It is not the case that ";
    let t = s.trim_end();
    if let Some(rest) = t.strip_prefix(PREFIX) {
        return capitalize(rest);
    }
    let first = t.split_whitespace().next().unwrap_or_default();
    let body = if LOWER_STARTS.contains(&first) {
        let mut c = t.chars();
        c.next().map(|f| f.to_lowercase().chain(c).collect()).unwrap_or_default()
    } else {
        t.to_string()
    };
    format!("{PREFIX}{body}")
}

fn negate_form(form: &str) -> String {
    match parse_formula(form) {
        Ok(Formula::Not(inner)) => inner.to_string(),
        Ok(f) => Formula::not(f).to_string(),
        Err(_) => format!("not ({form})"),
    }
}

fn other_value<R: Rng>(rng: &mut R, domain: &[i64], v: i64) -> Option<i64> {
    let rest: Vec<i64> = domain.iter().copied().filter(|&w| w != v).collect();
    (!rest.is_empty()).then(|| rest[rng.gen_range(0..rest.len())])
}

/// A modified `[sentence, form]` pair.
fn modify_fact<R: Rng>(rng: &mut R, sentence: &str, form: &str, n_objects: usize) -> (String, String) {
    if let Ok(Formula::Compare(CmpOp::Eq, NumExpr::Atom(a), NumExpr::Int(v))) = parse_formula(form) {
        let position = Problem::is_position_atom(&a);
        let domain: Vec<i64> = if position { (1..=n_objects as i64).collect() } else { (v - 3..=v + 3).collect() };
        if let Some(w) = other_value(rng, &domain, v) {
            let new_form = format!("{} = {w}", a);
            let new_sentence = match a.args.first() {
                Some(o) if position => position_sentence(&o.name().replace('_', " "), w as usize, n_objects, sentence.contains("from the right")),
                _ => sentence.replace(&v.to_string(), &w.to_string()),
            };
            return (new_sentence, new_form);
        }
    }
    (negate_sentence(sentence), negate_form(form))
}

/// Text-only modification: move an ordinal, else negate.
fn modify_sentence<R: Rng>(rng: &mut R, sentence: &str) -> String {
    let words: Vec<&str> = sentence.split(' ').collect();
    if let Some((i, k)) = words.iter().enumerate().find_map(|(i, w)| ORDINALS.iter().position(|o| o == w).map(|k| (i, k))) {
        let n = ORDINALS.len().min(5).max(k + 1);
        let choices: Vec<usize> = (0..n).filter(|&j| j != k).collect();
        let j = choices[rng.gen_range(0..choices.len())];
        let mut w: Vec<&str> = words.clone();
        w[i] = ORDINALS[j];
        return w.join(" ");
    }
    negate_sentence(sentence)
}

/// Add distractors or remove and modify premises.
pub fn perturb(problem: &BenchProblem, spec: &PerturbSpec, config: &SolverConfig) -> Result<BenchProblem, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut doc = Doc::new(problem);
    let k = spec.strength.unsigned_abs() as usize;
    match spec.strength {
        0 => return Ok(problem.clone()),
        s if s > 0 => {
            if k > POOL.len() {
                return Err(BenchError::Invalid(format!("at most {} distractors", POOL.len())));
            }
            for idx in index::sample(&mut rng, POOL.len(), k).into_vec() {
                let at = rng.gen_range(0..doc.segs.len().max(1));
                let fi = doc.fact_at_segment(at.min(doc.segs.len()));
                doc.segs.insert(at, format!("{} ", POOL[idx]));
                doc.insert_fact(fi, json!([POOL[idx], POOL_FORMS[idx]]), 1.0);
            }
        }
        _ => {
            let premises = doc.facts.as_ref().map_or(doc.segs.len(), Vec::len);
            let candidates: Vec<usize> = match &doc.facts {
                Some(_) if !doc.keys.is_empty() => doc.keys.clone(),
                Some(f) => (0..f.len()).collect(),
                None => (0..doc.segs.len()).collect(),
            };
            if premises <= k || candidates.len() < k {
                return Err(BenchError::TooFewPremises {
                    needed: k + 1,
                    available: premises.min(candidates.len()),
                });
            }
            let mut chosen: Vec<usize> = index::sample(&mut rng, candidates.len(), k).into_iter().map(|i| candidates[i]).collect();
            chosen.sort_unstable_by(|a, b| b.cmp(a));
            for target in chosen {
                let delete = rng.gen_bool(0.5);
                match doc.facts.as_ref().map(|f| f[target].clone()) {
                    Some(fact) => {
                        let sentence = sentence_of(&fact).unwrap_or_default().to_string();
                        let seg = doc.segment_of(&sentence);
                        if delete {
                            doc.remove_fact(target);
                            if let Some(i) = seg {
                                doc.segs.remove(i);
                            }
                        } else {
                            let (s, f) = modify_fact(&mut rng, &sentence, form_of(&fact).unwrap_or_default(), doc.n_objects);
                            if let Some(i) = seg {
                                doc.replace_segment(i, &s);
                            }
                            if let Some(facts) = &mut doc.facts {
                                facts[target] = json!([s, f]);
                            }
                        }
                    }
                    None if delete => {
                        doc.segs.remove(target);
                    }
                    None => {
                        let s = modify_sentence(&mut rng, doc.segs[target].trim_end());
                        doc.replace_segment(target, &s);
                    }
                }
            }
        }
    }
    Ok(doc.finish(problem, Some(config)))
}

fn literal_sentence(atom: &crate::logic::PredicateAtom, holds: bool, n_objects: usize) -> String {
    let words = atom.name.replace('_', " ").to_lowercase();
    match atom.args.first().map(|t| t.name().replace('_', " ")) {
        Some(o) => format!("{o} is {}{words}.", if holds { "" } else { "not " }),
        None if holds => format!("{}.", capitalize(&words)),
        None => format!("It is not the case that {words}.").replace("  ", " ") + &" ".repeat(n_objects.min(0)),
    }
}

/// Add one low-weight fact contradicting something the reference entails.
pub fn inject_contradiction(problem: &BenchProblem, seed: u64, config: &SolverConfig) -> Result<BenchProblem, BenchError> {
    let env = problem
        .gold_envelope
        .as_ref()
        .ok_or_else(|| BenchError::Invalid("no reference translation".into()))?;
    let p = prepare(env, config).map_err(|(e, _)| BenchError::Invalid(e))?;
    let g = &p.grounding;
    let engine = Engine::with_config(&g.table, config);
    let cs = engine.compile_all(&g.all_constraints()).map_err(|e| BenchError::Invalid(e.to_string()))?;
    let base: Vec<_> = cs.iter().collect();
    let mut entailed = Vec::new();
    for i in 0..g.table.len() {
        if let [v] = engine.value_set(&base, i).map_err(|e| BenchError::Invalid(e.to_string()))?.as_slice() {
            entailed.push((i, *v));
        }
    }
    if entailed.is_empty() {
        return Err(BenchError::Invalid("the reference entails no literal".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (i, v) = entailed[rng.gen_range(0..entailed.len())];
    let entry = g.table.entry(i);
    let n = p.problem.objects.len();
    let (sentence, form) = match g.table.value(i, v) {
        AtomValue::Bool(b) => (literal_sentence(&entry.atom, !b, n), if b { format!("not {}", entry.atom) } else { entry.atom.to_string() }),
        AtomValue::Int(x) => {
            let w = other_value(&mut rng, &entry.domain, x).ok_or_else(|| BenchError::Invalid("single-valued domain".into()))?;
            let s = match entry.atom.args.first() {
                Some(o) if Problem::is_position_atom(&entry.atom) => position_sentence(&o.name().replace('_', " "), w as usize, n, false),
                _ => format!("The {} is {w}.", entry.atom.name.replace('_', " ").to_lowercase()),
            };
            (s, format!("{} = {w}", entry.atom))
        }
    };
    let mut doc = Doc::new(problem);
    let nf = doc.facts.as_ref().map_or(0, Vec::len);
    doc.weights = Some(doc.weights.take().unwrap_or_else(|| vec![1.0; nf]));
    let at = rng.gen_range(0..doc.segs.len().max(1));
    let fi = doc.fact_at_segment(at.min(doc.segs.len()));
    doc.segs.insert(at, format!("{sentence} "));
    doc.insert_fact(fi, json!([sentence, form]), LOW_WEIGHT);
    Ok(doc.finish(problem, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate_synthetic, SynthKind};

    const FAE_CONTEXT: &str = "Jompuses are large. Every jompus is a zumpus. Each zumpus is sweet. Zumpuses are numpuses. Every numpus is hot. Each tumpus is opaque. Numpuses are yumpuses. Every yumpus is brown. Each yumpus is a wumpus. Wumpuses are not opaque. Wumpuses are impuses. Fae is a jompus.";

    fn text_problem(context: &str) -> BenchProblem {
        BenchProblem {
            id: "fae".into(),
            context: context.into(),
            question: "Is the following statement true or false? Fae is opaque.".into(),
            options: [("A", "True"), ("B", "False")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            gold_label: "B".into(),
            dataset: DatasetTag::Prontoqa,
            schema: Default::default(),
            gold_envelope: None,
            gold_weights: None,
            key_premises: Vec::new(),
        }
    }

    #[test]
    fn split_round_trips() {
        let t = "A b. C d?  E f! G h.";
        let s = split_sentences(t);
        assert_eq!(s, ["A b. ", "C d?  ", "E f! ", "G h."]);
        assert_eq!(s.concat(), t);
        assert_eq!(split_sentences("Pos(a) = 2.5 is odd. x"), ["Pos(a) = 2.5 is odd. ", "x"]);
    }

    #[test]
    fn zero_is_identity() {
        let p = text_problem(FAE_CONTEXT);
        assert_eq!(perturb(&p, &PerturbSpec { strength: 0, seed: 1 }, &SolverConfig::default()).unwrap(), p);
    }

    #[test]
    fn fae_distractor_position_is_reachable() {
        let expected = FAE_CONTEXT.replace("Every yumpus", "Most modern buildings are made of concrete or steel. Every yumpus");
        let p = text_problem(FAE_CONTEXT);
        let hit = (0..5000u64).find(|&seed| perturb(&p, &PerturbSpec { strength: 1, seed }, &SolverConfig::default()).unwrap().context == expected);
        assert!(hit.is_some());
    }

    #[test]
    fn additions_can_be_undone() {
        let p = text_problem(FAE_CONTEXT);
        for seed in 0..50 {
            let q = perturb(&p, &PerturbSpec { strength: 2, seed }, &SolverConfig::default()).unwrap();
            let mut back = q.context.clone();
            for s in POOL {
                back = back.replacen(&format!("{s} "), "", 1);
            }
            assert_eq!(back, p.context);
        }
    }

    #[test]
    fn position_modification() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..50 {
            let (s, f) = modify_fact(&mut rng, "The cat is the second from the left.", "Pos(cat) = 2", 5);
            if f == "Pos(cat) = 3" {
                assert_eq!(s, "The cat is the third from the left.");
            }
            assert_ne!(f, "Pos(cat) = 2");
            seen.insert(f);
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn boolean_modification_negates() {
        assert_eq!(negate_form("Jompus(Fae)"), "not Jompus(Fae)");
        assert_eq!(negate_form("not Jompus(Fae)"), "Jompus(Fae)");
        assert_eq!(negate_sentence("Every jompus is a zumpus."), "It is not the case that every jompus is a zumpus.");
        assert_eq!(negate_sentence("Fae is a jompus."), "It is not the case that Fae is a jompus.");
    }

    #[test]
    fn synthetic_removal_relabels() {
        let ps = generate_synthetic(SynthKind::Ontology, 20, 11).unwrap();
        let mut changed = 0;
        for p in &ps {
            let q = perturb(p, &PerturbSpec { strength: -1, seed: 5 }, &SolverConfig::default()).unwrap();
            let facts = q.gold_envelope.as_ref().unwrap()["facts"].as_array().unwrap().len();
            assert!(facts <= 13);
            assert_eq!(split_sentences(&q.context).len(), facts);
            changed += usize::from(q.gold_label != p.gold_label);
        }
        assert!(changed > 0);
    }

    #[test]
    fn synthetic_addition_keeps_alignment() {
        let ps = generate_synthetic(SynthKind::Ontology, 5, 2).unwrap();
        for p in &ps {
            let q = perturb(p, &PerturbSpec { strength: 2, seed: 9 }, &SolverConfig::default()).unwrap();
            assert_eq!(envelope_context(q.gold_envelope.as_ref().unwrap()), q.context.trim_end());
            assert_eq!(q.gold_label, p.gold_label);
            assert_eq!(q.key_premises.len(), p.key_premises.len());
        }
    }

    #[test]
    fn too_few_premises() {
        let p = text_problem("Fae is a jompus.");
        assert!(matches!(
            perturb(&p, &PerturbSpec { strength: -1, seed: 0 }, &SolverConfig::default()),
            Err(BenchError::TooFewPremises { .. })
        ));
    }

    #[test]
    fn contradiction_is_low_weight() {
        let ps = generate_synthetic(SynthKind::Ordering, 3, 4).unwrap();
        for p in &ps {
            let q = inject_contradiction(p, 1, &SolverConfig::default()).unwrap();
            let w = q.gold_weights.as_ref().unwrap();
            assert_eq!(w.iter().filter(|&&x| x == LOW_WEIGHT).count(), 1);
            let v = hard_verdict(q.gold_envelope.as_ref().unwrap(), &SolverConfig::default());
            assert!(v.is_fallback(), "{v}");
        }
    }
}
