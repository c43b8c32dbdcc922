use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::pipeline::{hard_verdict, prepare};
use super::{BenchError, BenchProblem, DatasetTag};
use crate::logic::{PredicateAtom, Schema};
use crate::soft::Verdict;
use crate::solver::{Engine, SolverConfig, Truth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Hop chains of class rules with a true/false target.
    Ontology,
    /// Five-object ordering puzzles with one correct option.
    Ordering,
}

const CATEGORIES: [&str; 18] = [
    "jompus", "zumpus", "numpus", "yumpus", "wumpus", "tumpus", "impus", "dumpus", "rompus", "vumpus", "lempus", "sterpus", "gorpus", "shumpus",
    "brimpus", "lorpus", "grimpus", "felpus",
];
const ADJECTIVES: [&str; 24] = [
    "opaque", "large", "sweet", "hot", "brown", "bright", "kind", "shy", "small", "metallic", "spicy", "orange", "cold", "red", "happy", "fruity",
    "transparent", "liquid", "aggressive", "blue", "dull", "feisty", "floral", "nervous",
];
const NAMES: [&str; 10] = ["Fae", "Alex", "Max", "Polly", "Rex", "Sally", "Sam", "Stella", "Wren", "Gabe"];
pub(crate) const ORDINALS: [&str; 7] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh"];
const THEMES: [(&str, &str, &[&str]); 3] = [
    ("On a branch, there are five birds", "birds", &["cardinal", "robin", "blue jay", "quail", "raven", "hawk", "owl", "hummingbird", "crow", "falcon"]),
    ("On a shelf, there are five books", "books", &["red book", "green book", "blue book", "white book", "black book", "gray book", "orange book", "purple book"]),
    ("In an antique car show, there are five vehicles", "vehicles", &["bus", "truck", "sedan", "convertible", "tractor", "minivan", "motorcycle", "limousine", "station wagon"]),
];
const HOPS: usize = 5;
const ORDER_SIZE: usize = 5;

pub(crate) fn article(word: &str) -> &'static str {
    if word.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

pub(crate) fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn ident(s: &str) -> String {
    s.replace(' ', "_")
}

/// "The raven is the second from the right."
pub(crate) fn position_sentence(object: &str, k: usize, n: usize, from_right: bool) -> String {
    match (k, from_right) {
        (1, false) => format!("The {object} is the leftmost."),
        (k, true) if k == n => format!("The {object} is the rightmost."),
        (k, true) => format!("The {object} is the {} from the right.", ORDINALS[n - k]),
        (k, false) => format!("The {object} is the {} from the left.", ORDINALS[k - 1]),
    }
}

fn bool_options() -> BTreeMap<String, String> {
    [("A", "True"), ("B", "False"), ("C", "Unknown")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn ontology<R: Rng>(rng: &mut R, id: String) -> BenchProblem {
    let cats: Vec<&str> = CATEGORIES.choose_multiple(rng, HOPS + 2).copied().collect();
    let (chain, distractor) = (&cats[..=HOPS], cats[HOPS + 1]);
    let adjs: Vec<&str> = ADJECTIVES.choose_multiple(rng, HOPS + 1).copied().collect();
    let target = adjs[HOPS];
    let name = pick(rng, &NAMES);
    let pred = |w: &str| capitalize(w);

    let subclass = |rng: &mut R, a: &str, b: &str| {
        let s = match rng.gen_range(0..3) {
            0 => format!("Every {a} is {} {b}.", article(b)),
            1 => format!("Each {a} is {} {b}.", article(b)),
            _ => format!("{}es are {b}es.", capitalize(a)),
        };
        (s, format!("forall x. {}(x) -> {}(x)", pred(a), pred(b)))
    };
    let property = |rng: &mut R, a: &str, adj: &str, positive: bool| {
        let not = if positive { "" } else { "not " };
        let s = match rng.gen_range(0..3) {
            0 => format!("Every {a} is {not}{adj}."),
            1 => format!("Each {a} is {not}{adj}."),
            _ => format!("{}es are {not}{adj}.", capitalize(a)),
        };
        (s, format!("forall x. {}(x) -> {not}{}(x)", pred(a), pred(adj)))
    };

    let polarity = rng.gen_bool(0.5);
    let mut rules: Vec<((String, String), bool)> = Vec::new();
    for w in chain.windows(2) {
        rules.push((subclass(rng, w[0], w[1]), true));
    }
    for (c, adj) in chain[..HOPS].iter().zip(&adjs) {
        let pos = rng.gen_bool(0.5);
        rules.push((property(rng, c, adj, pos), false));
    }
    rules.push((property(rng, chain[HOPS], target, polarity), true));
    rules.push((property(rng, distractor, target, !polarity), false));
    rules.shuffle(rng);
    rules.push(((format!("{name} is {} {}.", article(chain[0]), chain[0]), format!("{}({name})", pred(chain[0]))), true));

    let asks = rng.gen_bool(0.5);
    let not = if asks { "" } else { "not " };
    let query = format!("{not}{}({name})", pred(target));
    let gold = if asks == polarity { "A" } else { "B" };
    let key_premises = rules.iter().enumerate().filter(|(_, (_, k))| *k).map(|(i, _)| i).collect();
    let facts: Vec<Value> = rules.iter().map(|((s, f), _)| json!([s, f])).collect();
    let context = rules.iter().map(|((s, _), _)| s.as_str()).collect::<Vec<_>>().join(" ");
    BenchProblem {
        id,
        context,
        question: format!("Is the following statement true, false, or unknown? {name} is {not}{target}."),
        options: bool_options(),
        gold_label: gold.into(),
        dataset: DatasetTag::Synthetic,
        schema: Schema::Deduction,
        gold_envelope: Some(json!({"objects": [name], "facts": facts, "query": query})),
        gold_weights: None,
        key_premises,
    }
}

fn ordering_envelope(objects: &[String], facts: &[(String, String)], query: &Map<String, Value>) -> Value {
    let facts: Vec<Value> = facts.iter().map(|(s, f)| json!([s, f])).collect();
    json!({"objects": objects, "larger_direction": "right", "facts": facts, "query": query})
}

/// Whether every position is forced.
fn unique(envelope: &Value, config: &SolverConfig) -> Result<bool, BenchError> {
    let p = prepare(envelope, config).map_err(|(e, _)| BenchError::Invalid(e))?;
    let g = &p.grounding;
    let engine = Engine::with_config(&g.table, config);
    let cs = engine.compile_all(&g.all_constraints()).map_err(|e| BenchError::Invalid(e.to_string()))?;
    let base: Vec<_> = cs.iter().collect();
    for o in &p.problem.objects {
        let Some(i) = g.table.index_of(&PredicateAtom::numeric("Pos".to_string(), o.clone())) else {
            return Ok(false);
        };
        if engine.value_set(&base, i).map_err(|e| BenchError::Invalid(e.to_string()))?.len() != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn ordering<R: Rng>(rng: &mut R, id: String, config: &SolverConfig) -> Result<BenchProblem, BenchError> {
    let (intro, _, items) = THEMES[rng.gen_range(0..THEMES.len())];
    let names: Vec<&str> = items.choose_multiple(rng, ORDER_SIZE).copied().collect();
    let objects: Vec<String> = names.iter().map(|n| ident(n)).collect();
    let mut pos: Vec<usize> = (1..=ORDER_SIZE).collect();
    pos.shuffle(rng);

    let mut cands: Vec<(String, String)> = Vec::new();
    for (i, n) in names.iter().enumerate() {
        let s = position_sentence(n, pos[i], ORDER_SIZE, rng.gen_bool(0.5));
        cands.push((s, format!("Pos({}) = {}", objects[i], pos[i])));
    }
    for i in 0..ORDER_SIZE {
        for j in i + 1..ORDER_SIZE {
            let (a, b) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
            let (rel, op) = if pos[a] < pos[b] { ("left", "<") } else { ("right", ">") };
            cands.push((format!("The {} is to the {rel} of the {}.", names[a], names[b]), format!("Pos({}) {op} Pos({})", objects[a], objects[b])));
        }
    }
    cands.shuffle(rng);

    let p = rng.gen_range(1..=ORDER_SIZE);
    let from_right = rng.gen_bool(0.5);
    let labels: Vec<String> = (0..ORDER_SIZE).map(|i| char::from(b'A' + i as u8).to_string()).collect();
    let mut query = Map::new();
    let mut options = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        query.insert(l.clone(), Value::String(format!("Pos({}) = {p}", objects[i])));
        options.insert(l.clone(), position_sentence(names[i], p, ORDER_SIZE, from_right).trim_end_matches('.').to_string());
    }
    let gold = labels[pos.iter().position(|&x| x == p).unwrap_or_default()].clone();

    let mut facts: Vec<(String, String)> = Vec::new();
    for c in cands {
        facts.push(c);
        if unique(&ordering_envelope(&objects, &facts, &query), config)? {
            break;
        }
    }
    for i in (0..facts.len()).rev() {
        let mut trial = facts.clone();
        trial.remove(i);
        if unique(&ordering_envelope(&objects, &trial, &query), config)? {
            facts = trial;
        }
    }
    let listed = match names.as_slice() {
        [init @ .., last] => format!("{}, and {} {last}", init.iter().map(|n| format!("{} {n}", article(n))).collect::<Vec<_>>().join(", "), article(last)),
        [] => String::new(),
    };
    let mut context = format!(
        "The following paragraphs each describe a set of five objects arranged in a fixed order. The statements are logically consistent within each paragraph. {intro}: {listed}."
    );
    for (s, _) in &facts {
        context.push(' ');
        context.push_str(s);
    }
    let choices: Vec<String> = options.iter().map(|(l, t)| format!("{l}) {t}.")).collect();
    Ok(BenchProblem {
        id,
        context,
        question: format!("Which of the following is true? {}", choices.join(" ")),
        options,
        gold_label: gold,
        dataset: DatasetTag::Synthetic,
        schema: Schema::Ordering,
        gold_envelope: Some(ordering_envelope(&objects, &facts, &query)),
        gold_weights: None,
        key_premises: (0..facts.len()).collect(),
    })
}

/// Generate problems whose reference translation solves to the gold label.
pub fn generate_synthetic(kind: SynthKind, count: usize, seed: u64) -> Result<Vec<BenchProblem>, BenchError> {
    if count == 0 {
        return Err(BenchError::Invalid("count must be at least 1".into()));
    }
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = match kind {
        SynthKind::Ontology => "ontology",
        SynthKind::Ordering => "ordering",
    };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let id = format!("synthetic-{tag}-{seed}-{i:04}");
        let p = match kind {
            SynthKind::Ontology => ontology(&mut rng, id),
            SynthKind::Ordering => ordering(&mut rng, id, &config)?,
        };
        let expected = match kind {
            SynthKind::Ontology => Verdict::Boolean(if p.gold_label == "A" { Truth::True } else { Truth::False }),
            SynthKind::Ordering => Verdict::Option(p.gold_label.clone()),
        };
        let got = hard_verdict(p.gold_envelope.as_ref().unwrap_or(&Value::Null), &config);
        if got != expected {
            return Err(BenchError::Invalid(format!("{}: reference solves to {got}, expected {expected}", p.id)));
        }
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ontology_seed_7() {
        let ps = generate_synthetic(SynthKind::Ontology, 1, 7).unwrap();
        let p = &ps[0];
        let env = p.gold_envelope.as_ref().unwrap();
        let facts = env["facts"].as_array().unwrap();
        let hops = facts.iter().filter(|f| {
            let form = f[1].as_str().unwrap();
            form.starts_with("forall") && !form.contains("not") && CATEGORIES.iter().filter(|c| form.contains(&capitalize(c))).count() == 2
        });
        assert_eq!(hops.count(), HOPS);
        assert_eq!(p.key_premises.len(), HOPS + 2);
        assert_eq!(facts.len(), 2 * HOPS + 3);
    }

    #[test]
    fn ordering_seed_3_is_unique() {
        let ps = generate_synthetic(SynthKind::Ordering, 1, 3).unwrap();
        let p = &ps[0];
        assert_eq!(p.options.len(), 5);
        assert!(unique(p.gold_envelope.as_ref().unwrap(), &SolverConfig::default()).unwrap());
        assert!(p.context.starts_with("The following paragraphs"));
    }

    #[test]
    fn count_zero_is_rejected() {
        assert!(generate_synthetic(SynthKind::Ordering, 0, 1).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate_synthetic(SynthKind::Ordering, 3, 5).unwrap(), generate_synthetic(SynthKind::Ordering, 3, 5).unwrap());
    }

    #[test]
    fn sentences() {
        assert_eq!(position_sentence("raven", 4, 5, true), "The raven is the second from the right.");
        assert_eq!(position_sentence("owl", 1, 5, false), "The owl is the leftmost.");
        assert_eq!(position_sentence("owl", 3, 5, false), "The owl is the third from the left.");
    }
}
