use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::{BenchError, BenchProblem, DatasetTag};
use crate::logic::Schema;

fn field<'a>(obj: &'a Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
    names.iter().find_map(|n| obj.get(*n)).filter(|v| !v.is_null())
}

fn text(obj: &Map<String, Value>, names: &[&str], line: usize) -> Result<String, BenchError> {
    match field(obj, names) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(BenchError::Schema {
            line,
            message: format!("`{}` must be a string", names[0]),
        }),
        None => Err(BenchError::Schema {
            line,
            message: format!("missing `{}`", names[0]),
        }),
    }
}

fn options(v: Option<&Value>, line: usize) -> Result<BTreeMap<String, String>, BenchError> {
    let bad = |m: &str| BenchError::Schema { line, message: m.into() };
    match v {
        Some(Value::Object(m)) => m
            .iter()
            .map(|(k, v)| v.as_str().map(|s| (k.clone(), s.to_string())).ok_or_else(|| bad("option texts must be strings")))
            .collect(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let label = char::from(b'A' + u8::try_from(i).map_err(|_| bad("too many options"))?).to_string();
                v.as_str().map(|s| (label, s.to_string())).ok_or_else(|| bad("option texts must be strings"))
            })
            .collect(),
        Some(_) => Err(bad("`options` must be an object or an array")),
        None => Err(bad("missing `options`")),
    }
}

fn record(v: &Value, tag: DatasetTag, line: usize, index: usize) -> Result<BenchProblem, BenchError> {
    let obj = v.as_object().ok_or(BenchError::Schema {
        line,
        message: "record must be a JSON object".into(),
    })?;
    let id = match field(obj, &["id"]) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => format!("{tag}-{index:05}"),
    };
    let options = options(field(obj, &["options"]), line)?;
    let gold_label = text(obj, &["answer", "gold_label"], line)?;
    if !options.contains_key(&gold_label) {
        return Err(BenchError::Schema {
            line,
            message: format!("answer `{gold_label}` is not an option"),
        });
    }
    let schema = match field(obj, &["schema"]) {
        Some(s) => serde_json::from_value(s.clone()).map_err(|e| BenchError::Schema { line, message: e.to_string() })?,
        None if tag == DatasetTag::Logicaldeduction => Schema::Ordering,
        None => Schema::Deduction,
    };
    let weights = match field(obj, &["gold_weights"]) {
        Some(w) => Some(serde_json::from_value(w.clone()).map_err(|e| BenchError::Schema { line, message: e.to_string() })?),
        None => None,
    };
    let key_premises = match field(obj, &["key_premises"]) {
        Some(k) => serde_json::from_value(k.clone()).map_err(|e| BenchError::Schema { line, message: e.to_string() })?,
        None => Vec::new(),
    };
    Ok(BenchProblem {
        id,
        context: text(obj, &["context"], line)?,
        question: text(obj, &["question"], line)?,
        options,
        gold_label,
        dataset: tag,
        schema,
        gold_envelope: field(obj, &["gold_envelope"]).cloned(),
        gold_weights: weights,
        key_premises,
    })
}

/// Parse line-delimited records. Blank lines are skipped.
pub fn parse_dataset(text: &str, tag: DatasetTag) -> Result<Vec<BenchProblem>, BenchError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(raw).map_err(|e| BenchError::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record(&v, tag, i + 1, out.len())?);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, tag: DatasetTag) -> Result<Vec<BenchProblem>, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, tag)
}

pub fn write_dataset(path: &Path, problems: &[BenchProblem]) -> Result<(), BenchError> {
    let mut out = String::new();
    for p in problems {
        out.push_str(&serde_json::to_string(p).map_err(|e| BenchError::Io(e.to_string()))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

/// Seeded uniform sample of `n` problems, kept in input order.
pub fn sample(problems: Vec<BenchProblem>, n: usize, seed: u64) -> Vec<BenchProblem> {
    if n >= problems.len() {
        return problems;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, problems.len(), n).into_vec();
    picked.sort_unstable();
    let mut keep = vec![false; problems.len()];
    for i in picked {
        keep[i] = true;
    }
    problems.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect()
}

/// A per-problem seed that does not depend on evaluation order.
pub fn problem_seed(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap_or_default())
}
