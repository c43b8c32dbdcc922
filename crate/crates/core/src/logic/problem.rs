use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::ast::{Formula, PredicateAtom, Sort, Term};
use super::{parse_formula, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    #[default]
    Deduction,
    Ordering,
}

/// The logical form of one fact, or why it could not be used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FactForm {
    Parsed(Formula),
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub sentence: String,
    pub raw: String,
    pub form: FactForm,
}

impl Fact {
    pub fn formula(&self) -> Option<&Formula> {
        match &self.form {
            FactForm::Parsed(f) => Some(f),
            FactForm::Malformed(_) => None,
        }
    }

    pub fn is_malformed(&self) -> bool {
        matches!(self.form, FactForm::Malformed(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuerySpec {
    Boolean(Formula),
    /// Labelled options, in label order.
    Candidates(Vec<(String, Formula)>),
    FreeNumeric(PredicateAtom),
    Malformed { raw: String, reason: String },
}

impl QuerySpec {
    pub fn is_malformed(&self) -> bool {
        matches!(self, QuerySpec::Malformed { .. })
    }

    fn formulas(&self) -> Vec<&Formula> {
        match self {
            QuerySpec::Boolean(f) => vec![f],
            QuerySpec::Candidates(c) => c.iter().map(|(_, f)| f).collect(),
            _ => Vec::new(),
        }
    }
}

/// A predicate name used both as a truth value and as a number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sort conflict: `{name}` is used as {first:?} and as {second:?}")]
pub struct SortConflict {
    pub name: String,
    pub first: Sort,
    pub second: Sort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub objects: Vec<String>,
    pub facts: Vec<Fact>,
    pub query: QuerySpec,
    pub schema: Schema,
    pub larger_direction: Option<String>,
}

impl Problem {
    /// Whether a numeric atom is a position in an ordering puzzle.
    pub fn is_position_atom(atom: &PredicateAtom) -> bool {
        atom.sort == Sort::Numeric && matches!(atom.name.as_str(), "Pos" | "Position")
    }

    /// Parsed facts only, with their indices.
    pub fn parsed_facts(&self) -> impl Iterator<Item = (usize, &Formula)> {
        self.facts.iter().enumerate().filter_map(|(i, f)| f.formula().map(|x| (i, x)))
    }
}

/// Parse a translator envelope given as JSON text.
pub fn parse_problem(document: &str) -> Result<Problem, ParseError> {
    let value: Value = serde_json::from_str(document).map_err(|e| ParseError::new(e.column(), format!("invalid envelope: {e}")))?;
    Problem::from_value(&value)
}

impl Problem {
    /// Build a problem from an already-decoded envelope.
    pub fn from_value(value: &Value) -> Result<Problem, ParseError> {
        let obj = value
            .as_object()
            .ok_or_else(|| ParseError::new(1, "envelope must be a JSON object"))?;

        let mut objects: Vec<String> = Vec::new();
        match obj.get("objects") {
            None | Some(Value::Null) => {}
            Some(Value::Array(items)) => {
                for it in items {
                    let name = it
                        .as_str()
                        .ok_or_else(|| ParseError::new(1, "`objects` entries must be strings"))?
                        .trim()
                        .to_string();
                    if name.is_empty() {
                        return Err(ParseError::new(1, "empty object name"));
                    }
                    if !objects.contains(&name) {
                        objects.push(name);
                    }
                }
            }
            Some(_) => return Err(ParseError::new(1, "`objects` must be an array")),
        }

        let mut facts = Vec::new();
        match obj.get("facts") {
            None | Some(Value::Null) => {}
            Some(Value::Array(items)) => {
                for it in items {
                    facts.push(read_fact(it));
                }
            }
            Some(_) => return Err(ParseError::new(1, "`facts` must be an array")),
        }

        let query_value = obj.get("query").ok_or_else(|| ParseError::new(1, "missing `query` key"))?;
        let larger_direction = match obj.get("larger_direction") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => Some(other.to_string()),
        };

        let mut sorts: BTreeMap<String, Sort> = BTreeMap::new();
        for fact in &mut facts {
            if let FactForm::Parsed(f) = &fact.form {
                if let Err(e) = register_sorts(f, &mut sorts) {
                    fact.form = FactForm::Malformed(e.to_string());
                }
            }
        }

        let mut query = read_query(query_value, &sorts);
        for f in query.formulas() {
            if let Err(e) = register_sorts(f, &mut sorts.clone()) {
                query = QuerySpec::Malformed {
                    raw: query_value.to_string(),
                    reason: e.to_string(),
                };
                break;
            }
        }

        let mut extra = Vec::new();
        let mut note = |a: &PredicateAtom| {
            for t in &a.args {
                if let Term::Obj(o) = t {
                    if !objects.contains(o) && !extra.contains(o) {
                        extra.push(o.clone());
                    }
                }
            }
        };
        for fact in &facts {
            if let Some(f) = fact.formula() {
                f.visit_atoms(&mut note);
            }
        }
        for f in query.formulas() {
            f.visit_atoms(&mut note);
        }
        if let QuerySpec::FreeNumeric(a) = &query {
            note(a);
        }
        objects.extend(extra);

        let mut has_pos = false;
        let mut check = |a: &PredicateAtom| has_pos |= Problem::is_position_atom(a);
        for fact in &facts {
            if let Some(f) = fact.formula() {
                f.visit_atoms(&mut check);
            }
        }
        for f in query.formulas() {
            f.visit_atoms(&mut check);
        }
        if let QuerySpec::FreeNumeric(a) = &query {
            check(a);
        }
        let schema = if larger_direction.is_some() || has_pos {
            Schema::Ordering
        } else {
            Schema::Deduction
        };

        Ok(Problem {
            objects,
            facts,
            query,
            schema,
            larger_direction,
        })
    }
}

fn read_fact(item: &Value) -> Fact {
    let (sentence, raw) = match item {
        Value::String(s) => (s.clone(), s.clone()),
        Value::Array(pair) if pair.len() == 2 && pair.iter().all(Value::is_string) => (
            pair[0].as_str().unwrap_or_default().to_string(),
            pair[1].as_str().unwrap_or_default().to_string(),
        ),
        other => {
            return Fact {
                sentence: other.to_string(),
                raw: other.to_string(),
                form: FactForm::Malformed("fact must be a string or a [sentence, form] pair".into()),
            }
        }
    };
    let form = match parse_formula(&raw) {
        Ok(f) => FactForm::Parsed(f),
        Err(e) => FactForm::Malformed(e.to_string()),
    };
    Fact { sentence, raw, form }
}

fn read_query(value: &Value, sorts: &BTreeMap<String, Sort>) -> QuerySpec {
    let malformed = |reason: String| QuerySpec::Malformed {
        raw: match value {
            Value::String(s) => s.clone(),
            v => v.to_string(),
        },
        reason,
    };
    let one = |text: &str| -> Result<QuerySpec, String> {
        let f = parse_formula(text).map_err(|e| e.to_string())?;
        if let Formula::Atom(a) = &f {
            if sorts.get(&sort_key(a)) == Some(&Sort::Numeric) {
                let mut a = a.clone();
                a.sort = Sort::Numeric;
                return Ok(QuerySpec::FreeNumeric(a));
            }
        }
        Ok(QuerySpec::Boolean(f))
    };
    let labelled = |items: Vec<(String, &Value)>| -> Result<QuerySpec, String> {
        let mut out = Vec::new();
        for (label, v) in items {
            let text = v.as_str().ok_or_else(|| format!("option {label} is not a string"))?;
            let f = parse_formula(text).map_err(|e| format!("option {label}: {e}"))?;
            out.push((label, f));
        }
        Ok(QuerySpec::Candidates(out))
    };
    let result = match value {
        Value::String(s) => one(s),
        Value::Array(items) if items.len() == 1 => match items[0].as_str() {
            Some(s) => one(s),
            None => Err("query entry is not a string".into()),
        },
        Value::Array(items) if items.len() >= 2 => {
            if items.len() > 26 {
                Err("too many options".into())
            } else {
                labelled(
                    items
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (((b'A' + i as u8) as char).to_string(), v))
                        .collect(),
                )
            }
        }
        Value::Object(map) if map.len() >= 2 => {
            let mut items: Vec<(String, &Value)> = map.iter().map(|(k, v)| (k.trim().to_string(), v)).collect();
            items.sort_by(|a, b| a.0.cmp(&b.0));
            if items.windows(2).any(|w| w[0].0 == w[1].0) {
                Err("duplicate option label".into())
            } else {
                labelled(items)
            }
        }
        _ => Err("query must be a string, a list of strings or an option map".into()),
    };
    result.unwrap_or_else(malformed)
}

/// Sort bookkeeping key. Atoms whose trailing arguments are still variables
/// are keyed by name and arity, since their folded name is only known after
/// grounding.
fn sort_key(a: &PredicateAtom) -> String {
    if a.args.len() <= 1 {
        a.name.clone()
    } else {
        format!("{}/{}", a.name, a.args.len())
    }
}

fn register_sorts(f: &Formula, sorts: &mut BTreeMap<String, Sort>) -> Result<(), SortConflict> {
    let mut local: Vec<(String, Sort)> = Vec::new();
    f.visit_atoms(&mut |a| local.push((sort_key(a), a.sort)));
    let mut staged = sorts.clone();
    for (name, sort) in local {
        match staged.get(&name) {
            Some(&first) if first != sort => {
                return Err(SortConflict {
                    name,
                    first,
                    second: sort,
                })
            }
            Some(_) => {}
            None => {
                staged.insert(name, sort);
            }
        }
    }
    *sorts = staged;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raven_envelope() {
        let doc = r#"{
            "objects": ["cardinal", "robin", "blue_jay", "quail", "raven"],
            "facts": ["Pos(robin) > Pos(raven)", "Pos(cardinal) = 1", "Pos(raven) > Pos(blue_jay)", "Pos(blue_jay) = 3"],
            "query": {"A": "Pos(cardinal) = 4", "B": "Pos(robin) = 4", "C": "Pos(blue_jay) = 4", "D": "Pos(quail) = 4", "E": "Pos(raven) = 4"}
        }"#;
        let p = parse_problem(doc).unwrap();
        assert_eq!(p.objects.len(), 5);
        assert_eq!(p.facts.len(), 4);
        assert_eq!(p.schema, Schema::Ordering);
        match &p.query {
            QuerySpec::Candidates(c) => assert_eq!(c.iter().map(|x| x.0.as_str()).collect::<Vec<_>>(), ["A", "B", "C", "D", "E"]),
            q => panic!("{q:?}"),
        }
    }

    #[test]
    fn empty_facts() {
        let p = parse_problem(r#"{"objects": ["Anne"], "facts": [], "query": "Happy(Anne)"}"#).unwrap();
        assert!(p.facts.is_empty());
        assert_eq!(p.schema, Schema::Deduction);
        assert!(matches!(p.query, QuerySpec::Boolean(_)));
    }

    #[test]
    fn bad_fact_is_kept() {
        let doc = r#"{"objects": ["bear"], "facts": ["Red(bear)", "Logical_reasoning_tasks_may_vary_in_difficulty."], "query": "Red(bear)"}"#;
        let p = parse_problem(doc).unwrap();
        assert_eq!(p.facts.len(), 2);
        assert!(p.facts[1].is_malformed());
    }

    #[test]
    fn missing_query_is_an_error() {
        assert!(parse_problem(r#"{"objects": [], "facts": []}"#).is_err());
        assert!(parse_problem("[1, 2]").is_err());
    }

    #[test]
    fn malformed_query_is_kept() {
        let p = parse_problem(r#"{"objects": [], "facts": [], "query": "???"}"#).unwrap();
        assert!(p.query.is_malformed());
    }

    #[test]
    fn sort_conflict_marks_later_fact() {
        let doc = r#"{"objects": ["a"], "facts": ["Age(a) = 3", "Age(a)"], "query": "Age(a)"}"#;
        let p = parse_problem(doc).unwrap();
        assert!(!p.facts[0].is_malformed());
        assert!(p.facts[1].is_malformed());
        assert!(matches!(p.query, QuerySpec::FreeNumeric(_)));
    }

    #[test]
    fn undeclared_constants_join_the_universe() {
        let p = parse_problem(r#"{"objects": ["a"], "facts": ["P(b)"], "query": "P(a)"}"#).unwrap();
        assert_eq!(p.objects, ["a", "b"]);
    }

    #[test]
    fn pair_facts_keep_sentences() {
        let doc = r#"{"objects": ["Anne"], "facts": [["Anne is green.", "Green(Anne)"]], "query": ["Green(Anne)"]}"#;
        let p = parse_problem(doc).unwrap();
        assert_eq!(p.facts[0].sentence, "Anne is green.");
        assert_eq!(p.facts[0].raw, "Green(Anne)");
    }
}
