use crate::logic::Schema;

const DIRECT: &str = include_str!("prompts/direct.txt");
const COT: &str = include_str!("prompts/cot.txt");
const BOOLEAN: &str = include_str!("prompts/boolean.txt");
const ORDERING: &str = include_str!("prompts/ordering.txt");

const VERIFY: &str = "You check whether a statement holds for a reasoning problem.
A statement holds if it is stated in the problem, follows from it, or is common knowledge.
Reply with exactly one word: yes or no.";

const RENDER: &str = "You rewrite a numbered reasoning chain as plain English.
Keep every step in order, one sentence per step, and do not add new facts.
End with the final answer sentence unchanged.";

fn body(t: &str) -> &str {
    t.strip_suffix('\n').unwrap_or(t)
}

/// Substitute `{name}` fields. `{{` and `}}` stand for literal braces.
pub fn fill(template: &str, fields: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if tail.starts_with('{') {
            if let Some(end) = tail.find('}') {
                if let Some((_, v)) = fields.iter().find(|(k, _)| *k == &tail[1..end]) {
                    out.push_str(v);
                    rest = &tail[end + 1..];
                    continue;
                }
            }
        }
        out.push_str(&tail[..1]);
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

pub fn direct_system() -> &'static str {
    body(DIRECT)
}

pub fn cot_system() -> &'static str {
    body(COT)
}

pub fn translator(schema: Schema, context: &str, question: &str) -> String {
    let t = match schema {
        Schema::Deduction => BOOLEAN,
        Schema::Ordering => ORDERING,
    };
    fill(body(t), &[("context", context), ("question", question)])
}

/// The user turn for the answer prompts.
pub fn problem_text(context: &str, question: &str, options: &[(String, String)]) -> String {
    let mut s = format!("Context:\n{context}\nQuestion:\n{question}");
    if !options.is_empty() {
        s.push_str("\nOptions:");
        for (l, t) in options {
            s.push_str(&format!("\n{l}) {t}"));
        }
    }
    s
}

pub fn verify_system() -> &'static str {
    VERIFY
}

pub fn verify_user(statement: &str, context: &str, question: &str) -> String {
    format!("Context:\n{context}\nQuestion:\n{question}\nStatement:\n{statement}")
}

pub fn render_system() -> &'static str {
    RENDER
}
