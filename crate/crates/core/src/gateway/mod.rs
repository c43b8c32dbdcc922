//! Every model call goes through [`Gateway`], which can replay recorded
//! exchanges so the pipeline runs offline.

mod prompts;
mod trace;
mod transport;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use prompts::{fill, problem_text, translator};
pub use trace::{TokenRecord, TokenTrace};
pub use transport::{parse_logprobs, write_fixture, ChatRequest, ChatResponse, Fixture, Http, Message, Record, Replay, Scripted, Transport};

use crate::logic::Schema;
use crate::retrieval::PremiseVerifier;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum GatewayError {
    #[error("network error: {0}")]
    Network(String),
    #[error("no fixture for request {0}")]
    FixtureMissing(String),
    #[error("response is not a JSON envelope")]
    MalformedEnvelope { raw: String },
    #[error("invalid gateway configuration: {0}")]
    Config(String),
    #[error("fixture i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    #[default]
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub fixture_dir: Option<PathBuf>,
    pub mode: Mode,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    /// Log request and response bodies.
    pub debug: bool,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_env: "SSR_API_KEY".into(),
            max_tokens: 1000,
            temperature: 0.0,
            fixture_dir: None,
            mode: Mode::Replay,
            max_in_flight: 4,
            timeout_secs: 120,
            debug: false,
        }
    }
}

impl GatewayConfig {
    /// Replay from `dir`.
    pub fn replay(dir: impl Into<PathBuf>) -> Self {
        Self {
            fixture_dir: Some(dir.into()),
            ..Self::default()
        }
    }

    /// Apply `SSR_ENDPOINT` and `SSR_MODEL` when set.
    pub fn with_env(mut self) -> Self {
        if let Ok(v) = std::env::var("SSR_ENDPOINT") {
            self.endpoint = v;
        }
        if let Ok(v) = std::env::var("SSR_MODEL") {
            self.model = v;
        }
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.mode != Mode::Live && self.fixture_dir.is_none() {
            return Err(GatewayError::Config(format!("{:?} mode needs a fixture directory", self.mode)));
        }
        if self.mode != Mode::Replay && self.endpoint.is_empty() {
            return Err(GatewayError::Config("endpoint is empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::Config("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Translator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationResult {
    pub envelope: Value,
    /// Per-fact tokens; `None` when the provider gave no probabilities.
    pub traces: Option<TokenTrace>,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotAnswer {
    pub label: Option<String>,
    pub rationale: String,
}

pub struct Gateway {
    config: GatewayConfig,
    transport: Box<dyn Transport>,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let http = || {
            let key = std::env::var(&config.api_key_env).ok();
            Http::new(&config.endpoint, key, config.max_in_flight, Duration::from_secs(config.timeout_secs), config.debug)
        };
        let dir = config.fixture_dir.clone().unwrap_or_default();
        let transport: Box<dyn Transport> = match config.mode {
            Mode::Replay => Box::new(Replay::new(dir)),
            Mode::Record => Box::new(Record::new(http(), dir)),
            Mode::Live => Box::new(http()),
        };
        Ok(Self { config, transport })
    }

    pub fn with_transport(config: GatewayConfig, transport: Box<dyn Transport>) -> Self {
        Self { config, transport }
    }

    /// Offline gateway over a fixture directory.
    pub fn mock(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        Self::with_transport(GatewayConfig::replay(&dir), Box::new(Replay::new(dir)))
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn request(&self, messages: Vec<Message>, logprobs: bool) -> ChatRequest {
        ChatRequest {
            model: self.config.model.clone(),
            messages,
            max_tokens: self.config.max_tokens,
            temperature: self.config.temperature,
            logprobs,
        }
    }

    pub fn translate_request(&self, context: &str, question: &str, schema: Schema) -> ChatRequest {
        self.request(vec![Message::user(translator(schema, context, question))], true)
    }

    pub fn translate(&self, context: &str, question: &str, schema: Schema) -> Result<TranslationResult, GatewayError> {
        let resp = self.transport.complete(&self.translate_request(context, question, schema))?;
        let Some(envelope) = extract_envelope(&resp.content) else {
            return Err(GatewayError::MalformedEnvelope { raw: resp.content });
        };
        let traces = resp.tokens.as_deref().map(|t| align_traces(&resp.content, t, &envelope));
        Ok(TranslationResult {
            envelope,
            traces,
            raw_response: resp.content,
        })
    }

    pub fn verify_request(&self, statement: &str, context: &str, question: &str) -> ChatRequest {
        self.request(
            vec![
                Message::system(prompts::verify_system()),
                Message::user(prompts::verify_user(statement, context, question)),
            ],
            false,
        )
    }

    /// `true` only for a plain "yes"; errors count as no.
    pub fn verify_premise(&self, statement: &str, context: &str, question: &str) -> bool {
        match self.transport.complete(&self.verify_request(statement, context, question)) {
            Ok(r) => is_yes(&r.content),
            Err(e) => {
                tracing::warn!(error = %e, "premise verification failed");
                false
            }
        }
    }

    pub fn cot_request(&self, context: &str, question: &str, options: &[(String, String)]) -> ChatRequest {
        self.request(
            vec![Message::system(prompts::cot_system()), Message::user(problem_text(context, question, options))],
            false,
        )
    }

    pub fn cot_fallback(&self, context: &str, question: &str, options: &[(String, String)]) -> Result<CotAnswer, GatewayError> {
        let r = self.transport.complete(&self.cot_request(context, question, options))?;
        Ok(CotAnswer {
            label: parse_answer(&r.content),
            rationale: r.content,
        })
    }

    pub fn direct_request(&self, context: &str, question: &str, options: &[(String, String)]) -> ChatRequest {
        self.request(
            vec![Message::system(prompts::direct_system()), Message::user(problem_text(context, question, options))],
            false,
        )
    }

    pub fn render_request(&self, chain_text: &str) -> ChatRequest {
        self.request(vec![Message::system(prompts::render_system()), Message::user(chain_text)], false)
    }

    /// Rephrase a template-rendered chain.
    pub fn render_chain(&self, chain_text: &str) -> Result<String, GatewayError> {
        Ok(self.transport.complete(&self.render_request(chain_text))?.content)
    }

    pub fn verifier<'a>(&'a self, context: &'a str, question: &'a str) -> GatewayVerifier<'a> {
        GatewayVerifier {
            gateway: self,
            context,
            question,
        }
    }
}

/// Premise checks bound to one problem.
pub struct GatewayVerifier<'a> {
    gateway: &'a Gateway,
    context: &'a str,
    question: &'a str,
}

impl PremiseVerifier for GatewayVerifier<'_> {
    fn verify_premise(&mut self, statement: &str) -> Result<bool, String> {
        Ok(self.gateway.verify_premise(statement, self.context, self.question))
    }
}

pub fn is_yes(reply: &str) -> bool {
    reply.trim().trim_end_matches(['.', '!']).eq_ignore_ascii_case("yes")
}

/// The letter after the last `####`, when nothing else follows it.
pub fn parse_answer(text: &str) -> Option<String> {
    let i = text.rfind("####")?;
    let rest = text[i + 4..].trim_start().trim_start_matches(['<', '(', '*']);
    let mut chars = rest.chars();
    let letter = chars.next().filter(char::is_ascii_uppercase)?;
    let tail = chars.as_str();
    if tail.chars().any(char::is_alphanumeric) {
        return None;
    }
    Some(letter.to_string())
}

/// The first JSON object in a reply, allowing code fences and surrounding prose.
pub fn extract_envelope(raw: &str) -> Option<Value> {
    let t = raw.trim();
    if let Ok(v @ Value::Object(_)) = serde_json::from_str(t) {
        return Some(v);
    }
    let (start, end) = (t.find('{')?, t.rfind('}')?);
    if end <= start {
        return None;
    }
    match serde_json::from_str(&t[start..=end]) {
        Ok(v @ Value::Object(_)) => Some(v),
        _ => None,
    }
}

fn fact_form(item: &Value) -> Option<&str> {
    match item {
        Value::String(s) => Some(s),
        Value::Array(pair) if pair.len() == 2 => pair[1].as_str(),
        _ => None,
    }
}

/// Split the token stream by the character span of each fact's logical form.
pub fn align_traces(raw: &str, tokens: &[TokenRecord], envelope: &Value) -> TokenTrace {
    let mut offsets = Vec::with_capacity(tokens.len());
    let mut at = 0;
    for t in tokens {
        offsets.push((at, at + t.token.len()));
        at += t.token.len();
    }
    let facts = envelope.get("facts").and_then(Value::as_array).map(Vec::as_slice).unwrap_or_default();
    let mut cursor = 0;
    let mut out = Vec::with_capacity(facts.len());
    for item in facts {
        let Some(form) = fact_form(item) else {
            out.push(Vec::new());
            continue;
        };
        let quoted = serde_json::to_string(form).unwrap_or_default();
        let inner = &quoted[1..quoted.len() - 1];
        let Some(pos) = raw.get(cursor..).and_then(|r| r.find(inner)) else {
            out.push(Vec::new());
            continue;
        };
        let (s, e) = (cursor + pos, cursor + pos + inner.len());
        cursor = e;
        out.push(
            tokens
                .iter()
                .zip(&offsets)
                .filter(|(_, (a, b))| *a < e && *b > s)
                .map(|(t, _)| t.clone())
                .collect(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Schema;
use crate::retrieval::PremiseVerifier;

    fn gw(t: Scripted) -> Gateway {
        Gateway::with_transport(GatewayConfig::default(), Box::new(t))
    }

    #[test]
    fn strict_yes() {
        assert!(is_yes("yes"));
        assert!(is_yes(" Yes.\n"));
        assert!(!is_yes("Probably yes, given the context."));
        assert!(!is_yes("no"));
        assert!(!is_yes(""));
    }

    #[test]
    fn answer_marker() {
        assert_eq!(parse_answer("so it is unknown. #### C").as_deref(), Some("C"));
        assert_eq!(parse_answer("#### A\n").as_deref(), Some("A"));
        assert_eq!(parse_answer("#### A, then more words"), None);
        assert_eq!(parse_answer("The answer is A."), None);
        assert_eq!(parse_answer("#### a"), None);
    }

    #[test]
    fn prose_is_malformed() {
        let g = gw(Scripted::new().otherwise(ChatResponse::text("I cannot translate this.")));
        let e = g.translate("c", "q", Schema::Deduction).unwrap_err();
        assert_eq!(
            e,
            GatewayError::MalformedEnvelope {
                raw: "I cannot translate this.".into()
            }
        );
    }

    #[test]
    fn fenced_envelope_is_accepted() {
        let raw = "Here it is:\n```json\n{\"objects\": [\"a\"], \"facts\": [], \"query\": \"P(a)\"}\n```";
        let g = gw(Scripted::new().otherwise(ChatResponse::text(raw)));
        let r = g.translate("c", "q", Schema::Deduction).unwrap();
        assert_eq!(r.envelope["query"], "P(a)");
        assert_eq!(r.traces, None);
    }

    #[test]
    fn traces_follow_fact_spans() {
        let raw = r#"{"facts": [["A.", "P(a)"], ["B.", "not Q(a)"]], "query": "P(a)"}"#;
        let pieces = [r#"{"facts": [["A.", ""#, "P", "(a)", r#""], ["B.", ""#, "not", " Q", "(a)", r#""]], "query": "P(a)"}"#];
        let tokens: Vec<TokenRecord> = pieces.iter().map(|p| TokenRecord::chosen(*p, 0.9)).collect();
        assert_eq!(pieces.concat(), raw);
        let env: Value = serde_json::from_str(raw).unwrap();
        let tr = align_traces(raw, &tokens, &env);
        let toks: Vec<Vec<&str>> = tr.iter().map(|t| t.iter().map(|r| r.token.as_str()).collect()).collect();
        assert_eq!(toks, vec![vec!["P", "(a)"], vec!["not", " Q", "(a)"]]);
    }

    #[test]
    fn verifier_maps_errors_to_no() {
        let g = gw(Scripted::new());
        assert_eq!(g.verifier("c", "q").verify_premise("P(a)"), Ok(false));
        let g = gw(Scripted::new().otherwise(ChatResponse::text("yes")));
        assert_eq!(g.verifier("c", "q").verify_premise("P(a)"), Ok(true));
    }

    #[test]
    fn empty_fixture_dir_is_missing() {
        let dir = tempfile::tempdir().unwrap();
        let g = Gateway::mock(dir.path());
        assert!(matches!(g.translate("c", "q", Schema::Deduction), Err(GatewayError::FixtureMissing(_))));
    }

    #[test]
    fn replay_needs_a_directory() {
        assert!(Gateway::new(GatewayConfig::default()).is_err());
        assert_eq!(GatewayConfig::default().max_tokens, 1000);
    }
}
