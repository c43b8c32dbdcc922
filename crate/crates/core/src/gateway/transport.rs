use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{GatewayError, TokenRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// A provider-neutral chat-completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub max_tokens: u32,
    pub temperature: f64,
    pub logprobs: bool,
}

impl ChatRequest {
    /// Fixture key: sha256 over the prompt messages only.
    pub fn key(&self) -> String {
        let text = serde_json::to_string(&self.messages).unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<TokenRecord>>,
}

impl ChatResponse {
    pub fn text(content: impl Into<String>) -> Self {
        Self {
            content: content.into(),
            tokens: None,
        }
    }
}

/// One recorded call, stored as `<key>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub key: String,
    pub request: ChatRequest,
    pub response: ChatResponse,
}

pub trait Transport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

pub fn fixture_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

pub fn write_fixture(dir: &Path, request: &ChatRequest, response: &ChatResponse) -> Result<PathBuf, GatewayError> {
    fs::create_dir_all(dir).map_err(|e| GatewayError::Io(e.to_string()))?;
    let key = request.key();
    let fx = Fixture {
        key: key.clone(),
        request: request.clone(),
        response: response.clone(),
    };
    let path = fixture_path(dir, &key);
    let text = serde_json::to_string_pretty(&fx).map_err(|e| GatewayError::Io(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| GatewayError::Io(e.to_string()))?;
    Ok(path)
}

/// Reads fixtures from a directory; never touches the network.
pub struct Replay {
    dir: PathBuf,
}

impl Replay {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl Transport for Replay {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let key = request.key();
        let text = fs::read_to_string(fixture_path(&self.dir, &key)).map_err(|_| GatewayError::FixtureMissing(key.clone()))?;
        let fx: Fixture = serde_json::from_str(&text).map_err(|e| GatewayError::Io(format!("fixture {key}: {e}")))?;
        Ok(fx.response)
    }
}

/// In-memory responses keyed like fixtures.
#[derive(Default)]
pub struct Scripted {
    responses: HashMap<String, ChatResponse>,
    fallback: Option<ChatResponse>,
}

impl Scripted {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn respond(mut self, request: &ChatRequest, response: ChatResponse) -> Self {
        self.responses.insert(request.key(), response);
        self
    }

    /// Answer every unmatched request with `response`.
    pub fn otherwise(mut self, response: ChatResponse) -> Self {
        self.fallback = Some(response);
        self
    }
}

impl Transport for Scripted {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let key = request.key();
        self.responses
            .get(&key)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or(GatewayError::FixtureMissing(key))
    }
}

/// Passes calls through and writes each exchange as a fixture.
pub struct Record<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: Transport> Record<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Self {
        Self { inner, dir: dir.into() }
    }
}

impl<T: Transport> Transport for Record<T> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let resp = self.inner.complete(request)?;
        write_fixture(&self.dir, request, &resp)?;
        Ok(resp)
    }
}

struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) {
        let mut n = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
    }

    fn release(&self) {
        *self.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.cv.notify_one();
    }
}

/// Chat-completions over HTTP with a cap on concurrent requests.
pub struct Http {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    slots: Slots,
    debug: bool,
}

impl Http {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, max_in_flight: usize, timeout: Duration, debug: bool) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.into(),
            api_key,
            slots: Slots {
                free: Mutex::new(max_in_flight.max(1)),
                cv: Condvar::new(),
            },
            debug,
        }
    }

    fn send(&self, body: &Value) -> Result<Value, GatewayError> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(body).map_err(|e| GatewayError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| GatewayError::Network(e.to_string()))?;
        if self.debug {
            tracing::debug!(target: "ssr::gateway", status, response = %text, "http response");
        }
        if !(200..300).contains(&status) {
            return Err(GatewayError::Network(format!("HTTP {status}: {text}")));
        }
        serde_json::from_str(&text).map_err(|e| GatewayError::Network(format!("undecodable response: {e}")))
    }
}

/// Tokens from an OpenAI-style `logprobs.content` array.
pub fn parse_logprobs(choice: &Value) -> Option<Vec<TokenRecord>> {
    let items = choice.get("logprobs")?.get("content")?.as_array()?;
    let mut out = Vec::with_capacity(items.len());
    for it in items {
        let token = it.get("token")?.as_str()?.to_string();
        let prob = it.get("logprob")?.as_f64()?.exp().clamp(f64::MIN_POSITIVE, 1.0);
        let distribution = it.get("top_logprobs").and_then(Value::as_array).map(|alts| {
            alts.iter()
                .filter_map(|a| Some((a.get("token")?.as_str()?.to_string(), a.get("logprob")?.as_f64()?.exp())))
                .collect::<Vec<_>>()
        });
        out.push(TokenRecord { token, prob, distribution });
    }
    Some(out)
}

impl Transport for Http {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut body = json!({
            "model": request.model,
            "messages": request.messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        if request.logprobs {
            body["logprobs"] = json!(true);
            body["top_logprobs"] = json!(5);
        }
        if self.debug {
            tracing::debug!(target: "ssr::gateway", request = %body, "http request");
        }
        self.slots.acquire();
        let result = self.send(&body);
        self.slots.release();
        let v = result?;
        let choice = v
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| GatewayError::Network("response has no choices".into()))?;
        let content = choice
            .get("message")
            .and_then(|m| m.get("content"))
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        Ok(ChatResponse {
            content,
            tokens: parse_logprobs(choice),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(text: &str) -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            messages: vec![Message::user(text)],
            max_tokens: 1000,
            temperature: 0.0,
            logprobs: true,
        }
    }

    #[test]
    fn key_ignores_model() {
        let a = req("hello");
        let mut b = a.clone();
        b.model = "other".into();
        assert_eq!(a.key(), b.key());
        assert_ne!(a.key(), req("hello!").key());
        assert_eq!(a.key().len(), 64);
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let r = req("q");
        let rec = Record::new(Scripted::new().respond(&r, ChatResponse::text("yes")), dir.path());
        assert_eq!(rec.complete(&r).unwrap().content, "yes");
        let rep = Replay::new(dir.path());
        assert_eq!(rep.complete(&r).unwrap().content, "yes");
        assert!(matches!(rep.complete(&req("other")), Err(GatewayError::FixtureMissing(_))));
    }

    #[test]
    fn logprobs_are_exponentiated() {
        let choice = json!({"logprobs": {"content": [
            {"token": "P", "logprob": 0.0, "top_logprobs": [{"token": "P", "logprob": 0.0}]},
            {"token": "(", "logprob": -0.6931471805599453}
        ]}});
        let t = parse_logprobs(&choice).unwrap();
        assert_eq!(t[0].prob, 1.0);
        assert!(t[0].full_distribution().is_some());
        assert!((t[1].prob - 0.5).abs() < 1e-12);
    }
}
