//! HTTP client for the scorer wire protocol.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use lota_core::scorer::{LogProbs, Scorer, ScorerError, ScorerInfo, TokenId, TokenSequence};
use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

pub const ENV_URL: &str = "LOTA_SCORER_URL";
pub const ENV_TOKEN: &str = "LOTA_SCORER_TOKEN";

const ATTEMPTS: u32 = 3;
const EXCERPT: usize = 200;

#[derive(Deserialize)]
struct LogprobsBody {
    logprobs: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct TextBody {
    text: String,
}

#[derive(Deserialize)]
struct VectorsBody {
    vectors: Vec<Vec<f64>>,
}

/// A connection-pooled session against a scorer service. Tokenizations are cached.
/// Idempotent calls are retried with exponential backoff; `generate` is not retried.
#[derive(Debug)]
pub struct RemoteScorer {
    base: String,
    client: Client,
    token: Option<String>,
    info: ScorerInfo,
    backoff: Duration,
    tokens: Mutex<HashMap<String, TokenSequence>>,
}

fn excerpt(body: &str) -> String {
    let mut s: String = body.chars().take(EXCERPT).collect();
    if body.chars().count() > EXCERPT {
        s.push('…');
    }
    s
}

fn unavailable(status: Option<StatusCode>, detail: impl Into<String>) -> ScorerError {
    ScorerError::Unavailable {
        status: status.map(|s| s.as_u16()),
        detail: detail.into(),
    }
}

impl RemoteScorer {
    pub fn connect(url: &str, token: Option<String>) -> Result<Self, ScorerError> {
        Self::with_backoff(url, token, Duration::from_millis(200))
    }

    pub fn with_backoff(
        url: &str,
        token: Option<String>,
        backoff: Duration,
    ) -> Result<Self, ScorerError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| unavailable(None, e.to_string()))?;
        let base = url.trim_end_matches('/').to_string();
        let placeholder = ScorerInfo {
            model: String::new(),
            vocab_size: 0,
            max_context: 0,
        };
        let mut s = RemoteScorer {
            base,
            client,
            token,
            info: placeholder,
            backoff,
            tokens: Mutex::new(HashMap::new()),
        };
        s.info = s.send(|| s.client.get(s.url("/v1/info")), true)?;
        if s.info.vocab_size == 0 || s.info.max_context == 0 {
            return Err(ScorerError::Protocol(format!(
                "implausible /v1/info: {:?}",
                s.info
            )));
        }
        Ok(s)
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn send<T: DeserializeOwned>(
        &self,
        make: impl Fn() -> RequestBuilder,
        retry: bool,
    ) -> Result<T, ScorerError> {
        let attempts = if retry { ATTEMPTS } else { 1 };
        let mut last = unavailable(None, "no attempt made");
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            let mut req = make();
            if let Some(t) = &self.token {
                req = req.bearer_auth(t);
            }
            let resp = match req.send() {
                Ok(r) => r,
                Err(e) => {
                    last = unavailable(None, e.to_string());
                    continue;
                }
            };
            let status = resp.status();
            let body = resp
                .text()
                .map_err(|e| unavailable(Some(status), e.to_string()))?;
            if status.is_success() {
                return serde_json::from_str(&body)
                    .map_err(|e| ScorerError::Protocol(format!("{e}; body: {}", excerpt(&body))));
            }
            let detail = serde_json::from_str::<Value>(&body)
                .ok()
                .and_then(|v| v.get("error").and_then(Value::as_str).map(str::to_string))
                .unwrap_or_else(|| excerpt(&body));
            match status {
                StatusCode::NOT_IMPLEMENTED => {
                    return Err(ScorerError::Unsupported(
                        "endpoint not implemented by the service",
                    ))
                }
                StatusCode::BAD_REQUEST | StatusCode::UNPROCESSABLE_ENTITY => {
                    return Err(ScorerError::Protocol(detail))
                }
                _ => last = unavailable(Some(status), detail),
            }
            if !(status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS) {
                break;
            }
        }
        Err(last)
    }

    fn post<T: DeserializeOwned>(
        &self,
        path: &str,
        body: Value,
        retry: bool,
    ) -> Result<T, ScorerError> {
        let url = self.url(path);
        self.send(|| self.client.post(&url).json(&body), retry)
    }

    /// `GET /healthz`, returning the body text.
    pub fn health(&self) -> Result<(StatusCode, String), ScorerError> {
        let resp = self
            .client
            .get(self.url("/healthz"))
            .send()
            .map_err(|e| unavailable(None, e.to_string()))?;
        let status = resp.status();
        Ok((status, resp.text().unwrap_or_default()))
    }

    /// Sends a raw JSON body and returns the status and parsed body, without retries.
    pub fn raw_post(&self, path: &str, body: &str) -> Result<(StatusCode, Value), ScorerError> {
        let resp = self
            .client
            .post(self.url(path))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| unavailable(None, e.to_string()))?;
        let status = resp.status();
        let text = resp.text().unwrap_or_default();
        Ok((
            status,
            serde_json::from_str(&text).unwrap_or(Value::String(text)),
        ))
    }
}

impl Scorer for RemoteScorer {
    fn info(&self) -> Result<ScorerInfo, ScorerError> {
        Ok(self.info.clone())
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence, ScorerError> {
        if let Some(hit) = self.tokens.lock().expect("token cache").get(text) {
            return Ok(hit.clone());
        }
        let seq: TokenSequence = self.post("/v1/tokenize", json!({ "text": text }), true)?;
        if seq.ids.len() != seq.pieces.len() {
            return Err(ScorerError::Protocol(format!(
                "{} ids but {} pieces",
                seq.ids.len(),
                seq.pieces.len()
            )));
        }
        self.tokens
            .lock()
            .expect("token cache")
            .insert(text.to_string(), seq.clone());
        Ok(seq)
    }

    fn next_token_logprobs(
        &self,
        prompt: &[TokenId],
        allowed: Option<&[TokenId]>,
    ) -> Result<LogProbs, ScorerError> {
        let body = match allowed {
            Some(ids) => json!({ "prompt_ids": prompt, "allowed_ids": ids }),
            None => json!({ "prompt_ids": prompt }),
        };
        let raw: LogprobsBody = self.post("/v1/logprobs", body, true)?;
        let mut out = LogProbs::new();
        for (k, v) in raw.logprobs {
            let id: TokenId = k
                .parse()
                .map_err(|_| ScorerError::Protocol(format!("non-integer token key {k:?}")))?;
            out.insert(id, v);
        }
        if let Some(ids) = allowed {
            let want: std::collections::BTreeSet<TokenId> = ids.iter().copied().collect();
            if !out.keys().copied().eq(want.iter().copied()) {
                return Err(ScorerError::Protocol(
                    "logprob keys differ from allowed_ids".into(),
                ));
            }
        }
        Ok(out)
    }

    fn generate(
        &self,
        prompt: &str,
        stop: &[String],
        max_tokens: usize,
    ) -> Result<String, ScorerError> {
        let body =
            json!({ "prompt": prompt, "max_tokens": max_tokens, "stop": stop, "temperature": 0 });
        Ok(self.post::<TextBody>("/v1/generate", body, false)?.text)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        let out: VectorsBody = self.post("/v1/embed", json!({ "texts": texts }), true)?;
        if out.vectors.len() != texts.len() {
            return Err(ScorerError::Protocol(format!(
                "{} vectors for {} texts",
                out.vectors.len(),
                texts.len()
            )));
        }
        Ok(out.vectors)
    }
}
