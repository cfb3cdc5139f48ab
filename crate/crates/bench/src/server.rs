//! Serves any [`Scorer`] over the wire protocol, plus `GET /healthz`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lota_core::scorer::{Scorer, ScorerError, TokenId};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenizeReq {
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LogprobsReq {
    prompt_ids: Vec<TokenId>,
    #[serde(default)]
    allowed_ids: Option<Vec<TokenId>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateReq {
    prompt: String,
    max_tokens: usize,
    #[serde(default)]
    stop: Vec<String>,
    #[serde(default)]
    temperature: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbedReq {
    texts: Vec<String>,
}

type Shared = Arc<dyn Scorer + Send + Sync>;

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

fn reply(r: Result<Value, ScorerError>) -> Response {
    match r {
        Ok(v) => Json(v).into_response(),
        Err(ScorerError::Protocol(m)) => error(StatusCode::BAD_REQUEST, m),
        Err(e @ ScorerError::Unsupported(_)) => error(StatusCode::NOT_IMPLEMENTED, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[allow(clippy::result_large_err)]
fn body<T>(req: Result<Json<T>, JsonRejection>) -> Result<T, Response> {
    req.map(|Json(t)| t)
        .map_err(|e| error(StatusCode::BAD_REQUEST, e.body_text()))
}

async fn info(State(s): State<Shared>) -> Response {
    reply(s.info().map(|i| json!(i)))
}

async fn tokenize(
    State(s): State<Shared>,
    req: Result<Json<TokenizeReq>, JsonRejection>,
) -> Response {
    match body(req) {
        Ok(r) => reply(
            s.tokenize(&r.text)
                .map(|t| json!({ "ids": t.ids, "pieces": t.pieces })),
        ),
        Err(e) => e,
    }
}

async fn logprobs(
    State(s): State<Shared>,
    req: Result<Json<LogprobsReq>, JsonRejection>,
) -> Response {
    match body(req) {
        Ok(r) => reply(
            s.next_token_logprobs(&r.prompt_ids, r.allowed_ids.as_deref())
                .map(|m| {
                    let map: serde_json::Map<String, Value> = m
                        .into_iter()
                        .map(|(k, v)| (k.to_string(), json!(v)))
                        .collect();
                    json!({ "logprobs": map })
                }),
        ),
        Err(e) => e,
    }
}

async fn generate(
    State(s): State<Shared>,
    req: Result<Json<GenerateReq>, JsonRejection>,
) -> Response {
    match body(req) {
        Ok(r) if r.temperature != 0.0 => {
            error(StatusCode::BAD_REQUEST, "only temperature 0 is supported")
        }
        Ok(r) => reply(
            s.generate(&r.prompt, &r.stop, r.max_tokens)
                .map(|t| json!({ "text": t })),
        ),
        Err(e) => e,
    }
}

async fn embed(State(s): State<Shared>, req: Result<Json<EmbedReq>, JsonRejection>) -> Response {
    match body(req) {
        Ok(r) => reply(s.embed(&r.texts).map(|v| json!({ "vectors": v }))),
        Err(e) => e,
    }
}

pub fn router(scorer: Shared) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/v1/info", get(info))
        .route("/v1/tokenize", post(tokenize))
        .route("/v1/logprobs", post(logprobs))
        .route("/v1/generate", post(generate))
        .route("/v1/embed", post(embed))
        .with_state(scorer)
}

/// Binds `addr` and serves until the process is interrupted.
pub fn serve_blocking(scorer: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(scorer))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}

/// A server on an ephemeral local port, running on its own thread. Stops on drop.
pub struct BackgroundServer {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundServer {
    pub fn start(scorer: Shared) -> std::io::Result<Self> {
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let handle = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .expect("runtime");
            rt.block_on(async move {
                let listener = match tokio::net::TcpListener::bind("127.0.0.1:0").await {
                    Ok(l) => l,
                    Err(e) => {
                        let _ = addr_tx.send(Err(e));
                        return;
                    }
                };
                let _ = addr_tx.send(listener.local_addr());
                let _ = axum::serve(listener, router(scorer))
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        let addr = addr_rx.recv().map_err(std::io::Error::other)??;
        Ok(BackgroundServer {
            addr,
            shutdown: Some(tx),
            handle: Some(handle),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
