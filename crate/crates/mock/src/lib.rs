//! Instrumented chat-completions server for tests.
//!
//! Speaks the `POST /chat/completions` wire format, answers through a
//! scripted handler and records every request, the number of requests in
//! flight and the high-water mark of concurrent requests.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use serde_json::{json, Value};
use tokio::sync::oneshot;

/// One request as seen by the server.
#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub model: String,
    pub messages: Vec<(String, String)>,
    pub temperature: Option<f64>,
    pub authorization: Option<String>,
    pub received_at: Instant,
}

impl RecordedRequest {
    /// Content of the last `user` message.
    pub fn user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|(role, _)| role == "user")
            .map(|(_, c)| c.as_str())
            .unwrap_or("")
    }

    pub fn system(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|(role, _)| role == "system")
            .map(|(_, c)| c.as_str())
    }
}

/// What the server sends back.
#[derive(Debug, Clone)]
pub enum Reply {
    /// 200 with a well-formed completion whose message content is the string.
    Content(String),
    /// Bare status with a small JSON error body.
    Status(u16),
    /// Arbitrary status and raw body.
    Raw(u16, String),
}

type Handler = dyn Fn(&RecordedRequest, usize) -> Reply + Send + Sync;

struct Shared {
    handler: Box<Handler>,
    delay: Duration,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    log: Mutex<Vec<RecordedRequest>>,
}

/// Running mock server. Shuts down on drop.
pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    /// Start a server whose handler gets the parsed request and the 0-based
    /// call index.
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&RecordedRequest, usize) -> Reply + Send + Sync + 'static,
    {
        Self::start_with_delay(Duration::ZERO, handler)
    }

    /// Like [`MockServer::start`], holding every request open for `delay`
    /// before answering so that concurrent requests overlap.
    pub fn start_with_delay<F>(delay: Duration, handler: F) -> Self
    where
        F: Fn(&RecordedRequest, usize) -> Reply + Send + Sync + 'static,
    {
        let shared = Arc::new(Shared {
            handler: Box::new(handler),
            delay,
            calls: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        });
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();
        let state = Arc::clone(&shared);
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(4)
                .enable_all()
                .build()
                .expect("mock runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
                    .await
                    .expect("bind mock listener");
                addr_tx
                    .send(listener.local_addr().expect("local addr"))
                    .expect("report addr");
                let app = Router::new()
                    .route("/chat/completions", post(completions))
                    .route("/v1/chat/completions", post(completions))
                    .with_state(state);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = shutdown_rx.await;
                    })
                    .await
                    .expect("mock server");
            });
        });
        let addr = addr_rx.recv().expect("mock server failed to start");
        Self {
            addr,
            shared,
            shutdown: Some(shutdown_tx),
            thread: Some(thread),
        }
    }

    /// Base URL to hand to a client (`http://127.0.0.1:PORT`).
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received so far.
    pub fn calls(&self) -> usize {
        self.shared.calls.load(Ordering::SeqCst)
    }

    /// Largest number of requests that were being served at once.
    pub fn max_in_flight(&self) -> usize {
        self.shared.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.shared.log.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(handle) = self.thread.take() {
            let _ = handle.join();
        }
    }
}

fn parse_request(headers: &HeaderMap, body: &Value) -> RecordedRequest {
    let messages = body
        .get("messages")
        .and_then(Value::as_array)
        .map(|msgs| {
            msgs.iter()
                .map(|m| {
                    let role = m.get("role").and_then(Value::as_str).unwrap_or("");
                    let content = m.get("content").and_then(Value::as_str).unwrap_or("");
                    (role.to_string(), content.to_string())
                })
                .collect()
        })
        .unwrap_or_default();
    RecordedRequest {
        model: body
            .get("model")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string(),
        messages,
        temperature: body.get("temperature").and_then(Value::as_f64),
        authorization: headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string),
        received_at: Instant::now(),
    }
}

async fn completions(
    State(shared): State<Arc<Shared>>,
    headers: HeaderMap,
    body: String,
) -> Response {
    let now = shared.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    shared.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let index = shared.calls.fetch_add(1, Ordering::SeqCst);

    let value: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
    let request = parse_request(&headers, &value);
    shared.log.lock().unwrap().push(request.clone());

    if !shared.delay.is_zero() {
        tokio::time::sleep(shared.delay).await;
    }
    let reply = (shared.handler)(&request, index);
    shared.in_flight.fetch_sub(1, Ordering::SeqCst);

    match reply {
        Reply::Content(content) => {
            let body = json!({
                "id": format!("mock-{index}"),
                "object": "chat.completion",
                "model": request.model,
                "choices": [{
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop"
                }]
            });
            (StatusCode::OK, axum::Json(body)).into_response()
        }
        Reply::Status(code) => {
            let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            let body = json!({"error": {"message": format!("mock status {code}")}});
            (status, axum::Json(body)).into_response()
        }
        Reply::Raw(code, body) => {
            let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, body).into_response()
        }
    }
}
