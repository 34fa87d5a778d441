#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::io::AsyncWriteExt;
use tokio::net::TcpListener;

use toolagent_core::eval::load_jsonl;
use toolagent_core::executor::Agent;
use toolagent_core::llm::ScriptedBackend;
use toolagent_core::toolkit::ToolRegistry;
use toolagent_core::types::{Conversation, Role};

async fn serve(app: Router) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

/// A generation server that replays a queue of replies and records prompts.
#[derive(Clone, Default)]
pub struct MockLlm {
    pub replies: Arc<Mutex<VecDeque<String>>>,
    pub prompts: Arc<Mutex<Vec<String>>>,
    /// Status code returned once the queue is empty.
    pub exhausted_status: u16,
}

impl MockLlm {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self {
            replies: Arc::new(Mutex::new(replies.into_iter().map(Into::into).collect())),
            prompts: Arc::default(),
            exhausted_status: 503,
        }
    }

    /// Starts the server and returns the full `/generate` URL.
    pub async fn start(&self) -> String {
        let app = Router::new().route("/generate", post(generate)).with_state(self.clone());
        format!("http://{}/generate", serve(app).await)
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }
}

async fn generate(State(llm): State<MockLlm>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let prompt = body["prompt"].as_str().unwrap_or_default().to_string();
    llm.prompts.lock().unwrap().push(prompt);
    match llm.replies.lock().unwrap().pop_front() {
        Some(text) => (StatusCode::OK, Json(json!({ "text": text }))),
        None => (StatusCode::from_u16(llm.exhausted_status).unwrap(), Json(json!({"error": "no more replies"}))),
    }
}

/// Serves `POST /tools/{name}`, recording every call. Unknown names get 500.
#[derive(Clone, Default)]
pub struct MockTools {
    pub payloads: Arc<BTreeMap<String, String>>,
    pub calls: Arc<Mutex<Vec<(String, BTreeMap<String, String>)>>>,
}

impl MockTools {
    pub fn new(payloads: &[(&str, &str)]) -> Self {
        Self {
            payloads: Arc::new(payloads.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()),
            calls: Arc::default(),
        }
    }

    /// Starts the server and returns its base URL; tools live under `/tools/{name}`.
    pub async fn start(&self) -> String {
        let app = Router::new().route("/tools/{name}", post(call_tool)).with_state(self.clone());
        format!("http://{}", serve(app).await)
    }

    pub fn calls(&self) -> Vec<(String, BTreeMap<String, String>)> {
        self.calls.lock().unwrap().clone()
    }
}

async fn call_tool(
    State(tools): State<MockTools>,
    Path(name): Path<String>,
    Json(body): Json<Value>,
) -> (StatusCode, String) {
    let args = body
        .as_object()
        .map(|o| o.iter().map(|(k, v)| (k.clone(), v.as_str().map_or_else(|| v.to_string(), str::to_string))).collect())
        .unwrap_or_default();
    tools.calls.lock().unwrap().push((name.clone(), args));
    match tools.payloads.get(&name) {
        Some(p) => (StatusCode::OK, p.clone()),
        None => (StatusCode::INTERNAL_SERVER_ERROR, format!("tool {name} is down")),
    }
}

/// A listener that accepts and immediately drops every connection.
/// Returns the URL and a counter of accepted connections.
pub async fn dropping_server() -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let count = Arc::new(AtomicUsize::new(0));
    let seen = count.clone();
    tokio::spawn(async move {
        loop {
            let Ok((mut sock, _)) = listener.accept().await else { return };
            seen.fetch_add(1, Ordering::SeqCst);
            let _ = sock.shutdown().await;
        }
    });
    (format!("http://{addr}/generate"), count)
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn mini_testset() -> Vec<Conversation> {
    load_jsonl(&data_path("mini_testset.jsonl")).unwrap()
}

/// Every gold assistant turn of `gold`, in order.
pub fn gold_script(gold: &Conversation) -> Vec<String> {
    gold.messages.iter().filter(|m| m.role == Role::Assistant).map(|m| m.content.clone()).collect()
}

/// An agent that replays the gold assistant turns over the default tool library.
pub fn perfect_agent(gold: &Conversation) -> Agent {
    Agent::new(Arc::new(ScriptedBackend::new(gold_script(gold))), Arc::new(ToolRegistry::with_default_library()))
}
