//! Tool library: registration, dense retrieval over tool descriptions, and
//! execution against local handlers or remote HTTP endpoints.

pub mod embed;
pub mod library;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{ApiRequest, ApiResult, Arguments, Endpoint, SchemaError, ToolSchema};

pub use self::embed::{local_embed, Embedder, HashEmbedder};

/// Number of tools handed to the prompt when the caller does not say otherwise.
pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Error)]
pub enum ToolError {
    #[error(transparent)]
    InvalidSchema(#[from] SchemaError),
    #[error("tool registry is empty")]
    EmptyRegistry,
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("failed to read tool manifest {path}: {message}")]
    Manifest { path: String, message: String },
}

/// In-process tool implementation.
pub trait LocalTool: Send + Sync {
    fn call(&self, args: &Arguments) -> Result<String, String>;
}

impl<F> LocalTool for F
where
    F: Fn(&Arguments) -> Result<String, String> + Send + Sync,
{
    fn call(&self, args: &Arguments) -> Result<String, String> {
        self(args)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub tool_name: String,
    pub score: f64,
}

/// Which text of a schema is embedded for retrieval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalKey {
    #[default]
    Description,
    NameAndDescription,
}

impl RetrievalKey {
    fn text(self, schema: &ToolSchema) -> String {
        match self {
            RetrievalKey::Description => schema.description.clone(),
            RetrievalKey::NameAndDescription => format!("{}: {}", schema.name, schema.description),
        }
    }
}

struct Entry {
    schema: ToolSchema,
    vector: Vec<f64>,
}

#[derive(Default)]
struct Inner {
    tools: BTreeMap<String, Entry>,
    handlers: HashMap<String, Arc<dyn LocalTool>>,
}

/// Registered tools with one cached embedding each.
///
/// Reads (retrieval, execution) share a read lock; registration takes the
/// write lock, so every reader sees either the old or the new schema.
pub struct ToolRegistry {
    inner: RwLock<Inner>,
    embedder: Arc<dyn Embedder>,
    key: RetrievalKey,
    // built on first remote call; construction is costly and most registries are local-only
    client: OnceLock<reqwest::Client>,
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolRegistry").field("tools", &self.names()).finish()
    }
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self::new(Arc::new(HashEmbedder::default()))
    }
}

impl ToolRegistry {
    pub fn new(embedder: Arc<dyn Embedder>) -> Self {
        Self { inner: RwLock::default(), embedder, key: RetrievalKey::default(), client: OnceLock::new() }
    }

    pub fn with_retrieval_key(mut self, key: RetrievalKey) -> Self {
        self.key = key;
        self
    }

    /// Registry preloaded with the mock default library.
    pub fn with_default_library() -> Self {
        let reg = Self::default();
        library::install(&reg);
        reg
    }

    /// Adds or replaces a tool and refreshes its embedding.
    pub fn register(&self, schema: ToolSchema) -> Result<(), ToolError> {
        schema.validate()?;
        let vector = self.embedder.embed(&self.key.text(&schema));
        let mut inner = self.inner.write().unwrap();
        inner.tools.insert(schema.name.clone(), Entry { schema, vector });
        Ok(())
    }

    pub fn register_handler(&self, id: impl Into<String>, handler: impl LocalTool + 'static) {
        self.inner.write().unwrap().handlers.insert(id.into(), Arc::new(handler));
    }

    /// Registers a local tool and its handler in one go, keyed by the tool name.
    pub fn register_local(
        &self,
        schema: ToolSchema,
        handler: impl LocalTool + 'static,
    ) -> Result<(), ToolError> {
        let id = match &schema.endpoint {
            Endpoint::Local { handler } => handler.clone(),
            Endpoint::Remote { .. } => schema.name.clone(),
        };
        self.register(schema)?;
        self.register_handler(id, handler);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<String> {
        self.inner.read().unwrap().tools.keys().cloned().collect()
    }

    pub fn schema(&self, name: &str) -> Option<ToolSchema> {
        self.inner.read().unwrap().tools.get(name).map(|e| e.schema.clone())
    }

    pub fn schemas(&self) -> Vec<ToolSchema> {
        self.inner.read().unwrap().tools.values().map(|e| e.schema.clone()).collect()
    }

    /// Top-`k` tools by dot product between the query embedding and each
    /// cached tool vector.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievalHit>, ToolError> {
        let inner = self.inner.read().unwrap();
        if inner.tools.is_empty() {
            return Err(ToolError::EmptyRegistry);
        }
        let q = self.embedder.embed(query);
        let scored = inner
            .tools
            .iter()
            .map(|(name, e)| (name.clone(), embed::dot(&q, &e.vector)))
            .collect();
        Ok(embed::top_k(scored, k)
            .into_iter()
            .map(|(tool_name, score)| RetrievalHit { tool_name, score })
            .collect())
    }

    /// Executes `req`. Tool-level failures (missing arguments, handler errors,
    /// transport problems) come back as an error [`ApiResult`]; only an
    /// unregistered tool name is an `Err`.
    pub async fn execute(&self, req: &ApiRequest) -> Result<ApiResult, ToolError> {
        let (schema, handler) = {
            let inner = self.inner.read().unwrap();
            let entry = inner
                .tools
                .get(&req.api_name)
                .ok_or_else(|| ToolError::UnknownTool(req.api_name.clone()))?;
            let handler = match &entry.schema.endpoint {
                Endpoint::Local { handler } => inner.handlers.get(handler).cloned(),
                Endpoint::Remote { .. } => None,
            };
            (entry.schema.clone(), handler)
        };

        if let Some(missing) = schema
            .parameters
            .iter()
            .find(|p| p.required && !req.arguments.contains_key(&p.name))
        {
            return Ok(ApiResult::error(
                &schema.name,
                format!("missing required argument `{}`", missing.name),
            ));
        }

        let outcome = match &schema.endpoint {
            Endpoint::Local { handler: id } => match handler {
                Some(h) => h.call(&req.arguments),
                None => Err(format!("no local handler `{id}` is installed")),
            },
            Endpoint::Remote { url } => self.remote_call(url, &req.arguments).await,
        };
        Ok(match outcome {
            Ok(payload) => ApiResult::success(&schema.name, payload),
            Err(cause) => ApiResult::error(&schema.name, cause),
        })
    }

    async fn remote_call(&self, url: &str, args: &Arguments) -> Result<String, String> {
        let client = self.client.get_or_init(|| {
            reqwest::Client::builder().timeout(Duration::from_secs(60)).build().expect("reqwest client")
        });
        let resp = client
            .post(url)
            .json(args)
            .send()
            .await
            .map_err(|e| format!("transport failure: {e}"))?;
        let status = resp.status();
        let body = resp.text().await.map_err(|e| format!("transport failure: {e}"))?;
        if status.is_success() {
            Ok(body)
        } else {
            Err(format!("HTTP {}: {body}", status.as_u16()))
        }
    }

    pub fn register_all(&self, schemas: Vec<ToolSchema>) -> Result<(), ToolError> {
        for s in schemas {
            self.register(s)?;
        }
        Ok(())
    }
}

/// Reads a tool manifest: a JSON array of [`ToolSchema`].
pub fn load_manifest(path: &Path) -> Result<Vec<ToolSchema>, ToolError> {
    let err = |message: String| ToolError::Manifest { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    parse_manifest(&text).map_err(|e| match e {
        ToolError::Manifest { message, .. } => err(message),
        other => other,
    })
}

pub fn parse_manifest(text: &str) -> Result<Vec<ToolSchema>, ToolError> {
    let schemas: Vec<ToolSchema> = serde_json::from_str(text).map_err(|e| ToolError::Manifest {
        path: "<inline>".into(),
        message: e.to_string(),
    })?;
    for s in &schemas {
        s.validate()?;
    }
    Ok(schemas)
}
