//! LLM controller abstraction.
//!
//! Every controller implements [`LlmBackend`]. Two implementations ship:
//! [`ScriptedBackend`] replays a fixed list of completions and is what tests
//! and offline runs use; [`HttpBackend`] talks to a remote text-generation
//! endpoint.

mod http;
mod scripted;
pub mod tokens;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::http::{HttpBackend, RetryPolicy};
pub use self::scripted::ScriptedBackend;
pub use self::tokens::count_tokens;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub max_context_tokens: usize,
    #[serde(default)]
    pub temperature: f64,
    pub max_new_tokens: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            model_name: "scripted".into(),
            endpoint: None,
            max_context_tokens: 4096,
            temperature: 0.0,
            max_new_tokens: 512,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::InvalidConfig(m.to_string()));
        if self.max_new_tokens == 0 {
            return bad("max_new_tokens must be positive");
        }
        if self.max_context_tokens <= self.max_new_tokens {
            return bad("max_context_tokens must exceed max_new_tokens");
        }
        if !(self.temperature >= 0.0) {
            return bad("temperature must be non-negative");
        }
        Ok(())
    }

    /// Tokens available to the prompt once generation headroom is reserved.
    pub fn prompt_budget(&self) -> usize {
        self.max_context_tokens.saturating_sub(self.max_new_tokens)
    }

    pub fn check_prompt(&self, prompt: &str) -> Result<(), LlmError> {
        let tokens = count_tokens(prompt);
        let limit = self.prompt_budget();
        if tokens > limit {
            return Err(LlmError::ContextOverflow { tokens, limit });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid LLM config: {0}")]
    InvalidConfig(String),
    #[error("prompt has {tokens} tokens but only {limit} fit in the context window")]
    ContextOverflow { tokens: usize, limit: usize },
    #[error("script exhausted after {0} completions")]
    ScriptExhausted(usize),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    BadResponse(String),
}

#[async_trait]
pub trait LlmBackend: Send + Sync {
    fn config(&self) -> &LlmConfig;

    /// Produces the continuation for `prompt`.
    async fn generate(&self, prompt: &str) -> Result<String, LlmError>;
}
