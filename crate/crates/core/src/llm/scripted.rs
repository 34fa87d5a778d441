use std::sync::Mutex;

use async_trait::async_trait;

use super::{LlmBackend, LlmConfig, LlmError};

/// Replays a fixed script of completions in order, ignoring the prompt.
///
/// The cursor is shared behind a mutex, so concurrent callers each consume a
/// distinct entry. With `cycling` the script wraps around instead of running
/// dry.
#[derive(Debug)]
pub struct ScriptedBackend {
    config: LlmConfig,
    script: Vec<String>,
    cursor: Mutex<usize>,
    cycling: bool,
}

impl ScriptedBackend {
    pub fn new<I, S>(script: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            config: LlmConfig::default(),
            script: script.into_iter().map(Into::into).collect(),
            cursor: Mutex::new(0),
            cycling: false,
        }
    }

    pub fn cycling(mut self) -> Self {
        self.cycling = true;
        self
    }

    pub fn with_config(mut self, config: LlmConfig) -> Self {
        self.config = config;
        self
    }

    /// Number of completions handed out so far.
    pub fn consumed(&self) -> usize {
        *self.cursor.lock().unwrap()
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }
}

#[async_trait]
impl LlmBackend for ScriptedBackend {
    fn config(&self) -> &LlmConfig {
        &self.config
    }

    async fn generate(&self, prompt: &str) -> Result<String, LlmError> {
        self.config.check_prompt(prompt)?;
        let mut cursor = self.cursor.lock().unwrap();
        let idx = if self.cycling && !self.script.is_empty() {
            *cursor % self.script.len()
        } else {
            *cursor
        };
        let out = self
            .script
            .get(idx)
            .cloned()
            .ok_or(LlmError::ScriptExhausted(self.script.len()))?;
        *cursor += 1;
        Ok(out)
    }
}
