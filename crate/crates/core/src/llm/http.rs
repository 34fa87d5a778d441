use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{LlmBackend, LlmConfig, LlmError};

/// Retries apply to transport failures only; HTTP error statuses are final.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 2, base_delay: Duration::from_millis(100) }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    max_new_tokens: usize,
    temperature: f64,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// Remote controller speaking `POST {endpoint}` with
/// `{"prompt", "max_new_tokens", "temperature"}` and expecting `{"text"}` back.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    config: LlmConfig,
    url: String,
    client: reqwest::Client,
    retry: RetryPolicy,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, config: LlmConfig) -> Self {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .expect("reqwest client");
        Self { config, url: url.into(), client, retry: RetryPolicy::default() }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    async fn attempt(&self, prompt: &str) -> Result<String, LlmError> {
        let body = GenerateRequest {
            prompt,
            max_new_tokens: self.config.max_new_tokens,
            temperature: self.config.temperature,
        };
        let resp = self
            .client
            .post(&self.url)
            .json(&body)
            .send()
            .await
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let bytes = resp.bytes().await.map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Status {
                status: status.as_u16(),
                body: String::from_utf8_lossy(&bytes).into_owned(),
            });
        }
        let parsed: GenerateResponse =
            serde_json::from_slice(&bytes).map_err(|e| LlmError::BadResponse(e.to_string()))?;
        Ok(parsed.text)
    }
}

/// Some servers return prompt + continuation; keep only the continuation.
fn strip_echo(prompt: &str, text: String) -> String {
    match text.strip_prefix(prompt) {
        Some(rest) if !prompt.is_empty() => rest.trim_start().to_string(),
        _ => text,
    }
}

#[async_trait]
impl LlmBackend for HttpBackend {
    fn config(&self) -> &LlmConfig {
        &self.config
    }

    async fn generate(&self, prompt: &str) -> Result<String, LlmError> {
        self.config.check_prompt(prompt)?;
        let mut attempt = 0;
        loop {
            match self.attempt(prompt).await {
                Ok(text) => return Ok(strip_echo(prompt, text)),
                Err(LlmError::Transport(msg)) if attempt < self.retry.max_retries => {
                    tracing::warn!(attempt, error = %msg, "LLM transport failure, retrying");
                    tokio::time::sleep(self.retry.delay(attempt)).await;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_is_stripped() {
        assert_eq!(strip_echo("Q: hi", "Q: hi A: hello".into()), "A: hello");
        assert_eq!(strip_echo("Q: hi", "hello".into()), "hello");
        assert_eq!(strip_echo("", "hello".into()), "hello");
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy { max_retries: 2, base_delay: Duration::from_millis(10) };
        assert_eq!(p.delay(0), Duration::from_millis(10));
        assert_eq!(p.delay(1), Duration::from_millis(20));
    }
}
