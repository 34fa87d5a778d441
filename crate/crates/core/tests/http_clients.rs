mod common;

use std::sync::atomic::Ordering;
use std::time::Duration;

use common::{dropping_server, MockLlm, MockTools};
use toolagent_core::llm::{HttpBackend, LlmBackend, LlmConfig, LlmError, RetryPolicy};
use toolagent_core::toolkit::ToolRegistry;
use toolagent_core::types::{ApiRequest, ApiStatus, ToolParameter, ToolSchema};

fn fast_retry() -> RetryPolicy {
    RetryPolicy { max_retries: 2, base_delay: Duration::from_millis(5) }
}

#[tokio::test]
async fn backend_posts_prompt_and_reads_text() {
    let llm = MockLlm::new(["hi there"]);
    let url = llm.start().await;
    let backend = HttpBackend::new(url, LlmConfig::default());
    assert_eq!(backend.generate("hello").await.unwrap(), "hi there");
    assert_eq!(llm.prompts(), ["hello"]);
}

#[tokio::test]
async fn echoed_prompt_is_removed() {
    let llm = MockLlm::new(["user: hi\nassistant: hey"]);
    let backend = HttpBackend::new(llm.start().await, LlmConfig::default());
    assert_eq!(backend.generate("user: hi").await.unwrap(), "assistant: hey");
}

#[tokio::test]
async fn error_status_is_not_retried() {
    let llm = MockLlm::new(Vec::<String>::new());
    let backend = HttpBackend::new(llm.start().await, LlmConfig::default()).with_retry(fast_retry());
    match backend.generate("x").await {
        Err(LlmError::Status { status: 503, body }) => assert!(body.contains("no more replies")),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(llm.prompts().len(), 1);
}

#[tokio::test]
async fn transport_failures_are_retried_then_reported() {
    let (url, attempts) = dropping_server().await;
    let backend = HttpBackend::new(url, LlmConfig::default()).with_retry(fast_retry());
    assert!(matches!(backend.generate("x").await, Err(LlmError::Transport(_))));
    assert_eq!(attempts.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn oversized_prompt_never_reaches_the_server() {
    let llm = MockLlm::new(["unused"]);
    let config = LlmConfig { max_context_tokens: 8, max_new_tokens: 4, ..LlmConfig::default() };
    let backend = HttpBackend::new(llm.start().await, config);
    let err = backend.generate("one two three four five").await.unwrap_err();
    assert!(matches!(err, LlmError::ContextOverflow { tokens: 5, limit: 4 }));
    assert!(llm.prompts().is_empty());
}

#[tokio::test]
async fn non_json_body_is_a_bad_response() {
    let tools = MockTools::new(&[("generate", "plain text")]);
    let base = tools.start().await;
    let backend = HttpBackend::new(format!("{base}/tools/generate"), LlmConfig::default());
    assert!(matches!(backend.generate("x").await, Err(LlmError::BadResponse(_))));
}

fn remote(name: &str, base: &str) -> ToolSchema {
    ToolSchema::remote(
        name,
        format!("Remote tool {name}."),
        vec![ToolParameter::required("text", "input"), ToolParameter::optional("style", "style")],
        format!("{base}/tools/{name}"),
    )
}

#[tokio::test]
async fn remote_tools() {
    let tools = MockTools::new(&[("echo", "{\"ok\":true}")]);
    let base = tools.start().await;
    let registry = ToolRegistry::default();
    registry.register(remote("echo", &base)).unwrap();
    registry.register(remote("broken", &base)).unwrap();
    registry.register(remote("gone", "http://127.0.0.1:9")).unwrap();

    let ok = registry.execute(&ApiRequest::new("echo").arg("text", "hi")).await.unwrap();
    assert_eq!((ok.status, ok.payload.as_str()), (ApiStatus::Success, "{\"ok\":true}"));
    assert_eq!(tools.calls()[0].0, "echo");
    assert_eq!(tools.calls()[0].1["text"], "hi");

    let broken = registry.execute(&ApiRequest::new("broken").arg("text", "hi")).await.unwrap();
    assert_eq!(broken.status, ApiStatus::Error);
    assert!(broken.payload.contains("HTTP 500"), "{}", broken.payload);

    let gone = registry.execute(&ApiRequest::new("gone").arg("text", "hi")).await.unwrap();
    assert_eq!(gone.status, ApiStatus::Error);
    assert!(gone.payload.contains("transport failure"));

    // argument validation happens before any network traffic
    let missing = registry.execute(&ApiRequest::new("echo").arg("style", "x")).await.unwrap();
    assert_eq!(missing.status, ApiStatus::Error);
    assert_eq!(tools.calls().len(), 2);
}
