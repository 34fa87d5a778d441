//! Shared domain types: tool schemas, API requests and results, messages and
//! conversations, plus the canonical JSON (de)serialization for conversations.
//!
//! Every other module speaks these shapes. Argument values are always strings;
//! coercion into richer types is left to whoever executes the tool.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Argument map of an [`ApiRequest`]. Ordered so serialization is stable.
pub type Arguments = BTreeMap<String, String>;

/// One entry of a tool's parameter list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolParameter {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub required: bool,
}

impl ToolParameter {
    pub fn required(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self { name: name.into(), description: description.into(), required: true }
    }

    pub fn optional(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self { name: name.into(), description: description.into(), required: false }
    }
}

/// Where a tool's requests are executed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Endpoint {
    /// In-process handler, looked up by id in the registry.
    Local { handler: String },
    /// HTTP endpoint that receives the argument map as a JSON object.
    Remote { url: String },
}

/// Registration unit of the tool library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub parameters: Vec<ToolParameter>,
    pub endpoint: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("tool name must not be empty")]
    EmptyName,
    #[error("tool `{0}` has an empty description")]
    EmptyDescription(String),
    #[error("tool `{tool}` has a parameter with an empty name")]
    EmptyParameterName { tool: String },
    #[error("tool `{tool}` declares parameter `{parameter}` more than once")]
    DuplicateParameter { tool: String, parameter: String },
}

impl ToolSchema {
    pub fn local(
        name: impl Into<String>,
        description: impl Into<String>,
        parameters: Vec<ToolParameter>,
    ) -> Self {
        let name = name.into();
        Self {
            endpoint: Endpoint::Local { handler: name.clone() },
            name,
            description: description.into(),
            parameters,
        }
    }

    pub fn remote(
        name: impl Into<String>,
        description: impl Into<String>,
        parameters: Vec<ToolParameter>,
        url: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            parameters,
            endpoint: Endpoint::Remote { url: url.into() },
        }
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.name.trim().is_empty() {
            return Err(SchemaError::EmptyName);
        }
        if self.description.trim().is_empty() {
            return Err(SchemaError::EmptyDescription(self.name.clone()));
        }
        let mut seen = HashSet::new();
        for p in &self.parameters {
            if p.name.is_empty() {
                return Err(SchemaError::EmptyParameterName { tool: self.name.clone() });
            }
            if !seen.insert(p.name.as_str()) {
                return Err(SchemaError::DuplicateParameter {
                    tool: self.name.clone(),
                    parameter: p.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn parameter(&self, name: &str) -> Option<&ToolParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// A parsed tool invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiRequest {
    pub api_name: String,
    #[serde(default)]
    pub arguments: Arguments,
}

impl ApiRequest {
    pub fn new(api_name: impl Into<String>) -> Self {
        Self { api_name: api_name.into(), arguments: Arguments::new() }
    }

    pub fn arg(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.arguments.insert(name.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApiStatus {
    Success,
    Error,
}

/// Outcome of executing an [`ApiRequest`]. On error the payload carries the cause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiResult {
    pub api_name: String,
    pub status: ApiStatus,
    pub payload: String,
}

impl ApiResult {
    pub fn success(api_name: impl Into<String>, payload: impl Into<String>) -> Self {
        Self { api_name: api_name.into(), status: ApiStatus::Success, payload: payload.into() }
    }

    pub fn error(api_name: impl Into<String>, cause: impl Into<String>) -> Self {
        Self { api_name: api_name.into(), status: ApiStatus::Error, payload: cause.into() }
    }

    pub fn is_success(&self) -> bool {
        self.status == ApiStatus::Success
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<ApiRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ApiResult>,
}

impl Message {
    fn plain(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into(), request: None, result: None }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::plain(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::plain(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::plain(Role::Assistant, content)
    }

    /// Assistant turn that calls a tool. `content` should hold the serialized action block.
    pub fn assistant_call(content: impl Into<String>, request: ApiRequest) -> Self {
        Self { request: Some(request), ..Self::plain(Role::Assistant, content) }
    }

    /// Tool turn; the content mirrors the result payload.
    pub fn tool(result: ApiResult) -> Self {
        Self { content: result.payload.clone(), result: Some(result), ..Self::plain(Role::Tool, "") }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub messages: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConversationError {
    #[error("malformed conversation document at `{path}`: {message}")]
    Malformed { path: String, message: String },
    #[error("invalid conversation at message {index}: {reason}")]
    Invariant { index: usize, reason: String },
}

impl Conversation {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), messages: Vec::new() }
    }

    pub fn with_messages(id: impl Into<String>, messages: Vec<Message>) -> Self {
        Self { id: id.into(), messages }
    }

    /// Checks role placement and alternation.
    ///
    /// The first non-system message must be a user turn and no two user turns
    /// may be adjacent. Assistant and tool turns may chain freely, which is how
    /// multi-step tool use is represented.
    pub fn validate(&self) -> Result<(), ConversationError> {
        let violation = |index: usize, reason: String| ConversationError::Invariant { index, reason };
        let mut seen_non_system = false;
        for (i, m) in self.messages.iter().enumerate() {
            if m.request.is_some() && m.role != Role::Assistant {
                return Err(violation(i, format!("{} turn carries an API request", m.role.as_str())));
            }
            if m.result.is_some() && m.role != Role::Tool {
                return Err(violation(i, format!("{} turn carries an API result", m.role.as_str())));
            }
            if let Some(req) = &m.request {
                if req.api_name.is_empty() {
                    return Err(violation(i, "API request has an empty api_name".into()));
                }
            }
            if m.role != Role::System && !seen_non_system {
                seen_non_system = true;
                if m.role != Role::User {
                    return Err(violation(
                        i,
                        format!("first non-system turn must be user, found {}", m.role.as_str()),
                    ));
                }
            }
            if i > 0 && m.role == Role::User && self.messages[i - 1].role == Role::User {
                return Err(violation(i, "two consecutive user turns".into()));
            }
        }
        Ok(())
    }

    pub fn user_turns(&self) -> usize {
        self.messages.iter().filter(|m| m.role == Role::User).count()
    }

    pub fn requests(&self) -> impl Iterator<Item = &ApiRequest> {
        self.messages.iter().filter_map(|m| m.request.as_ref())
    }
}

/// Serializes to the canonical single-line JSON document.
pub fn serialize_conversation(conv: &Conversation) -> String {
    serde_json::to_string(conv).expect("conversation serialization is infallible")
}

/// Parses and validates a conversation document.
pub fn parse_conversation(doc: &str) -> Result<Conversation, ConversationError> {
    let de = &mut serde_json::Deserializer::from_str(doc);
    let conv: Conversation = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConversationError::Malformed { path, message: e.into_inner().to_string() }
    })?;
    conv.validate()?;
    Ok(conv)
}
