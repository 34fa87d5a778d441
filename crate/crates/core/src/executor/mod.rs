//! Agent pipeline: retrieve tools, assemble the prompt, generate, parse the
//! action, execute, and repeat until the model answers or the step cap hits.

pub mod action;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{LlmBackend, LlmError};
use crate::memory::{build_prompt_with, render_message, DropPolicy, KnowledgeStore, MemoryError, PromptBundle};
use crate::toolkit::{ToolError, ToolRegistry, DEFAULT_TOP_K};
use crate::types::{ApiResult, Conversation, Message, Role, ToolSchema};

pub use self::action::{
    find_action_block, format_action, format_call, parse_action, ActionParseError, AgentAction,
};

/// `api_name` of the tool turn that reports an unparseable action back to the model.
pub const PARSE_ERROR_TOOL: &str = "invalid-action";

pub const DEFAULT_MAX_ITERATIONS: usize = 5;

pub const DEFAULT_SYSTEM_PROMPT: &str = "You are a helpful assistant that can call tools. \
To call a tool, write a line starting with ACTION: followed by a JSON object \
{\"api_name\": ..., \"parameters\": {...}}. Otherwise reply to the user directly.";

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Tool(#[from] ToolError),
    #[error("max_iterations must be positive")]
    ZeroIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub system_prompt: String,
    pub few_shot: Vec<String>,
    pub tool_top_k: usize,
    pub knowledge_top_k: usize,
    pub max_iterations: usize,
    pub use_tools: bool,
    /// Re-run tool retrieval each iteration on the query plus the latest tool
    /// result instead of the query alone.
    pub re_retrieve_tools: bool,
    pub drop_policy: DropPolicy,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            few_shot: Vec::new(),
            tool_top_k: DEFAULT_TOP_K,
            knowledge_top_k: 3,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            use_tools: true,
            re_retrieve_tools: false,
            drop_policy: DropPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FinalAnswer,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRunRecord {
    pub conversation: Conversation,
    pub steps_taken: usize,
    pub terminated_by: Termination,
}

impl AgentRunRecord {
    /// Content of the closing assistant message.
    pub fn final_answer(&self) -> Option<&str> {
        self.conversation
            .messages
            .last()
            .filter(|m| m.role == Role::Assistant)
            .map(|m| m.content.as_str())
    }
}

/// An LLM controller wired to a tool registry and an optional knowledge store.
#[derive(Clone)]
pub struct Agent {
    llm: Arc<dyn LlmBackend>,
    tools: Arc<ToolRegistry>,
    knowledge: Option<Arc<KnowledgeStore>>,
    config: AgentConfig,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent").field("tools", &self.tools).field("config", &self.config).finish()
    }
}

impl Agent {
    pub fn new(llm: Arc<dyn LlmBackend>, tools: Arc<ToolRegistry>) -> Self {
        Self { llm, tools, knowledge: None, config: AgentConfig::default() }
    }

    pub fn with_knowledge(mut self, store: Arc<KnowledgeStore>) -> Self {
        self.knowledge = Some(store);
        self
    }

    pub fn with_config(mut self, config: AgentConfig) -> Self {
        self.config = config;
        self
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn tools(&self) -> &Arc<ToolRegistry> {
        &self.tools
    }

    /// Runs one user turn in a fresh conversation.
    pub async fn run(&self, user_query: &str) -> Result<AgentRunRecord, AgentError> {
        self.run_with_history(Conversation::new("run"), user_query).await
    }

    /// Runs one user turn appended to `history`, which is carried into the
    /// prompt and into the returned trace.
    pub async fn run_with_history(
        &self,
        history: Conversation,
        user_query: &str,
    ) -> Result<AgentRunRecord, AgentError> {
        let max_iterations = self.config.max_iterations;
        if max_iterations == 0 {
            return Err(AgentError::ZeroIterations);
        }
        let mut conversation = history;
        let prior = conversation.messages.clone();
        conversation.messages.push(Message::user(user_query));

        let mut schemas = self.retrieve_schemas(user_query)?;
        let knowledge = match &self.knowledge {
            Some(store) if !store.is_empty() => store.retrieve(user_query, self.config.knowledge_top_k)?,
            _ => Vec::new(),
        };
        let mut turn: Vec<Message> = vec![Message::user(user_query)];
        let mut steps = 0;

        while steps < max_iterations {
            let prompt = self.prompt(&prior, &turn, &schemas, &knowledge)?;
            let output = self.llm.generate(&prompt).await?;
            let new_messages = match parse_action(&output) {
                Ok(AgentAction::FinalAnswer { answer }) => {
                    conversation.messages.push(Message::assistant(answer));
                    return Ok(AgentRunRecord { conversation, steps_taken: steps, terminated_by: Termination::FinalAnswer });
                }
                Ok(AgentAction::ToolCall { request, .. }) => {
                    let result = match self.tools.execute(&request).await {
                        Ok(r) => r,
                        Err(e) => ApiResult::error(&request.api_name, e.to_string()),
                    };
                    vec![Message::assistant_call(output, request), Message::tool(result)]
                }
                Err(e) => vec![
                    Message::assistant(output),
                    Message::tool(ApiResult::error(PARSE_ERROR_TOOL, e.to_string())),
                ],
            };
            steps += 1;
            if self.config.re_retrieve_tools {
                let latest = &new_messages[1].content;
                schemas = self.retrieve_schemas(&format!("{user_query}\n{latest}"))?;
            }
            turn.extend(new_messages.iter().cloned());
            conversation.messages.extend(new_messages);
        }

        // Step cap reached: one last generation without tool schemas.
        let prompt = self.prompt(&prior, &turn, &[], &knowledge)?;
        let output = self.llm.generate(&prompt).await?;
        let answer = match parse_action(&output) {
            Ok(AgentAction::ToolCall { prose, .. }) if !prose.is_empty() => prose,
            Ok(AgentAction::ToolCall { .. }) | Err(_) => {
                format!("Stopped after {steps} tool calls without a final answer.")
            }
            Ok(AgentAction::FinalAnswer { answer }) => answer,
        };
        conversation.messages.push(Message::assistant(answer));
        Ok(AgentRunRecord { conversation, steps_taken: steps, terminated_by: Termination::StepLimit })
    }

    fn retrieve_schemas(&self, query: &str) -> Result<Vec<ToolSchema>, AgentError> {
        if !self.config.use_tools {
            return Ok(Vec::new());
        }
        Ok(self
            .tools
            .retrieve(query, self.config.tool_top_k)?
            .into_iter()
            .filter_map(|hit| self.tools.schema(&hit.tool_name))
            .collect())
    }

    fn prompt(
        &self,
        prior: &[Message],
        turn: &[Message],
        schemas: &[ToolSchema],
        knowledge: &[String],
    ) -> Result<String, AgentError> {
        let current_query = turn.iter().map(render_message).collect::<Vec<_>>().join("\n");
        let bundle = PromptBundle {
            system_prompt: self.config.system_prompt.clone(),
            api_schemas: schemas.to_vec(),
            knowledge: knowledge.to_vec(),
            history: prior.to_vec(),
            few_shot: self.config.few_shot.clone(),
            current_query,
        };
        Ok(build_prompt_with(&bundle, self.llm.config().prompt_budget(), &self.config.drop_policy)?)
    }
}
