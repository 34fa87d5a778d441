//! Memory: knowledge retrieval over a local corpus and budget-aware prompt
//! assembly.

mod knowledge;
mod prompt;

use thiserror::Error;

pub use self::knowledge::{Chunk, ChunkingConfig, KnowledgeStore};
pub use self::prompt::{
    build_prompt, build_prompt_with, render_message, render_schema, DropPolicy, DropStep,
    PromptBundle, EXAMPLES_HEADER, HISTORY_HEADER, KNOWLEDGE_HEADER, TOOLS_HEADER,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("document `{0}` is already ingested")]
    DuplicateDocument(String),
    #[error("document `{0}` has no text")]
    EmptyDocument(String),
    #[error("knowledge store is empty")]
    EmptyStore,
    #[error("chunk size {chunk_size} must be positive and exceed overlap {overlap}")]
    InvalidChunking { chunk_size: usize, overlap: usize },
    #[error("system prompt and query need {required} tokens but the budget is {budget}")]
    BudgetTooSmall { required: usize, budget: usize },
    #[error("current query is empty")]
    EmptyQuery,
    #[error("i/o error: {0}")]
    Io(String),
}
