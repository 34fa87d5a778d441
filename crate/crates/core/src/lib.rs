//! A tool-using LLM agent runtime.
//!
//! The crate is organised bottom-up: [`types`] holds the shared data model,
//! [`llm`] the controller backends, [`toolkit`] the tool registry with dense
//! retrieval, [`memory`] knowledge retrieval and prompt assembly, and
//! [`executor`] the agent loop. [`eval`], [`trainprep`] and [`arena`] build on
//! those for scoring, training-data preparation and pairwise Elo battles.

pub mod arena;
pub mod eval;
pub mod executor;
pub mod llm;
pub mod memory;
pub mod toolkit;
pub mod trainprep;
pub mod types;
