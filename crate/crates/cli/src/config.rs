//! Layered settings. A TOML file named by `--config` or `AGENT_CONFIG`
//! supplies defaults; any flag given on the command line wins.
//!
//! The file mirrors the flags one to one: each subcommand has a table named
//! after it (`[run]`, `[eval]`, `[serve_arena]`, ...) whose keys are the flag
//! names with dashes turned into underscores. The model settings shared by
//! `run` live in `[llm]` and `[agent]`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use toolagent_core::eval::F1Averaging;
use toolagent_core::executor::AgentConfig;
use toolagent_core::llm::LlmConfig;

use crate::CliError;

pub const CONFIG_ENV: &str = "AGENT_CONFIG";

/// Fills every `None` field of `$flags` from `$file`.
macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),+ $(,)?) => {{
        let (mut flags, file) = ($flags, $file);
        $(if flags.$field.is_none() { flags.$field = file.$field; })+
        flags
    }};
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub llm: LlmArgs,
    pub agent: AgentArgs,
    pub run: RunArgs,
    pub eval: EvalArgs,
    pub datagen: DatagenArgs,
    pub maskgen: MaskgenArgs,
    pub serve_arena: ServeArenaArgs,
    pub tools: ToolsSection,
}

impl FileConfig {
    /// Reads `explicit`, else the file named by `AGENT_CONFIG`, else nothing.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => PathBuf::from(p),
                _ => return Ok(Self::default()),
            },
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmArgs {
    #[arg(long)]
    pub model_name: Option<String>,
    #[arg(long)]
    pub max_context_tokens: Option<usize>,
    #[arg(long)]
    pub max_new_tokens: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
}

impl LlmArgs {
    pub fn overlay(self, file: Self) -> Self {
        overlay!(self, file; model_name, max_context_tokens, max_new_tokens, temperature)
    }

    pub fn to_config(&self) -> LlmConfig {
        let d = LlmConfig::default();
        LlmConfig {
            model_name: self.model_name.clone().unwrap_or(d.model_name),
            endpoint: d.endpoint,
            max_context_tokens: self.max_context_tokens.unwrap_or(d.max_context_tokens),
            temperature: self.temperature.unwrap_or(d.temperature),
            max_new_tokens: self.max_new_tokens.unwrap_or(d.max_new_tokens),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentArgs {
    /// Upper bound on tool calls per user turn [default: 5]
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tool_top_k: Option<usize>,
    #[arg(long)]
    pub knowledge_top_k: Option<usize>,
    #[arg(long)]
    pub system_prompt: Option<String>,
}

impl AgentArgs {
    pub fn overlay(self, file: Self) -> Self {
        overlay!(self, file; max_iter, tool_top_k, knowledge_top_k, system_prompt)
    }

    pub fn to_config(&self) -> AgentConfig {
        let d = AgentConfig::default();
        AgentConfig {
            max_iterations: self.max_iter.unwrap_or(d.max_iterations),
            tool_top_k: self.tool_top_k.unwrap_or(d.tool_top_k),
            knowledge_top_k: self.knowledge_top_k.unwrap_or(d.knowledge_top_k),
            system_prompt: self.system_prompt.clone().unwrap_or_else(|| d.system_prompt.clone()),
            ..d
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// The user request to answer
    #[arg(long)]
    pub query: Option<String>,
    /// Model to drive: `scripted:FILE` (JSON array of canned outputs) or
    /// `http:URL` (generation service answering `{"text"}`)
    #[arg(long, value_name = "scripted:FILE|http:URL")]
    pub backend: Option<String>,
    /// Tool manifest (JSON array of tool schemas) added to the default library
    #[arg(long)]
    pub tools: Option<PathBuf>,
    /// Directory of documents to use as retrievable knowledge
    #[arg(long)]
    pub knowledge_dir: Option<PathBuf>,
    /// Where to write the full run record as JSON
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub llm: LlmArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub agent: AgentArgs,
}

impl RunArgs {
    pub fn overlay(self, file: &FileConfig) -> Self {
        let mut merged = overlay!(self, file.run.clone(); query, backend, tools, knowledge_dir, trace);
        merged.llm = merged.llm.overlay(file.llm.clone());
        merged.agent = merged.agent.overlay(file.agent.clone());
        merged
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Macro,
    Micro,
}

impl From<Averaging> for F1Averaging {
    fn from(a: Averaging) -> Self {
        match a {
            Averaging::Macro => F1Averaging::Macro,
            Averaging::Micro => F1Averaging::Micro,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    /// Annotated test set (JSONL conversations)
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Predicted conversations (JSONL), matched to gold by id
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// How Argument F1 is averaged over requests [default: macro]
    #[arg(long, value_enum)]
    pub averaging: Option<Averaging>,
    /// Where to write the full report, including per-conversation scores
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvalArgs {
    pub fn overlay(self, file: &FileConfig) -> Self {
        overlay!(self, file.eval.clone(); gold, pred, averaging, out)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenArgs {
    /// Number of dialogues to simulate
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// API catalog manifest; defaults to the bundled synthetic catalog
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// JSON object `{"user": [...], "agent": [...], "api": [...]}` of canned
    /// outputs for the three simulators, replayed cyclically
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub user_endpoint: Option<String>,
    #[arg(long)]
    pub agent_endpoint: Option<String>,
    #[arg(long)]
    pub api_endpoint: Option<String>,
    /// Output JSONL, one instance (kept or filtered) per line
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON file for the dataset statistics
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

impl DatagenArgs {
    pub fn overlay(self, file: &FileConfig) -> Self {
        overlay!(self, file.datagen.clone();
            n, seed, catalog, script, user_endpoint, agent_endpoint, api_endpoint, out, stats)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskgenArgs {
    /// Conversations to weight (JSONL)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output JSONL of weighted token sequences
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl MaskgenArgs {
    pub fn overlay(self, file: &FileConfig) -> Self {
        overlay!(self, file.maskgen.clone(); input, out)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeArenaArgs {
    /// Agent pool: JSON array of agent specs
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Bind address [default: 127.0.0.1]
    #[arg(long)]
    pub host: Option<String>,
    /// Port; 0 picks a free one [default: 8080]
    #[arg(long)]
    pub port: Option<u16>,
    /// Tool manifest added to the default library shared by all agents
    #[arg(long)]
    pub tools: Option<PathBuf>,
    /// Seed for pairing agents [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Append-only vote log; replayed on startup when it exists
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Rating table snapshot rewritten after every vote
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Elo K-factor [default: 32]
    #[arg(long)]
    pub k: Option<f64>,
    /// Starting rating [default: 1000]
    #[arg(long)]
    pub initial_rating: Option<f64>,
}

impl ServeArenaArgs {
    pub fn overlay(self, file: &FileConfig) -> Self {
        overlay!(self, file.serve_arena.clone();
            pool, host, port, tools, seed, log, snapshot, k, initial_rating)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolsSection {
    /// Persistent registry file (JSON array of tool schemas)
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum ListFormat {
    #[default]
    Text,
    Json,
}
