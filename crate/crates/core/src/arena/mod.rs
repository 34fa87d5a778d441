//! Pairwise agent battles judged by human votes, rated with Elo.
//!
//! Every vote is appended to a JSONL log, which is the source of truth: the
//! live rating table can always be rebuilt by replaying it.

mod engine;
mod log;
mod rating;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::AgentRunRecord;

pub use self::engine::{AgentSpec, Arena, ArenaOptions, BattleView, ChatReply, Revealed, VoteReceipt};
pub use self::log::{read_log, replay, write_snapshot, BattleLog, VoteRecord};
pub use self::rating::{expected_score, EloConfig, LeaderboardEntry, RatingTable};

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("an arena needs at least two agents, got {0}")]
    PoolTooSmall(usize),
    #[error("duplicate agent id `{0}`")]
    DuplicateAgent(String),
    #[error("agent `{0}` has neither a script nor an endpoint")]
    NoBackend(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{0}` cannot play itself")]
    SelfPlay(String),
    #[error("unknown battle `{0}`")]
    UnknownBattle(String),
    #[error("battle `{0}` already has a vote")]
    DoubleVote(String),
    #[error("arena writer has shut down")]
    Closed,
    #[error("battle log line {line}: {source}")]
    Log { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A judge's verdict, seen from agent A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    A,
    B,
    Tie,
}

impl Vote {
    pub fn score_a(self) -> f64 {
        match self {
            Vote::A => 1.0,
            Vote::B => 0.0,
            Vote::Tie => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pending,
    AWins,
    BWins,
    Tie,
}

impl From<Vote> for Outcome {
    fn from(v: Vote) -> Self {
        match v {
            Vote::A => Outcome::AWins,
            Vote::B => Outcome::BWins,
            Vote::Tie => Outcome::Tie,
        }
    }
}

/// One side of a battle. A failed run keeps its error so the battle stays votable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BattleTrace {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<AgentRunRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BattleTrace {
    /// Text shown to the judge.
    pub fn response(&self) -> String {
        match (&self.record, &self.error) {
            (Some(r), _) => r.final_answer().unwrap_or_default().to_string(),
            (None, Some(e)) => format!("[agent error] {e}"),
            (None, None) => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Battle {
    pub battle_id: String,
    pub agent_a: String,
    pub agent_b: String,
    pub instruction: String,
    pub traces: (BattleTrace, BattleTrace),
    pub outcome: Outcome,
}

impl Battle {
    /// Moves a pending battle to its final outcome; a second call fails.
    pub fn decide(&mut self, vote: Vote) -> Result<(), ArenaError> {
        if self.outcome != Outcome::Pending {
            return Err(ArenaError::DoubleVote(self.battle_id.clone()));
        }
        self.outcome = vote.into();
        Ok(())
    }
}

/// Records a vote on a pending battle and applies it to the table.
pub fn record_battle(table: &mut RatingTable, battle: &mut Battle, vote: Vote) -> Result<(f64, f64), ArenaError> {
    if battle.outcome != Outcome::Pending {
        return Err(ArenaError::DoubleVote(battle.battle_id.clone()));
    }
    let ratings = table.record(&battle.agent_a, &battle.agent_b, vote)?;
    battle.decide(vote)?;
    Ok(ratings)
}
