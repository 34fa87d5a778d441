//! The concurrent arena: battles run in parallel, votes go through a single
//! writer task so rating updates are applied one at a time in log order.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};

use super::log::{read_log, replay, write_snapshot, BattleLog, VoteRecord};
use super::{ArenaError, Battle, BattleTrace, EloConfig, LeaderboardEntry, Outcome, RatingTable, Vote};
use crate::executor::{Agent, AgentConfig, AgentError, AgentRunRecord, Termination};
use crate::llm::{HttpBackend, LlmBackend, LlmConfig, ScriptedBackend};
use crate::toolkit::ToolRegistry;
use crate::types::Conversation;

/// One entry of an agent pool file.
///
/// A non-empty `script` makes a cycling scripted agent; otherwise
/// `llm.endpoint` must name an HTTP generation service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<String>,
    #[serde(default)]
    pub config: AgentConfig,
}

impl AgentSpec {
    pub fn build(&self, tools: Arc<ToolRegistry>) -> Result<Agent, ArenaError> {
        let llm: Arc<dyn LlmBackend> = if !self.script.is_empty() {
            Arc::new(ScriptedBackend::new(self.script.iter().cloned()).cycling().with_config(self.llm.clone()))
        } else if let Some(url) = &self.llm.endpoint {
            Arc::new(HttpBackend::new(url.clone(), self.llm.clone()))
        } else {
            return Err(ArenaError::NoBackend(self.id.clone()));
        };
        Ok(Agent::new(llm, tools).with_config(self.config.clone()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ArenaOptions {
    pub elo: EloConfig,
    pub seed: u64,
    /// Vote log; replayed on startup when it already exists.
    pub log_path: Option<PathBuf>,
    /// Rating table rewritten after every vote.
    pub snapshot_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revealed {
    pub a: String,
    pub b: String,
}

/// What a judge sees. Identities stay hidden until the vote is in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BattleView {
    pub battle_id: String,
    pub instruction: String,
    pub response_a: String,
    pub response_b: String,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revealed: Option<Revealed>,
}

impl From<&Battle> for BattleView {
    fn from(b: &Battle) -> Self {
        Self {
            battle_id: b.battle_id.clone(),
            instruction: b.instruction.clone(),
            response_a: b.traces.0.response(),
            response_b: b.traces.1.response(),
            outcome: b.outcome,
            revealed: (b.outcome != Outcome::Pending)
                .then(|| Revealed { a: b.agent_a.clone(), b: b.agent_b.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteReceipt {
    pub battle_id: String,
    pub outcome: Outcome,
    pub revealed: Revealed,
    pub new_ratings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatReply {
    pub session_id: String,
    pub agent_id: String,
    pub reply: String,
    pub trace: AgentRunRecord,
}

struct Shared {
    battles: RwLock<HashMap<String, Battle>>,
    table: RwLock<RatingTable>,
}

struct VoteOp {
    battle_id: String,
    vote: Vote,
    reply: oneshot::Sender<Result<VoteReceipt, ArenaError>>,
}

type Session = Arc<tokio::sync::Mutex<Conversation>>;

pub struct Arena {
    agents: Vec<(String, Agent)>,
    shared: Arc<Shared>,
    writer: mpsc::Sender<VoteOp>,
    rng: Mutex<ChaCha8Rng>,
    next_battle: AtomicU64,
    sessions: Mutex<HashMap<String, Session>>,
}

impl std::fmt::Debug for Arena {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Arena").field("agents", &self.agent_ids()).finish_non_exhaustive()
    }
}

impl Arena {
    /// Builds every spec against one shared registry, so both sides of a
    /// battle see the same tools.
    pub fn from_specs(specs: &[AgentSpec], tools: Arc<ToolRegistry>, options: ArenaOptions) -> Result<Self, ArenaError> {
        let agents = specs
            .iter()
            .map(|s| Ok((s.id.clone(), s.build(tools.clone())?)))
            .collect::<Result<Vec<_>, ArenaError>>()?;
        Self::new(agents, options)
    }

    /// Must be called inside a Tokio runtime; spawns the vote writer.
    pub fn new(agents: Vec<(String, Agent)>, options: ArenaOptions) -> Result<Self, ArenaError> {
        if agents.len() < 2 {
            return Err(ArenaError::PoolTooSmall(agents.len()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (id, _) in &agents {
            if !seen.insert(id.as_str()) {
                return Err(ArenaError::DuplicateAgent(id.clone()));
            }
        }

        let (table, seq, log) = match &options.log_path {
            Some(path) => {
                let records = if path.exists() { read_log(path)? } else { Vec::new() };
                (replay(options.elo, &records)?, records.len() as u64, Some(BattleLog::open(path)?))
            }
            None => (RatingTable::new(options.elo), 0, None),
        };
        let shared = Arc::new(Shared { battles: RwLock::new(HashMap::new()), table: RwLock::new(table) });
        let (tx, rx) = mpsc::channel(64);
        tokio::spawn(writer_loop(shared.clone(), rx, log, options.snapshot_path.clone(), seq));

        Ok(Self {
            agents,
            shared,
            writer: tx,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(options.seed)),
            next_battle: AtomicU64::new(0),
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn agent_ids(&self) -> Vec<String> {
        self.agents.iter().map(|(id, _)| id.clone()).collect()
    }

    /// Two distinct agents drawn uniformly, in battle order.
    pub fn sample_pair(&self) -> (usize, usize) {
        let n = self.agents.len();
        let mut rng = self.rng.lock().expect("rng lock");
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        (i, j)
    }

    /// Runs a sampled pair on the instruction and stores the pending battle.
    pub async fn start_battle(&self, instruction: &str) -> BattleView {
        let (i, j) = self.sample_pair();
        let (a, b) = (&self.agents[i], &self.agents[j]);
        let (ra, rb) = tokio::join!(a.1.run(instruction), b.1.run(instruction));
        let trace = |r: Result<AgentRunRecord, AgentError>| match r {
            Ok(record) => BattleTrace { record: Some(record), error: None },
            Err(e) => BattleTrace { record: None, error: Some(e.to_string()) },
        };
        let battle = Battle {
            battle_id: format!("battle-{}", self.next_battle.fetch_add(1, Ordering::SeqCst)),
            agent_a: a.0.clone(),
            agent_b: b.0.clone(),
            instruction: instruction.to_string(),
            traces: (trace(ra), trace(rb)),
            outcome: Outcome::Pending,
        };
        let view = BattleView::from(&battle);
        self.shared.battles.write().expect("battles lock").insert(battle.battle_id.clone(), battle);
        view
    }

    pub fn view(&self, battle_id: &str) -> Result<BattleView, ArenaError> {
        self.battle(battle_id).map(|b| BattleView::from(&b))
    }

    /// Full battle including traces and identities.
    pub fn battle(&self, battle_id: &str) -> Result<Battle, ArenaError> {
        self.shared
            .battles
            .read()
            .expect("battles lock")
            .get(battle_id)
            .cloned()
            .ok_or_else(|| ArenaError::UnknownBattle(battle_id.to_string()))
    }

    pub async fn vote(&self, battle_id: &str, vote: Vote) -> Result<VoteReceipt, ArenaError> {
        let (reply, rx) = oneshot::channel();
        self.writer
            .send(VoteOp { battle_id: battle_id.to_string(), vote, reply })
            .await
            .map_err(|_| ArenaError::Closed)?;
        rx.await.map_err(|_| ArenaError::Closed)?
    }

    pub fn table(&self) -> RatingTable {
        self.shared.table.read().expect("table lock").clone()
    }

    pub fn leaderboard(&self) -> Vec<LeaderboardEntry> {
        self.shared.table.read().expect("table lock").leaderboard()
    }

    /// One chat turn in a named session, by default with the first agent in
    /// the pool. Turns of the same session are serialized.
    pub async fn chat(&self, session_id: &str, message: &str, agent_id: Option<&str>) -> Result<ChatReply, ArenaError> {
        let (id, agent) = match agent_id {
            None => &self.agents[0],
            Some(want) => self
                .agents
                .iter()
                .find(|(id, _)| id == want)
                .ok_or_else(|| ArenaError::UnknownAgent(want.to_string()))?,
        };
        let session = self
            .sessions
            .lock()
            .expect("sessions lock")
            .entry(session_id.to_string())
            .or_insert_with(|| Arc::new(tokio::sync::Mutex::new(Conversation::new(session_id))))
            .clone();
        let mut history = session.lock().await;
        let (trace, reply) = match agent.run_with_history(history.clone(), message).await {
            Ok(record) => {
                let reply = record.final_answer().unwrap_or_default().to_string();
                *history = record.conversation.clone();
                (record, reply)
            }
            Err(e) => {
                let reply = format!("[agent error] {e}");
                let mut conv = history.clone();
                conv.messages.push(crate::types::Message::user(message));
                (AgentRunRecord { conversation: conv, steps_taken: 0, terminated_by: Termination::StepLimit }, reply)
            }
        };
        Ok(ChatReply { session_id: session_id.to_string(), agent_id: id.clone(), reply, trace })
    }
}

async fn writer_loop(
    shared: Arc<Shared>,
    mut rx: mpsc::Receiver<VoteOp>,
    mut log: Option<BattleLog>,
    snapshot: Option<PathBuf>,
    mut seq: u64,
) {
    while let Some(op) = rx.recv().await {
        let result = apply_vote(&shared, &op, log.as_mut(), snapshot.as_ref(), seq);
        if result.is_ok() {
            seq += 1;
        }
        let _ = op.reply.send(result);
    }
}

/// Log first, then commit: a failed append leaves table and battle untouched.
fn apply_vote(
    shared: &Shared,
    op: &VoteOp,
    log: Option<&mut BattleLog>,
    snapshot: Option<&PathBuf>,
    seq: u64,
) -> Result<VoteReceipt, ArenaError> {
    let mut battles = shared.battles.write().expect("battles lock");
    let battle = battles.get_mut(&op.battle_id).ok_or_else(|| ArenaError::UnknownBattle(op.battle_id.clone()))?;
    if battle.outcome != Outcome::Pending {
        return Err(ArenaError::DoubleVote(op.battle_id.clone()));
    }
    let mut next = shared.table.read().expect("table lock").clone();
    let (ra, rb) = next.record(&battle.agent_a, &battle.agent_b, op.vote)?;
    if let Some(log) = log {
        log.append(&VoteRecord {
            seq,
            battle_id: battle.battle_id.clone(),
            agent_a: battle.agent_a.clone(),
            agent_b: battle.agent_b.clone(),
            vote: op.vote,
        })?;
    }
    if let Some(path) = snapshot {
        if let Err(e) = write_snapshot(&next, path) {
            tracing::warn!(error = %e, "rating snapshot failed; the vote log still has the vote");
        }
    }
    battle.decide(op.vote)?;
    *shared.table.write().expect("table lock") = next;
    Ok(VoteReceipt {
        battle_id: battle.battle_id.clone(),
        outcome: battle.outcome,
        revealed: Revealed { a: battle.agent_a.clone(), b: battle.agent_b.clone() },
        new_ratings: BTreeMap::from([(battle.agent_a.clone(), ra), (battle.agent_b.clone(), rb)]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: &str, script: &[&str]) -> AgentSpec {
        AgentSpec {
            id: id.into(),
            llm: LlmConfig::default(),
            script: script.iter().map(|s| s.to_string()).collect(),
            config: AgentConfig::default(),
        }
    }

    fn arena(ids: &[&str], seed: u64) -> Arena {
        let specs: Vec<_> = ids.iter().map(|id| spec(id, &[&format!("{id} says hi")])).collect();
        Arena::from_specs(&specs, Arc::new(ToolRegistry::with_default_library()), ArenaOptions { seed, ..Default::default() })
            .unwrap()
    }

    #[tokio::test]
    async fn pool_validation() {
        let tools = Arc::new(ToolRegistry::default());
        let err = Arena::from_specs(&[spec("a", &["x"])], tools.clone(), ArenaOptions::default()).unwrap_err();
        assert!(matches!(err, ArenaError::PoolTooSmall(1)));
        let err = Arena::from_specs(&[spec("a", &["x"]), spec("a", &["y"])], tools.clone(), ArenaOptions::default())
            .unwrap_err();
        assert!(matches!(err, ArenaError::DuplicateAgent(_)));
        let err = Arena::from_specs(&[spec("a", &["x"]), spec("b", &[])], tools, ArenaOptions::default()).unwrap_err();
        assert!(matches!(err, ArenaError::NoBackend(_)));
    }

    #[tokio::test]
    async fn pair_of_two_and_seeded_pairs() {
        let a = arena(&["p", "q"], 1);
        for _ in 0..20 {
            let (i, j) = a.sample_pair();
            assert_ne!(i, j);
        }
        let pairs = |seed| {
            let a = arena(&["p", "q", "r"], seed);
            (0..10).map(|_| a.sample_pair()).collect::<Vec<_>>()
        };
        assert_eq!(pairs(9), pairs(9));
        assert!(pairs(9).iter().all(|(i, j)| i != j && *i < 3 && *j < 3));
    }

    #[tokio::test]
    async fn battle_hides_then_reveals() {
        let a = arena(&["p", "q"], 0);
        let view = a.start_battle("hello").await;
        assert_eq!(view.outcome, Outcome::Pending);
        assert!(view.revealed.is_none());
        let json = serde_json::to_string(&view).unwrap();
        assert!(!json.contains("\"p\"") && !json.contains("\"q\""));

        let receipt = a.vote(&view.battle_id, Vote::A).await.unwrap();
        let winner = receipt.revealed.a.clone();
        assert_eq!(receipt.new_ratings[&winner], 1016.0);
        assert!(view.response_a.starts_with(&winner));
        assert!(a.view(&view.battle_id).unwrap().revealed.is_some());
        assert!(matches!(a.vote(&view.battle_id, Vote::B).await, Err(ArenaError::DoubleVote(_))));
        assert!(matches!(a.vote("nope", Vote::B).await, Err(ArenaError::UnknownBattle(_))));
        assert_eq!(a.leaderboard()[0].agent_id, winner);
    }

    #[tokio::test]
    async fn identical_agents_still_votable() {
        let specs = [spec("p", &["same"]), spec("q", &["same"])];
        let a = Arena::from_specs(&specs, Arc::new(ToolRegistry::with_default_library()), ArenaOptions::default()).unwrap();
        let view = a.start_battle("x").await;
        assert_eq!(view.response_a, view.response_b);
        let b = a.battle(&view.battle_id).unwrap();
        assert_eq!(b.traces.0.record.as_ref().unwrap().conversation, b.traces.1.record.as_ref().unwrap().conversation);
        a.vote(&view.battle_id, Vote::Tie).await.unwrap();
    }

    #[tokio::test]
    async fn chat_keeps_history() {
        let a = arena(&["p", "q"], 0);
        a.chat("s", "one", None).await.unwrap();
        let second = a.chat("s", "two", None).await.unwrap();
        assert_eq!(second.agent_id, "p");
        assert_eq!(second.trace.conversation.messages.len(), 4);
        assert_eq!(a.chat("t", "x", Some("q")).await.unwrap().reply, "q says hi");
        assert!(matches!(a.chat("t", "x", Some("zz")).await, Err(ArenaError::UnknownAgent(_))));
    }
}
