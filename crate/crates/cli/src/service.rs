//! JSON-over-HTTP front for an [`Arena`], the contract the web UI talks to.
//!
//! | route | body | reply |
//! |---|---|---|
//! | `POST /api/battles` | `{instruction}` | `{battle_id, instruction, response_a, response_b, outcome}` |
//! | `GET /api/battles/{id}` | | same, plus `revealed` once voted |
//! | `POST /api/battles/{id}/vote` | `{outcome: "a" \| "b" \| "tie"}` | `{battle_id, outcome, revealed: {a, b}, new_ratings}` |
//! | `GET /api/leaderboard` | | `[{agent_id, rating, games}]`, best first |
//! | `POST /api/chat` | `{session_id, message, agent_id?}` | `{session_id, agent_id, reply, trace}` |
//! | `GET /api/agents` | | `[{id, model_name}]` |
//!
//! Errors come back as `{"error": "..."}` with 400, 404 or 409.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use toolagent_core::arena::{AgentSpec, Arena, ArenaError, BattleView, ChatReply, LeaderboardEntry, Vote, VoteReceipt};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentInfo {
    pub id: String,
    pub model_name: String,
}

impl From<&AgentSpec> for AgentInfo {
    fn from(spec: &AgentSpec) -> Self {
        Self { id: spec.id.clone(), model_name: spec.llm.model_name.clone() }
    }
}

#[derive(Debug, Deserialize)]
pub struct BattleRequest {
    pub instruction: String,
}

#[derive(Debug, Deserialize)]
pub struct VoteRequest {
    pub outcome: Vote,
}

#[derive(Debug, Deserialize)]
pub struct ChatRequest {
    pub session_id: String,
    pub message: String,
    #[serde(default)]
    pub agent_id: Option<String>,
}

#[derive(Clone)]
pub struct ArenaService {
    arena: Arc<Arena>,
    agents: Arc<Vec<AgentInfo>>,
}

impl ArenaService {
    pub fn new(arena: Arena, agents: Vec<AgentInfo>) -> Self {
        Self { arena: Arc::new(arena), agents: Arc::new(agents) }
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn router(self) -> Router {
        Router::new()
            .route("/api/battles", post(start_battle))
            .route("/api/battles/{id}", get(get_battle))
            .route("/api/battles/{id}/vote", post(vote))
            .route("/api/leaderboard", get(leaderboard))
            .route("/api/chat", post(chat))
            .route("/api/agents", get(agents))
            .with_state(self)
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<ArenaError> for ApiError {
    fn from(e: ArenaError) -> Self {
        let status = match e {
            ArenaError::UnknownBattle(_) | ArenaError::UnknownAgent(_) => StatusCode::NOT_FOUND,
            ArenaError::DoubleVote(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn bad_request(message: &str) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, message.to_string())
}

async fn start_battle(
    State(s): State<ArenaService>,
    Json(req): Json<BattleRequest>,
) -> Result<Json<BattleView>, ApiError> {
    if req.instruction.trim().is_empty() {
        return Err(bad_request("instruction is empty"));
    }
    Ok(Json(s.arena.start_battle(&req.instruction).await))
}

async fn get_battle(State(s): State<ArenaService>, Path(id): Path<String>) -> Result<Json<BattleView>, ApiError> {
    Ok(Json(s.arena.view(&id)?))
}

async fn vote(
    State(s): State<ArenaService>,
    Path(id): Path<String>,
    Json(req): Json<VoteRequest>,
) -> Result<Json<VoteReceipt>, ApiError> {
    Ok(Json(s.arena.vote(&id, req.outcome).await?))
}

async fn leaderboard(State(s): State<ArenaService>) -> Json<Vec<LeaderboardEntry>> {
    Json(s.arena.leaderboard())
}

async fn chat(State(s): State<ArenaService>, Json(req): Json<ChatRequest>) -> Result<Json<ChatReply>, ApiError> {
    if req.message.trim().is_empty() {
        return Err(bad_request("message is empty"));
    }
    Ok(Json(s.arena.chat(&req.session_id, &req.message, req.agent_id.as_deref()).await?))
}

async fn agents(State(s): State<ArenaService>) -> Json<Vec<AgentInfo>> {
    Json(s.agents.as_ref().clone())
}
