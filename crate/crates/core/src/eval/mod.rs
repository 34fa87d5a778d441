//! Automatic evaluation: Action EM, Argument F1 and ROUGE-L over an
//! annotated test set of conversations.
//!
//! Gold and predicted conversations are paired by id. Within a pair, the
//! n-th gold assistant turn is compared with the n-th predicted assistant
//! turn. Gold turns that carry a request feed Action EM and Argument F1; plain
//! gold turns feed ROUGE-L. Missing predicted turns score zero, and surplus
//! predicted turns are reported but do not change any score.

pub mod metrics;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{Agent, AgentError};
use crate::types::{parse_conversation, serialize_conversation, Conversation, ConversationError, Role};

pub use self::metrics::{
    action_em, argument_f1, lcs_len, rouge_l, rouge_l_tokens, values_match, ArgMatchCounts,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ConversationError },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("duplicate conversation id `{0}`")]
    DuplicateId(String),
    #[error("conversation ids do not align: missing predictions for {missing:?}, unexpected predictions {unexpected:?}")]
    IdMismatch { missing: Vec<String>, unexpected: Vec<String> },
}

/// How Argument F1 is aggregated across requests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Averaging {
    /// Mean of per-request F1.
    #[default]
    Macro,
    /// F1 of the pooled half/full match counts.
    Micro,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConversationScore {
    pub id: String,
    pub gold_requests: usize,
    pub gold_answers: usize,
    pub em_hits: usize,
    pub f1_sum: f64,
    pub rouge_sum: f64,
    pub counts: ArgMatchCounts,
    /// Gold assistant turns with no predicted counterpart.
    pub missing_turns: usize,
    /// Predicted assistant turns beyond the gold ones that carry a request.
    pub extra_requests: usize,
    pub length_mismatch: bool,
}

/// Aggregate scores in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub action_em: f64,
    pub argument_f1: f64,
    pub rouge_l: f64,
    pub averaging: F1Averaging,
    pub conversations: usize,
    pub request_turns: usize,
    pub answer_turns: usize,
    pub per_conversation: Vec<ConversationScore>,
}

fn percent(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * sum / n as f64
    }
}

fn score_pair(gold: &Conversation, pred: &Conversation) -> ConversationScore {
    let gold_turns: Vec<_> = gold.messages.iter().filter(|m| m.role == Role::Assistant).collect();
    let pred_turns: Vec<_> = pred.messages.iter().filter(|m| m.role == Role::Assistant).collect();
    let mut s = ConversationScore {
        id: gold.id.clone(),
        length_mismatch: gold_turns.len() != pred_turns.len(),
        ..ConversationScore::default()
    };
    for (i, g) in gold_turns.iter().enumerate() {
        let p = pred_turns.get(i);
        if p.is_none() {
            s.missing_turns += 1;
        }
        match &g.request {
            Some(gold_req) => {
                s.gold_requests += 1;
                match p.and_then(|p| p.request.as_ref()) {
                    Some(pred_req) => {
                        s.em_hits += action_em(gold_req, pred_req) as usize;
                        let c = ArgMatchCounts::of(gold_req, pred_req);
                        s.f1_sum += c.f1();
                        s.counts.accumulate(&c);
                    }
                    None => s.counts.gold_count += gold_req.arguments.len(),
                }
            }
            None => {
                s.gold_answers += 1;
                if let Some(p) = p {
                    s.rouge_sum += rouge_l(&g.content, &p.content);
                }
            }
        }
    }
    s.extra_requests = pred_turns.iter().skip(gold_turns.len()).filter(|m| m.request.is_some()).count();
    s
}

fn index_by_id(convs: &[Conversation]) -> Result<BTreeMap<&str, &Conversation>, EvalError> {
    let mut map = BTreeMap::new();
    for c in convs {
        if map.insert(c.id.as_str(), c).is_some() {
            return Err(EvalError::DuplicateId(c.id.clone()));
        }
    }
    Ok(map)
}

pub fn evaluate(test_set: &[Conversation], predictions: &[Conversation]) -> Result<EvalReport, EvalError> {
    evaluate_with(test_set, predictions, F1Averaging::Macro)
}

/// Scores `predictions` against `test_set`. Conversations are processed in id
/// order, so the result does not depend on input order.
pub fn evaluate_with(
    test_set: &[Conversation],
    predictions: &[Conversation],
    averaging: F1Averaging,
) -> Result<EvalReport, EvalError> {
    let gold = index_by_id(test_set)?;
    let pred = index_by_id(predictions)?;
    let gold_ids: BTreeSet<_> = gold.keys().copied().collect();
    let pred_ids: BTreeSet<_> = pred.keys().copied().collect();
    if gold_ids != pred_ids {
        return Err(EvalError::IdMismatch {
            missing: gold_ids.difference(&pred_ids).map(|s| s.to_string()).collect(),
            unexpected: pred_ids.difference(&gold_ids).map(|s| s.to_string()).collect(),
        });
    }

    let per_conversation: Vec<ConversationScore> =
        gold.iter().map(|(id, g)| score_pair(g, pred[id])).collect();

    let requests: usize = per_conversation.iter().map(|s| s.gold_requests).sum();
    let answers: usize = per_conversation.iter().map(|s| s.gold_answers).sum();
    let em_hits: usize = per_conversation.iter().map(|s| s.em_hits).sum();
    let rouge_sum: f64 = per_conversation.iter().map(|s| s.rouge_sum).sum();
    let argument_f1 = match averaging {
        F1Averaging::Macro => percent(per_conversation.iter().map(|s| s.f1_sum).sum(), requests),
        F1Averaging::Micro => {
            let mut pooled = ArgMatchCounts::default();
            per_conversation.iter().for_each(|s| pooled.accumulate(&s.counts));
            if requests == 0 {
                0.0
            } else {
                100.0 * pooled.f1()
            }
        }
    };

    Ok(EvalReport {
        action_em: percent(em_hits as f64, requests),
        argument_f1,
        rouge_l: percent(rouge_sum, answers),
        averaging,
        conversations: per_conversation.len(),
        request_turns: requests,
        answer_turns: answers,
        per_conversation,
    })
}

/// Reads one conversation per non-blank line.
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<Conversation>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_conversation(&line).map_err(|source| EvalError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn load_jsonl(path: &Path) -> Result<Vec<Conversation>, EvalError> {
    let file = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(file))
}

pub fn write_jsonl(mut w: impl Write, convs: &[Conversation]) -> std::io::Result<()> {
    for c in convs {
        writeln!(w, "{}", serialize_conversation(c))?;
    }
    Ok(())
}

/// Produces a prediction for `gold` by feeding its user turns to `agent` one
/// at a time. Leading system turns are kept; everything else in the history
/// is the agent's own output.
pub async fn predict(agent: &Agent, gold: &Conversation) -> Result<Conversation, AgentError> {
    let mut conv = Conversation::with_messages(
        gold.id.clone(),
        gold.messages.iter().take_while(|m| m.role == Role::System).cloned().collect(),
    );
    for m in gold.messages.iter().filter(|m| m.role == Role::User) {
        conv = agent.run_with_history(conv, &m.content).await?.conversation;
    }
    Ok(conv)
}
