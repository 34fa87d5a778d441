//! Synthetic dialogue generation with three simulated roles.
//!
//! A user model writes an instruction from a few sampled demonstrations, an
//! agent model answers or calls APIs, and an API-simulator model plays the
//! called API. Raw dialogues are then filtered for hallucinated API or
//! parameter names and for unparseable action blocks.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::executor::{format_action, parse_action, AgentAction, DEFAULT_SYSTEM_PROMPT};
use crate::llm::tokens::is_cjk;
use crate::llm::LlmBackend;
use crate::memory::{build_prompt, render_message, render_schema, PromptBundle};
use crate::toolkit::{ToolError, ToolRegistry};
use crate::types::{ApiResult, Conversation, Message, Role, ToolSchema};

const CATALOG_JSON: &str = include_str!("../../data/catalog.json");
const DEMONSTRATIONS_JSON: &str = include_str!("../../data/demonstrations.json");

/// Hard cap on tool calls per generated dialogue.
pub const MAX_AGENT_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceType {
    CommonApi,
    ModelApi,
    ApiAgnostic,
    ApiOrientedQa,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub instance_type: InstanceType,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    HallucinatedName,
    IllegalRequest,
    BackendFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Kept,
    Filtered { reason: FilterReason, detail: String },
}

impl Verdict {
    pub fn is_kept(&self) -> bool {
        matches!(self, Verdict::Kept)
    }

    pub fn reason(&self) -> Option<FilterReason> {
        match self {
            Verdict::Kept => None,
            Verdict::Filtered { reason, .. } => Some(*reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenInstance {
    pub conversation: Conversation,
    pub apis_offered: Vec<ToolSchema>,
    pub instance_type: InstanceType,
    pub language: String,
    pub verdict: Verdict,
}

/// The bundled catalog of invented API schemas.
pub fn synthetic_catalog() -> Vec<ToolSchema> {
    serde_json::from_str(CATALOG_JSON).expect("bundled catalog is valid")
}

pub fn default_demonstrations() -> Vec<Demonstration> {
    serde_json::from_str(DEMONSTRATIONS_JSON).expect("bundled demonstrations are valid")
}

/// `"zh"` when the text contains CJK characters, else `"en"`.
pub fn detect_language(text: &str) -> &'static str {
    if text.chars().any(is_cjk) {
        "zh"
    } else {
        "en"
    }
}

/// Checks every assistant turn of the dialogue against the offered APIs.
/// The first violation in message order decides the reason.
pub fn filter_instance(mut inst: GenInstance, apis: &[ToolSchema]) -> GenInstance {
    inst.verdict = Verdict::Kept;
    for (i, m) in inst.conversation.messages.iter().enumerate() {
        if m.role != Role::Assistant {
            continue;
        }
        let request = match parse_action(&m.content) {
            Err(e) => {
                inst.verdict = Verdict::Filtered {
                    reason: FilterReason::IllegalRequest,
                    detail: format!("message {i}: {e}"),
                };
                return inst;
            }
            Ok(AgentAction::FinalAnswer { .. }) => continue,
            Ok(AgentAction::ToolCall { request, .. }) => request,
        };
        let hallucinated = |detail: String| Verdict::Filtered { reason: FilterReason::HallucinatedName, detail };
        let Some(schema) = apis.iter().find(|s| s.name == request.api_name) else {
            inst.verdict = hallucinated(format!("message {i}: unknown API `{}`", request.api_name));
            return inst;
        };
        if let Some(arg) = request.arguments.keys().find(|a| schema.parameter(a).is_none()) {
            inst.verdict =
                hallucinated(format!("message {i}: `{}` has no parameter `{arg}`", schema.name));
            return inst;
        }
    }
    inst
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub seed: u64,
    pub demos_per_prompt: usize,
    /// APIs offered to the agent per instance, retrieved from the catalog.
    pub apis_per_instance: usize,
    pub max_steps: usize,
    pub demonstrations: Vec<Demonstration>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            demos_per_prompt: 2,
            apis_per_instance: 3,
            max_steps: MAX_AGENT_STEPS,
            demonstrations: default_demonstrations(),
        }
    }
}

/// The three simulated roles.
pub struct Simulators {
    pub user: Arc<dyn LlmBackend>,
    pub agent: Arc<dyn LlmBackend>,
    pub api: Arc<dyn LlmBackend>,
}

fn user_prompt(demos: &[&Demonstration]) -> String {
    let mut p = String::from(
        "You are a user talking to an AI assistant that can call APIs.\nExample requests:\n",
    );
    for d in demos {
        p.push_str("- ");
        p.push_str(&d.text);
        p.push('\n');
    }
    p.push_str("Write one new request in the same style. Reply with the request only.");
    p
}

fn api_prompt(schema: &ToolSchema, action: &str) -> String {
    format!(
        "You are simulating the API below. Reply only with its response.\n{}\nRequest: {action}",
        render_schema(schema)
    )
}

/// Generates `n` dialogues, each passed through [`filter_instance`].
/// Deterministic for deterministic backends and a fixed seed.
pub async fn generate_instances(
    sims: &Simulators,
    apis: &[ToolSchema],
    n: usize,
    config: &GenConfig,
) -> Result<Vec<GenInstance>, ToolError> {
    let registry = ToolRegistry::default();
    registry.register_all(apis.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut by_type: BTreeMap<InstanceType, Vec<&Demonstration>> = BTreeMap::new();
    for d in &config.demonstrations {
        by_type.entry(d.instance_type).or_default().push(d);
    }
    let types: Vec<InstanceType> = by_type.keys().copied().collect();

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let instance_type = types.choose(&mut rng).copied().unwrap_or(InstanceType::ApiAgnostic);
        let mut demos: Vec<&Demonstration> = by_type.get(&instance_type).cloned().unwrap_or_default();
        demos.shuffle(&mut rng);
        demos.truncate(config.demos_per_prompt);
        let raw = generate_one(sims, &registry, format!("gen-{i}"), instance_type, &demos, config).await;
        out.push(match raw {
            Ok(inst) => {
                let offered = inst.apis_offered.clone();
                filter_instance(inst, &offered)
            }
            Err(inst) => inst,
        });
    }
    Ok(out)
}

/// `Err` carries an instance already marked as a backend failure.
async fn generate_one(
    sims: &Simulators,
    registry: &ToolRegistry,
    id: String,
    instance_type: InstanceType,
    demos: &[&Demonstration],
    config: &GenConfig,
) -> Result<GenInstance, GenInstance> {
    let mut inst = GenInstance {
        conversation: Conversation::new(id),
        apis_offered: Vec::new(),
        instance_type,
        language: "en".into(),
        verdict: Verdict::Kept,
    };
    let fail = |mut inst: GenInstance, detail: String| {
        inst.verdict = Verdict::Filtered { reason: FilterReason::BackendFailure, detail };
        inst
    };

    let instruction = match sims.user.generate(&user_prompt(demos)).await {
        Ok(text) => text.trim().to_string(),
        Err(e) => return Err(fail(inst, format!("user simulator: {e}"))),
    };
    inst.language = detect_language(&instruction).to_string();
    inst.conversation.messages.push(Message::user(&instruction));
    if !registry.is_empty() {
        inst.apis_offered = registry
            .retrieve(&instruction, config.apis_per_instance)
            .map_err(|e| fail(inst.clone(), e.to_string()))?
            .into_iter()
            .filter_map(|h| registry.schema(&h.tool_name))
            .collect();
    }

    let mut steps = 0;
    loop {
        let bundle = PromptBundle {
            system_prompt: DEFAULT_SYSTEM_PROMPT.into(),
            api_schemas: inst.apis_offered.clone(),
            current_query: inst.conversation.messages.iter().map(render_message).collect::<Vec<_>>().join("\n"),
            ..PromptBundle::default()
        };
        let prompt = build_prompt(&bundle, sims.agent.config().prompt_budget())
            .map_err(|e| fail(inst.clone(), format!("agent prompt: {e}")))?;
        let output = match sims.agent.generate(&prompt).await {
            Ok(t) => t,
            Err(e) => return Err(fail(inst, format!("agent simulator: {e}"))),
        };
        match parse_action(&output) {
            Ok(AgentAction::FinalAnswer { answer }) => {
                inst.conversation.messages.push(Message::assistant(answer));
                return Ok(inst);
            }
            // Kept verbatim so the filter can flag it.
            Err(_) => {
                inst.conversation.messages.push(Message::assistant(output));
                return Ok(inst);
            }
            Ok(AgentAction::ToolCall { request, .. }) => {
                let result = match inst.apis_offered.iter().find(|s| s.name == request.api_name) {
                    Some(schema) => match sims.api.generate(&api_prompt(schema, &format_action(&request))).await {
                        Ok(payload) => ApiResult::success(&request.api_name, payload),
                        Err(e) => return Err(fail(inst, format!("API simulator: {e}"))),
                    },
                    None => ApiResult::error(&request.api_name, format!("unknown API `{}`", request.api_name)),
                };
                inst.conversation.messages.push(Message::assistant_call(output, request));
                inst.conversation.messages.push(Message::tool(result));
                steps += 1;
                if steps >= config.max_steps {
                    return Ok(inst);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub instances: usize,
    pub kept: usize,
    pub filtered: BTreeMap<FilterReason, usize>,
    pub by_language: BTreeMap<String, usize>,
    pub by_instance_type: BTreeMap<InstanceType, usize>,
    /// Mean user turns per kept dialogue.
    pub avg_turn: f64,
    /// Mean tool calls per user turn over kept dialogues.
    pub avg_step: f64,
}

pub fn dataset_stats(instances: &[GenInstance]) -> DatasetStats {
    let mut stats = DatasetStats {
        instances: instances.len(),
        kept: 0,
        filtered: BTreeMap::new(),
        by_language: BTreeMap::new(),
        by_instance_type: BTreeMap::new(),
        avg_turn: 0.0,
        avg_step: 0.0,
    };
    let (mut turns, mut calls) = (0usize, 0usize);
    for inst in instances {
        match inst.verdict.reason() {
            Some(r) => *stats.filtered.entry(r).or_default() += 1,
            None => {
                stats.kept += 1;
                *stats.by_language.entry(inst.language.clone()).or_default() += 1;
                *stats.by_instance_type.entry(inst.instance_type).or_default() += 1;
                turns += inst.conversation.user_turns();
                calls += inst.conversation.requests().count();
            }
        }
    }
    if stats.kept > 0 {
        stats.avg_turn = turns as f64 / stats.kept as f64;
    }
    if turns > 0 {
        stats.avg_step = calls as f64 / turns as f64;
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedBackend;
    use crate::types::ApiRequest;

    fn inst_with(messages: Vec<Message>) -> GenInstance {
        GenInstance {
            conversation: Conversation::with_messages("t", messages),
            apis_offered: Vec::new(),
            instance_type: InstanceType::CommonApi,
            language: "en".into(),
            verdict: Verdict::Kept,
        }
    }

    fn call(name: &str, args: &[(&str, &str)]) -> Message {
        let req = args.iter().fold(ApiRequest::new(name), |r, (k, v)| r.arg(*k, *v));
        Message::assistant_call(format_action(&req), req)
    }

    #[test]
    fn catalog_has_twenty_valid_schemas() {
        let cat = synthetic_catalog();
        assert_eq!(cat.len(), 20);
        cat.iter().for_each(|s| s.validate().unwrap());
    }

    #[test]
    fn filter_rules() {
        let apis = synthetic_catalog();
        let clean = inst_with(vec![
            Message::user("weather?"),
            call("weather-forecast", &[("city", "Hangzhou")]),
            Message::tool(ApiResult::success("weather-forecast", "sunny")),
            Message::assistant("It will be sunny."),
        ]);
        assert!(filter_instance(clean, &apis).verdict.is_kept());

        let bad_param = inst_with(vec![Message::user("draw"), call("weather-forecast", &[("size", "big")])]);
        assert_eq!(filter_instance(bad_param, &apis).verdict.reason(), Some(FilterReason::HallucinatedName));

        let bad_name = inst_with(vec![Message::user("x"), call("imagine-api", &[])]);
        assert_eq!(filter_instance(bad_name, &apis).verdict.reason(), Some(FilterReason::HallucinatedName));

        let illegal = inst_with(vec![Message::user("x"), Message::assistant("ACTION: {\"api_name\": ")]);
        assert_eq!(filter_instance(illegal, &apis).verdict.reason(), Some(FilterReason::IllegalRequest));
    }

    #[test]
    fn stats_arithmetic() {
        let one = inst_with(vec![Message::user("a"), call("x", &[]), Message::tool(ApiResult::success("x", "")), Message::assistant("ok")]);
        let s = dataset_stats(std::slice::from_ref(&one));
        assert_eq!((s.avg_turn, s.avg_step), (1.0, 1.0));

        let three = inst_with(vec![
            Message::user("a"),
            call("x", &[]),
            Message::tool(ApiResult::success("x", "")),
            call("x", &[]),
            Message::tool(ApiResult::success("x", "")),
            call("x", &[]),
            Message::tool(ApiResult::success("x", "")),
            Message::assistant("ok"),
        ]);
        let s = dataset_stats(&[one.clone(), three]);
        assert_eq!((s.avg_turn, s.avg_step), (1.0, 2.0));

        let mut dropped = one;
        dropped.verdict = Verdict::Filtered { reason: FilterReason::IllegalRequest, detail: String::new() };
        let s = dataset_stats(&[dropped]);
        assert_eq!(s.kept, 0);
        assert_eq!(s.filtered[&FilterReason::IllegalRequest], 1);
        assert_eq!((s.avg_turn, s.avg_step), (0.0, 0.0));
    }

    fn sims(user: &[&str], agent: &[String], api: &[&str]) -> Simulators {
        Simulators {
            user: Arc::new(ScriptedBackend::new(user.iter().copied())),
            agent: Arc::new(ScriptedBackend::new(agent.iter().cloned())),
            api: Arc::new(ScriptedBackend::new(api.iter().copied())),
        }
    }

    #[tokio::test]
    async fn clean_single_call_dialogue() {
        let s = sims(
            &["What is the weather in Hangzhou tomorrow?"],
            &[
                format_action(&ApiRequest::new("weather-forecast").arg("city", "Hangzhou")),
                "Tomorrow will be sunny in Hangzhou.".into(),
            ],
            &["{\"forecast\": \"sunny\"}"],
        );
        let out = generate_instances(&s, &synthetic_catalog(), 1, &GenConfig::default()).await.unwrap();
        assert_eq!(out.len(), 1);
        let inst = &out[0];
        assert!(inst.verdict.is_kept(), "{:?}", inst.verdict);
        assert_eq!(inst.conversation.messages.len(), 4);
        assert!(inst.apis_offered.iter().any(|a| a.name == "weather-forecast"));
        assert_eq!(inst.conversation.messages[2].content, "{\"forecast\": \"sunny\"}");
        inst.conversation.validate().unwrap();
    }

    #[tokio::test]
    async fn hallucinated_and_illegal() {
        let s = sims(
            &["Imagine something", "Call something"],
            &[
                format_action(&ApiRequest::new("imagine-api").arg("text", "x")),
                "I could not do that.".into(),
                "ACTION: {\"api_name\": \"weather-forecast\", ".into(),
            ],
            &[],
        );
        let out = generate_instances(&s, &synthetic_catalog(), 2, &GenConfig::default()).await.unwrap();
        assert_eq!(out[0].verdict.reason(), Some(FilterReason::HallucinatedName));
        assert_eq!(out[1].verdict.reason(), Some(FilterReason::IllegalRequest));
    }

    #[tokio::test]
    async fn backend_failure_is_recorded() {
        let s = sims(&[], &[], &[]);
        let out = generate_instances(&s, &synthetic_catalog(), 1, &GenConfig::default()).await.unwrap();
        assert_eq!(out[0].verdict.reason(), Some(FilterReason::BackendFailure));
    }

    #[tokio::test]
    async fn step_cap() {
        let call = format_action(&ApiRequest::new("weather-forecast").arg("city", "Paris"));
        let s = Simulators {
            user: Arc::new(ScriptedBackend::new(["Weather in Paris?"])),
            agent: Arc::new(ScriptedBackend::new([call]).cycling()),
            api: Arc::new(ScriptedBackend::new(["rain"]).cycling()),
        };
        let out = generate_instances(&s, &synthetic_catalog(), 1, &GenConfig::default()).await.unwrap();
        assert_eq!(out[0].conversation.requests().count(), MAX_AGENT_STEPS);
    }

    #[tokio::test]
    async fn reproducible() {
        let run = || async {
            let s = Simulators {
                user: Arc::new(ScriptedBackend::new(["Weather in Paris?", "写一首诗"]).cycling()),
                agent: Arc::new(ScriptedBackend::new(["Sure."]).cycling()),
                api: Arc::new(ScriptedBackend::new(["x"]).cycling()),
            };
            generate_instances(&s, &synthetic_catalog(), 6, &GenConfig { seed: 7, ..GenConfig::default() })
                .await
                .unwrap()
        };
        let (a, b) = (run().await, run().await);
        assert_eq!(a, b);
        assert!(a.iter().any(|i| i.language == "zh"));
    }
}
