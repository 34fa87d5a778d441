use serde::{Deserialize, Serialize};

use super::MemoryError;
use crate::llm::count_tokens;
use crate::types::{Message, ToolParameter, ToolSchema};

pub const TOOLS_HEADER: &str = "# TOOLS";
pub const KNOWLEDGE_HEADER: &str = "# KNOWLEDGE";
pub const EXAMPLES_HEADER: &str = "# EXAMPLES";
pub const HISTORY_HEADER: &str = "# HISTORY";

/// Everything the prompt generator may draw from. Knowledge and schemas are
/// expected best-ranked first; history oldest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub api_schemas: Vec<ToolSchema>,
    pub knowledge: Vec<String>,
    pub history: Vec<Message>,
    pub few_shot: Vec<String>,
    pub current_query: String,
}

/// A section the budgeter may shrink, one item at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropStep {
    /// Last exemplar first.
    FewShot,
    /// Oldest message first.
    History,
    /// Lowest-ranked chunk first.
    Knowledge,
    /// Lowest-ranked schema first.
    ApiSchemas,
}

/// Order in which sections give up content when the prompt is over budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropPolicy(pub Vec<DropStep>);

impl Default for DropPolicy {
    fn default() -> Self {
        Self(vec![DropStep::FewShot, DropStep::History, DropStep::Knowledge, DropStep::ApiSchemas])
    }
}

#[derive(Serialize)]
struct SchemaView<'a> {
    name: &'a str,
    description: &'a str,
    parameters: &'a [ToolParameter],
}

/// Compact single-line JSON of a schema as shown to the model.
pub fn render_schema(schema: &ToolSchema) -> String {
    serde_json::to_string(&SchemaView {
        name: &schema.name,
        description: &schema.description,
        parameters: &schema.parameters,
    })
    .expect("schema view serializes")
}

pub fn render_message(m: &Message) -> String {
    format!("{}: {}", m.role.as_str(), m.content)
}

/// Views into the bundle that survive budgeting.
#[derive(Clone, Copy)]
struct Kept {
    schemas: usize,
    knowledge: usize,
    few_shot: usize,
    history_from: usize,
}

fn render(b: &PromptBundle, k: Kept) -> String {
    let mut sections: Vec<String> = Vec::new();
    if !b.system_prompt.is_empty() {
        sections.push(b.system_prompt.clone());
    }
    let mut section = |header: &str, items: Vec<String>| {
        if !items.is_empty() {
            sections.push(format!("{header}\n{}", items.join("\n")));
        }
    };
    section(TOOLS_HEADER, b.api_schemas[..k.schemas].iter().map(render_schema).collect());
    section(KNOWLEDGE_HEADER, b.knowledge[..k.knowledge].to_vec());
    section(EXAMPLES_HEADER, b.few_shot[..k.few_shot].to_vec());
    section(HISTORY_HEADER, b.history[k.history_from..].iter().map(render_message).collect());
    sections.push(b.current_query.clone());
    sections.join("\n\n")
}

/// Assembles the prompt under `budget` tokens with the default drop policy.
pub fn build_prompt(bundle: &PromptBundle, budget: usize) -> Result<String, MemoryError> {
    build_prompt_with(bundle, budget, &DropPolicy::default())
}

/// Assembles sections in the fixed order system, tools, knowledge, examples,
/// history, query, then sheds content following `policy` until the prompt
/// fits. The system prompt and query are never dropped.
pub fn build_prompt_with(
    bundle: &PromptBundle,
    budget: usize,
    policy: &DropPolicy,
) -> Result<String, MemoryError> {
    if bundle.current_query.trim().is_empty() {
        return Err(MemoryError::EmptyQuery);
    }
    let required = count_tokens(&bundle.system_prompt) + count_tokens(&bundle.current_query);
    if required > budget {
        return Err(MemoryError::BudgetTooSmall { required, budget });
    }

    let mut kept = Kept {
        schemas: bundle.api_schemas.len(),
        knowledge: bundle.knowledge.len(),
        few_shot: bundle.few_shot.len(),
        history_from: 0,
    };
    let mut text = render(bundle, kept);
    for step in &policy.0 {
        while count_tokens(&text) > budget {
            let dropped = match step {
                DropStep::FewShot => dec(&mut kept.few_shot),
                DropStep::Knowledge => dec(&mut kept.knowledge),
                DropStep::ApiSchemas => dec(&mut kept.schemas),
                DropStep::History if kept.history_from < bundle.history.len() => {
                    kept.history_from += 1;
                    true
                }
                DropStep::History => false,
            };
            if !dropped {
                break;
            }
            text = render(bundle, kept);
        }
    }
    // A policy that omits a step may leave the prompt over budget; finish
    // with the full default order.
    if count_tokens(&text) > budget && policy != &DropPolicy::default() {
        return build_prompt_with(bundle, budget, &DropPolicy::default());
    }
    debug_assert!(count_tokens(&text) <= budget);
    Ok(text)
}

fn dec(n: &mut usize) -> bool {
    if *n == 0 {
        return false;
    }
    *n -= 1;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(prefix: &str, n: usize) -> String {
        (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ")
    }

    fn bundle() -> PromptBundle {
        PromptBundle {
            system_prompt: "You are a helpful agent.".into(),
            api_schemas: vec![ToolSchema::local("t2i", "Converts text to an image.", vec![])],
            knowledge: vec!["the hub hosts models".into()],
            history: vec![Message::user("hi"), Message::assistant("hello")],
            few_shot: vec!["user: x\nassistant: y".into()],
            current_query: "Draw a logo image of agent".into(),
        }
    }

    #[test]
    fn sections_in_order_when_everything_fits() {
        let text = build_prompt(&bundle(), 10_000).unwrap();
        let pos = |needle: &str| text.find(needle).unwrap();
        assert!(text.starts_with("You are a helpful agent."));
        assert!(pos(TOOLS_HEADER) < pos(KNOWLEDGE_HEADER));
        assert!(pos(KNOWLEDGE_HEADER) < pos(EXAMPLES_HEADER));
        assert!(pos(EXAMPLES_HEADER) < pos(HISTORY_HEADER));
        assert!(text.ends_with("Draw a logo image of agent"));
        assert!(text.contains(r#"{"name":"t2i","description":"Converts text to an image.","parameters":[]}"#));
    }

    #[test]
    fn drops_few_shot_then_oldest_history() {
        let b = PromptBundle {
            system_prompt: "sys".into(),
            api_schemas: vec![],
            knowledge: vec![],
            history: vec![
                Message::user(words("a", 9)),
                Message::assistant(words("b", 9)),
                Message::user(words("c", 9)),
            ],
            few_shot: vec![words("f", 20)],
            current_query: "question".into(),
        };
        // 3 history messages of 10 rendered tokens each ("role:" + 9 words).
        assert_eq!(count_tokens(&render_message(&b.history[0])), 10);
        let expected = PromptBundle { few_shot: vec![], history: b.history[1..].to_vec(), ..b.clone() };
        let full = Kept { schemas: 0, knowledge: 0, few_shot: 0, history_from: 0 };
        let budget = count_tokens(&render(&expected, full));
        let text = build_prompt(&b, budget).unwrap();
        assert!(!text.contains("f0"));
        assert!(!text.contains("a0"));
        assert!(text.contains("b0") && text.contains("c0"));
        assert_eq!(count_tokens(&text), budget);
        // one token short also loses the next-oldest message
        let tighter = build_prompt(&b, budget - 1).unwrap();
        assert!(!tighter.contains("b0") && tighter.contains("c0"));
    }

    #[test]
    fn exact_boundary_keeps_only_system_and_query() {
        let b = bundle();
        let budget = count_tokens(&b.system_prompt) + count_tokens(&b.current_query);
        let text = build_prompt(&b, budget).unwrap();
        assert_eq!(text, format!("{}\n\n{}", b.system_prompt, b.current_query));
    }

    #[test]
    fn precondition_violation() {
        let b = bundle();
        let budget = count_tokens(&b.system_prompt) + count_tokens(&b.current_query) - 1;
        assert!(matches!(build_prompt(&b, budget), Err(MemoryError::BudgetTooSmall { .. })));
    }

    #[test]
    fn custom_policy_drops_schemas_first() {
        let mut b = bundle();
        b.api_schemas.push(ToolSchema::local("t2v", "Converts text to a video.", vec![]));
        let policy = DropPolicy(vec![DropStep::ApiSchemas]);
        let all = build_prompt(&b, 10_000).unwrap();
        let budget = count_tokens(&all) - 1;
        let text = build_prompt_with(&b, budget, &policy).unwrap();
        assert!(!text.contains("t2v"));
        assert!(text.contains(EXAMPLES_HEADER));
    }

    fn arb_bundle() -> impl Strategy<Value = PromptBundle> {
        let item = "[a-z]{1,4}( [a-z]{1,4}){0,6}";
        (
            prop::collection::vec(item, 0..4),
            prop::collection::vec(item, 0..4),
            prop::collection::vec(item, 0..5),
            prop::collection::vec(item, 0..3),
            item,
        )
            .prop_map(|(schemas, knowledge, history, few_shot, query)| PromptBundle {
                system_prompt: "system prompt".into(),
                api_schemas: schemas
                    .into_iter()
                    .enumerate()
                    .map(|(i, d)| ToolSchema::local(format!("t{i}"), d, vec![]))
                    .collect(),
                knowledge,
                history: history
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| if i % 2 == 0 { Message::user(c) } else { Message::assistant(c) })
                    .collect(),
                few_shot,
                current_query: query,
            })
    }

    proptest! {
        #[test]
        fn never_exceeds_budget(b in arb_bundle(), extra in 0usize..120) {
            let floor = count_tokens(&b.system_prompt) + count_tokens(&b.current_query);
            let text = build_prompt(&b, floor + extra).unwrap();
            prop_assert!(count_tokens(&text) <= floor + extra);
            prop_assert_eq!(&text, &build_prompt(&b, floor + extra).unwrap());
        }

        #[test]
        fn larger_budget_keeps_at_least_as_much(b in arb_bundle(), extra in 0usize..100, more in 1usize..40) {
            let floor = count_tokens(&b.system_prompt) + count_tokens(&b.current_query);
            let small = build_prompt(&b, floor + extra).unwrap();
            let large = build_prompt(&b, floor + extra + more).unwrap();
            for line in small.lines() {
                prop_assert!(large.lines().any(|l| l == line), "line {:?} lost", line);
            }
        }
    }
}
