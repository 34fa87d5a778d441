//! Action grammar shared by the executor, the training mask and the data
//! generator.
//!
//! A tool call is a line starting with `ACTION:` followed by a JSON object
//! `{"api_name": "...", "parameters": {...}}`. Prose may precede the block.
//! Output without an `ACTION:` line is a final answer.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::types::{ApiRequest, Arguments};

pub const ACTION_MARKER: &str = "ACTION:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentAction {
    ToolCall {
        request: ApiRequest,
        /// Text before the action block, trimmed.
        prose: String,
        /// Verbatim model output.
        raw: String,
        /// Byte range of the action block (marker through closing brace) in `raw`.
        span: (usize, usize),
    },
    FinalAnswer {
        answer: String,
    },
}

impl AgentAction {
    pub fn request(&self) -> Option<&ApiRequest> {
        match self {
            AgentAction::ToolCall { request, .. } => Some(request),
            AgentAction::FinalAnswer { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed action block at byte {offset}: {reason} (in `{span}`)")]
pub struct ActionParseError {
    pub offset: usize,
    pub span: String,
    pub reason: String,
}

/// Byte offset of the first line that starts (after indentation) with the marker.
fn find_marker(text: &str) -> Option<usize> {
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let indent = line.len() - line.trim_start().len();
        if line[indent..].starts_with(ACTION_MARKER) {
            return Some(line_start + indent);
        }
        line_start += line.len();
    }
    None
}

fn value_to_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Locates and parses the action block, if any.
///
/// `Ok(None)` means no marker line exists. The returned span covers the
/// marker through the end of the JSON object.
pub fn find_action_block(
    text: &str,
) -> Result<Option<(ApiRequest, (usize, usize))>, ActionParseError> {
    let Some(start) = find_marker(text) else {
        return Ok(None);
    };
    let after_marker = start + ACTION_MARKER.len();
    let body = &text[after_marker..];
    let json_start = after_marker + (body.len() - body.trim_start().len());
    let fail = |reason: String| {
        let line_end = text[start..].find('\n').map_or(text.len(), |i| start + i);
        ActionParseError { offset: start, span: text[start..line_end].to_string(), reason }
    };

    let mut stream = serde_json::Deserializer::from_str(&text[json_start..]).into_iter::<Value>();
    let value = match stream.next() {
        Some(Ok(v)) => v,
        Some(Err(e)) => return Err(fail(format!("invalid JSON: {e}"))),
        None => return Err(fail("missing JSON object after marker".into())),
    };
    let end = json_start + stream.byte_offset();
    let Value::Object(obj) = value else {
        return Err(fail("action body is not a JSON object".into()));
    };
    let api_name = match obj.get("api_name") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        _ => return Err(fail("`api_name` must be a non-empty string".into())),
    };
    let arguments: Arguments = match obj.get("parameters") {
        None | Some(Value::Null) => Arguments::new(),
        Some(Value::Object(params)) => {
            params.iter().map(|(k, v)| (k.clone(), value_to_string(v))).collect()
        }
        Some(_) => return Err(fail("`parameters` must be a JSON object".into())),
    };
    Ok(Some((ApiRequest { api_name, arguments }, (start, end))))
}

/// Classifies raw model output as a tool call or a final answer.
pub fn parse_action(llm_output: &str) -> Result<AgentAction, ActionParseError> {
    match find_action_block(llm_output)? {
        Some((request, span)) => Ok(AgentAction::ToolCall {
            request,
            prose: llm_output[..span.0].trim().to_string(),
            raw: llm_output.to_string(),
            span,
        }),
        None => Ok(AgentAction::FinalAnswer { answer: llm_output.to_string() }),
    }
}

/// Canonical serialization of a request as an action block.
pub fn format_action(req: &ApiRequest) -> String {
    let params: Map<String, Value> =
        req.arguments.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    format!("{ACTION_MARKER} {}", json!({"api_name": req.api_name, "parameters": params}))
}

/// Assistant content for a tool-calling turn: optional prose, then the block.
pub fn format_call(prose: &str, req: &ApiRequest) -> String {
    if prose.is_empty() {
        format_action(req)
    } else {
        format!("{prose}\n{}", format_action(req))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tool_call() {
        let out = r#"ACTION: {"api_name":"text-to-image","parameters":{"text":"cat"}}"#;
        match parse_action(out).unwrap() {
            AgentAction::ToolCall { request, prose, span, .. } => {
                assert_eq!(request, ApiRequest::new("text-to-image").arg("text", "cat"));
                assert!(prose.is_empty());
                assert_eq!(span, (0, out.len()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn prose_is_preserved() {
        let out = "I will draw it.\nACTION: {\"api_name\": \"t\", \"parameters\": {\"n\": 3, \"x\": true}}\n";
        let AgentAction::ToolCall { request, prose, raw, span } = parse_action(out).unwrap() else {
            panic!()
        };
        assert_eq!(prose, "I will draw it.");
        assert_eq!(raw, out);
        assert_eq!(&out[span.0..span.1], "ACTION: {\"api_name\": \"t\", \"parameters\": {\"n\": 3, \"x\": true}}");
        assert_eq!(request.arguments["n"], "3");
        assert_eq!(request.arguments["x"], "true");
    }

    #[test]
    fn plain_text_is_final() {
        let out = "The capital of France is Paris.";
        assert_eq!(parse_action(out).unwrap(), AgentAction::FinalAnswer { answer: out.into() });
        // the marker only counts at the start of a line
        let inline = "Use ACTION: {broken to call tools";
        assert!(matches!(parse_action(inline).unwrap(), AgentAction::FinalAnswer { .. }));
    }

    #[test]
    fn broken_json() {
        let err = parse_action("ACTION: {broken").unwrap_err();
        assert_eq!(err.offset, 0);
        assert_eq!(err.span, "ACTION: {broken");
    }

    #[test]
    fn structural_errors() {
        assert!(parse_action("ACTION: [1,2]").is_err());
        assert!(parse_action(r#"ACTION: {"parameters":{}}"#).is_err());
        assert!(parse_action(r#"ACTION: {"api_name":"x","parameters":[]}"#).is_err());
        assert!(parse_action("ACTION:").is_err());
    }

    #[test]
    fn canonical_format() {
        let req = ApiRequest::new("renew-ecs").arg("period", "1").arg("instance_id", "i-123");
        assert_eq!(
            format_action(&req),
            r#"ACTION: {"api_name":"renew-ecs","parameters":{"instance_id":"i-123","period":"1"}}"#
        );
    }

    proptest! {
        #[test]
        fn format_then_parse(
            name in "[a-z][a-z0-9-]{0,12}",
            args in prop::collection::btree_map("[a-z_]{1,8}", "\\PC{0,12}", 0..5),
            prose in "([A-Za-z ,.]{0,30})",
        ) {
            let req = ApiRequest { api_name: name, arguments: args };
            let text = format_call(prose.trim(), &req);
            let action = parse_action(&text).unwrap();
            prop_assert_eq!(action.request(), Some(&req));
        }
    }
}
