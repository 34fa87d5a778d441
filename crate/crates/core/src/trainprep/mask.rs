//! Per-token loss weights for weighted-LM fine-tuning.
//!
//! User, system and tool-result tokens get weight 0, ordinary assistant text
//! gets 1, and the whole action block of a tool-calling assistant turn gets 2.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::find_action_block;
use crate::llm::tokens::tokenize;
use crate::types::{Conversation, Role};

pub const WEIGHT_IGNORED: u8 = 0;
pub const WEIGHT_TEXT: u8 = 1;
pub const WEIGHT_ACTION: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub id: String,
    pub tokens: Vec<String>,
    pub weights: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("message {index} calls a tool but its content has no parseable action block{detail}")]
    MissingActionBlock { index: usize, detail: String },
}

impl WeightedSample {
    fn push_segment(&mut self, text: &str, weight: u8) {
        for tok in tokenize(text) {
            self.tokens.push(tok.to_string());
            self.weights.push(weight);
        }
    }

    /// Token count per weight value 0, 1, 2.
    pub fn histogram(&self) -> [usize; 3] {
        let mut h = [0; 3];
        for w in &self.weights {
            h[usize::from(*w)] += 1;
        }
        h
    }
}

pub fn weight_mask(conv: &Conversation) -> Result<WeightedSample, MaskError> {
    let mut sample = WeightedSample { id: conv.id.clone(), tokens: Vec::new(), weights: Vec::new() };
    for (index, m) in conv.messages.iter().enumerate() {
        match m.role {
            Role::System | Role::User | Role::Tool => sample.push_segment(&m.content, WEIGHT_IGNORED),
            Role::Assistant if m.request.is_none() => sample.push_segment(&m.content, WEIGHT_TEXT),
            Role::Assistant => {
                let (start, end) = match find_action_block(&m.content) {
                    Ok(Some((_, span))) => span,
                    Ok(None) => return Err(MaskError::MissingActionBlock { index, detail: String::new() }),
                    Err(e) => {
                        return Err(MaskError::MissingActionBlock { index, detail: format!(": {e}") })
                    }
                };
                sample.push_segment(&m.content[..start], WEIGHT_TEXT);
                sample.push_segment(&m.content[start..end], WEIGHT_ACTION);
                sample.push_segment(&m.content[end..], WEIGHT_TEXT);
            }
        }
    }
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ApiRequest, ApiResult, Message};

    #[test]
    fn worked_example() {
        // the action block below is exactly four whitespace tokens
        let block = r#"ACTION: {"api_name": "text-to-image", "parameters":{"text":"cat"}}"#;
        assert_eq!(tokenize(block).len(), 4);
        let conv = Conversation::with_messages(
            "w",
            vec![
                Message::user("please draw"),
                Message::assistant_call(
                    format!("ok\n{block}"),
                    ApiRequest::new("text-to-image").arg("text", "cat"),
                ),
                Message::tool(ApiResult::success("text-to-image", "image at url")),
                Message::assistant("done here"),
            ],
        );
        let s = weight_mask(&conv).unwrap();
        assert_eq!(s.weights, [0, 0, 1, 2, 2, 2, 2, 0, 0, 0, 1, 1]);
        assert_eq!(s.tokens.len(), s.weights.len());
        assert_eq!(s.tokens[2], "ok");
    }

    #[test]
    fn no_tool_calls_means_no_twos() {
        let conv = Conversation::with_messages(
            "p",
            vec![Message::system("be nice"), Message::user("hi there"), Message::assistant("hello friend")],
        );
        let s = weight_mask(&conv).unwrap();
        assert_eq!(s.weights, [0, 0, 0, 0, 1, 1]);
        assert_eq!(s.histogram(), [4, 2, 0]);
    }

    #[test]
    fn empty_assistant_content() {
        let conv = Conversation::with_messages("e", vec![Message::user("hi"), Message::assistant("")]);
        let s = weight_mask(&conv).unwrap();
        assert_eq!(s.weights, [0]);
    }

    #[test]
    fn trailing_text_after_block_is_weight_one() {
        let conv = Conversation::with_messages(
            "t",
            vec![
                Message::user("go"),
                Message::assistant_call(r#"ACTION: {"api_name":"x","parameters":{}} then wait"#, ApiRequest::new("x")),
            ],
        );
        assert_eq!(weight_mask(&conv).unwrap().weights, [0, 2, 2, 1, 1]);
    }

    #[test]
    fn call_without_block_is_an_error() {
        let conv = Conversation::with_messages(
            "b",
            vec![Message::user("go"), Message::assistant_call("I will call x", ApiRequest::new("x"))],
        );
        assert!(matches!(weight_mask(&conv), Err(MaskError::MissingActionBlock { index: 1, .. })));
        let conv = Conversation::with_messages(
            "b",
            vec![Message::user("go"), Message::assistant_call("ACTION: {oops", ApiRequest::new("x"))],
        );
        assert!(weight_mask(&conv).is_err());
    }
}
