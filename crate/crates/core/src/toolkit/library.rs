//! Default tool library. Each tool is a local mock that returns a canned,
//! argument-dependent payload instead of calling a hosted model.

use crate::types::{Arguments, ToolParameter, ToolSchema};

use super::ToolRegistry;

struct Spec {
    name: &'static str,
    description: &'static str,
    params: &'static [(&'static str, &'static str, bool)],
    kind: Mock,
}

#[derive(Clone, Copy)]
enum Mock {
    /// Returns a fake media URL derived from the arguments.
    Media(&'static str),
    /// Returns a fixed-template text result.
    Text(&'static str),
}

const TEXT: &[(&str, &str, bool)] = &[("text", "input text", true)];

const DEFAULT_TOOLS: &[Spec] = &[
    Spec { name: "text-to-image", description: "Converts English text to an image.", params: TEXT, kind: Mock::Media("png") },
    Spec { name: "text-to-image-zh", description: "Converts Chinese text to an image. 文本生成图片", params: TEXT, kind: Mock::Media("png") },
    Spec { name: "text-to-video", description: "Converts English text to a video.", params: TEXT, kind: Mock::Media("mp4") },
    Spec { name: "text-to-audio", description: "Converts English text to audio speech.", params: TEXT, kind: Mock::Media("wav") },
    Spec { name: "text-to-audio-zh", description: "Converts Chinese text to audio speech. 语音合成", params: TEXT, kind: Mock::Media("wav") },
    Spec {
        name: "image-chat",
        description: "Image chat: answers questions about an image.",
        params: &[("image", "image URL", true), ("text", "question about the image", true)],
        kind: Mock::Text("The image shows: {text}"),
    },
    Spec { name: "translation-zh2en", description: "Translates text, Chinese-to-English translation.", params: TEXT, kind: Mock::Text("[en] {text}") },
    Spec { name: "translation-en2zh", description: "Translates text, English-to-Chinese translation.", params: TEXT, kind: Mock::Text("[zh] {text}") },
    Spec {
        name: "universal-ie-zh",
        description: "Extracts structured information from Chinese text. 信息抽取",
        params: &[("text", "input text", true), ("schema", "extraction schema", false)],
        kind: Mock::Text("{\"extracted\": \"{text}\"}"),
    },
    Spec { name: "text-to-geographic-zh", description: "Extracts geographic information from Chinese text. 地址解析", params: TEXT, kind: Mock::Text("{\"location\": \"{text}\"}") },
    Spec { name: "ner-zh", description: "Recognizes named entities in Chinese text. 命名实体识别", params: TEXT, kind: Mock::Text("{\"entities\": [\"{text}\"]}") },
    Spec {
        name: "api-retrieval",
        description: "Retrieves relevant APIs for a task description.",
        params: &[("query", "task description", true)],
        kind: Mock::Text("relevant apis for: {query}"),
    },
    Spec {
        name: "hub-docs-retrieval",
        description: "Retrieves model hub documentation passages.",
        params: &[("query", "search query", true)],
        kind: Mock::Text("docs matching: {query}"),
    },
];

fn render(kind: Mock, name: &str, args: &Arguments) -> String {
    match kind {
        Mock::Media(ext) => {
            let joined: Vec<String> = args.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let digest = joined.join("&").bytes().fold(0u32, |h, b| h.wrapping_mul(31).wrapping_add(u32::from(b)));
            format!("{{\"result\": \"mock://{name}/{digest:08x}.{ext}\"}}")
        }
        Mock::Text(template) => args
            .iter()
            .fold(template.to_string(), |acc, (k, v)| acc.replace(&format!("{{{k}}}"), v)),
    }
}

/// Schemas of the default library, in registration order.
pub fn default_schemas() -> Vec<ToolSchema> {
    DEFAULT_TOOLS.iter().map(schema_of).collect()
}

fn schema_of(spec: &Spec) -> ToolSchema {
    let params = spec
        .params
        .iter()
        .map(|(n, d, req)| ToolParameter { name: n.to_string(), description: d.to_string(), required: *req })
        .collect();
    ToolSchema::local(spec.name, spec.description, params)
}

/// Installs handlers and registers the schema of every default tool.
pub fn install(reg: &ToolRegistry) {
    install_handlers(reg);
    for spec in DEFAULT_TOOLS {
        reg.register(schema_of(spec)).expect("default schemas are valid");
    }
}

/// Installs only the local handlers, so manifests may reference them by id.
pub fn install_handlers(reg: &ToolRegistry) {
    for spec in DEFAULT_TOOLS {
        let (name, kind) = (spec.name, spec.kind);
        reg.register_handler(name, move |args: &Arguments| Ok(render(kind, name, args)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ApiRequest;

    #[test]
    fn library_is_valid_and_retrievable() {
        let reg = ToolRegistry::with_default_library();
        assert_eq!(reg.len(), DEFAULT_TOOLS.len());
        let hits = reg.retrieve("English-to-Chinese translation please", 3).unwrap();
        assert_eq!(hits[0].tool_name, "translation-en2zh");
    }

    #[tokio::test]
    async fn mocks_are_deterministic() {
        let reg = ToolRegistry::with_default_library();
        let req = ApiRequest::new("text-to-image").arg("text", "a cat");
        let a = reg.execute(&req).await.unwrap();
        let b = reg.execute(&req).await.unwrap();
        assert!(a.is_success());
        assert_eq!(a, b);
        assert!(a.payload.starts_with("{\"result\": \"mock://text-to-image/"));

        let t = reg.execute(&ApiRequest::new("translation-en2zh").arg("text", "hello")).await.unwrap();
        assert_eq!(t.payload, "[zh] hello");
    }
}
