//! One function per subcommand. Each validates its settings, does the work,
//! and only then writes output files, so a failure leaves no partial output.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use serde::{de::DeserializeOwned, Deserialize};

use toolagent_core::arena::{AgentSpec, Arena, ArenaOptions, EloConfig};
use toolagent_core::eval::{evaluate_with, load_jsonl};
use toolagent_core::executor::Agent;
use toolagent_core::llm::{HttpBackend, LlmBackend, LlmConfig, ScriptedBackend};
use toolagent_core::memory::{ChunkingConfig, KnowledgeStore};
use toolagent_core::toolkit::{load_manifest, HashEmbedder, ToolRegistry};
use toolagent_core::trainprep::{dataset_stats, generate_instances, synthetic_catalog, weight_mask, GenConfig, Simulators};
use toolagent_core::types::ToolSchema;

use crate::config::{DatagenArgs, EvalArgs, FileConfig, ListFormat, MaskgenArgs, RunArgs, ServeArenaArgs, ToolsSection};
use crate::service::{AgentInfo, ArenaService};
use crate::{required, usage, write_json_atomic, write_jsonl_atomic, CliError};

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{what} {} is not valid", path.display()))
}

/// The default library plus any tools from `manifest`.
fn registry(manifest: Option<&Path>) -> anyhow::Result<ToolRegistry> {
    let reg = ToolRegistry::with_default_library();
    if let Some(path) = manifest {
        reg.register_all(load_manifest(path)?)?;
    }
    Ok(reg)
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub async fn run(args: RunArgs, file: &FileConfig) -> Result<(), CliError> {
    let args = args.overlay(file);
    let query = required(args.query, "query", "run")?;
    let llm = args.llm.to_config();
    llm.validate().map_err(|e| usage(e.to_string()))?;
    let spec = required(args.backend, "backend", "run")?;
    let backend: Arc<dyn LlmBackend> = match spec.split_once(':') {
        Some(("scripted", path)) => {
            let script: Vec<String> = read_json(Path::new(path), "script")?;
            Arc::new(ScriptedBackend::new(script).with_config(llm))
        }
        Some(("http", url)) => {
            let llm = LlmConfig { endpoint: Some(url.to_string()), ..llm };
            Arc::new(HttpBackend::new(url, llm))
        }
        _ => return Err(usage(format!("--backend must be scripted:FILE or http:URL, got `{spec}`"))),
    };

    let tools = registry(args.tools.as_deref())?;
    let mut agent = Agent::new(backend, Arc::new(tools)).with_config(args.agent.to_config());
    if let Some(dir) = &args.knowledge_dir {
        let mut store = KnowledgeStore::new(ChunkingConfig::default(), Arc::new(HashEmbedder::default()));
        store.ingest_dir(dir).with_context(|| format!("cannot load knowledge from {}", dir.display()))?;
        agent = agent.with_knowledge(Arc::new(store));
    }

    let record = agent.run(&query).await.context("agent run failed")?;
    if let Some(out) = &args.trace {
        write_json_atomic(out, &record).with_context(|| format!("cannot write {}", out.display()))?;
    }
    println!("{}", record.final_answer().unwrap_or_default());
    Ok(())
}

pub fn eval(args: EvalArgs, file: &FileConfig) -> Result<(), CliError> {
    let args = args.overlay(file);
    let gold_path = required(args.gold, "gold", "eval")?;
    let pred_path = required(args.pred, "pred", "eval")?;
    let gold = load_jsonl(&gold_path).with_context(|| format!("cannot load gold set {}", gold_path.display()))?;
    let pred = load_jsonl(&pred_path).with_context(|| format!("cannot load predictions {}", pred_path.display()))?;
    let averaging = args.averaging.map(Into::into).unwrap_or_default();
    let report = evaluate_with(&gold, &pred, averaging).context("evaluation failed")?;
    if let Some(out) = &args.out {
        write_json_atomic(out, &report).with_context(|| format!("cannot write {}", out.display()))?;
    }
    print_json(&serde_json::json!({
        "action_em": report.action_em,
        "argument_f1": report.argument_f1,
        "rouge_l": report.rouge_l,
        "averaging": report.averaging,
        "conversations": report.conversations,
        "request_turns": report.request_turns,
        "answer_turns": report.answer_turns,
    }))?;
    Ok(())
}

/// Canned outputs for the three datagen simulators.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulatorScript {
    user: Vec<String>,
    agent: Vec<String>,
    api: Vec<String>,
}

fn scripted(outputs: Vec<String>) -> Arc<dyn LlmBackend> {
    Arc::new(ScriptedBackend::new(outputs).cycling())
}

fn http(url: String) -> Arc<dyn LlmBackend> {
    let config = LlmConfig { endpoint: Some(url.clone()), ..LlmConfig::default() };
    Arc::new(HttpBackend::new(url, config))
}

pub async fn datagen(args: DatagenArgs, file: &FileConfig) -> Result<(), CliError> {
    let args = args.overlay(file);
    let n = required(args.n, "n", "datagen")?;
    let out = required(args.out, "out", "datagen")?;
    let sims = match args.script {
        Some(path) => {
            let s: SimulatorScript = read_json(&path, "simulator script")?;
            if s.user.is_empty() || s.agent.is_empty() || s.api.is_empty() {
                return Err(anyhow::anyhow!("simulator script {} needs outputs for user, agent and api", path.display()).into());
            }
            Simulators { user: scripted(s.user), agent: scripted(s.agent), api: scripted(s.api) }
        }
        None => Simulators {
            user: http(required(args.user_endpoint, "user-endpoint", "datagen")?),
            agent: http(required(args.agent_endpoint, "agent-endpoint", "datagen")?),
            api: http(required(args.api_endpoint, "api-endpoint", "datagen")?),
        },
    };
    let catalog = match &args.catalog {
        Some(path) => load_manifest(path).context("cannot load API catalog")?,
        None => synthetic_catalog(),
    };
    let config = GenConfig { seed: args.seed.unwrap_or(0), ..GenConfig::default() };

    let instances = generate_instances(&sims, &catalog, n, &config).await.context("generation failed")?;
    let stats = dataset_stats(&instances);
    write_jsonl_atomic(&out, &instances).with_context(|| format!("cannot write {}", out.display()))?;
    if let Some(path) = &args.stats {
        write_json_atomic(path, &stats).with_context(|| format!("cannot write {}", path.display()))?;
    }
    print_json(&stats)?;
    Ok(())
}

pub fn maskgen(args: MaskgenArgs, file: &FileConfig) -> Result<(), CliError> {
    let args = args.overlay(file);
    let input = required(args.input, "input", "maskgen")?;
    let out = required(args.out, "out", "maskgen")?;
    let convs = load_jsonl(&input).with_context(|| format!("cannot load {}", input.display()))?;
    let samples = convs
        .iter()
        .map(|c| weight_mask(c).with_context(|| format!("conversation `{}`", c.id)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    write_jsonl_atomic(&out, &samples).with_context(|| format!("cannot write {}", out.display()))?;

    let mut totals = [0usize; 3];
    for s in &samples {
        for (t, h) in totals.iter_mut().zip(s.histogram()) {
            *t += h;
        }
    }
    print_json(&serde_json::json!({
        "samples": samples.len(),
        "tokens_by_weight": { "0": totals[0], "1": totals[1], "2": totals[2] },
    }))?;
    Ok(())
}

pub async fn serve_arena(args: ServeArenaArgs, file: &FileConfig) -> Result<(), CliError> {
    let args = args.overlay(file);
    let pool_path = required(args.pool, "pool", "serve_arena")?;
    let specs: Vec<AgentSpec> = read_json(&pool_path, "agent pool")?;
    let tools = registry(args.tools.as_deref())?;
    let defaults = EloConfig::default();
    let options = ArenaOptions {
        elo: EloConfig { k: args.k.unwrap_or(defaults.k), initial: args.initial_rating.unwrap_or(defaults.initial) },
        seed: args.seed.unwrap_or(0),
        log_path: args.log,
        snapshot_path: args.snapshot,
    };
    let arena = Arena::from_specs(&specs, Arc::new(tools), options).context("cannot start arena")?;
    let service = ArenaService::new(arena, specs.iter().map(AgentInfo::from).collect());

    let host = args.host.unwrap_or_else(|| "127.0.0.1".into());
    let port = args.port.unwrap_or(8080);
    let listener = tokio::net::TcpListener::bind((host.as_str(), port))
        .await
        .with_context(|| format!("cannot bind {host}:{port}"))?;
    println!("listening on http://{}", listener.local_addr().context("listener address")?);

    axum::serve(listener, service.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .context("server failed")?;
    Ok(())
}

fn registry_path(section: ToolsSection, file: &FileConfig) -> Option<std::path::PathBuf> {
    section.registry.or_else(|| file.tools.registry.clone())
}

pub fn tools_list(section: ToolsSection, format: ListFormat, file: &FileConfig) -> Result<(), CliError> {
    let path = registry_path(section, file);
    let reg = registry(path.as_deref().filter(|p| p.exists()))?;
    let schemas = reg.schemas();
    match format {
        ListFormat::Json => print_json(&schemas)?,
        ListFormat::Text => {
            for s in &schemas {
                println!("{}\t{}", s.name, s.description);
            }
        }
    }
    Ok(())
}

/// Merges `manifest` into the registry file; entries with an existing name
/// replace the old ones.
pub fn tools_register(manifest: &Path, section: ToolsSection, file: &FileConfig) -> Result<(), CliError> {
    let path = required(registry_path(section, file), "registry", "tools")?;
    let incoming = load_manifest(manifest).context("cannot load manifest")?;
    let mut merged: BTreeMap<String, ToolSchema> = BTreeMap::new();
    if path.exists() {
        merged.extend(load_manifest(&path).context("cannot load registry")?.into_iter().map(|s| (s.name.clone(), s)));
    }
    let added = incoming.len();
    merged.extend(incoming.into_iter().map(|s| (s.name.clone(), s)));
    let schemas: Vec<ToolSchema> = merged.into_values().collect();
    write_json_atomic(&path, &schemas).with_context(|| format!("cannot write {}", path.display()))?;
    println!("registered {added} tool(s); {} now holds {}", path.display(), schemas.len());
    Ok(())
}
