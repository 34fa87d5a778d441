//! `agent`: run, evaluate, and serve tool-using agents from the command line.
//!
//! Exit status is 0 on success, 1 when input data is bad or an operation
//! fails, and 2 on usage errors. Errors go to stderr as one JSON line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use toolagent_cli::config::{
    DatagenArgs, EvalArgs, FileConfig, ListFormat, MaskgenArgs, RunArgs, ServeArenaArgs, ToolsSection, CONFIG_ENV,
};
use toolagent_cli::{commands, CliError};

#[derive(Parser)]
#[command(name = "agent", version, about = "Tool-using LLM agent runtime")]
struct Cli {
    /// TOML settings file; flags override it [env: AGENT_CONFIG]
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Answer one query with an agent, calling tools as needed
    Run(RunArgs),
    /// Score predicted conversations against an annotated test set
    Eval(EvalArgs),
    /// Simulate user/agent/API dialogues and filter them
    Datagen(DatagenArgs),
    /// Turn conversations into weighted token sequences for training
    Maskgen(MaskgenArgs),
    /// Serve the battle, vote, leaderboard and chat HTTP API
    ServeArena(ServeArenaArgs),
    /// Inspect or extend the tool registry
    #[command(subcommand)]
    Tools(ToolsCommand),
}

#[derive(Subcommand)]
enum ToolsCommand {
    /// Print the default library plus the registry file, if any
    List {
        #[command(flatten)]
        registry: ToolsSection,
        #[arg(long, value_enum, default_value_t)]
        format: ListFormat,
    },
    /// Validate a manifest and merge it into the registry file
    Register {
        /// JSON array of tool schemas
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        registry: ToolsSection,
    },
}

impl Command {
    fn path(&self) -> &'static [&'static str] {
        match self {
            Command::Run(_) => &["run"],
            Command::Eval(_) => &["eval"],
            Command::Datagen(_) => &["datagen"],
            Command::Maskgen(_) => &["maskgen"],
            Command::ServeArena(_) => &["serve-arena"],
            Command::Tools(ToolsCommand::List { .. }) => &["tools", "list"],
            Command::Tools(ToolsCommand::Register { .. }) => &["tools", "register"],
        }
    }
}

async fn dispatch(command: Command, file: FileConfig) -> Result<(), CliError> {
    match command {
        Command::Run(args) => commands::run(args, &file).await,
        Command::Eval(args) => commands::eval(args, &file),
        Command::Datagen(args) => commands::datagen(args, &file).await,
        Command::Maskgen(args) => commands::maskgen(args, &file),
        Command::ServeArena(args) => commands::serve_arena(args, &file).await,
        Command::Tools(ToolsCommand::List { registry, format }) => commands::tools_list(registry, format, &file),
        Command::Tools(ToolsCommand::Register { manifest, registry }) => {
            commands::tools_register(&manifest, registry, &file)
        }
    }
}

fn usage_text(path: &[&str]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let mut sub = &mut cmd;
    for name in path {
        sub = sub.find_subcommand_mut(name).expect("known subcommand");
    }
    sub.render_usage().to_string()
}

fn main() -> ExitCode {
    // clap exits with status 2 on unknown or malformed flags
    let cli = Cli::parse();
    let path = cli.command.path();

    let result = FileConfig::load(cli.config.as_deref()).and_then(|file| {
        let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Domain(e.into()))?;
        runtime.block_on(dispatch(cli.command, file))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            if let CliError::Usage(_) = e {
                eprintln!("\n{}", usage_text(path));
                eprintln!("Settings may also come from the file named by --config or {CONFIG_ENV}.");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
