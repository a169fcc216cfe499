use clap::{Parser, Subcommand};
use jcbell::catalog::{catalog_json, entries, ExperimentKind};
use jcbell::config::ExperimentConfig;
use jcbell::{run_to_dir, RunError, OUT_ENV};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "jcbell", version, about = "Hybrid Bell-CHSH experiments for Jaynes-Cummings dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its table and metadata.
    Run {
        /// Config file, or an experiment name / figure tag for its default config.
        #[arg(long)]
        config: String,
        /// Dotted-key override, e.g. `disorder.seed=3`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory; defaults to $JCBELL_OUT, then `results`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the experiment catalog.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn load(config: &str, set: &[String]) -> Result<ExperimentConfig, RunError> {
    let path = Path::new(config);
    if !path.exists() {
        if let Some(kind) = ExperimentKind::parse(config) {
            return ExperimentConfig::from_toml_str(kind.entry().config_text, set);
        }
    }
    ExperimentConfig::load(path, set)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List { json } => {
            if json {
                println!("{}", serde_json::to_string_pretty(&catalog_json()).expect("catalog serializes"));
            } else {
                for e in entries() {
                    println!("{:<20} {:<6} {:<38} {}", e.kind.name(), e.figure, e.config_file, e.title);
                }
            }
            Ok(())
        }
        Command::Validate { config, set } => load(&config, &set).map(|cfg| {
            println!("ok: {} ({})", cfg.experiment.name(), cfg.experiment.entry().figure);
        }),
        Command::Run { config, set, out } => load(&config, &set).and_then(|cfg| {
            let dir = out
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("results"));
            let (out, written) = run_to_dir(&cfg, &dir)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            println!("{} rows -> {}", out.table.len(), written.table.display());
            println!("metadata -> {}", written.metadata.display());
            if let Some(p) = written.slice {
                println!("wigner slice -> {}", p.display());
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
