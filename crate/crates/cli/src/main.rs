use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zrec::{presets, run, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "zrec", version = env!("ZREC_VERSION"), about = "Return-time experiments for Z-extensions of suspension flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; exit 0 if every check passes, 2 if one fails.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's "output", else ./zrec-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print a built-in config.
    Preset {
        name: String,
        /// Experiment kind to attach instead of the preset's default.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Print the JSON schema of experiment configs.
    Schema,
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { config, seed, out, threads } => {
            if let Some(k) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global()
                    .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
            }
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out
                .or_else(|| cfg.output.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("zrec-out"));
            let report = run(&cfg, seed, Some(&dir))?;
            for c in &report.checks {
                eprintln!("{} {} = {:e} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
            }
            println!("{}", report.to_json());
            Ok(report.passed)
        }
        Command::Preset { name, kind } => {
            println!("{}", presets::preset(&name, kind.as_deref())?.to_json());
            Ok(true)
        }
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&zrec::config::config_schema()).expect("schema serializes"));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
