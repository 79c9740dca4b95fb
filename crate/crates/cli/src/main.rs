use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use opeval_core::harness::with_threads;
use opeval_core::io::{self, Outcome, RunContext, ScoreOptions, SweepKind};
use opeval_core::{Error, Result};

/// Off-policy evaluation of Q-functions by classification.
#[derive(Parser)]
#[command(name = "opeval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out the configured behavior policy and write a JSON-lines episode log.
    Collect {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides master_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score one episode log; prints a CSV to standard output.
    Score {
        log: PathBuf,
        /// Q-table JSON file, or "embedded" to use annotations in the log.
        #[arg(long, default_value = "embedded")]
        qtable: String,
        #[arg(long, default_value_t = 1.0)]
        prior: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Also report the dense-reward extension of OPC.
        #[arg(long)]
        extended_opc: bool,
        /// Reject logs that break the binary-reward convention.
        #[arg(long)]
        binary_strict: bool,
    },
    /// Correlate every metric with true return over a random Q-function suite.
    Correlate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Repeat the correlation experiment over a grid.
    Sweep {
        /// prior, stochastic or magnitude
        kind: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config (.toml), Q-table (.json) or episode log.
    Validate {
        path: PathBuf,
        #[arg(long)]
        binary_strict: bool,
    },
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("OPEVAL_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("OPEVAL_THREADS={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// SOURCE_DATE_EPOCH pins the manifest timestamp for reproducible output.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Collect { config, out, seed } => {
            let ctx = RunContext::load(config.as_deref(), seed, timestamp())?;
            let d = io::cmd_collect(&ctx, &out)?;
            eprintln!("wrote {} episodes to {}", d.episodes.len(), out.display());
            Ok(Outcome::Success)
        }
        Command::Score {
            log,
            qtable,
            prior,
            gamma,
            extended_opc,
            binary_strict,
        } => {
            let table = (qtable != "embedded").then(|| PathBuf::from(qtable));
            let opts = ScoreOptions {
                prior,
                gamma,
                extended_opc,
                binary_strict,
            };
            io::cmd_score(&log, table.as_deref(), &opts, std::io::stdout().lock())
        }
        Command::Correlate { config, out, seed } => {
            let ctx = RunContext::load(config.as_deref(), seed, timestamp())?;
            with_threads(threads()?, || io::cmd_correlate(&ctx, &out))?
        }
        Command::Sweep {
            kind,
            config,
            out,
            seed,
        } => {
            let kind: SweepKind = kind.parse()?;
            let ctx = RunContext::load(config.as_deref(), seed, timestamp())?;
            with_threads(threads()?, || io::cmd_sweep(kind, &ctx, &out))?
        }
        Command::Validate { path, binary_strict } => {
            println!("{}", io::cmd_validate(&path, binary_strict)?);
            Ok(Outcome::Success)
        }
    }
}

fn main() -> ExitCode {
    let result = run(Cli::parse());
    match &result {
        Err(e) => eprintln!("error: {e}"),
        Ok(Outcome::DegenerateOnly) => eprintln!("warning: every classification score is degenerate"),
        Ok(Outcome::Success) => {}
    }
    ExitCode::from(io::exit_code(&result) as u8)
}
