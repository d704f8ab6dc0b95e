//! Pipeline CLI: stage-by-stage subcommands over a single TOML config.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 dependency error.

mod artifacts;
mod config;
mod errors;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::PipelineConfig;
use errors::{exit_code_for, CliError};

#[derive(Parser)]
#[command(name = "rinkpulse", version, about = "Hockey event-stream analytics pipeline")]
struct Cli {
    /// TOML config file; omitted means built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides io.out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override every stage seed with seed, seed+1, ... in stage order.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Generate a synthetic event stream with planted ground truth.
    Synth,
    /// Parse, standardize, window, and run VIF diagnostics.
    Ingest,
    /// Fit (or load) the logistic momentum model and score windows.
    Momentum {
        /// Score with an existing model instead of fitting.
        #[arg(long, requires = "model")]
        score_only: bool,
        /// Path to a momentum model JSON (e.g. the reference fixture).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train the gradient-boosted xG model and emit composite C scores.
    Xg {
        /// Grid-search depth/learning-rate/rounds on the validation split.
        #[arg(long)]
        sweep: bool,
    },
    /// Train the LSTM sequence model and emit composite S scores.
    Lstm,
    /// PCA + K-Means formation discovery, deviations, hulls, densities.
    Formation,
    /// Mine and rank offensive chains.
    Sequences,
    /// Propensity, X-Learner ATE, bootstrap CI, balance diagnostics.
    Causal,
    /// Run every stage in order.
    Pipeline,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Ingest => "ingest",
            Command::Momentum { .. } => "momentum",
            Command::Xg { .. } => "xg",
            Command::Lstm => "lstm",
            Command::Formation => "formation",
            Command::Sequences => "sequences",
            Command::Causal => "causal",
            Command::Pipeline => "pipeline",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())
        .map_err(|e| anyhow::Error::new(CliError::Config(format!("{e:#}"))))?;
    if let Some(out) = cli.out {
        cfg.io.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.synth.seed = seed;
        cfg.gbdt.seed = seed + 1;
        cfg.lstm.seed = seed + 2;
        cfg.formation.seed = seed + 3;
        cfg.causal.seed = seed + 4;
    }
    let out = cfg.io.out_dir.clone();
    std::fs::create_dir_all(&out)?;

    let mut timings: Vec<(String, f64)> = Vec::new();
    let mut stages_run: Vec<String> = Vec::new();
    let mut execute = |name: &str, f: &dyn Fn(&PipelineConfig) -> Result<()>| -> Result<()> {
        let start = Instant::now();
        f(&cfg)?;
        timings.push((name.to_string(), start.elapsed().as_secs_f64()));
        stages_run.push(name.to_string());
        Ok(())
    };

    match &cli.command {
        Command::Synth => execute("synth", &|c| stages::run_synth(c, &out))?,
        Command::Ingest => execute("ingest", &|c| stages::run_ingest(c, &out))?,
        Command::Momentum { score_only, model } => {
            let model_path = if *score_only { model.as_deref() } else { None };
            execute("momentum", &|c| stages::run_momentum(c, &out, model_path))?
        }
        Command::Xg { sweep } => {
            let sweep = *sweep;
            execute("xg", &|c| stages::run_xg(c, &out, sweep))?
        }
        Command::Lstm => execute("lstm", &|c| stages::run_lstm(c, &out))?,
        Command::Formation => execute("formation", &|c| stages::run_formation(c, &out))?,
        Command::Sequences => execute("sequences", &|c| stages::run_sequences(c, &out))?,
        Command::Causal => execute("causal", &|c| stages::run_causal(c, &out))?,
        Command::Pipeline => {
            execute("synth", &|c| stages::run_synth(c, &out))?;
            execute("ingest", &|c| stages::run_ingest(c, &out))?;
            execute("momentum", &|c| stages::run_momentum(c, &out, None))?;
            execute("xg", &|c| stages::run_xg(c, &out, false))?;
            execute("lstm", &|c| stages::run_lstm(c, &out))?;
            execute("formation", &|c| stages::run_formation(c, &out))?;
            execute("sequences", &|c| stages::run_sequences(c, &out))?;
            execute("causal", &|c| stages::run_causal(c, &out))?;
        }
    }

    artifacts::write_manifest(&out, &cfg.canonical_bytes()?, &cfg.seeds(), &stages_run)?;
    artifacts::write_timings(&out, &timings)?;
    eprintln!("{}: done", cli.command.name());
    Ok(())
}
