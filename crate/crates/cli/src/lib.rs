//! Command-line front end: configuration, commands and artifact output.

pub mod commands;
pub mod config;
pub mod error;
pub mod number;
pub mod output;

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use abnoninterf::experiment::{Openings, Species};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

pub use commands::Outcome;
pub use config::{emit_config, parse_config, ConfigFile, Hypothesis, RunLog, RunSettings};
pub use error::CliError;
pub use number::Number;
pub use output::Artifacts;

/// Comma-separated list of exact or float values, e.g. `0,1/4,1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberList(pub Vec<Number>);

impl FromStr for NumberList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        number::parse_list(s).map(NumberList)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpeningsArg {
    Both,
    OnlyA,
    OnlyB,
    Neither,
}

impl From<OpeningsArg> for Openings {
    fn from(o: OpeningsArg) -> Self {
        match o {
            OpeningsArg::Both => Openings::Both,
            OpeningsArg::OnlyA => Openings::OnlyA,
            OpeningsArg::OnlyB => Openings::OnlyB,
            OpeningsArg::Neither => Openings::Neither,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "noninterferometer", version, about = "Flux-line holonomy, magnetic translations and two-chamber interference runs")]
pub struct Cli {
    /// TOML configuration file; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Hypothesis for `sweep`: standard_qm, superseparability or both.
    #[arg(long, global = true)]
    pub mode: Option<Hypothesis>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random closed loops: line integral against the winding-number sum.
    Holonomy,
    /// Magnetic-translation commutator phases, empirical against closed form.
    Commutator,
    /// One detector run of the noninterferometer.
    Evolve {
        #[arg(long, value_enum, default_value = "both")]
        openings: OpeningsArg,
        /// Also write the initial density snapshot.
        #[arg(long)]
        snapshot: bool,
    },
    /// Fringe phase and visibility over a list of Δα.
    Sweep {
        #[arg(long)]
        delta_alpha_list: Option<NumberList>,
    },
    /// Residual ladder and modulus witness for the closed-form eigenfunctions.
    EigenCheck,
    /// Quantized Δα for a species and two flux quantum numbers.
    Quantize {
        #[arg(long)]
        species: Option<Species>,
        #[arg(long, allow_negative_numbers = true)]
        n_a: Option<i64>,
        #[arg(long, allow_negative_numbers = true)]
        n_b: Option<i64>,
    },
    /// Print the full default configuration as TOML.
    ExampleConfig,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Holonomy => "holonomy",
            Command::Commutator => "commutator",
            Command::Evolve { .. } => "evolve",
            Command::Sweep { .. } => "sweep",
            Command::EigenCheck => "eigen-check",
            Command::Quantize { .. } => "quantize",
            Command::ExampleConfig => "example-config",
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_config(&text)
        }
        None => Ok(ConfigFile::default()),
    }
}

/// Runs a command without touching the disk. The run log is added to the
/// artifacts as `run_log.json`.
pub fn execute(cli: &Cli) -> Result<(Outcome, RunLog), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let mut log = RunLog::default();
    if let Command::ExampleConfig = cli.command {
        return Ok((Outcome { stdout: config::example_text(), ..Default::default() }, log));
    }
    let run = cfg.run_settings(&mut log, cli.seed, cli.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let mut outcome = pool.install(|| match &cli.command {
        Command::Holonomy => commands::holonomy(&cfg, &run, &mut log),
        Command::Commutator => commands::commutator(&cfg, &run, &mut log),
        Command::Evolve { openings, snapshot } => commands::evolve(&cfg, &run, &mut log, (*openings).into(), *snapshot),
        Command::Sweep { delta_alpha_list } => {
            commands::sweep(&cfg, &run, &mut log, cli.mode, delta_alpha_list.clone().map(|l| l.0))
        }
        Command::EigenCheck => commands::eigen_check(&cfg, &run, &mut log),
        Command::Quantize { species, n_a, n_b } => commands::quantize(&cfg, &run, &mut log, *species, *n_a, *n_b),
        Command::ExampleConfig => unreachable!(),
    })?;
    let run_log = json!({
        "command": cli.command.name(),
        "version": commands::VERSION,
        "seed": run.seed,
        "workers": run.workers,
        "config_path": cli.config.as_ref().map(|p| p.display().to_string()),
        "config": emit_config(&cfg)?,
        "defaults": log.defaults,
        "warnings": log.warnings,
        "elapsed_s": start.elapsed().as_secs_f64(),
        "diagnostics": outcome.diagnostics,
    });
    outcome.artifacts.add_json("run_log.json", &run_log);
    Ok((outcome, log))
}

/// Executes, writes every artifact under `--out`, and returns stdout text.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let (outcome, log) = execute(cli)?;
    for d in &log.defaults {
        eprintln!("default: {d}");
    }
    for w in &log.warnings {
        eprintln!("warning: {w}");
    }
    if outcome.artifacts.names().next().is_some() {
        outcome.artifacts.write_all(&cli.out)?;
    }
    Ok(outcome.stdout)
}
