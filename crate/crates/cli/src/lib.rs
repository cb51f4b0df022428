//! `influence` command-line runner: config loading, subcommands, and the JSON
//! envelope / CSV writers. `main.rs` only parses arguments and sets the exit code.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use influence_core::sampler::GateSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use commands::{execute, Command, CommandOutput, Table};
pub use config::{Overrides, ResolvedConfig};
pub use error::{CliError, ErrorKind};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "influence";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn parse_gates(s: &str) -> Result<GateSet, String> {
    s.parse().map_err(|e: influence_core::Error| e.to_string())
}

/// Influence sampling, junta testing and junta learning for n-qubit processes.
#[derive(Debug, Parser)]
#[command(name = "influence", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,

    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// RNG seed; overrides the config. Required by every sampling command.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Output file; stdout when absent. With `--format csv` the JSON envelope
    /// is written next to it as `PATH.json`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Keep per-qubit flip counts only (constant memory in the number of subsets).
    #[arg(long, global = true)]
    pub marginals_only: bool,

    /// Test-gate set: 2, 3, rand1 or rand2.
    #[arg(long, global = true, value_name = "SET", value_parser = parse_gates)]
    pub gates: Option<GateSet>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Sub {
    /// Exact influences, sampler expectations and bounds from the dense chi matrix.
    Exact,
    /// Run influence sampling and report per-subset bounds.
    Sample,
    /// Identify high-influence qubits.
    Hiqi,
    /// Test whether the process is a k-junta.
    JuntaTest,
    /// Identify the junta and reconstruct it by tomography.
    JuntaLearn,
    /// Exact (and optionally sampled) bounds over a gate-parameter grid.
    Sweep,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Exact => Command::Exact,
            Sub::Sample => Command::Sample,
            Sub::Hiqi => Command::Hiqi,
            Sub::JuntaTest => Command::JuntaTest,
            Sub::JuntaLearn => Command::JuntaLearn,
            Sub::Sweep => Command::Sweep,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub workers: usize,
}

/// Self-describing result document written by every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub command: String,
    pub tool: ToolInfo,
    pub config: ResolvedConfig,
    pub provenance: Provenance,
    pub wall_clock_seconds: f64,
    pub results: Value,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, workers: self.workers, gates: self.gates, marginals_only: self.marginals_only }
    }
}

/// Runs one command and returns the envelope with its CSV projection.
pub fn run_command(command: Command, cfg: &ResolvedConfig) -> Result<(Envelope, Table), CliError> {
    let start = Instant::now();
    let out = execute(command, cfg)?;
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        command: command.name().to_string(),
        tool: ToolInfo { name: TOOL_NAME.into(), version: env!("CARGO_PKG_VERSION").into() },
        config: cfg.clone(),
        provenance: Provenance { seed: cfg.seed, workers: cfg.workers },
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        results: out.results,
    };
    Ok((envelope, out.table))
}

pub fn write_csv(table: &Table, w: impl Write) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(&table.header)?;
    for row in &table.rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn emit(envelope: &Envelope, table: &Table, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(envelope)? + "\n";
    match (format, out) {
        (Format::Json, Some(path)) => std::fs::write(path, json)?,
        (Format::Json, None) => std::io::stdout().lock().write_all(json.as_bytes())?,
        (Format::Csv, Some(path)) => {
            write_csv(table, std::fs::File::create(path)?)?;
            std::fs::write(sidecar(path), json)?;
        }
        (Format::Csv, None) => write_csv(table, std::io::stdout().lock())?,
    }
    Ok(())
}

/// Full CLI flow after argument parsing.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::config("--config PATH is required"))?;
    let cfg = ResolvedConfig::load(path, &cli.overrides())?;
    let (envelope, table) = run_command(cli.command.into(), &cfg)?;
    emit(&envelope, &table, cli.format, cli.out.as_deref())
}
