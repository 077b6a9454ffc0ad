use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Parser, Subcommand};
use ecodrive_core::harness::write_summary_csv;
use ecodrive_core::{monte_carlo, run_simulation, Error, SimConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ecodrive",
    version,
    about = "Stochastic eco-driving simulator for signalized corridors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write its trajectory log, summary and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo comparison of the configured controller kinds on paired seeds.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long)]
        out: PathBuf,
        /// Master seed for the run seeds; defaults to `sim.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config, reporting every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

#[derive(Serialize)]
struct OutputFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    run_id: String,
    command: &'static str,
    version: &'static str,
    config_path: String,
    seed: u64,
    runs: Option<usize>,
    started_unix_s: f64,
    finished_unix_s: f64,
    outputs: Vec<OutputFile>,
    config: SimConfig,
}

fn load(path: &Path) -> Result<SimConfig, Failure> {
    SimConfig::from_path(path).map_err(|e| match e {
        Error::Config(problems) => Failure::Config(format!("{}:\n  {}", path.display(), problems.join("\n  "))),
        other => Failure::Config(format!("{}: {other}", path.display())),
    })
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Identifier shared by all files of one invocation; a function of the
/// resolved config and seed only, so reruns overwrite the same files.
fn run_id(command: &str, cfg: &SimConfig, seed: u64, runs: Option<usize>) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(cfg.to_toml().as_bytes());
    h.update(seed.to_le_bytes());
    h.update(runs.unwrap_or(0).to_le_bytes());
    hex(&h.finalize())[..16].to_string()
}

struct Outputs {
    dir: PathBuf,
    prefix: String,
    written: Vec<OutputFile>,
}

impl Outputs {
    fn new(dir: &Path, prefix: String) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            prefix,
            written: Vec::new(),
        })
    }

    fn write(&mut self, suffix: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(format!("{}-{suffix}", self.prefix));
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(OutputFile {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(path)
    }

    fn finish(mut self, mut manifest: RunManifest) -> anyhow::Result<PathBuf> {
        manifest.outputs = std::mem::take(&mut self.written);
        manifest.finished_unix_s = now();
        let json = serde_json::to_vec_pretty(&manifest)?;
        let path = self.dir.join(format!("{}-manifest.json", self.prefix));
        fs::write(&path, json).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

fn cmd_run(config: &Path, seed: u64, out: &Path) -> Result<(), Failure> {
    let cfg = load(config)?;
    let started = now();
    let log = run_simulation(&cfg, seed).context("simulation failed")?;

    let id = run_id("run", &cfg, seed, None);
    let mut outputs = Outputs::new(out, format!("run-{id}"))?;
    let jsonl = log.to_jsonl().context("cannot serialize trajectory")?;
    outputs.write("trajectory.jsonl", &jsonl)?;
    let mut csv = Vec::new();
    write_summary_csv(&log.summary_rows(0), &mut csv).context("cannot serialize summary")?;
    outputs.write("summary.csv", &csv)?;
    let manifest = outputs.finish(RunManifest {
        run_id: id,
        command: "run",
        version: env!("CARGO_PKG_VERSION"),
        config_path: config.display().to_string(),
        seed,
        runs: None,
        started_unix_s: started,
        finished_unix_s: 0.0,
        outputs: Vec::new(),
        config: cfg,
    })?;

    for s in &log.summaries {
        println!(
            "vehicle {} ({}): {:.2} mpg, {:.1} ml over {:.0} m, {} violations",
            s.vehicle,
            s.controller,
            s.mpg,
            s.fuel_ml,
            s.distance_m,
            s.violations()
        );
    }
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn cmd_compare(config: &Path, runs: usize, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let cfg = load(config)?;
    let master = seed.unwrap_or(cfg.sim.seed);
    let started = now();
    let report = monte_carlo(&cfg, &cfg.sim.compare_kinds, runs, master).context("Monte Carlo sweep failed")?;

    let id = run_id("compare", &cfg, master, Some(runs));
    let mut outputs = Outputs::new(out, format!("compare-{id}"))?;
    let mut runs_csv = Vec::new();
    report
        .write_runs_csv(&mut runs_csv)
        .context("cannot serialize per-run table")?;
    outputs.write("runs.csv", &runs_csv)?;
    let mut table = Vec::new();
    report
        .write_table_csv(&mut table)
        .context("cannot serialize summary table")?;
    outputs.write("table.csv", &table)?;
    let manifest = outputs.finish(RunManifest {
        run_id: id,
        command: "compare",
        version: env!("CARGO_PKG_VERSION"),
        config_path: config.display().to_string(),
        seed: master,
        runs: Some(runs),
        started_unix_s: started,
        finished_unix_s: 0.0,
        outputs: Vec::new(),
        config: cfg,
    })?;

    print!("{}", String::from_utf8_lossy(&table));
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn cmd_validate(config: &Path) -> Result<(), Failure> {
    let cfg = load(config)?;
    println!(
        "{}: ok ({} vehicles, {} steps of {} s, horizon {} steps)",
        config.display(),
        cfg.vehicle_count(),
        cfg.total_steps(),
        cfg.sim.dt,
        cfg.horizon_steps()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed, out } => cmd_run(config, *seed, out),
        Command::Compare {
            config,
            runs,
            out,
            seed,
        } => cmd_compare(config, *runs as usize, out, *seed),
        Command::Validate { config } => cmd_validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
