//! Paired-seed Monte Carlo comparison of controller kinds.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::ControllerKind;
use crate::error::{Error, Result};

use super::config::SimConfig;
use super::log::SummaryRow;
use super::sim::run_simulation;

const RUN_SEED_STREAM: u64 = 0x5eed;

/// Seeds for runs `0..runs`; a prefix does not depend on `runs`.
pub fn run_seeds(master: u64, runs: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(RUN_SEED_STREAM);
    (0..runs).map(|_| rng.next_u64()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub controller: ControllerKind,
    pub vehicle: usize,
    pub runs: usize,
    pub mean_mpg: f64,
    pub std_mpg: f64,
    pub min_mpg: f64,
    pub max_mpg: f64,
    pub total_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub master_seed: u64,
    pub kinds: Vec<ControllerKind>,
    pub seeds: Vec<u64>,
    /// Run-major, then kind, then vehicle.
    pub rows: Vec<SummaryRow>,
    pub aggregates: Vec<Aggregate>,
}

impl MonteCarloReport {
    pub fn aggregate(&self, kind: ControllerKind, vehicle: usize) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.controller == kind && a.vehicle == vehicle)
    }

    pub fn vehicles(&self) -> usize {
        self.rows.iter().map(|r| r.vehicle + 1).max().unwrap_or(0)
    }

    /// mpg of `kind` for `vehicle`, indexed by run.
    pub fn mpg_series(&self, kind: ControllerKind, vehicle: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.controller == kind && r.vehicle == vehicle)
            .map(|r| r.mpg)
            .collect()
    }

    /// Per-vehicle mean mpg with one column per kind, as CSV.
    pub fn write_table_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["vehicle".to_string()];
        header.extend(self.kinds.iter().map(|k| k.label().to_string()));
        w.write_record(&header)?;
        for v in 0..self.vehicles() {
            let mut rec = vec![v.to_string()];
            for &k in &self.kinds {
                rec.push(
                    self.aggregate(k, v)
                        .map_or(String::new(), |a| format!("{:.4}", a.mean_mpg)),
                );
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-run mpg, one row per (run, kind, vehicle).
    pub fn write_runs_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["run", "seed", "controller", "vehicle", "mpg"])?;
        for r in &self.rows {
            w.write_record([
                r.run.to_string(),
                r.seed.to_string(),
                r.controller.label().to_string(),
                r.vehicle.to_string(),
                r.mpg.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn aggregate(kind: ControllerKind, vehicle: usize, rows: &[SummaryRow]) -> Aggregate {
    let xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.controller == kind && r.vehicle == vehicle)
        .map(|r| r.mpg)
        .collect();
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Aggregate {
        controller: kind,
        vehicle,
        runs: n,
        mean_mpg: mean,
        std_mpg: var.sqrt(),
        min_mpg: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max_mpg: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        total_violations: rows
            .iter()
            .filter(|r| r.controller == kind && r.vehicle == vehicle)
            .map(|r| r.violations)
            .sum(),
    }
}

/// Runs every kind on the same `runs` seeds derived from `master_seed`.
///
/// All vehicles of a run use the same kind. Runs execute in parallel; the
/// report is identical regardless of thread count.
pub fn monte_carlo(
    cfg: &SimConfig,
    kinds: &[ControllerKind],
    runs: usize,
    master_seed: u64,
) -> Result<MonteCarloReport> {
    if kinds.is_empty() {
        return Err(Error::Config(vec!["controller kind list must not be empty".into()]));
    }
    if runs == 0 {
        return Err(Error::Config(vec!["number of runs must be >= 1".into()]));
    }
    cfg.validate()?;
    let seeds = run_seeds(master_seed, runs);
    let jobs: Vec<(usize, ControllerKind)> = (0..runs).flat_map(|r| kinds.iter().map(move |&k| (r, k))).collect();
    let per_job: Vec<Vec<SummaryRow>> = jobs
        .par_iter()
        .map(|&(run, kind)| {
            let log = run_simulation(&cfg.with_controller(kind), seeds[run])?;
            Ok(log.summary_rows(run))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<SummaryRow> = per_job.into_iter().flatten().collect();
    let n = cfg.vehicle_count();
    let aggregates = kinds
        .iter()
        .flat_map(|&k| (0..n).map(move |v| (k, v)))
        .map(|(k, v)| aggregate(k, v, &rows))
        .collect();
    Ok(MonteCarloReport {
        master_seed,
        kinds: kinds.to_vec(),
        seeds,
        rows,
        aggregates,
    })
}
