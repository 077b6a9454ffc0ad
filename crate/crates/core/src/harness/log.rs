//! Trajectory records, per-vehicle summaries and their writers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::ControllerKind;
use crate::error::Result;
use crate::signal::{LightColor, SignalSchedule, TargetCase};

/// One vehicle over one step `[time, time + dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub vehicle: usize,
    pub controller: ControllerKind,
    /// State at the start of the step.
    pub s: f64,
    pub v: f64,
    /// Commanded acceleration.
    pub u: f64,
    /// Realized driver error.
    pub w: f64,
    /// Saturated effective acceleration.
    pub u_f: f64,
    pub fuel_rate: f64,
    pub v_target: f64,
    pub target_case: Option<TargetCase>,
    pub signal: Option<usize>,
    pub light: Option<LightColor>,
    pub scenarios: usize,
    pub solver_iterations: usize,
    pub guard: bool,
}

/// A stop line passed by a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub intersection: usize,
    pub time: f64,
    pub color: LightColor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSummary {
    pub vehicle: usize,
    pub controller: ControllerKind,
    pub fuel_ml: f64,
    pub distance_m: f64,
    pub mpg: f64,
    /// Time spent at or below the standstill threshold.
    pub idle_s: f64,
    /// Smallest gap to the predecessor; `None` for the leader.
    pub min_spacing_m: Option<f64>,
    /// Stop-line guard activations.
    pub red_light_violations: usize,
    /// Steps where the follower reached its predecessor.
    pub collisions: usize,
    pub crossings: Vec<Crossing>,
    pub unconverged_solves: usize,
    pub final_state: crate::dynamics::VehicleState,
}

impl VehicleSummary {
    pub fn violations(&self) -> usize {
        self.red_light_violations + self.collisions
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub seed: u64,
    pub dt: f64,
    pub steps: usize,
    pub records: Vec<StepRecord>,
    pub summaries: Vec<VehicleSummary>,
    pub schedule: SignalSchedule,
}

impl TrajectoryLog {
    pub fn vehicle_records(&self, vehicle: usize) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(move |r| r.vehicle == vehicle)
    }

    /// One JSON object per vehicle-step, step-major.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(buf)
    }

    pub fn summary_rows(&self, run: usize) -> Vec<SummaryRow> {
        self.summaries
            .iter()
            .map(|s| SummaryRow::from_summary(run, self.seed, s))
            .collect()
    }
}

/// Flat per-run, per-vehicle row as written to the CSV summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: usize,
    #[serde(skip)]
    pub seed: u64,
    pub vehicle: usize,
    pub controller: ControllerKind,
    pub mpg: f64,
    pub fuel_ml: f64,
    pub distance_m: f64,
    pub idle_s: f64,
    pub min_spacing_m: Option<f64>,
    pub violations: usize,
}

impl SummaryRow {
    pub fn from_summary(run: usize, seed: u64, s: &VehicleSummary) -> Self {
        Self {
            run,
            seed,
            vehicle: s.vehicle,
            controller: s.controller,
            mpg: s.mpg,
            fuel_ml: s.fuel_ml,
            distance_m: s.distance_m,
            idle_s: s.idle_s,
            min_spacing_m: s.min_spacing_m,
            violations: s.violations(),
        }
    }
}

/// Columns: run, vehicle, controller, mpg, fuel_ml, distance_m, idle_s,
/// min_spacing_m, violations.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
