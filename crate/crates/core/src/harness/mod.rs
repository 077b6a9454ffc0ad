//! Configuration, closed-loop simulation, logging and Monte Carlo.

pub mod agent;
pub mod config;
pub mod log;
pub mod monte_carlo;
pub mod sim;

pub use agent::{Agent, Decision, LocalObservation, TargetInfo};
pub use config::{SimConfig, SCENARIO1_TOML, SCENARIO2_TOML};
pub use log::{write_summary_csv, Crossing, StepRecord, SummaryRow, TrajectoryLog, VehicleSummary};
pub use monte_carlo::{monte_carlo, run_seeds, Aggregate, MonteCarloReport};
pub use sim::{
    build_schedule, run_simulation, run_simulation_with_schedule, stop_line_guard, GuardOutcome, IDLE_SPEED,
};
