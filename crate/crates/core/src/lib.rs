//! Decentralized eco-driving through signalized corridors.
//!
//! Each vehicle runs a receding-horizon controller that trades fuel, spacing
//! to its predecessor and tracking of a signal-timed target speed, while the
//! human driver adds Markov-correlated acceleration errors. The stochastic
//! controller plans over a sampled tree of those errors.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod controller;
pub mod driver;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod signal;
pub mod solver;

pub use baselines::{plan_for_kind, ControllerKind, PlantErrorMode, ScenarioSettings};
pub use controller::{
    scenario_objective, solve_smpc, stage_cost, ControlPlan, CostWeights, HorizonProblem, NeighborInfo, ScenarioTree,
};
pub use driver::{build_scenario_set, DriverErrorModel, Scenario, ScenarioSet};
pub use dynamics::{fuel_rate, step_dynamics, trip_mpg, FuelParams, VehicleParams, VehicleState};
pub use error::{Error, Result};
pub use harness::{
    monte_carlo, run_simulation, run_simulation_with_schedule, stop_line_guard, MonteCarloReport, SimConfig,
    TrajectoryLog,
};
pub use signal::{target_velocity, LightColor, SignalSchedule, SpatQuery, TargetCase, TargetVelocity};
pub use solver::SolverSettings;
