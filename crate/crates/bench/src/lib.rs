//! Shared inputs for the controller benchmarks.

use ecodrive_core::controller::predict_neighbor;
use ecodrive_core::{
    build_scenario_set, CostWeights, DriverErrorModel, FuelParams, HorizonProblem, NeighborInfo, ScenarioSet,
    VehicleParams, VehicleState,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A follower mid-corridor with a predecessor 20 m ahead.
pub struct Workload {
    pub model: DriverErrorModel,
    pub neighbor: NeighborInfo,
    pub weights: CostWeights,
    pub params: VehicleParams,
    pub fuel: FuelParams,
    pub horizon: usize,
}

impl Workload {
    pub fn new(horizon: usize) -> Self {
        Self {
            model: DriverErrorModel::scenario1(),
            neighbor: predict_neighbor(Some(VehicleState::new(120.0, 11.0)), horizon, 0.5),
            weights: CostWeights::default(),
            params: VehicleParams::default(),
            fuel: FuelParams::default(),
            horizon,
        }
    }

    pub fn problem(&self) -> HorizonProblem<'_> {
        HorizonProblem {
            state: VehicleState::new(100.0, 10.0),
            neighbor: &self.neighbor,
            v_target: 12.5,
            weights: &self.weights,
            params: &self.params,
            fuel: &self.fuel,
            dt: 0.5,
            speed_penalty: 1e3,
            stop_line: None,
        }
    }

    pub fn scenarios(&self, max_samples: usize, threshold: f64, seed: u64) -> ScenarioSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        build_scenario_set(
            &self.model,
            self.model.neutral_state(),
            self.horizon,
            max_samples,
            threshold,
            &mut rng,
        )
        .expect("valid sampling parameters")
    }
}
