//! Comparison controllers and the per-kind planning dispatch.
//!
//! Every kind runs the same receding-horizon machinery; they differ only in
//! which future driver errors the planner assumes and whether the plant
//! injects errors at all.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{solve_smpc, solve_tree, ControlPlan, HorizonProblem, ScenarioTree};
use crate::driver::{build_scenario_set, DriverErrorModel};
use crate::error::Result;
use crate::solver::SolverSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Error-free plant and planner.
    Ideal,
    /// Plans as if the driver were perfect; the plant is not.
    Passive,
    /// Plans against the conditional mean error sequence.
    CertaintyEquivalence,
    /// Plans against the last observed error held over the horizon.
    FrozenTime,
    /// Scenario-tree stochastic MPC.
    #[serde(rename = "proposed", alias = "scenario_smpc")]
    ScenarioSmpc,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::Ideal,
        ControllerKind::Passive,
        ControllerKind::ScenarioSmpc,
        ControllerKind::CertaintyEquivalence,
        ControllerKind::FrozenTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Ideal => "ideal",
            ControllerKind::Passive => "passive",
            ControllerKind::CertaintyEquivalence => "certainty_equivalence",
            ControllerKind::FrozenTime => "frozen_time",
            ControllerKind::ScenarioSmpc => "proposed",
        }
    }

    /// Column heading used in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::Ideal => "Ideal",
            ControllerKind::Passive => "Passive",
            ControllerKind::CertaintyEquivalence => "CE",
            ControllerKind::FrozenTime => "FrozenTime",
            ControllerKind::ScenarioSmpc => "Proposed",
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ideal" => Ok(Self::Ideal),
            "passive" => Ok(Self::Passive),
            "certainty_equivalence" | "ce" => Ok(Self::CertaintyEquivalence),
            "frozen_time" | "frozen" => Ok(Self::FrozenTime),
            "proposed" | "scenario_smpc" | "smpc" => Ok(Self::ScenarioSmpc),
            other => Err(format!("unknown controller kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantErrorMode {
    Zero,
    Markov,
}

pub fn plant_error_mode(kind: ControllerKind) -> PlantErrorMode {
    match kind {
        ControllerKind::Ideal => PlantErrorMode::Zero,
        _ => PlantErrorMode::Markov,
    }
}

/// Deterministic MPC against an assumed error sequence.
pub fn solve_deterministic(
    problem: HorizonProblem<'_>,
    assumed_errors: &[f64],
    settings: &SolverSettings,
    warm_start: Option<&ControlPlan>,
) -> Result<ControlPlan> {
    let tree = ScenarioTree::from_errors(assumed_errors)?;
    solve_tree(problem, &tree, settings, warm_start)
}

/// `E[w(k + t) | state]` for `t = 0..horizon`, where step `k` is one
/// transition after the observed state.
pub fn certainty_equivalent_errors(model: &DriverErrorModel, state: usize, horizon: usize) -> Result<Vec<f64>> {
    (1..=horizon).map(|steps| model.expected_error(state, steps)).collect()
}

pub fn frozen_errors(current_error: f64, horizon: usize) -> Vec<f64> {
    vec![current_error; horizon]
}

/// Scenario sampling parameters for the stochastic planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSettings {
    pub max_samples: usize,
    pub threshold: f64,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            max_samples: 200,
            threshold: 1e-4,
        }
    }
}

/// Plans one receding-horizon step for `kind`.
///
/// `last_error` is the most recently realized driver error; the stochastic
/// planner roots its tree at its quantized value.
#[allow(clippy::too_many_arguments)]
pub fn plan_for_kind<R: Rng + ?Sized>(
    kind: ControllerKind,
    problem: HorizonProblem<'_>,
    model: &DriverErrorModel,
    last_error: f64,
    scenarios: &ScenarioSettings,
    settings: &SolverSettings,
    warm_start: Option<&ControlPlan>,
    rng: &mut R,
) -> Result<ControlPlan> {
    let horizon = problem.horizon();
    match kind {
        ControllerKind::Ideal | ControllerKind::Passive => {
            solve_deterministic(problem, &vec![0.0; horizon], settings, warm_start)
        }
        ControllerKind::CertaintyEquivalence => {
            let errors = certainty_equivalent_errors(model, model.quantize(last_error), horizon)?;
            solve_deterministic(problem, &errors, settings, warm_start)
        }
        ControllerKind::FrozenTime => {
            solve_deterministic(problem, &frozen_errors(last_error, horizon), settings, warm_start)
        }
        ControllerKind::ScenarioSmpc => {
            let root = model.quantize(last_error);
            let set = build_scenario_set(model, root, horizon, scenarios.max_samples, scenarios.threshold, rng)?;
            solve_smpc(problem, &set, model.support(), settings, warm_start)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{CostWeights, NeighborInfo};
    use crate::dynamics::{FuelParams, VehicleParams, VehicleState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plant_modes() {
        assert_eq!(plant_error_mode(ControllerKind::Ideal), PlantErrorMode::Zero);
        assert_eq!(plant_error_mode(ControllerKind::Passive), PlantErrorMode::Markov);
        assert_eq!(plant_error_mode(ControllerKind::ScenarioSmpc), PlantErrorMode::Markov);
        assert_eq!(
            plant_error_mode(ControllerKind::CertaintyEquivalence),
            PlantErrorMode::Markov
        );
        assert_eq!(plant_error_mode(ControllerKind::FrozenTime), PlantErrorMode::Markov);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ControllerKind::ALL {
            assert_eq!(kind.name().parse::<ControllerKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
            assert_eq!(serde_json::from_str::<ControllerKind>(&json).unwrap(), kind);
        }
        assert!("bogus".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn frozen_sequence_repeats_current_error() {
        assert_eq!(frozen_errors(0.21, 4), vec![0.21; 4]);
    }

    #[test]
    fn certainty_equivalent_from_center_is_zero() {
        // The center row is symmetric, but later rows are not, so only the
        // first step is exactly zero.
        let m = DriverErrorModel::scenario1();
        let seq = certainty_equivalent_errors(&m, 2, 10).unwrap();
        assert!(seq[0].abs() < 1e-15);
        assert_eq!(seq.len(), 10);
    }

    #[test]
    fn error_free_planners_agree() {
        let neighbor = NeighborInfo::absent(10);
        let weights = CostWeights::default();
        let params = VehicleParams::default();
        let fuel = FuelParams::default();
        let problem = HorizonProblem {
            state: VehicleState::new(0.0, 8.0),
            neighbor: &neighbor,
            v_target: 13.0,
            weights: &weights,
            params: &params,
            fuel: &fuel,
            dt: 0.5,
            speed_penalty: 1e3,
            stop_line: None,
        };
        let model = DriverErrorModel::zero();
        let s = ScenarioSettings::default();
        let settings = SolverSettings::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plans: Vec<ControlPlan> = ControllerKind::ALL
            .iter()
            .map(|&k| plan_for_kind(k, problem, &model, 0.0, &s, &settings, None, &mut rng).unwrap())
            .collect();
        for p in &plans[1..] {
            assert_eq!(p.controls, plans[0].controls);
        }
    }
}
