//! TOML run configuration.

use serde::{Deserialize, Serialize};

use crate::baselines::{ControllerKind, ScenarioSettings};
use crate::controller::CostWeights;
use crate::driver::DriverErrorModel;
use crate::dynamics::{FuelParams, VehicleParams};
use crate::error::{Error, Result};
use crate::signal::PhaseTiming;
use crate::solver::SolverSettings;

pub const SCENARIO1_TOML: &str = include_str!("../../fixtures/scenario1.toml");
pub const SCENARIO2_TOML: &str = include_str!("../../fixtures/scenario2.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub name: String,
    /// Integration and control step (s).
    pub dt: f64,
    /// Prediction horizon length (s); must be a whole number of steps.
    pub horizon_s: f64,
    pub total_time_s: f64,
    pub seed: u64,
    /// Controller kinds evaluated by `compare`.
    pub compare_kinds: Vec<ControllerKind>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            name: "corridor".into(),
            dt: 0.5,
            horizon_s: 5.0,
            total_time_s: 400.0,
            seed: 0,
            compare_kinds: ControllerKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    /// Initial positions, leader first (m).
    pub initial_positions: Vec<f64>,
    /// Initial speeds, same order (m/s).
    pub initial_velocities: Vec<f64>,
    /// One kind for every vehicle, or one per vehicle.
    pub controllers: Vec<ControllerKind>,
    pub params: VehicleParams,
    pub fuel: FuelParams,
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self {
            initial_positions: vec![0.0, -20.0, -40.0],
            initial_velocities: vec![10.0; 3],
            controllers: vec![ControllerKind::ScenarioSmpc],
            params: VehicleParams::default(),
            fuel: FuelParams::default(),
        }
    }
}

impl VehicleSection {
    pub fn count(&self) -> usize {
        self.initial_positions.len()
    }

    pub fn kind_of(&self, vehicle: usize) -> ControllerKind {
        if self.controllers.len() == 1 {
            self.controllers[0]
        } else {
            self.controllers[vehicle]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    pub enabled: bool,
    pub first_position_m: f64,
    pub spacing_m: f64,
    pub red_s: [f64; 2],
    pub green_s: [f64; 2],
    /// Green windows scanned by the target-speed rule.
    pub lookahead_greens: usize,
    /// Seeds the schedule independently of the run seed when set.
    pub schedule_seed: Option<u64>,
    /// Target speed when no signal lies ahead; defaults to `v_max`.
    pub free_flow_speed: Option<f64>,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            enabled: true,
            first_position_m: 500.0,
            spacing_m: 500.0,
            red_s: [37.0, 43.0],
            green_s: [12.0, 17.0],
            lookahead_greens: 3,
            schedule_seed: None,
            free_flow_speed: None,
        }
    }
}

impl SignalSection {
    pub fn timing(&self) -> PhaseTiming {
        PhaseTiming {
            red: (self.red_s[0], self.red_s[1]),
            green: (self.green_s[0], self.green_s[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub initial_step: f64,
    pub warm_step: f64,
    pub min_step: f64,
    pub velocity_penalty: f64,
    /// Paths drawn per scenario-tree build.
    pub max_samples: usize,
    /// Minimum path probability kept in the tree.
    pub probability_threshold: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self::from_parts(SolverSettings::default(), ScenarioSettings::default())
    }
}

impl SolverSection {
    pub fn from_parts(s: SolverSettings, sc: ScenarioSettings) -> Self {
        Self {
            max_iterations: s.max_iterations,
            tolerance: s.tolerance,
            initial_step: s.initial_step,
            warm_step: s.warm_step,
            min_step: s.min_step,
            velocity_penalty: s.velocity_penalty,
            max_samples: sc.max_samples,
            probability_threshold: sc.threshold,
        }
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            initial_step: self.initial_step,
            warm_step: self.warm_step,
            min_step: self.min_step,
            velocity_penalty: self.velocity_penalty,
        }
    }

    pub fn scenarios(&self) -> ScenarioSettings {
        ScenarioSettings {
            max_samples: self.max_samples,
            threshold: self.probability_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub sim: SimSection,
    pub vehicles: VehicleSection,
    pub signals: SignalSection,
    pub driver: DriverErrorModel,
    pub weights: CostWeights,
    pub solver: SolverSection,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sim: SimSection::default(),
            vehicles: VehicleSection::default(),
            signals: SignalSection::default(),
            driver: DriverErrorModel::scenario1(),
            weights: CostWeights::default(),
            solver: SolverSection::default(),
        }
    }
}

impl SimConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }

    pub fn scenario1() -> Self {
        Self::from_toml(SCENARIO1_TOML).expect("bundled scenario1 fixture is valid")
    }

    pub fn scenario2() -> Self {
        Self::from_toml(SCENARIO2_TOML).expect("bundled scenario2 fixture is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.count()
    }

    /// Prediction steps per plan.
    pub fn horizon_steps(&self) -> usize {
        (self.sim.horizon_s / self.sim.dt).round() as usize
    }

    pub fn total_steps(&self) -> usize {
        (self.sim.total_time_s / self.sim.dt).round() as usize
    }

    /// Copy with every vehicle driven by `kind`.
    pub fn with_controller(&self, kind: ControllerKind) -> Self {
        let mut cfg = self.clone();
        cfg.vehicles.controllers = vec![kind];
        cfg
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut push = |r: Result<()>| {
            if let Err(e) = r {
                match e {
                    Error::Config(v) => errs.extend(v),
                    other => errs.push(other.to_string()),
                }
            }
        };

        let sim = &self.sim;
        if !(sim.dt > 0.0 && sim.dt.is_finite()) {
            push(Err(Error::Config(vec![format!("sim.dt must be > 0, got {}", sim.dt)])));
        } else {
            for (name, value) in [("sim.horizon_s", sim.horizon_s), ("sim.total_time_s", sim.total_time_s)] {
                let steps = value / sim.dt;
                if !(value > 0.0) || (steps - steps.round()).abs() > 1e-9 {
                    push(Err(Error::Config(vec![format!(
                        "{name} must be a positive multiple of sim.dt ({}), got {value}",
                        sim.dt
                    )])));
                }
            }
        }
        if sim.compare_kinds.is_empty() {
            push(Err(Error::Config(vec!["sim.compare_kinds must not be empty".into()])));
        }

        let v = &self.vehicles;
        let n = v.count();
        if n == 0 {
            push(Err(Error::Config(vec![
                "vehicles.initial_positions must list at least one vehicle".into(),
            ])));
        }
        if v.initial_velocities.len() != n {
            push(Err(Error::Config(vec![format!(
                "vehicles.initial_velocities has {} entries, expected {n}",
                v.initial_velocities.len()
            )])));
        }
        if !(v.controllers.len() == 1 || v.controllers.len() == n) {
            push(Err(Error::Config(vec![format!(
                "vehicles.controllers must have 1 or {n} entries, got {}",
                v.controllers.len()
            )])));
        }
        if v.initial_positions
            .iter()
            .chain(&v.initial_velocities)
            .any(|x| !x.is_finite())
        {
            push(Err(Error::Config(vec!["vehicles initial state must be finite".into()])));
        }
        if v.initial_positions.windows(2).any(|w| w[1] >= w[0]) {
            push(Err(Error::Config(vec![
                "vehicles.initial_positions must be strictly decreasing (leader first)".into(),
            ])));
        }
        push(v.params.validate());
        push(v.fuel.validate());
        if v.initial_velocities
            .iter()
            .any(|&x| x < v.params.v_min || x > v.params.v_max)
        {
            push(Err(Error::Config(vec![
                "vehicles.initial_velocities must lie in [v_min, v_max]".into(),
            ])));
        }

        let s = &self.signals;
        if s.enabled {
            if !(s.spacing_m > 0.0 && s.first_position_m.is_finite()) {
                push(Err(Error::Config(vec!["signals.spacing_m must be > 0".into()])));
            }
            if let Err(e) = s.timing().validate() {
                push(Err(Error::Config(vec![format!("signals: {e}")])));
            }
            if s.lookahead_greens == 0 {
                push(Err(Error::Config(vec!["signals.lookahead_greens must be >= 1".into()])));
            }
        }
        if let Some(f) = s.free_flow_speed {
            if !(f >= v.params.v_min && f <= v.params.v_max) {
                push(Err(Error::Config(vec![
                    "signals.free_flow_speed must lie in [v_min, v_max]".into(),
                ])));
            }
        }

        push(self.weights.validate());
        if let Err(e) = self.solver.settings().validate() {
            push(Err(Error::Config(vec![e])));
        }
        if self.solver.max_samples == 0 {
            push(Err(Error::Config(vec!["solver.max_samples must be >= 1".into()])));
        }
        if !(0.0..1.0).contains(&self.solver.probability_threshold) {
            push(Err(Error::Config(vec![
                "solver.probability_threshold must lie in [0, 1)".into(),
            ])));
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimConfig::default().validate().unwrap();
        assert_eq!(SimConfig::default().horizon_steps(), 10);
        assert_eq!(SimConfig::default().total_steps(), 800);
    }

    #[test]
    fn fixtures_parse() {
        let a = SimConfig::scenario1();
        let b = SimConfig::scenario2();
        assert_eq!(a.driver.support(), crate::driver::SCENARIO1_SUPPORT);
        assert_eq!(b.driver.support(), crate::driver::SCENARIO2_SUPPORT);
        assert_eq!(a.vehicle_count(), 3);
    }

    #[test]
    fn toml_round_trip() {
        let a = SimConfig::scenario2();
        let b = SimConfig::from_toml(&a.to_toml()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collects_all_problems() {
        let mut c = SimConfig::default();
        c.sim.dt = 0.3;
        c.sim.compare_kinds.clear();
        c.vehicles.initial_velocities.pop();
        let Err(Error::Config(errs)) = c.validate() else {
            panic!("expected config error")
        };
        assert!(errs.len() >= 3, "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("compare_kinds")));
        assert!(errs.iter().any(|e| e.contains("initial_velocities")));
        assert!(errs.iter().any(|e| e.contains("horizon_s")));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(SimConfig::from_toml("[sim]\nbogus = 1\n").is_err());
    }
}
