//! Per-vehicle controller state and the information it may see.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{plan_for_kind, ControllerKind};
use crate::controller::{predict_neighbor, ControlPlan, HorizonProblem, StopLine};
use crate::dynamics::VehicleState;
use crate::error::Result;
use crate::signal::{target_velocity, LightColor, SignalSchedule, SpatQuery, TargetCase};

use super::config::SimConfig;

/// Everything a vehicle may use to decide: its own state, the broadcast
/// signal timing and the state of the vehicle directly ahead. Nothing about
/// other vehicles is reachable from here.
#[derive(Debug, Clone, Copy)]
pub struct LocalObservation<'a> {
    pub time: f64,
    pub own: VehicleState,
    /// Most recent realized driver error.
    pub last_error: f64,
    pub predecessor: Option<VehicleState>,
    pub signals: &'a SignalSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub value: f64,
    pub case: Option<TargetCase>,
    pub intersection: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Decision {
    /// Commanded acceleration for this step.
    pub command: f64,
    pub target: TargetInfo,
    pub plan: ControlPlan,
}

/// Target speed for a vehicle at `own` given the broadcast schedule.
pub fn target_for(obs: &LocalObservation<'_>, cfg: &SimConfig) -> Result<TargetInfo> {
    let p = &cfg.vehicles.params;
    let free = cfg.signals.free_flow_speed.unwrap_or(p.v_max);
    match SpatQuery::upcoming(obs.signals, obs.own.s, obs.time) {
        Some(q) => {
            let tv = target_velocity(&q, obs.signals, p.v_min, p.v_max, cfg.signals.lookahead_greens)?;
            Ok(TargetInfo {
                value: tv.value,
                case: Some(tv.case),
                intersection: Some(q.intersection),
            })
        }
        None => Ok(TargetInfo {
            value: free,
            case: None,
            intersection: None,
        }),
    }
}

/// Red phases of the upcoming stop line within `[time, time + span)`.
pub fn stop_line_ahead(obs: &LocalObservation<'_>, span: f64) -> Option<StopLine> {
    let idx = obs.signals.upcoming(obs.own.s)?;
    let sched = &obs.signals.intersections[idx];
    let red = sched
        .windows
        .iter()
        .filter(|w| w.color == LightColor::Red && w.end > obs.time && w.start < obs.time + span)
        .map(|w| (w.start - obs.time, w.end - obs.time))
        .collect();
    Some(StopLine {
        position: sched.position,
        red,
    })
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub kind: ControllerKind,
    warm: Option<ControlPlan>,
    scenario_rng: ChaCha8Rng,
}

impl Agent {
    pub fn new(kind: ControllerKind, seed: u64, stream: u64) -> Self {
        let mut scenario_rng = ChaCha8Rng::seed_from_u64(seed);
        scenario_rng.set_stream(stream);
        Self {
            kind,
            warm: None,
            scenario_rng,
        }
    }

    pub fn decide(&mut self, obs: &LocalObservation<'_>, cfg: &SimConfig) -> Result<Decision> {
        let horizon = cfg.horizon_steps();
        let target = target_for(obs, cfg)?;
        let neighbor = predict_neighbor(obs.predecessor, horizon, cfg.sim.dt);
        let settings = cfg.solver.settings();
        let line = stop_line_ahead(obs, horizon as f64 * cfg.sim.dt);
        let problem = HorizonProblem {
            state: obs.own,
            neighbor: &neighbor,
            v_target: target.value,
            weights: &cfg.weights,
            params: &cfg.vehicles.params,
            fuel: &cfg.vehicles.fuel,
            dt: cfg.sim.dt,
            speed_penalty: settings.velocity_penalty,
            stop_line: line.as_ref(),
        };
        let plan = plan_for_kind(
            self.kind,
            problem,
            &cfg.driver,
            obs.last_error,
            &cfg.solver.scenarios(),
            &settings,
            self.warm.as_ref(),
            &mut self.scenario_rng,
        )?;
        let command = plan.first();
        self.warm = Some(plan.clone());
        Ok(Decision { command, target, plan })
    }
}
