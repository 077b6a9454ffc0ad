//! Closed-loop simulation of a platoon through the signal corridor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{plant_error_mode, PlantErrorMode};
use crate::dynamics::{fuel_rate, step_dynamics, trip_mpg, VehicleState};
use crate::error::{Error, Result};
use crate::signal::{LightColor, SignalSchedule};

use super::agent::{Agent, LocalObservation};
use super::config::SimConfig;
use super::log::{Crossing, StepRecord, TrajectoryLog, VehicleSummary};

/// Speeds at or below this count as standing (m/s).
pub const IDLE_SPEED: f64 = 0.1;

const SIGNAL_STREAM: u64 = 0;

fn plant_stream(vehicle: usize) -> u64 {
    1 + 2 * vehicle as u64
}

fn scenario_stream(vehicle: usize) -> u64 {
    2 + 2 * vehicle as u64
}

/// Signal schedule for `(config, seed)`; empty when signals are disabled.
///
/// Intersections cover every position reachable at `v_max`, and each one has
/// windows well past the end of the run so target look-ahead never runs dry.
pub fn build_schedule(cfg: &SimConfig, seed: u64) -> SignalSchedule {
    let sig = &cfg.signals;
    if !sig.enabled {
        return SignalSchedule::empty();
    }
    let timing = sig.timing();
    let front = cfg
        .vehicles
        .initial_positions
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let reach = front + cfg.vehicles.params.v_max * cfg.sim.total_time_s + sig.spacing_m;
    let positions = SignalSchedule::positions(sig.first_position_m, sig.spacing_m, reach);
    let horizon = cfg.sim.total_time_s + cfg.sim.horizon_s + (sig.lookahead_greens as f64 + 1.0) * timing.max_cycle();
    let mut rng = ChaCha8Rng::seed_from_u64(sig.schedule_seed.unwrap_or(seed));
    rng.set_stream(SIGNAL_STREAM);
    SignalSchedule::generate(&positions, &timing, horizon, &mut rng)
}

/// Result of checking one plant step against the stop lines it passes.
#[derive(Debug, Clone, PartialEq)]
pub struct GuardOutcome {
    pub state: VehicleState,
    /// Lines legitimately crossed during the step.
    pub crossings: Vec<Crossing>,
    /// Intersection whose red line the step would have run.
    pub violation: Option<usize>,
}

/// Stops a step that would cross a stop line in red.
///
/// The crossing time is interpolated along the step. If the light is red
/// then, the vehicle is held at the line with zero speed.
pub fn stop_line_guard(
    before: VehicleState,
    after: VehicleState,
    schedule: &SignalSchedule,
    time: f64,
    dt: f64,
) -> Result<GuardOutcome> {
    let mut crossings = Vec::new();
    if after.s > before.s {
        let first = schedule.upcoming(before.s);
        if let Some(first) = first {
            for idx in first..schedule.len() {
                let line = schedule.intersections[idx].position;
                if line >= after.s {
                    break;
                }
                let frac = (line - before.s) / (after.s - before.s);
                let t_cross = time + frac * dt;
                let color = schedule.phase_at(idx, t_cross)?;
                if color == LightColor::Red {
                    return Ok(GuardOutcome {
                        state: VehicleState::new(line, 0.0),
                        crossings,
                        violation: Some(idx),
                    });
                }
                crossings.push(Crossing {
                    intersection: idx,
                    time: t_cross,
                    color,
                });
            }
        }
    }
    Ok(GuardOutcome {
        state: after,
        crossings,
        violation: None,
    })
}

struct Tally {
    fuel: f64,
    idle: f64,
    min_gap: Option<f64>,
    red: usize,
    collisions: usize,
    crossings: Vec<Crossing>,
    unconverged: usize,
}

pub fn run_simulation(cfg: &SimConfig, seed: u64) -> Result<TrajectoryLog> {
    let schedule = build_schedule(cfg, seed);
    run_simulation_with_schedule(cfg, seed, schedule)
}

/// Runs one closed-loop episode against a given schedule.
///
/// Each step every vehicle plans from the same snapshot, leader first, then
/// all vehicles advance. Driver errors come from one stream per vehicle that
/// does not depend on the controller, so runs of different controllers with
/// the same seed see the same error realizations.
pub fn run_simulation_with_schedule(cfg: &SimConfig, seed: u64, schedule: SignalSchedule) -> Result<TrajectoryLog> {
    cfg.validate()?;
    schedule.validate(None)?;
    let n = cfg.vehicle_count();
    let dt = cfg.sim.dt;
    let steps = cfg.total_steps();
    let params = &cfg.vehicles.params;
    let fuel = &cfg.vehicles.fuel;
    let model = &cfg.driver;

    let mut states: Vec<VehicleState> = cfg
        .vehicles
        .initial_positions
        .iter()
        .zip(&cfg.vehicles.initial_velocities)
        .map(|(&s, &v)| VehicleState::new(s, v))
        .collect();
    let initial = states.clone();
    let mut agents: Vec<Agent> = (0..n)
        .map(|i| Agent::new(cfg.vehicles.kind_of(i), seed, scenario_stream(i)))
        .collect();
    let mut plant_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(plant_stream(i));
            r
        })
        .collect();
    let mut markov = vec![model.neutral_state(); n];
    let mut last_error = vec![0.0; n];
    let mut tallies: Vec<Tally> = (0..n)
        .map(|i| Tally {
            fuel: 0.0,
            idle: 0.0,
            min_gap: (i > 0).then(|| states[i - 1].s - states[i].s),
            red: 0,
            collisions: 0,
            crossings: Vec::new(),
            unconverged: 0,
        })
        .collect();
    let mut records = Vec::with_capacity(steps * n);

    for k in 0..steps {
        let time = k as f64 * dt;
        let snapshot = states.clone();
        for i in 0..n {
            let before = snapshot[i];
            let obs = LocalObservation {
                time,
                own: before,
                last_error: last_error[i],
                predecessor: (i > 0).then(|| snapshot[i - 1]),
                signals: &schedule,
            };
            let decision = agents[i].decide(&obs, cfg)?;
            let w = match plant_error_mode(agents[i].kind) {
                PlantErrorMode::Zero => 0.0,
                PlantErrorMode::Markov => {
                    let (next, w) = model.sample_next_error(markov[i], &mut plant_rngs[i])?;
                    markov[i] = next;
                    w
                }
            };
            last_error[i] = w;
            let u_f = params.saturate(decision.command + w);
            let rate = fuel_rate(before.v, u_f, params, fuel)?;
            let raw = step_dynamics(before, u_f, params, dt)?;
            let guard = stop_line_guard(before, raw, &schedule, time, dt)?;
            let mut next = guard.state;
            // Followers never pass their predecessor; reaching it is a collision.
            let t = &mut tallies[i];
            if i > 0 && next.s >= states[i - 1].s {
                next = VehicleState::new(states[i - 1].s, next.v.min(states[i - 1].v));
                t.collisions += 1;
            }
            t.fuel += rate * dt;
            if before.v <= IDLE_SPEED {
                t.idle += dt;
            }
            if guard.violation.is_some() {
                t.red += 1;
            }
            t.crossings.extend(guard.crossings);
            if !decision.plan.converged {
                t.unconverged += 1;
            }
            let light = decision
                .target
                .intersection
                .map(|j| schedule.phase_at(j, time))
                .transpose()?;
            records.push(StepRecord {
                step: k,
                time,
                vehicle: i,
                controller: agents[i].kind,
                s: before.s,
                v: before.v,
                u: decision.command,
                w,
                u_f,
                fuel_rate: rate,
                v_target: decision.target.value,
                target_case: decision.target.case,
                signal: decision.target.intersection,
                light,
                scenarios: decision.plan.scenario_count,
                solver_iterations: decision.plan.iterations,
                guard: guard.violation.is_some(),
            });
            states[i] = next;
        }
        for i in 1..n {
            let gap = states[i - 1].s - states[i].s;
            let t = &mut tallies[i];
            t.min_gap = Some(t.min_gap.map_or(gap, |g| g.min(gap)));
        }
    }

    let summaries = tallies
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let distance = states[i].s - initial[i].s;
            let mpg = match trip_mpg(t.fuel, distance) {
                Ok(m) => m,
                Err(Error::ZeroFuel { .. }) if distance == 0.0 => 0.0,
                Err(e) => return Err(e),
            };
            Ok(VehicleSummary {
                vehicle: i,
                controller: agents[i].kind,
                fuel_ml: t.fuel,
                distance_m: distance,
                mpg,
                idle_s: t.idle,
                min_spacing_m: t.min_gap,
                red_light_violations: t.red,
                collisions: t.collisions,
                crossings: t.crossings,
                unconverged_solves: t.unconverged,
                final_state: states[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TrajectoryLog {
        seed,
        dt,
        steps,
        records,
        summaries,
        schedule,
    })
}
