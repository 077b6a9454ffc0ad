//! Traffic-signal phase schedules (SPAT) and red-light-avoiding target speeds.
//!
//! Each intersection owns a realized list of half-open phase windows
//! `[start, end)` that alternate red/green starting with red at `t = 0`.
//! Red and green durations are drawn independently per cycle.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightColor {
    Red,
    Green,
}

impl std::fmt::Display for LightColor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LightColor::Red => f.write_str("red"),
            LightColor::Green => f.write_str("green"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub start: f64,
    pub end: f64,
    pub color: LightColor,
}

impl PhaseWindow {
    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSchedule {
    /// Stop-line position along the road (m).
    pub position: f64,
    pub windows: Vec<PhaseWindow>,
}

impl IntersectionSchedule {
    /// Index of the window containing `t`, if the schedule covers it.
    pub fn window_index_at(&self, t: f64) -> Option<usize> {
        if self.windows.is_empty() || t < self.windows[0].start {
            return None;
        }
        let idx = self.windows.partition_point(|w| w.start <= t);
        let w = &self.windows[idx - 1];
        w.contains(t).then_some(idx - 1)
    }

    /// End of the generated schedule (s).
    pub fn horizon(&self) -> f64 {
        self.windows.last().map_or(0.0, |w| w.end)
    }
}

/// Uniform sampling ranges for red and green durations (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub red: (f64, f64),
    pub green: (f64, f64),
}

impl Default for PhaseTiming {
    fn default() -> Self {
        Self {
            red: (37.0, 43.0),
            green: (12.0, 17.0),
        }
    }
}

impl PhaseTiming {
    pub fn fixed(red: f64, green: f64) -> Self {
        Self {
            red: (red, red),
            green: (green, green),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, (lo, hi)) in [("red", self.red), ("green", self.green)] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                problems.push(format!(
                    "{name} duration range must satisfy 0 < lo <= hi (got [{lo}, {hi}])"
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Longest possible cycle.
    pub fn max_cycle(&self) -> f64 {
        self.red.1 + self.green.1
    }
}

fn sample_duration<R: Rng + ?Sized>((lo, hi): (f64, f64), rng: &mut R) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSchedule {
    pub intersections: Vec<IntersectionSchedule>,
}

impl SignalSchedule {
    /// Realizes schedules covering at least `[0, horizon)` for every position.
    ///
    /// Draw order is intersection-major then cycle-major, red before green.
    pub fn generate<R: Rng + ?Sized>(positions: &[f64], timing: &PhaseTiming, horizon: f64, rng: &mut R) -> Self {
        let intersections = positions
            .iter()
            .map(|&position| {
                let mut windows = Vec::new();
                let mut t = 0.0;
                while t < horizon {
                    let red = sample_duration(timing.red, rng);
                    let green = sample_duration(timing.green, rng);
                    let switch = t + red;
                    let end = switch + green;
                    windows.push(PhaseWindow {
                        start: t,
                        end: switch,
                        color: LightColor::Red,
                    });
                    windows.push(PhaseWindow {
                        start: switch,
                        end,
                        color: LightColor::Green,
                    });
                    t = end;
                }
                IntersectionSchedule { position, windows }
            })
            .collect();
        Self { intersections }
    }

    /// Deterministic fixed-duration schedule.
    pub fn fixed(positions: &[f64], red: f64, green: f64, horizon: f64) -> Self {
        // Degenerate ranges never consume randomness.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        Self::generate(positions, &PhaseTiming::fixed(red, green), horizon, &mut rng)
    }

    pub fn empty() -> Self {
        Self {
            intersections: Vec::new(),
        }
    }

    /// Evenly spaced stop lines `first, first + spacing, ...` strictly below `until`.
    pub fn positions(first: f64, spacing: f64, until: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut p = first;
        while p < until {
            out.push(p);
            p += spacing;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.intersections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intersections.is_empty()
    }

    /// Index of the first stop line at or ahead of position `s`.
    pub fn upcoming(&self, s: f64) -> Option<usize> {
        let idx = self.intersections.partition_point(|i| i.position < s);
        (idx < self.intersections.len()).then_some(idx)
    }

    pub fn phase_at(&self, intersection: usize, time: f64) -> Result<LightColor> {
        let sched = self.intersection(intersection)?;
        sched
            .window_index_at(time)
            .map(|i| sched.windows[i].color)
            .ok_or(Error::ScheduleExhausted { intersection, time })
    }

    pub fn intersection(&self, index: usize) -> Result<&IntersectionSchedule> {
        self.intersections
            .get(index)
            .ok_or_else(|| Error::invalid(format!("no intersection with index {index}")))
    }

    /// Checks contiguity, alternation (red first) and the duration ranges.
    pub fn validate(&self, timing: Option<&PhaseTiming>) -> Result<()> {
        let mut problems = Vec::new();
        for (q, sched) in self.intersections.iter().enumerate() {
            let mut prev_end = 0.0;
            for (k, w) in sched.windows.iter().enumerate() {
                let expect = if k % 2 == 0 { LightColor::Red } else { LightColor::Green };
                if w.color != expect {
                    problems.push(format!(
                        "intersection {q} window {k}: expected {expect}, got {}",
                        w.color
                    ));
                }
                if w.start != prev_end || !(w.end > w.start) {
                    problems.push(format!(
                        "intersection {q} window {k}: not contiguous [{}, {})",
                        w.start, w.end
                    ));
                }
                if let Some(timing) = timing {
                    let (lo, hi) = match w.color {
                        LightColor::Red => timing.red,
                        LightColor::Green => timing.green,
                    };
                    let d = w.end - w.start;
                    // Durations are reconstructed from absolute times, so allow rounding.
                    let slack = 1e-9 * w.end.abs().max(1.0);
                    if d < lo - slack || d > hi + slack {
                        problems.push(format!(
                            "intersection {q} window {k}: duration {d} outside [{lo}, {hi}]"
                        ));
                    }
                }
                prev_end = w.end;
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sched: Self = serde_json::from_str(text)?;
        sched.validate(None)?;
        Ok(sched)
    }
}

/// What a vehicle knows about its upcoming signal at time `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatQuery {
    pub position: f64,
    pub time: f64,
    pub intersection: usize,
    /// Distance to the stop line (m).
    pub distance: f64,
}

impl SpatQuery {
    /// Query against the first stop line at or ahead of `position`, if any.
    pub fn upcoming(schedule: &SignalSchedule, position: f64, time: f64) -> Option<Self> {
        let intersection = schedule.upcoming(position)?;
        let distance = schedule.intersections[intersection].position - position;
        Some(Self {
            position,
            time,
            intersection,
            distance,
        })
    }
}

/// Which branch of the target-speed rule produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetCase {
    /// Light is red: arrive when the next green begins.
    RedArrival,
    /// Light is green and the stop line is reachable at `v_max` before it ends.
    GreenCruise,
    /// Aim for the start of a later green window.
    NextGreen,
    /// No reachable green within the look-ahead: plan to stop.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetVelocity {
    pub value: f64,
    pub case: TargetCase,
    /// True when the raw ratio fell outside `[v_min, v_max]`.
    pub clamped: bool,
    /// Green window the vehicle is aiming for.
    pub window: Option<usize>,
}

/// Speed that carries the vehicle to the stop line inside a green window.
///
/// Scans at most `lookahead_greens` green windows starting from the current
/// one. A green window is reachable if the stop line can be crossed before it
/// ends at `v_max`. During the current green the answer is `v_max`; for a
/// future window it is the speed arriving exactly when the window opens,
/// clamped to `[v_min, v_max]`.
pub fn target_velocity(
    query: &SpatQuery,
    schedule: &SignalSchedule,
    v_min: f64,
    v_max: f64,
    lookahead_greens: usize,
) -> Result<TargetVelocity> {
    if !(query.distance >= 0.0) {
        return Err(Error::invalid(format!(
            "distance to stop line must be >= 0, got {}",
            query.distance
        )));
    }
    let sched = schedule.intersection(query.intersection)?;
    let exhausted = || Error::ScheduleExhausted {
        intersection: query.intersection,
        time: query.time,
    };
    let t = query.time;
    let d = query.distance;
    let current = sched.window_index_at(t).ok_or_else(exhausted)?;
    let currently_red = sched.windows[current].color == LightColor::Red;

    let mut examined = 0;
    for (idx, w) in sched.windows.iter().enumerate().skip(current) {
        if w.color != LightColor::Green {
            continue;
        }
        if examined == lookahead_greens {
            break;
        }
        examined += 1;
        let until_end = w.end - t;
        if d / until_end > v_max {
            continue;
        }
        if w.start <= t {
            return Ok(TargetVelocity {
                value: v_max.max(v_min),
                case: TargetCase::GreenCruise,
                clamped: false,
                window: Some(idx),
            });
        }
        let raw = d / (w.start - t);
        let value = raw.clamp(v_min, v_max);
        let case = if currently_red && idx == current + 1 {
            TargetCase::RedArrival
        } else {
            TargetCase::NextGreen
        };
        return Ok(TargetVelocity {
            value,
            case,
            clamped: value != raw,
            window: Some(idx),
        });
    }
    if examined < lookahead_greens {
        return Err(exhausted());
    }
    Ok(TargetVelocity {
        value: v_min,
        case: TargetCase::Infeasible,
        clamped: false,
        window: None,
    })
}
