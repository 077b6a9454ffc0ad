//! Derivative-free box-constrained local search.
//!
//! Cyclic coordinate descent with a shared step that halves whenever a full
//! sweep improves the objective by less than the tolerance. Works on
//! non-smooth objectives (the fuel map switches branches at zero
//! acceleration), at the price of only finding local minima.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Maximum number of full coordinate sweeps.
    pub max_iterations: usize,
    /// Sweep improvement below which the step is shrunk.
    pub tolerance: f64,
    /// Starting step from a cold start (m/s²).
    pub initial_step: f64,
    /// Starting step when warm-started from a previous plan (m/s²).
    pub warm_step: f64,
    /// Search stops once a stalled sweep happens at or below this step.
    pub min_step: f64,
    /// Weight of the quadratic penalty on predicted speeds outside the limits.
    pub velocity_penalty: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-6,
            initial_step: 0.5,
            warm_step: 0.125,
            min_step: 1e-3,
            velocity_penalty: 1e3,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_iterations == 0 {
            return Err("solver.max_iterations must be >= 1".into());
        }
        if !(self.tolerance >= 0.0) {
            return Err("solver.tolerance must be >= 0".into());
        }
        if !(self.min_step > 0.0 && self.initial_step >= self.min_step && self.warm_step >= self.min_step) {
            return Err("solver steps must satisfy 0 < min_step <= warm_step, initial_step".into());
        }
        if !(self.velocity_penalty >= 0.0) {
            return Err("solver.velocity_penalty must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` over the box `[lo, hi]^n` starting from `x0`.
///
/// Consecutive evaluations differ in a single coordinate, so objectives
/// may cache work that depends only on the unchanged prefix.
pub fn coordinate_descent<F>(mut f: F, x0: &[f64], lo: f64, hi: f64, step: f64, settings: &SolverSettings) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x: Vec<f64> = x0.iter().map(|v| v.clamp(lo, hi)).collect();
    let mut fx = f(&x);
    let mut evaluations = 1;
    let mut step = step.max(settings.min_step);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iterations {
        iterations += 1;
        let sweep_start = fx;
        for j in 0..x.len() {
            let orig = x[j];
            let mut accepted = false;
            for dir in [1.0, -1.0] {
                let cand = (orig + dir * step).clamp(lo, hi);
                if cand == orig {
                    continue;
                }
                x[j] = cand;
                let fc = f(&x);
                evaluations += 1;
                if fc < fx {
                    fx = fc;
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                x[j] = orig;
            }
        }
        if sweep_start - fx < settings.tolerance {
            if step <= settings.min_step {
                converged = true;
                break;
            }
            step = (step * 0.5).max(settings.min_step);
        }
    }

    Minimum {
        x,
        value: fx,
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_quadratic_minimum() {
        let target = [0.3, -1.2, 0.75];
        let m = coordinate_descent(
            |x| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum(),
            &[0.0; 3],
            -3.0,
            2.0,
            0.5,
            &SolverSettings::default(),
        );
        assert!(m.converged);
        for (a, b) in m.x.iter().zip(&target) {
            assert!((a - b).abs() < 2e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn respects_box() {
        let m = coordinate_descent(
            |x| -(x[0] + x[1]),
            &[0.0, 0.0],
            -3.0,
            2.0,
            0.5,
            &SolverSettings::default(),
        );
        assert_eq!(m.x, vec![2.0, 2.0]);
    }

    #[test]
    fn iteration_cap_reported() {
        let settings = SolverSettings {
            max_iterations: 2,
            ..SolverSettings::default()
        };
        let m = coordinate_descent(|x| (x[0] - 1.7).powi(2), &[0.0], -3.0, 2.0, 1e-3, &settings);
        assert!(!m.converged);
        assert_eq!(m.iterations, 2);
    }
}
