//! Longitudinal point-mass vehicle model and the polynomial fuel-rate map.
//!
//! The plant advances position with the velocity at the start of the step
//! (explicit Euler) and clamps velocity into the speed limits afterwards.
//! Prediction inside the controller uses [`predict_step`], which applies the
//! same equations without clamping so that speed-limit violations can be
//! penalized instead of silently absorbed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const METERS_PER_MILE: f64 = 1609.344;
const ML_PER_GALLON: f64 = 3785.41;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Position along the road (m).
    pub s: f64,
    /// Velocity (m/s).
    pub v: f64,
}

impl VehicleState {
    pub fn new(s: f64, v: f64) -> Self {
        Self { s, v }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.v.is_finite()
    }
}

/// Physical constants and actuation/speed limits of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// m²
    pub frontal_area: f64,
    pub drag_coeff: f64,
    /// kg/m³
    pub air_density: f64,
    pub rolling_coeff: f64,
    /// Road grade (rad), small-angle.
    pub grade: f64,
    /// m/s²
    pub gravity: f64,
    /// m/s²
    pub u_min: f64,
    /// m/s²
    pub u_max: f64,
    /// m/s
    pub v_min: f64,
    /// m/s
    pub v_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1200.0,
            frontal_area: 2.5,
            drag_coeff: 0.32,
            air_density: 1.184,
            rolling_coeff: 0.015,
            grade: 0.0,
            gravity: 9.8,
            u_min: -3.0,
            u_max: 2.0,
            v_min: 0.0,
            v_max: 20.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let all = [
            self.mass,
            self.frontal_area,
            self.drag_coeff,
            self.air_density,
            self.rolling_coeff,
            self.grade,
            self.gravity,
            self.u_min,
            self.u_max,
            self.v_min,
            self.v_max,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            problems.push("vehicle parameters must be finite".to_string());
        }
        if self.mass <= 0.0 {
            problems.push(format!("mass must be > 0 (got {})", self.mass));
        }
        if self.frontal_area <= 0.0 {
            problems.push(format!("frontal_area must be > 0 (got {})", self.frontal_area));
        }
        if !(self.u_min < 0.0 && 0.0 < self.u_max) {
            problems.push(format!(
                "acceleration limits must satisfy u_min < 0 < u_max (got [{}, {}])",
                self.u_min, self.u_max
            ));
        }
        if self.v_min > self.v_max {
            problems.push(format!(
                "speed limits must satisfy v_min <= v_max (got [{}, {}])",
                self.v_min, self.v_max
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Aerodynamic drag deceleration at velocity `v` (m/s²).
    #[inline]
    pub fn drag_decel(&self, v: f64) -> f64 {
        self.drag_coeff * self.air_density * self.frontal_area * v * v / (2.0 * self.mass)
    }

    /// Saturates an effective control into `[u_min, u_max]`.
    #[inline]
    pub fn saturate(&self, u_f: f64) -> f64 {
        u_f.clamp(self.u_min, self.u_max)
    }

    #[inline]
    pub fn clamp_velocity(&self, v: f64) -> f64 {
        v.clamp(self.v_min, self.v_max)
    }
}

/// Coefficients of the cruise/acceleration fuel polynomials (ml/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuelParams {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Fuel rate while braking or stopped (ml/s).
    pub idle_rate: f64,
}

impl Default for FuelParams {
    fn default() -> Self {
        Self {
            b0: 0.1569,
            b1: 2.450e-2,
            b2: -7.415e-4,
            b3: 5.975e-5,
            c0: 0.07224,
            c1: 9.681e-2,
            c2: 1.075e-3,
            idle_rate: 0.1,
        }
    }
}

impl FuelParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let all = [
            self.b0,
            self.b1,
            self.b2,
            self.b3,
            self.c0,
            self.c1,
            self.c2,
            self.idle_rate,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            problems.push("fuel coefficients must be finite".to_string());
        }
        if self.idle_rate < 0.0 {
            problems.push(format!("idle_rate must be >= 0 (got {})", self.idle_rate));
        }
        if self.b0 < 0.0 {
            problems.push(format!("b0 (cruise rate at rest) must be >= 0 (got {})", self.b0));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    #[inline]
    pub fn cruise_rate(&self, v: f64) -> f64 {
        self.b0 + v * (self.b1 + v * (self.b2 + v * self.b3))
    }

    #[inline]
    fn accel_gain(&self, v: f64) -> f64 {
        self.c0 + v * (self.c1 + v * self.c2)
    }
}

/// Assistance-system command plus the driver's deviation from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Commanded acceleration (m/s²).
    pub u: f64,
    /// Driver error (m/s²).
    pub w: f64,
}

impl ControlInput {
    pub fn new(u: f64, w: f64) -> Self {
        Self { u, w }
    }

    /// The acceleration actually applied, `u + w`, saturated to the actuator box.
    pub fn effective(&self, params: &VehicleParams) -> f64 {
        params.saturate(self.u + self.w)
    }
}

/// One unclamped Euler step of the longitudinal dynamics.
#[inline]
pub fn predict_step(state: VehicleState, u_f: f64, params: &VehicleParams, dt: f64) -> VehicleState {
    let accel =
        -params.drag_decel(state.v) - params.rolling_coeff * params.gravity - params.gravity * params.grade + u_f;
    VehicleState {
        s: state.s + dt * state.v,
        v: state.v + dt * accel,
    }
}

/// Plant step: [`predict_step`] followed by clamping velocity into `[v_min, v_max]`.
pub fn step_dynamics(state: VehicleState, u_f: f64, params: &VehicleParams, dt: f64) -> Result<VehicleState> {
    if !state.is_finite() || !u_f.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite plant input: s = {}, v = {}, u_f = {}",
            state.s, state.v, u_f
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let mut next = predict_step(state, u_f, params, dt);
    next.v = params.clamp_velocity(next.v);
    Ok(next)
}

/// Fuel rate without input checks. Non-positive velocity is treated as idling.
#[inline]
pub(crate) fn fuel_rate_unchecked(v: f64, u_f: f64, params: &VehicleParams, fuel: &FuelParams) -> f64 {
    if v <= 0.0 || u_f < 0.0 {
        return fuel.idle_rate;
    }
    // Grade is deliberately absent from the fuel acceleration term.
    let a_hat = -params.drag_decel(v) - params.rolling_coeff * params.gravity + u_f;
    let rate = fuel.cruise_rate(v) + a_hat * fuel.accel_gain(v);
    rate.max(0.0)
}

/// Instantaneous fuel consumption (ml/s) at velocity `v` under effective control `u_f`.
///
/// Braking (`u_f < 0`) and standing still consume the constant idle rate;
/// otherwise the cruise polynomial plus the acceleration polynomial scaled by
/// the net acceleration. Negative results are floored at zero.
pub fn fuel_rate(v: f64, u_f: f64, params: &VehicleParams, fuel: &FuelParams) -> Result<f64> {
    if !v.is_finite() || !u_f.is_finite() {
        return Err(Error::invalid(format!("non-finite fuel input: v = {v}, u_f = {u_f}")));
    }
    if v < 0.0 {
        return Err(Error::invalid(format!("fuel_rate requires v >= 0, got {v}")));
    }
    Ok(fuel_rate_unchecked(v, u_f, params, fuel))
}

/// Miles per US gallon for a trip.
pub fn trip_mpg(fuel_consumed_ml: f64, distance_m: f64) -> Result<f64> {
    if !(fuel_consumed_ml > 0.0) {
        return Err(Error::ZeroFuel { distance: distance_m });
    }
    if distance_m < 0.0 {
        return Err(Error::invalid(format!("distance must be >= 0, got {distance_m}")));
    }
    Ok((distance_m / METERS_PER_MILE) / (fuel_consumed_ml / ML_PER_GALLON))
}
