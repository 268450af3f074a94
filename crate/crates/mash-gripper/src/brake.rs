//! Electrostatic-adhesion brake: holding force, engagement lag, force filtering.
//!
//! The brake is a parallel-plate electroadhesive clutch bonded to one wall of
//! an actuator. With drive voltage `U` across a dielectric of thickness `d`,
//! the tangential holding force is
//!
//! ```text
//! F = mu * eps_r * eps_0 * A * U^2 / (2 d^2)
//! ```
//!
//! Engagement is not instantaneous: charge build-up and release follow a
//! first-order lag with time constant `tau`, which reproduces the observed
//! 150-200 ms activation delay. Measured force traces are smoothed with a
//! limiting recursive average: an exponential moving average whose per-sample
//! update is clamped to a maximum step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity, F/m.
pub const EPS_0: f64 = 8.854_187_812_8e-12;

/// Standard gravity, m/s^2.
pub const GRAVITY: f64 = 9.81;

/// Electrode and drive parameters of one brake layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BrakeParams {
    /// Relative permittivity of the dielectric film.
    pub eps_r: f64,
    /// Vacuum permittivity, F/m. Overridable only for unit experiments.
    pub eps_0: f64,
    /// Overlap area of the electrode pair, m^2.
    pub area_m2: f64,
    /// Effective dielectric gap, m.
    pub gap_m: f64,
    /// Friction coefficient of the clutch interface.
    pub mu: f64,
    /// Maximum safe drive voltage, V.
    pub u_max_v: f64,
    /// Engagement time constant, s.
    pub tau_s: f64,
}

impl Default for BrakeParams {
    /// Defaults reproduce a 0.2 kg holding capacity (1.962 N) at 2000 V:
    /// the 44.14 um gap is the value backed out from that requirement.
    fn default() -> Self {
        BrakeParams {
            eps_r: 3.4,
            eps_0: EPS_0,
            area_m2: 3.175e-4,
            gap_m: 44.14e-6,
            mu: 0.2,
            u_max_v: 2000.0,
            tau_s: 0.08,
        }
    }
}

impl BrakeParams {
    /// Lists every violated field constraint; empty when valid.
    pub fn violations(&self, ctx: &str) -> Vec<String> {
        let mut v = Vec::new();
        let mut pos = |name: &str, val: f64| {
            if !(val > 0.0) || !val.is_finite() {
                v.push(format!("{ctx}.{name}: must be finite and > 0, got {val}"));
            }
        };
        pos("eps_r", self.eps_r);
        pos("eps_0", self.eps_0);
        pos("area_m2", self.area_m2);
        pos("gap_m", self.gap_m);
        pos("mu", self.mu);
        pos("u_max_v", self.u_max_v);
        pos("tau_s", self.tau_s);
        v
    }

    /// Validates all field constraints.
    pub fn validate(&self) -> Result<()> {
        let v = self.violations("brake");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { violations: v })
        }
    }
}

/// Tangential holding force (N) at drive voltage `voltage` (V).
///
/// Returns a domain error for voltages outside `[0, u_max]`; an
/// out-of-envelope drive command is unsafe, not merely inaccurate.
pub fn braking_force(params: &BrakeParams, voltage: f64) -> Result<f64> {
    if !voltage.is_finite() || voltage < 0.0 || voltage > params.u_max_v {
        return Err(Error::domain(format!(
            "drive voltage {voltage} V outside [0, {}] V",
            params.u_max_v
        )));
    }
    let d = params.gap_m;
    Ok(params.mu * params.eps_r * params.eps_0 * params.area_m2 * voltage * voltage / (2.0 * d * d))
}

/// Dielectric gap (m) that yields `target_force` (N) at `voltage` (V).
///
/// Inverse of [`braking_force`] in the gap: `d = sqrt(mu eps_r eps_0 A U^2 / (2 F))`.
/// The `gap_m` field of `params` is ignored. Zero or negative force or voltage
/// admits no gap and is reported as unsatisfiable.
pub fn required_gap_for_force(params: &BrakeParams, voltage: f64, target_force: f64) -> Result<f64> {
    if !voltage.is_finite() || voltage <= 0.0 || voltage > params.u_max_v {
        return Err(Error::no_solution(format!(
            "no gap produces force at drive voltage {voltage} V (need 0 < U <= {} V)",
            params.u_max_v
        )));
    }
    if !target_force.is_finite() || target_force <= 0.0 {
        return Err(Error::no_solution(format!(
            "no gap produces target force {target_force} N (need F > 0)"
        )));
    }
    let num = params.mu * params.eps_r * params.eps_0 * params.area_m2 * voltage * voltage;
    Ok((num / (2.0 * target_force)).sqrt())
}

/// Instantaneous electrical and mechanical state of one brake layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakeState {
    /// Commanded drive voltage, V.
    pub voltage_v: f64,
    /// Engagement fraction in [0, 1]; 1 = fully clutched.
    pub engagement: f64,
}

impl Default for BrakeState {
    fn default() -> Self {
        BrakeState { voltage_v: 0.0, engagement: 0.0 }
    }
}

impl BrakeState {
    /// Holding force currently available, N: `engagement * braking_force(U)`.
    pub fn available_force(&self, params: &BrakeParams) -> Result<f64> {
        Ok(self.engagement * braking_force(params, self.voltage_v)?)
    }
}

/// Advances brake engagement by `dt` seconds under `commanded_voltage`.
///
/// First-order lag toward 1 while the voltage is on, toward 0 while off:
/// `e' = target + (e - target) * exp(-dt / tau)`. `dt = 0` returns the state
/// unchanged apart from the recorded voltage; negative `dt` is a domain error.
pub fn engagement_step(
    state: &BrakeState,
    commanded_voltage: f64,
    dt: f64,
    params: &BrakeParams,
) -> Result<BrakeState> {
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::domain(format!("time step {dt} s must be >= 0")));
    }
    if !commanded_voltage.is_finite() || commanded_voltage < 0.0 || commanded_voltage > params.u_max_v {
        return Err(Error::domain(format!(
            "commanded voltage {commanded_voltage} V outside [0, {}] V",
            params.u_max_v
        )));
    }
    let target = if commanded_voltage > 0.0 { 1.0 } else { 0.0 };
    let decay = (-dt / params.tau_s).exp();
    let engagement = (target + (state.engagement - target) * decay).clamp(0.0, 1.0);
    Ok(BrakeState { voltage_v: commanded_voltage, engagement })
}

/// State of the limiting recursive average used to smooth force readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    /// Current filtered value.
    pub value: f64,
    /// Averaging weight, 0 < alpha <= 1.
    pub alpha: f64,
    /// Largest admissible change per sample (same unit as `value`); may be
    /// `INFINITY`, in which case the filter is a plain exponential average.
    pub max_step: f64,
}

impl FilterState {
    pub fn new(initial: f64, alpha: f64, max_step: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!("filter alpha {alpha} outside (0, 1]")));
        }
        if !(max_step > 0.0) {
            return Err(Error::domain(format!("filter max_step {max_step} must be > 0")));
        }
        Ok(FilterState { value: initial, alpha, max_step })
    }
}

/// One update of the limiting recursive average; returns the filtered value.
///
/// `value' = value + clamp(alpha * (sample - value), -max_step, +max_step)`.
/// The clamp bounds the slew rate so a force spike cannot jerk the estimate.
pub fn limited_recursive_average(state: &mut FilterState, sample: f64) -> f64 {
    let step = (state.alpha * (sample - state.value)).clamp(-state.max_step, state.max_step);
    state.value += step;
    state.value
}
