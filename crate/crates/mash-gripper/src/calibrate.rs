//! Bounded least-squares fitting of model parameters to measured data.
//!
//! A [`CalibrationProblem`] names one of six forward models, carries the
//! measurement rows it must reproduce, and optionally overrides the search
//! bounds, the starting point, and the convergence tolerance. [`calibrate`]
//! minimizes the sum of squared residuals with a derivative-free coordinate
//! descent: a coarse scan per parameter seeds a golden-section refinement,
//! and the sweeps repeat until the improvement stalls. The returned fit is
//! never worse than the starting point.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuator::{tip_deflection_under_load, ActuatorGeometry, StiffnessParams};
use crate::brake::{limited_recursive_average, FilterState};
use crate::error::{Error, Result};
use crate::gripper::{pair_aperture, ApertureMode, GripperConfig, PairId};
use crate::material::ExtensionLaw;

/// Which forward model the fitted parameters feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Chamber lengths (mm) at each distinct dataset pressure, fitted as one
    /// parameter per anchor. Inputs are `[pressure_kpa]`, outputs measured
    /// lengths (mm). The dataset must include a zero-pressure row.
    ExtensionLaw,
    /// Spacing of the strain-limiting layers (mm), one parameter. Inputs are
    /// `[pressure_kpa]`, outputs outward pair apertures (mm) measured at
    /// full brake engagement.
    LayerGap,
    /// Bending rigidities `[ei_free_nmm2, ei_engaged_nmm2]`. Inputs are
    /// `[load_g, voltage_v]`, outputs tip deflection angles (rad).
    Stiffness,
    /// Brake engagement time constant (s), one parameter. Inputs are
    /// `[t_s]` elapsed since switch-on from rest, outputs engagement
    /// fractions.
    BrakeTau,
    /// Force filter constants `[alpha, max_step]`. Inputs are `[sample]`,
    /// replayed in row order through a filter starting at zero; outputs are
    /// the filtered values.
    Filter,
    /// Fingertip normal force per kilopascal of residual squeeze (N/kPa),
    /// one parameter. Inputs are `[delta_p_kpa]`, outputs per-tip normal
    /// forces (N).
    GripForceGain,
}

impl ModelKind {
    /// Number of model inputs per data row.
    fn input_arity(self) -> usize {
        match self {
            ModelKind::Stiffness => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModelKind::ExtensionLaw => "extension_law",
            ModelKind::LayerGap => "layer_gap",
            ModelKind::Stiffness => "stiffness",
            ModelKind::BrakeTau => "brake_tau",
            ModelKind::Filter => "filter",
            ModelKind::GripForceGain => "grip_force_gain",
        }
    }
}

/// One measurement: the model inputs and the observed output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataRow {
    pub input: Vec<f64>,
    pub output: f64,
}

fn default_tolerance() -> f64 {
    1e-9
}

/// A fitting task: model selector, dataset, and search controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationProblem {
    pub model: ModelKind,
    pub dataset: Vec<DataRow>,
    /// Per-parameter search interval `[lo, hi]`; empty selects the model's
    /// default bounds.
    #[serde(default)]
    pub bounds: Vec<[f64; 2]>,
    /// A descent sweep that improves the squared error by less than this
    /// fraction counts as converged.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Starting parameters; the model default when absent.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
}

/// Outcome of [`calibrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub model: ModelKind,
    pub parameters: Vec<f64>,
    /// Sum of squared residuals at the fitted parameters.
    pub sse: f64,
    /// Forward-model evaluations spent.
    pub iterations: u64,
    pub converged: bool,
}

impl CalibrationProblem {
    /// Reads a problem from a JSON file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read problem {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::usage(format!("cannot parse problem {}: {e}", path.display())))
    }

    /// Sorted distinct first inputs; the anchor pressures of the
    /// `extension_law` model.
    fn distinct_pressures(&self) -> Vec<f64> {
        let mut ps: Vec<f64> =
            self.dataset.iter().filter_map(|r| r.input.first().copied()).collect();
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ps.dedup();
        ps
    }

    /// Number of parameters the chosen model exposes for this dataset.
    pub fn param_count(&self) -> usize {
        match self.model {
            ModelKind::ExtensionLaw => self.distinct_pressures().len(),
            ModelKind::Stiffness | ModelKind::Filter => 2,
            ModelKind::LayerGap | ModelKind::BrakeTau | ModelKind::GripForceGain => 1,
        }
    }

    /// Model default search intervals, one per parameter.
    fn default_bounds(&self) -> Vec<[f64; 2]> {
        match self.model {
            ModelKind::ExtensionLaw => vec![[1.0, 1000.0]; self.param_count()],
            // Lower edge sits above the regime where a wider rest aperture
            // masquerades as a better fit through non-monotone bending.
            ModelKind::LayerGap => vec![[12.5, 40.0]],
            ModelKind::Stiffness => vec![[1.0, 1.0e4], [1.0, 1.0e5]],
            ModelKind::BrakeTau => vec![[1.0e-3, 10.0]],
            ModelKind::Filter => vec![[1.0e-3, 1.0], [1.0e-6, 1.0e3]],
            ModelKind::GripForceGain => vec![[1.0e-4, 10.0]],
        }
    }

    /// Bounds actually searched: the explicit ones, or the defaults.
    fn effective_bounds(&self) -> Vec<[f64; 2]> {
        if self.bounds.is_empty() {
            self.default_bounds()
        } else {
            self.bounds.clone()
        }
    }

    /// Starting point clamped into `bounds`.
    fn effective_initial(&self, bounds: &[[f64; 2]]) -> Vec<f64> {
        let raw = match &self.initial {
            Some(x) => x.clone(),
            None => match self.model {
                // Mean measured length per anchor pressure: an exact fit
                // already whenever the dataset is single-valued.
                ModelKind::ExtensionLaw => {
                    let ps = self.distinct_pressures();
                    ps.iter()
                        .map(|&p| {
                            let (mut sum, mut n) = (0.0, 0);
                            for row in &self.dataset {
                                if row.input.first() == Some(&p) {
                                    sum += row.output;
                                    n += 1;
                                }
                            }
                            sum / n.max(1) as f64
                        })
                        .collect()
                }
                ModelKind::LayerGap => vec![ActuatorGeometry::default().layer_gap_mm],
                ModelKind::Stiffness => {
                    let s = StiffnessParams::default();
                    vec![s.ei_free_nmm2, s.ei_engaged_nmm2]
                }
                ModelKind::BrakeTau => vec![0.08],
                ModelKind::Filter => vec![0.2, 0.05],
                ModelKind::GripForceGain => vec![GripperConfig::default().grip_force_gain_n_per_kpa],
            },
        };
        raw.iter().zip(bounds).map(|(&x, b)| x.clamp(b[0], b[1])).collect()
    }

    /// Lists every structural problem; empty when the task is well-posed.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let arity = self.model.input_arity();
        if self.dataset.is_empty() {
            v.push("dataset: must contain at least one row".to_string());
        }
        for (i, row) in self.dataset.iter().enumerate() {
            if row.input.len() != arity {
                v.push(format!(
                    "dataset[{i}].input: model {} takes {arity} input(s), got {}",
                    self.model.name(),
                    row.input.len()
                ));
            }
        }
        let n = self.param_count();
        if !self.dataset.is_empty() && self.dataset.len() < n {
            v.push(format!(
                "dataset: {n} parameter(s) need at least {n} rows, got {}",
                self.dataset.len()
            ));
        }
        if self.model == ModelKind::ExtensionLaw && !self.dataset.is_empty() {
            let ps = self.distinct_pressures();
            if ps.len() < 2 {
                v.push(format!(
                    "dataset: extension_law needs at least 2 distinct pressures, got {}",
                    ps.len()
                ));
            }
            if ps.first().copied() != Some(0.0) {
                v.push("dataset: extension_law needs a zero-pressure (rest length) row".to_string());
            }
        }
        if !self.bounds.is_empty() {
            if self.bounds.len() != n {
                v.push(format!(
                    "bounds: expected {n} interval(s) for model {}, got {}",
                    self.model.name(),
                    self.bounds.len()
                ));
            }
            for (j, b) in self.bounds.iter().enumerate() {
                if !b[0].is_finite() || !b[1].is_finite() || b[0] >= b[1] {
                    v.push(format!(
                        "bounds[{j}]: must be finite with lo < hi, got [{}, {}]",
                        b[0], b[1]
                    ));
                }
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            v.push(format!("tolerance: must lie in (0, 1), got {}", self.tolerance));
        }
        if let Some(x0) = &self.initial {
            if x0.len() != n {
                v.push(format!(
                    "initial: expected {n} parameter(s) for model {}, got {}",
                    self.model.name(),
                    x0.len()
                ));
            }
            if x0.iter().any(|x| !x.is_finite()) {
                v.push("initial: parameters must be finite".to_string());
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { violations: v })
        }
    }
}

/// Forward-model predictions, one per dataset row and in row order.
///
/// Errors when the candidate parameters are outside the model's own domain
/// (for example non-increasing extension anchors); the optimizer treats that
/// as an infeasible point rather than a failure.
fn predict(model: ModelKind, params: &[f64], dataset: &[DataRow]) -> Result<Vec<f64>> {
    match model {
        ModelKind::ExtensionLaw => {
            let mut ps: Vec<f64> = dataset.iter().map(|r| r.input[0]).collect();
            ps.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            ps.dedup();
            let anchors: Vec<(f64, f64)> =
                ps.iter().copied().zip(params.iter().copied()).collect();
            let law = ExtensionLaw::new(anchors)?;
            dataset.iter().map(|r| law.length_at(r.input[0])).collect()
        }
        ModelKind::LayerGap => {
            let mut cfg = GripperConfig::default();
            for geom in &mut cfg.pair_a {
                geom.layer_gap_mm = params[0];
            }
            let law = ExtensionLaw::default();
            dataset
                .iter()
                .map(|r| pair_aperture(&cfg, PairId::A, &law, r.input[0], ApertureMode::Outward, 1.0))
                .collect()
        }
        ModelKind::Stiffness => {
            let stiffness = StiffnessParams {
                ei_free_nmm2: params[0],
                ei_engaged_nmm2: params[1],
                ..StiffnessParams::default()
            };
            stiffness.validate()?;
            let geom = ActuatorGeometry::default();
            dataset
                .iter()
                .map(|r| tip_deflection_under_load(&geom, &stiffness, r.input[1], r.input[0] / 1000.0))
                .collect()
        }
        ModelKind::BrakeTau => {
            let tau = params[0];
            if !(tau > 0.0) {
                return Err(Error::domain(format!("time constant {tau} s must be > 0")));
            }
            Ok(dataset.iter().map(|r| 1.0 - (-r.input[0] / tau).exp()).collect())
        }
        ModelKind::Filter => {
            let mut state = FilterState::new(0.0, params[0], params[1])?;
            Ok(dataset.iter().map(|r| limited_recursive_average(&mut state, r.input[0])).collect())
        }
        ModelKind::GripForceGain => Ok(dataset.iter().map(|r| params[0] * r.input[0]).collect()),
    }
}

/// Squared-error objective; infinite for infeasible parameters.
fn objective(model: ModelKind, params: &[f64], dataset: &[DataRow]) -> f64 {
    match predict(model, params, dataset) {
        Ok(preds) => {
            let sse: f64 =
                preds.iter().zip(dataset).map(|(p, r)| (p - r.output) * (p - r.output)).sum();
            if sse.is_finite() {
                sse
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

// Inverse golden ratio: the section ratio that reuses one probe per shrink.
const INV_PHI: f64 = 0.618_033_988_749_894_8;
const GRID_POINTS: usize = 24;
const GOLDEN_STEPS: usize = 60;
const MAX_SWEEPS: usize = 200;

/// Fits `problem` and reports the parameters, the residual, and whether the
/// descent converged before its sweep budget.
///
/// The result is monotone: its squared error never exceeds the starting
/// point's. Non-finite measurements and residuals at the starting point are
/// numeric errors naming the offending data row.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    problem.validate()?;
    for (i, row) in problem.dataset.iter().enumerate() {
        if row.input.iter().any(|x| !x.is_finite()) || !row.output.is_finite() {
            return Err(Error::numeric(format!("data row {i}: non-finite measurement")));
        }
    }
    let bounds = problem.effective_bounds();
    let mut best = problem.effective_initial(&bounds);

    // The starting point must evaluate cleanly; report which row fails if not.
    let preds = predict(problem.model, &best, &problem.dataset)?;
    for (i, (p, row)) in preds.iter().zip(&problem.dataset).enumerate() {
        if !(p - row.output).is_finite() {
            return Err(Error::numeric(format!("data row {i}: non-finite residual at start")));
        }
    }
    let mut best_sse = objective(problem.model, &best, &problem.dataset);
    let mut iterations: u64 = 1;
    let mut converged = false;

    for _ in 0..MAX_SWEEPS {
        let sweep_start = best_sse;
        for j in 0..best.len() {
            let (lo, hi) = (bounds[j][0], bounds[j][1]);
            let mut cand = best.clone();

            // Coarse scan to land in the right basin.
            let (mut bx, mut bf) = (best[j], best_sse);
            for k in 0..=GRID_POINTS {
                let x = lo + (hi - lo) * k as f64 / GRID_POINTS as f64;
                cand[j] = x;
                iterations += 1;
                let fx = objective(problem.model, &cand, &problem.dataset);
                if fx < bf {
                    (bx, bf) = (x, fx);
                }
            }

            // Golden-section refinement one grid cell either side.
            let cell = (hi - lo) / GRID_POINTS as f64;
            let mut a = (bx - cell).max(lo);
            let mut b = (bx + cell).min(hi);
            let mut x1 = b - INV_PHI * (b - a);
            let mut x2 = a + INV_PHI * (b - a);
            cand[j] = x1;
            let mut f1 = objective(problem.model, &cand, &problem.dataset);
            cand[j] = x2;
            let mut f2 = objective(problem.model, &cand, &problem.dataset);
            iterations += 2;
            for _ in 0..GOLDEN_STEPS {
                if f1 <= f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - INV_PHI * (b - a);
                    cand[j] = x1;
                    f1 = objective(problem.model, &cand, &problem.dataset);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + INV_PHI * (b - a);
                    cand[j] = x2;
                    f2 = objective(problem.model, &cand, &problem.dataset);
                }
                iterations += 1;
            }
            let (gx, gf) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
            if gf < bf {
                (bx, bf) = (gx, gf);
            }

            if bf < best_sse {
                best[j] = bx;
                best_sse = bf;
            }
        }
        if sweep_start - best_sse <= problem.tolerance * sweep_start {
            converged = true;
            break;
        }
    }

    Ok(CalibrationResult {
        model: problem.model,
        parameters: best,
        sse: best_sse,
        iterations,
        converged,
    })
}
