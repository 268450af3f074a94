//! Scenario files: the JSON description of one closed-loop experiment.
//!
//! A scenario bundles the gripper (four actuator geometries with their brake
//! layers), the pressure-extension law (inline anchors or a CSV dataset),
//! the scene objects, the grasp strategy with its parameters, and the
//! integration settings. Validation reports every violated field at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuator::StiffnessParams;
use crate::controller::{Strategy, StrategyParams};
use crate::error::{Error, Result};
use crate::gripper::{GripperConfig, ObjectModel};
use crate::material::ExtensionLaw;

/// Where the pressure-extension law comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExtensionLawSource {
    /// A two-column CSV dataset (pressure kPa, length mm) on disk,
    /// relative paths resolved against the scenario file's directory.
    Csv { csv_path: PathBuf },
    /// Anchors given directly in the scenario.
    Inline(ExtensionLaw),
}

impl Default for ExtensionLawSource {
    fn default() -> Self {
        ExtensionLawSource::Inline(ExtensionLaw::default())
    }
}

impl ExtensionLawSource {
    /// Loads or clones the law. `base_dir` anchors relative CSV paths.
    pub fn resolve(&self, base_dir: &Path) -> Result<ExtensionLaw> {
        match self {
            ExtensionLawSource::Inline(law) => Ok(law.clone()),
            ExtensionLawSource::Csv { csv_path } => {
                let path = if csv_path.is_absolute() {
                    csv_path.clone()
                } else {
                    base_dir.join(csv_path)
                };
                ExtensionLaw::from_csv_path(&path)
            }
        }
    }
}

/// One closed-loop experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub name: String,
    /// Gripper layout: four actuator geometries (with per-wall brake
    /// parameters), fingertip and grasp-envelope properties.
    pub gripper: GripperConfig,
    /// Composite bending rigidities used for load-deflection queries.
    pub stiffness: StiffnessParams,
    pub extension_law: ExtensionLawSource,
    pub objects: Vec<ObjectModel>,
    pub strategy: Strategy,
    pub strategy_params: StrategyParams,
    /// Fixed integration step, s.
    pub dt_s: f64,
    /// Hard wall-clock limit of simulated time, s.
    pub t_max_s: f64,
    /// Recorded in the log for reproducibility bookkeeping. The simulation
    /// itself is fully deterministic and draws no random numbers.
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "scenario".to_string(),
            gripper: GripperConfig::default(),
            stiffness: StiffnessParams::default(),
            extension_law: ExtensionLawSource::default(),
            objects: Vec::new(),
            strategy: Strategy::SmallSingle,
            strategy_params: StrategyParams::default(),
            dt_s: 0.01,
            t_max_s: 30.0,
            seed: 0,
        }
    }
}

impl Scenario {
    /// Parses a scenario from a JSON file without validating it.
    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read scenario {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Validates every field and resolves the extension law; on failure the
    /// error lists all violations. `base_dir` anchors relative CSV paths.
    pub fn validate(&self, base_dir: &Path) -> Result<ExtensionLaw> {
        let mut v = Vec::new();
        v.extend(self.gripper.violations("gripper"));
        v.extend(self.stiffness.violations("stiffness"));
        v.extend(self.strategy_params.violations("strategy_params"));
        for (i, obj) in self.objects.iter().enumerate() {
            v.extend(obj.violations(&format!("objects[{i}]")));
        }
        if !(self.dt_s > 0.0) || !self.dt_s.is_finite() {
            v.push(format!("dt_s: must be finite and > 0, got {}", self.dt_s));
        }
        if !(self.t_max_s >= self.dt_s) || !self.t_max_s.is_finite() {
            v.push(format!(
                "t_max_s: must be finite and >= dt_s ({}), got {}",
                self.dt_s, self.t_max_s
            ));
        }
        if self.strategy == Strategy::MultiObject && self.objects.len() != 2 {
            v.push(format!(
                "objects: the multi-object strategy needs exactly 2 objects, got {}",
                self.objects.len()
            ));
        }

        let law = match self.extension_law.resolve(base_dir) {
            Ok(law) => Some(law),
            Err(e) => {
                v.push(format!("extension_law: {e}"));
                None
            }
        };

        // Cross-field consistency: command ceilings against hardware limits
        // and the law's domain, and the law's rest length against geometry.
        let mut p_cap = f64::INFINITY;
        let mut u_cap = f64::INFINITY;
        for i in 0..4 {
            let g = self.gripper.geometry(i);
            p_cap = p_cap.min(g.p_max_kpa);
            u_cap = u_cap.min(g.inner_brake.u_max_v).min(g.outer_brake.u_max_v);
        }
        if let Some(law) = &law {
            p_cap = p_cap.min(law.max_pressure_kpa());
            for i in 0..4 {
                let rest = self.gripper.geometry(i).rest_length_mm;
                if (law.rest_length_mm() - rest).abs() > 1e-6 {
                    v.push(format!(
                        "gripper actuator {i}: rest_length_mm {rest} disagrees with the \
                         extension law's zero-pressure length {}",
                        law.rest_length_mm()
                    ));
                }
            }
        }
        if self.strategy_params.max_pressure_kpa > p_cap {
            v.push(format!(
                "strategy_params.max_pressure_kpa: {} exceeds the smallest working-pressure \
                 or law ceiling {p_cap}",
                self.strategy_params.max_pressure_kpa
            ));
        }
        if self.strategy_params.drive_voltage_v > u_cap {
            v.push(format!(
                "strategy_params.drive_voltage_v: {} exceeds the smallest brake voltage \
                 ceiling {u_cap}",
                self.strategy_params.drive_voltage_v
            ));
        }

        if v.is_empty() {
            Ok(law.expect("no violations implies the law resolved"))
        } else {
            Err(Error::Validation { violations: v })
        }
    }
}
