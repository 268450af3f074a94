//! Bench-style characterization sweeps, emitted as CSV tables.
//!
//! Each sweep reproduces one standard bench measurement: static braking
//! force across drive voltage, brake step response in time, chamber length
//! across pressure, pair aperture across pressure, and loaded tip deflection
//! across the voltage grid. Tables carry a header row with units embedded in
//! the column names and serialize with commas, `.` decimals, and LF line
//! endings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuator::{bend_config, tip_deflection_under_load, ActuatorGeometry, BrakedSide, StiffnessParams};
use crate::brake::{braking_force, engagement_step, limited_recursive_average, BrakeParams, BrakeState, FilterState};
use crate::error::{Error, Result};
use crate::gripper::{pair_aperture, ApertureMode, GripperConfig, PairId};
use crate::material::ExtensionLaw;

/// Which characterization sweep to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Static braking force versus drive voltage.
    BrakeForce,
    /// Engagement and filtered holding force versus time for a voltage step
    /// on, then off.
    BrakeResponse,
    /// Chamber length versus supply pressure.
    Extension,
    /// Bend angle and outward pair aperture versus supply pressure.
    Aperture,
    /// Tip deflection versus hung load, one column per drive voltage.
    Stiffness,
}

impl SweepKind {
    pub const ALL: [SweepKind; 5] = [
        SweepKind::BrakeForce,
        SweepKind::BrakeResponse,
        SweepKind::Extension,
        SweepKind::Aperture,
        SweepKind::Stiffness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::BrakeForce => "brake_force",
            SweepKind::BrakeResponse => "brake_response",
            SweepKind::Extension => "extension",
            SweepKind::Aperture => "aperture",
            SweepKind::Stiffness => "stiffness",
        }
    }

    /// Parses a sweep name; unknown names are usage errors listing the
    /// valid kinds.
    pub fn from_name(name: &str) -> Result<SweepKind> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                let valid: Vec<&str> = SweepKind::ALL.iter().map(|k| k.name()).collect();
                Error::usage(format!("unknown sweep kind {name:?}; expected one of {}", valid.join(", ")))
            })
    }
}

fn default_brake_force_voltages() -> Vec<f64> {
    (0..=20).map(|k| 100.0 * k as f64).collect()
}

fn default_extension_pressures() -> Vec<f64> {
    (1..=10).map(|k| 10.0 * k as f64).collect()
}

fn default_aperture_pressures() -> Vec<f64> {
    (1..=6).map(|k| 5.0 * k as f64).collect()
}

fn default_stiffness_loads() -> Vec<f64> {
    (1..=5).map(|k| 20.0 * k as f64).collect()
}

fn default_stiffness_voltages() -> Vec<f64> {
    vec![0.0, 600.0, 900.0, 1200.0, 1500.0, 1800.0, 2000.0]
}

/// Sweep grids and the hardware models they run against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacterizeConfig {
    /// Brake under test for the force and response sweeps.
    pub brake: BrakeParams,
    /// Actuator under test for the stiffness sweep.
    pub geometry: ActuatorGeometry,
    /// Gripper under test for the aperture sweep.
    pub gripper: GripperConfig,
    pub stiffness: StiffnessParams,
    pub extension_law: ExtensionLaw,
    /// Voltage grid of the static force sweep, V.
    pub brake_force_voltages_v: Vec<f64>,
    /// Sample period of the step-response sweep, s.
    pub response_dt_s: f64,
    /// Durations of the on and off halves of the voltage step, s.
    pub response_on_s: f64,
    pub response_off_s: f64,
    /// Step amplitude, V.
    pub response_voltage_v: f64,
    /// Force-trace filter constants (weight and largest step per sample, N).
    pub filter_alpha: f64,
    pub filter_max_step_n: f64,
    /// Pressure grid of the extension sweep, kPa.
    pub extension_pressures_kpa: Vec<f64>,
    /// Pressure grid of the aperture sweep, kPa.
    pub aperture_pressures_kpa: Vec<f64>,
    /// Load grid of the stiffness sweep, g.
    pub stiffness_loads_g: Vec<f64>,
    /// Voltage grid of the stiffness sweep, V.
    pub stiffness_voltages_v: Vec<f64>,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        CharacterizeConfig {
            brake: BrakeParams::default(),
            geometry: ActuatorGeometry::default(),
            gripper: GripperConfig::default(),
            stiffness: StiffnessParams::default(),
            extension_law: ExtensionLaw::default(),
            brake_force_voltages_v: default_brake_force_voltages(),
            response_dt_s: 1.0e-3,
            response_on_s: 0.3,
            response_off_s: 0.3,
            response_voltage_v: 2000.0,
            filter_alpha: 0.2,
            filter_max_step_n: 0.05,
            extension_pressures_kpa: default_extension_pressures(),
            aperture_pressures_kpa: default_aperture_pressures(),
            stiffness_loads_g: default_stiffness_loads(),
            stiffness_voltages_v: default_stiffness_voltages(),
        }
    }
}

impl CharacterizeConfig {
    /// Reads a config from a JSON file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::usage(format!("cannot parse config {}: {e}", path.display())))
    }

    /// Lists every violated constraint; empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        v.extend(self.brake.violations("brake"));
        v.extend(self.geometry.violations("geometry"));
        v.extend(self.gripper.violations("gripper"));
        v.extend(self.stiffness.violations("stiffness"));
        if !(self.response_dt_s > 0.0) || !self.response_dt_s.is_finite() {
            v.push(format!("response_dt_s: must be finite and > 0, got {}", self.response_dt_s));
        }
        for (name, val) in
            [("response_on_s", self.response_on_s), ("response_off_s", self.response_off_s)]
        {
            if !(val >= 0.0) || !val.is_finite() {
                v.push(format!("{name}: must be finite and >= 0, got {val}"));
            }
        }
        if !(self.response_voltage_v > 0.0) || self.response_voltage_v > self.brake.u_max_v {
            v.push(format!(
                "response_voltage_v: must lie in (0, {}] V, got {}",
                self.brake.u_max_v, self.response_voltage_v
            ));
        }
        if !(self.filter_alpha > 0.0 && self.filter_alpha <= 1.0) {
            v.push(format!("filter_alpha: must lie in (0, 1], got {}", self.filter_alpha));
        }
        if !(self.filter_max_step_n > 0.0) {
            v.push(format!("filter_max_step_n: must be > 0, got {}", self.filter_max_step_n));
        }
        let grids: [(&str, &[f64]); 4] = [
            ("brake_force_voltages_v", &self.brake_force_voltages_v),
            ("extension_pressures_kpa", &self.extension_pressures_kpa),
            ("aperture_pressures_kpa", &self.aperture_pressures_kpa),
            ("stiffness_loads_g", &self.stiffness_loads_g),
        ];
        for (name, grid) in grids {
            if grid.is_empty() {
                v.push(format!("{name}: grid must not be empty"));
            }
            if grid.iter().any(|x| !x.is_finite() || *x < 0.0) {
                v.push(format!("{name}: grid values must be finite and >= 0"));
            }
        }
        if self.stiffness_voltages_v.is_empty() {
            v.push("stiffness_voltages_v: grid must not be empty".to_string());
        }
        for (name, grid, cap) in [
            ("brake_force_voltages_v", &self.brake_force_voltages_v, self.brake.u_max_v),
            (
                "stiffness_voltages_v",
                &self.stiffness_voltages_v,
                self.geometry.inner_brake.u_max_v,
            ),
        ] {
            if grid.iter().any(|&u| !u.is_finite() || u < 0.0 || u > cap) {
                v.push(format!("{name}: voltages must lie in [0, {cap}] V"));
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

/// A rectangular numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Serializes as CSV: comma separators, `.` decimals, LF endings, header
    /// first.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|&v| {
                    let v = if v == 0.0 { 0.0 } else { v }; // normalize -0
                    format!("{v}")
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Values of the named column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Runs the requested sweep against `config`.
pub fn characterize(kind: SweepKind, config: &CharacterizeConfig) -> Result<Table> {
    config.validate()?;
    match kind {
        SweepKind::BrakeForce => brake_force_sweep(config),
        SweepKind::BrakeResponse => brake_response_sweep(config),
        SweepKind::Extension => extension_sweep(config),
        SweepKind::Aperture => aperture_sweep(config),
        SweepKind::Stiffness => stiffness_sweep(config),
    }
}

fn brake_force_sweep(config: &CharacterizeConfig) -> Result<Table> {
    let mut rows = Vec::new();
    for &u in &config.brake_force_voltages_v {
        rows.push(vec![u, braking_force(&config.brake, u)?]);
    }
    Ok(Table { columns: vec!["voltage_v".into(), "force_n".into()], rows })
}

fn brake_response_sweep(config: &CharacterizeConfig) -> Result<Table> {
    let dt = config.response_dt_s;
    let steps_on = (config.response_on_s / dt).round() as usize;
    let steps_off = (config.response_off_s / dt).round() as usize;
    let mut state = BrakeState::default();
    let mut filter = FilterState::new(0.0, config.filter_alpha, config.filter_max_step_n)?;
    let mut rows = vec![vec![0.0, 0.0, 0.0, 0.0]];
    for k in 1..=steps_on + steps_off {
        let commanded = if k <= steps_on { config.response_voltage_v } else { 0.0 };
        state = engagement_step(&state, commanded, dt, &config.brake)?;
        let force = state.available_force(&config.brake)?;
        let filtered = limited_recursive_average(&mut filter, force);
        rows.push(vec![k as f64 * dt, state.engagement, force, filtered]);
    }
    Ok(Table {
        columns: vec![
            "t_s".into(),
            "engagement".into(),
            "force_n".into(),
            "filtered_force_n".into(),
        ],
        rows,
    })
}

fn extension_sweep(config: &CharacterizeConfig) -> Result<Table> {
    let mut rows = Vec::new();
    for &p in &config.extension_pressures_kpa {
        rows.push(vec![p, config.extension_law.length_at(p)?]);
    }
    Ok(Table { columns: vec!["pressure_kpa".into(), "length_mm".into()], rows })
}

fn aperture_sweep(config: &CharacterizeConfig) -> Result<Table> {
    let mut rows = Vec::new();
    let geom = &config.gripper.pair_a[0];
    for &p in &config.aperture_pressures_kpa {
        // Outer wall locked from rest: fingers splay outward.
        let arc = bend_config(geom, &config.extension_law, p, BrakedSide::Outer, 1.0)?;
        let aperture = pair_aperture(
            &config.gripper,
            PairId::A,
            &config.extension_law,
            p,
            ApertureMode::Outward,
            1.0,
        )?;
        rows.push(vec![p, arc.theta_rad.abs(), aperture]);
    }
    Ok(Table {
        columns: vec!["pressure_kpa".into(), "bend_angle_rad".into(), "aperture_mm".into()],
        rows,
    })
}

fn stiffness_sweep(config: &CharacterizeConfig) -> Result<Table> {
    let mut columns = vec!["load_g".into()];
    for &u in &config.stiffness_voltages_v {
        columns.push(format!("deflection_rad_at_{u}v"));
    }
    let mut rows = Vec::new();
    for &load_g in &config.stiffness_loads_g {
        let mut row = vec![load_g];
        for &u in &config.stiffness_voltages_v {
            row.push(tip_deflection_under_load(
                &config.geometry,
                &config.stiffness,
                u,
                load_g / 1000.0,
            )?);
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brake_force_table_is_zero_at_rest_and_nondecreasing() {
        let table = characterize(SweepKind::BrakeForce, &CharacterizeConfig::default()).unwrap();
        let force = table.column("force_n").unwrap();
        assert_eq!(force[0], 0.0);
        assert!(force.windows(2).all(|w| w[1] >= w[0]));
        assert_relative_eq!(*force.last().unwrap(), 1.962, max_relative = 1e-3);
    }

    #[test]
    fn brake_response_rise_time_sits_in_the_measured_window() {
        let table =
            characterize(SweepKind::BrakeResponse, &CharacterizeConfig::default()).unwrap();
        let t = table.column("t_s").unwrap();
        let e = table.column("engagement").unwrap();
        let t10 = t.iter().zip(&e).find(|(_, &e)| e >= 0.1).map(|(&t, _)| t).unwrap();
        let t90 = t.iter().zip(&e).find(|(_, &e)| e >= 0.9).map(|(&t, _)| t).unwrap();
        let rise = t90 - t10;
        assert!((0.150..=0.200).contains(&rise), "rise time {rise} s");
        // The release half decays back below 10%.
        assert!(*e.last().unwrap() < 0.1);
        // The filtered trace lags the raw force but ends near it.
        let force = table.column("force_n").unwrap();
        let filtered = table.column("filtered_force_n").unwrap();
        assert!((filtered.last().unwrap() - force.last().unwrap()).abs() < 0.05);
    }

    #[test]
    fn extension_table_hits_the_anchor_and_is_strictly_monotone() {
        let table = characterize(SweepKind::Extension, &CharacterizeConfig::default()).unwrap();
        let p = table.column("pressure_kpa").unwrap();
        let l = table.column("length_mm").unwrap();
        assert_eq!(p.len(), 10);
        assert_relative_eq!(*l.last().unwrap(), 200.55, max_relative = 1e-12);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn aperture_table_has_exactly_six_nondecreasing_rows() {
        let table = characterize(SweepKind::Aperture, &CharacterizeConfig::default()).unwrap();
        assert_eq!(table.rows.len(), 6);
        let p = table.column("pressure_kpa").unwrap();
        assert_eq!(p, vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        let a = table.column("aperture_mm").unwrap();
        assert!(a.windows(2).all(|w| w[1] >= w[0]), "apertures {a:?}");
        assert!(a[0] > CharacterizeConfig::default().gripper.mount_separation_mm);
        let angle = table.column("bend_angle_rad").unwrap();
        assert!(angle.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn stiffness_table_is_monotone_in_load_and_voltage() {
        let table = characterize(SweepKind::Stiffness, &CharacterizeConfig::default()).unwrap();
        assert_eq!(table.rows.len(), 5);
        assert_eq!(table.columns.len(), 8);
        // Strictly increasing in load at fixed voltage.
        for c in 1..table.columns.len() {
            for w in table.rows.windows(2) {
                assert!(w[1][c] > w[0][c], "column {c} not increasing in load");
            }
        }
        // Nonincreasing across the voltage grid at fixed load.
        for row in &table.rows {
            for c in 1..row.len() - 1 {
                assert!(row[c + 1] <= row[c], "row {row:?} not nonincreasing in voltage");
            }
        }
    }

    #[test]
    fn csv_output_uses_commas_dots_and_lf() {
        let table = characterize(SweepKind::Extension, &CharacterizeConfig::default()).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "pressure_kpa,length_mm");
        assert!(!csv.contains('\r') && !csv.contains(';'));
        assert!(csv.ends_with('\n'));
        let second = csv.lines().nth(1).unwrap();
        assert_eq!(second, "10,113.655");
    }

    #[test]
    fn unknown_sweep_kind_is_a_usage_error() {
        let err = SweepKind::from_name("torque").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("brake_force"));
        for kind in SweepKind::ALL {
            assert_eq!(SweepKind::from_name(kind.name()).unwrap(), kind);
        }
    }

    #[test]
    fn config_validation_collects_every_violation() {
        let cfg = CharacterizeConfig {
            response_dt_s: 0.0,
            filter_alpha: 2.0,
            aperture_pressures_kpa: Vec::new(),
            stiffness_voltages_v: vec![9000.0],
            ..CharacterizeConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        for needle in
            ["response_dt_s", "filter_alpha", "aperture_pressures_kpa", "stiffness_voltages_v"]
        {
            assert!(msg.contains(needle), "missing {needle} in: {msg}");
        }
    }
}
