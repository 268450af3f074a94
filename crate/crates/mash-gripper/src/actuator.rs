//! Single actuator: extension, braked bending, and variable stiffness.
//!
//! Each actuator is a soft pneumatic extension chamber with one
//! electrostatic strain-limiting brake layer on its inner wall (facing the
//! gripper axis) and one on its outer wall. With no brake engaged, pressure
//! extends both walls equally and the actuator lengthens in a straight line.
//! Engaging a brake pins that wall's length; the remaining free wall keeps
//! following the pressure law, and the length differential across the wall
//! gap `w` rolls the actuator into a circular arc (piecewise constant
//! curvature with a single segment):
//!
//! ```text
//! theta = (l_outer - l_inner) / w      (positive bends inward)
//! arc   = (l_outer + l_inner) / 2
//! tip   = ((1 - cos theta) / kappa, sin theta / kappa),  kappa = theta / arc
//! ```
//!
//! Bending stiffness is slip-limited: while the load moment stays below what
//! the engaged brake can hold through the `slip_lever` moment arm, the
//! strain-limiting layer adds rigidity (`ei_engaged`); past that threshold
//! the layer slips and stiffness falls back to the bare body (`ei_free`).

use serde::{Deserialize, Serialize};

use crate::brake::{braking_force, BrakeParams, GRAVITY};
use crate::error::{Error, Result};
use crate::material::ExtensionLaw;

/// Which strain-limiting layer is braked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrakedSide {
    /// Wall facing the gripper axis; braking it bends the finger inward.
    Inner,
    /// Wall facing away from the axis; braking it bends the finger outward.
    Outer,
}

/// Mechanical layout of one actuator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActuatorGeometry {
    /// Unpressurized length, mm.
    pub rest_length_mm: f64,
    /// Distance between the two strain-limiting layers, mm.
    pub layer_gap_mm: f64,
    /// Maximum working pressure, kPa.
    pub p_max_kpa: f64,
    /// Brake on the inner (axis-facing) wall.
    pub inner_brake: BrakeParams,
    /// Brake on the outer wall.
    pub outer_brake: BrakeParams,
}

impl Default for ActuatorGeometry {
    fn default() -> Self {
        ActuatorGeometry {
            rest_length_mm: 104.0,
            layer_gap_mm: 20.0,
            p_max_kpa: 100.0,
            inner_brake: BrakeParams::default(),
            outer_brake: BrakeParams::default(),
        }
    }
}

impl ActuatorGeometry {
    pub fn violations(&self, ctx: &str) -> Vec<String> {
        let mut v = Vec::new();
        for (name, val) in [
            ("rest_length_mm", self.rest_length_mm),
            ("layer_gap_mm", self.layer_gap_mm),
            ("p_max_kpa", self.p_max_kpa),
        ] {
            if !(val > 0.0) || !val.is_finite() {
                v.push(format!("{ctx}.{name}: must be finite and > 0, got {val}"));
            }
        }
        v.extend(self.inner_brake.violations(&format!("{ctx}.inner_brake")));
        v.extend(self.outer_brake.violations(&format!("{ctx}.outer_brake")));
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("actuator");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { violations: v })
        }
    }
}

/// Arc-shaped configuration of one actuator in its bending plane.
///
/// `x` is lateral (positive toward the gripper axis), `y` is along the
/// actuator's mounting direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcConfig {
    /// Signed bend angle, rad; positive bends inward.
    pub theta_rad: f64,
    /// Centerline arc length, mm.
    pub arc_length_mm: f64,
    /// Signed curvature, 1/mm; `curvature * arc_length = theta`.
    pub curvature_per_mm: f64,
    /// Tip coordinates (x lateral, y axial), mm.
    pub tip_mm: [f64; 2],
    /// Tip tangent angle relative to the mounting direction, rad.
    pub tip_tangent_rad: f64,
}

/// Below this bend angle the closed-form tip expressions lose digits to
/// cancellation, so a series expansion takes over. The two branches agree to
/// better than 1e-12 relative at the crossover.
const SMALL_THETA: f64 = 1e-4;

/// Arc configuration from the two wall lengths and the layer gap.
///
/// This is the kernel every kinematic query reduces to. Wall lengths must be
/// positive and the gap nonzero.
pub fn arc_from_walls(l_inner_mm: f64, l_outer_mm: f64, layer_gap_mm: f64) -> Result<ArcConfig> {
    if !(l_inner_mm > 0.0) || !(l_outer_mm > 0.0) || !l_inner_mm.is_finite() || !l_outer_mm.is_finite() {
        return Err(Error::domain(format!(
            "wall lengths must be finite and > 0, got inner {l_inner_mm} mm, outer {l_outer_mm} mm"
        )));
    }
    if !(layer_gap_mm > 0.0) || !layer_gap_mm.is_finite() {
        return Err(Error::domain(format!("layer gap {layer_gap_mm} mm must be finite and > 0")));
    }
    let theta = (l_outer_mm - l_inner_mm) / layer_gap_mm;
    let arc = 0.5 * (l_inner_mm + l_outer_mm);
    let (x, y) = if theta.abs() < SMALL_THETA {
        // tip = arc * ((theta/2)(1 - theta^2/12), 1 - theta^2/6) + O(theta^4)
        let t2 = theta * theta;
        (arc * 0.5 * theta * (1.0 - t2 / 12.0), arc * (1.0 - t2 / 6.0))
    } else {
        let kappa = theta / arc;
        // 2 sin^2(theta/2) = 1 - cos(theta) without cancellation near zero.
        let half = 0.5 * theta;
        (2.0 * half.sin() * half.sin() / kappa, theta.sin() / kappa)
    };
    Ok(ArcConfig {
        theta_rad: theta,
        arc_length_mm: arc,
        curvature_per_mm: theta / arc,
        tip_mm: [x, y],
        tip_tangent_rad: theta,
    })
}

/// Straight extension under pressure with no brake engaged.
///
/// Both walls take the chamber length L(P); the tip sits at (0, L(P)).
pub fn free_extension(geom: &ActuatorGeometry, law: &ExtensionLaw, pressure_kpa: f64) -> Result<ArcConfig> {
    check_pressure(geom, pressure_kpa)?;
    let l = law.length_at(pressure_kpa)?;
    arc_from_walls(l, l, geom.layer_gap_mm)
}

/// Bent configuration with one brake engaged since the rest state.
///
/// At full engagement the braked wall keeps the rest length L0 while the
/// free wall follows L(P); partial engagement interpolates the braked wall
/// between the two, which scales the bend angle linearly with engagement.
pub fn bend_config(
    geom: &ActuatorGeometry,
    law: &ExtensionLaw,
    pressure_kpa: f64,
    braked: BrakedSide,
    engagement: f64,
) -> Result<ArcConfig> {
    check_pressure(geom, pressure_kpa)?;
    if !(0.0..=1.0).contains(&engagement) {
        return Err(Error::domain(format!("engagement {engagement} outside [0, 1]")));
    }
    let free = law.length_at(pressure_kpa)?;
    let braked_len = free + (geom.rest_length_mm - free) * engagement;
    match braked {
        BrakedSide::Inner => arc_from_walls(braked_len, free, geom.layer_gap_mm),
        BrakedSide::Outer => arc_from_walls(free, braked_len, geom.layer_gap_mm),
    }
}

fn check_pressure(geom: &ActuatorGeometry, pressure_kpa: f64) -> Result<()> {
    if !pressure_kpa.is_finite() || pressure_kpa < 0.0 || pressure_kpa > geom.p_max_kpa {
        return Err(Error::range(format!(
            "pressure {pressure_kpa} kPa outside [0, {}] kPa",
            geom.p_max_kpa
        )));
    }
    Ok(())
}

/// Slip-limited bending stiffness parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StiffnessParams {
    /// Bending rigidity with the strain-limiting layer slipping, N*mm^2.
    pub ei_free_nmm2: f64,
    /// Bending rigidity with the layer holding, N*mm^2.
    pub ei_engaged_nmm2: f64,
    /// Moment arm converting brake holding force to a slip threshold, mm.
    pub slip_lever_mm: f64,
}

impl Default for StiffnessParams {
    /// Placeholder rigidities pending calibration against deflection data;
    /// the tenfold engaged/free ratio matches the observed stiffening trend.
    fn default() -> Self {
        StiffnessParams { ei_free_nmm2: 50.0, ei_engaged_nmm2: 500.0, slip_lever_mm: 10.0 }
    }
}

impl StiffnessParams {
    pub fn violations(&self, ctx: &str) -> Vec<String> {
        let mut v = Vec::new();
        for (name, val) in [
            ("ei_free_nmm2", self.ei_free_nmm2),
            ("ei_engaged_nmm2", self.ei_engaged_nmm2),
            ("slip_lever_mm", self.slip_lever_mm),
        ] {
            if !(val > 0.0) || !val.is_finite() {
                v.push(format!("{ctx}.{name}: must be finite and > 0, got {val}"));
            }
        }
        if self.ei_engaged_nmm2 <= self.ei_free_nmm2 {
            v.push(format!(
                "{ctx}: ei_engaged_nmm2 ({}) must exceed ei_free_nmm2 ({})",
                self.ei_engaged_nmm2, self.ei_free_nmm2
            ));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("stiffness");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { violations: v })
        }
    }
}

/// Effective bending rigidity (N*mm^2) under `applied_moment_nmm` with the
/// brake driven at `voltage`.
///
/// A step function: the engaged rigidity holds while the moment stays at or
/// below `slip_lever * braking_force(U)`; above it the layer slips. With no
/// drive voltage there is nothing to hold and the free rigidity applies.
pub fn effective_rigidity(
    stiffness: &StiffnessParams,
    brake: &BrakeParams,
    voltage: f64,
    applied_moment_nmm: f64,
) -> Result<f64> {
    if !applied_moment_nmm.is_finite() || applied_moment_nmm < 0.0 {
        return Err(Error::domain(format!("applied moment {applied_moment_nmm} N*mm must be >= 0")));
    }
    if voltage <= 0.0 {
        braking_force(brake, voltage)?; // still reject out-of-envelope drives
        return Ok(stiffness.ei_free_nmm2);
    }
    let threshold = stiffness.slip_lever_mm * braking_force(brake, voltage)?;
    if applied_moment_nmm <= threshold {
        Ok(stiffness.ei_engaged_nmm2)
    } else {
        Ok(stiffness.ei_free_nmm2)
    }
}

/// Tip deflection angle (rad) of a horizontal actuator with mass
/// `load_kg` hung from its tip, brake driven at `voltage`.
///
/// The root moment is `M = m g L0` (N*mm with L0 in mm); a uniform-curvature
/// beam of rigidity EI deflects by `phi = M L0 / (2 EI)`.
pub fn tip_deflection_under_load(
    geom: &ActuatorGeometry,
    stiffness: &StiffnessParams,
    voltage: f64,
    load_kg: f64,
) -> Result<f64> {
    if !load_kg.is_finite() || load_kg < 0.0 {
        return Err(Error::domain(format!("load {load_kg} kg must be >= 0")));
    }
    let l0 = geom.rest_length_mm;
    let moment = load_kg * GRAVITY * l0;
    let ei = effective_rigidity(stiffness, &geom.inner_brake, voltage, moment)?;
    Ok(moment * l0 / (2.0 * ei))
}
