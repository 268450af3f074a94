//! Four-finger gripper: pair apertures, grasp envelope, grip evaluation.
//!
//! Four actuators stand in a circular array around the gripper axis, mounted
//! parallel to it, and act as two opposed pairs: pair A along the x axis,
//! pair B along the y axis. The two actuators of a pair share one pressure
//! supply, so a pair always moves symmetrically.
//!
//! The grasp model is deliberately reduced-order. Each pair is characterized
//! by its aperture (lateral tip-to-tip distance). An object standing on the
//! gripper axis blocks a closing pair at its blocking diameter (sphere
//! equator, annulus outer wall), and a grasp captures the object only if its
//! blocking radius fits inside a fixed fraction of the half-aperture the
//! fingers approached from; the rest of the aperture is taken up by finger
//! wrap. Squeeze force comes from residual pressure: once the fingers rest
//! on the object, every additional kilopascal of commanded pressure converts
//! to normal force through `grip_force_gain`.

use serde::{Deserialize, Serialize};

use crate::actuator::{bend_config, ActuatorGeometry, ArcConfig, BrakedSide};
use crate::brake::GRAVITY;
use crate::error::{Error, Result};
use crate::material::ExtensionLaw;

/// A fingertip counts as touching within this surface distance, mm.
pub const CONTACT_TOL_MM: f64 = 0.5;

/// Axial slack added to an object's own half-span when deciding whether the
/// fingertips are at the object's level, mm.
pub const AXIAL_TOL_MM: f64 = 10.0;

/// How far an object's center may sit off the gripper axis, mm.
pub const CENTER_TOL_MM: f64 = 10.0;

/// One of the two opposed actuator pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairId {
    A,
    B,
}

/// Commanded shape of a pair for aperture queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApertureMode {
    /// No brakes, no bending: the rest aperture.
    Neutral,
    /// Outer brakes engaged: fingers splay apart.
    Outward,
    /// Inner brakes engaged: fingers close toward the axis.
    Inward,
}

/// Whole-gripper configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GripperConfig {
    /// Tip-to-tip distance of an opposed pair at rest, mm.
    pub mount_separation_mm: f64,
    /// The two actuators of pair A (gripping in the base plane).
    pub pair_a: [ActuatorGeometry; 2],
    /// The two actuators of pair B (gripping in an axially offset plane
    /// when extended).
    pub pair_b: [ActuatorGeometry; 2],
    /// Friction coefficient of the fingertip pads.
    pub fingertip_mu: f64,
    /// Fingertip pad area, mm^2. Recorded configuration data; the force
    /// model works in resultant forces and does not consume it.
    pub fingertip_area_mm2: f64,
    /// Normal force produced per kilopascal of residual squeeze, N/kPa.
    pub grip_force_gain_n_per_kpa: f64,
    /// Fraction of a pair's half-aperture available as grip radius; the
    /// rest is consumed by finger wrap. Tuned so the rest configuration
    /// captures a 30 mm radius.
    pub capture_ratio: f64,
}

impl Default for GripperConfig {
    fn default() -> Self {
        let geom = ActuatorGeometry::default;
        GripperConfig {
            mount_separation_mm: 85.3,
            pair_a: [geom(), geom()],
            pair_b: [geom(), geom()],
            fingertip_mu: 0.8,
            fingertip_area_mm2: 870.0,
            grip_force_gain_n_per_kpa: 0.05,
            capture_ratio: 2.0 * 30.0 / 85.3,
        }
    }
}

impl GripperConfig {
    pub fn violations(&self, ctx: &str) -> Vec<String> {
        let mut v = Vec::new();
        for (name, val) in [
            ("mount_separation_mm", self.mount_separation_mm),
            ("fingertip_mu", self.fingertip_mu),
            ("fingertip_area_mm2", self.fingertip_area_mm2),
            ("grip_force_gain_n_per_kpa", self.grip_force_gain_n_per_kpa),
        ] {
            if !(val > 0.0) || !val.is_finite() {
                v.push(format!("{ctx}.{name}: must be finite and > 0, got {val}"));
            }
        }
        if !(self.capture_ratio > 0.0 && self.capture_ratio <= 1.0) {
            v.push(format!("{ctx}.capture_ratio: must lie in (0, 1], got {}", self.capture_ratio));
        }
        for (i, g) in self.pair_a.iter().enumerate() {
            v.extend(g.violations(&format!("{ctx}.pair_a[{i}]")));
        }
        for (i, g) in self.pair_b.iter().enumerate() {
            v.extend(g.violations(&format!("{ctx}.pair_b[{i}]")));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("gripper");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { violations: v })
        }
    }

    /// Geometries of one pair.
    pub fn pair(&self, pair: PairId) -> &[ActuatorGeometry; 2] {
        match pair {
            PairId::A => &self.pair_a,
            PairId::B => &self.pair_b,
        }
    }

    /// Geometry of actuator `idx` (0, 1 = pair A; 2, 3 = pair B).
    pub fn geometry(&self, idx: usize) -> &ActuatorGeometry {
        match idx {
            0 | 1 => &self.pair_a[idx],
            2 | 3 => &self.pair_b[idx - 2],
            _ => panic!("actuator index {idx} out of range 0..4"),
        }
    }

    /// Mount point and inward unit vector of actuator `idx`.
    ///
    /// Pair A straddles the x axis, pair B the y axis; actuators extend
    /// along +z.
    pub fn mount(&self, idx: usize) -> ([f64; 3], [f64; 3]) {
        let h = self.mount_separation_mm / 2.0;
        match idx {
            0 => ([h, 0.0, 0.0], [-1.0, 0.0, 0.0]),
            1 => ([-h, 0.0, 0.0], [1.0, 0.0, 0.0]),
            2 => ([0.0, h, 0.0], [0.0, -1.0, 0.0]),
            3 => ([0.0, -h, 0.0], [0.0, 1.0, 0.0]),
            _ => panic!("actuator index {idx} out of range 0..4"),
        }
    }

    /// World-frame tip position of actuator `idx` in configuration `arc`.
    pub fn tip_position(&self, idx: usize, arc: &ArcConfig) -> [f64; 3] {
        let (m, u) = self.mount(idx);
        [
            m[0] + u[0] * arc.tip_mm[0],
            m[1] + u[1] * arc.tip_mm[0],
            m[2] + arc.tip_mm[1],
        ]
    }
}

/// Graspable object shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius_mm: f64 },
    Annulus { outer_radius_mm: f64, inner_radius_mm: f64, height_mm: f64 },
}

/// A rigid object presented to the gripper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectModel {
    pub shape: Shape,
    pub mass_kg: f64,
    /// Center position in the gripper frame (x, y, z), mm; +z points along
    /// the actuators.
    pub center_mm: [f64; 3],
    /// Friction coefficient of the object surface.
    pub surface_mu: f64,
}

impl ObjectModel {
    /// Radius at which the object blocks a closing pair, mm.
    pub fn blocking_radius_mm(&self) -> f64 {
        match self.shape {
            Shape::Sphere { radius_mm } => radius_mm,
            Shape::Annulus { outer_radius_mm, .. } => outer_radius_mm,
        }
    }

    /// Radius of the central hole, if the shape has one, mm. Fingers inside
    /// the hole are blocked at this radius when moving outward.
    pub fn hole_radius_mm(&self) -> Option<f64> {
        match self.shape {
            Shape::Sphere { .. } => None,
            Shape::Annulus { inner_radius_mm, .. } => Some(inner_radius_mm),
        }
    }

    /// Half-extent of the object along the gripper axis, mm.
    pub fn axial_half_span_mm(&self) -> f64 {
        match self.shape {
            Shape::Sphere { radius_mm } => radius_mm,
            Shape::Annulus { height_mm, .. } => height_mm / 2.0,
        }
    }

    pub fn violations(&self, ctx: &str) -> Vec<String> {
        let mut v = Vec::new();
        match self.shape {
            Shape::Sphere { radius_mm } => {
                if !(radius_mm > 0.0) || !radius_mm.is_finite() {
                    v.push(format!("{ctx}.shape.radius_mm: must be finite and > 0, got {radius_mm}"));
                }
            }
            Shape::Annulus { outer_radius_mm, inner_radius_mm, height_mm } => {
                if !(outer_radius_mm > 0.0) || !outer_radius_mm.is_finite() {
                    v.push(format!(
                        "{ctx}.shape.outer_radius_mm: must be finite and > 0, got {outer_radius_mm}"
                    ));
                }
                if !(inner_radius_mm >= 0.0) || inner_radius_mm >= outer_radius_mm {
                    v.push(format!(
                        "{ctx}.shape.inner_radius_mm: must lie in [0, outer), got {inner_radius_mm}"
                    ));
                }
                if !(height_mm > 0.0) || !height_mm.is_finite() {
                    v.push(format!("{ctx}.shape.height_mm: must be finite and > 0, got {height_mm}"));
                }
            }
        }
        if !(self.mass_kg >= 0.0) || !self.mass_kg.is_finite() {
            v.push(format!("{ctx}.mass_kg: must be finite and >= 0, got {}", self.mass_kg));
        }
        if !(self.surface_mu > 0.0) || !self.surface_mu.is_finite() {
            v.push(format!("{ctx}.surface_mu: must be finite and > 0, got {}", self.surface_mu));
        }
        if self.center_mm.iter().any(|c| !c.is_finite()) {
            v.push(format!("{ctx}.center_mm: coordinates must be finite"));
        }
        v
    }
}

/// Outcome classification of a grasp attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripStatus {
    /// Enough opposed contacts and friction to hold the object's weight.
    Gripped,
    /// Object reachable but the fingers are not touching it.
    NoContact,
    /// Object outside the envelope the fingers swept or can capture.
    OutOfRange,
    /// Contacts exist but friction cannot carry the weight.
    Slipped,
}

/// One fingertip contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub position_mm: [f64; 3],
    pub normal_force_n: f64,
}

/// Result of evaluating a grasp against one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripOutcome {
    pub status: GripStatus,
    pub contacts: Vec<ContactPoint>,
    /// Total normal force over all contacts, N.
    pub total_normal_force_n: f64,
    /// Holdable weight divided by object weight; >= 1 when gripped.
    pub payload_margin: f64,
}

/// Margin reported for massless objects, which any contact can hold.
const UNLOADED_MARGIN: f64 = 1e9;

/// Snapshot of one opposed pair for grip evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGripState {
    pub pair: PairId,
    /// Current lateral tip-to-tip distance, mm.
    pub aperture_mm: f64,
    /// Widest aperture since this grasp attempt began, mm; the envelope the
    /// fingers approached the object from.
    pub approach_aperture_mm: f64,
    /// Current pair supply pressure, kPa.
    pub pressure_kpa: f64,
    /// Supply pressure recorded at first contact, kPa; `None` before any
    /// contact.
    pub contact_pressure_kpa: Option<f64>,
    /// World-frame tip positions of the pair's two actuators, mm.
    pub tip_positions_mm: [[f64; 3]; 2],
}

impl PairGripState {
    /// Largest blocking radius this pair can capture, mm.
    pub fn capture_radius_mm(&self, cfg: &GripperConfig) -> f64 {
        cfg.capture_ratio * self.approach_aperture_mm / 2.0
    }
}

/// Lateral tip-to-tip distance (mm) of `pair` in the given mode.
///
/// Neutral is the rest separation. Outward and inward sum both actuators'
/// lateral tip displacements on top of it, so the result is symmetric under
/// swapping the pair's actuators. Inward apertures floor at zero (fingertips
/// meeting on the axis).
pub fn pair_aperture(
    cfg: &GripperConfig,
    pair: PairId,
    law: &ExtensionLaw,
    pressure_kpa: f64,
    mode: ApertureMode,
    engagement: f64,
) -> Result<f64> {
    let s0 = cfg.mount_separation_mm;
    let side = match mode {
        ApertureMode::Neutral => return Ok(s0),
        ApertureMode::Outward => BrakedSide::Outer,
        ApertureMode::Inward => BrakedSide::Inner,
    };
    let geoms = cfg.pair(pair);
    let mut aperture = s0;
    for geom in geoms {
        let arc = bend_config(geom, law, pressure_kpa, side, engagement)?;
        aperture -= arc.tip_mm[0]; // signed: inward displacement shrinks it
    }
    Ok(aperture.max(0.0))
}

/// Largest blocking radius (mm) capturable after pre-shaping pair A with
/// `mode` at `pressure` and `engagement`.
///
/// With no pre-expansion this is the initial grip radius of the gripper
/// (30 mm at the default configuration); pre-expanding outward grows it
/// monotonically with pressure.
pub fn grip_radius(
    cfg: &GripperConfig,
    law: &ExtensionLaw,
    mode: ApertureMode,
    pressure_kpa: f64,
    engagement: f64,
) -> Result<f64> {
    let aperture = pair_aperture(cfg, PairId::A, law, pressure_kpa, mode, engagement)?;
    Ok(cfg.capture_ratio * aperture / 2.0)
}

/// Widest outward aperture (mm) reachable by `pair` at full engagement, and
/// the pressure that attains it. Scanned over the working pressure range.
pub fn max_outward_aperture(
    cfg: &GripperConfig,
    pair: PairId,
    law: &ExtensionLaw,
) -> Result<(f64, f64)> {
    let p_max = cfg
        .pair(pair)
        .iter()
        .map(|g| g.p_max_kpa)
        .fold(f64::INFINITY, f64::min)
        .min(law.max_pressure_kpa());
    let mut best = (cfg.mount_separation_mm, 0.0);
    let n = 400;
    for k in 0..=n {
        let p = p_max * (k as f64) / (n as f64);
        let a = pair_aperture(cfg, pair, law, p, ApertureMode::Outward, 1.0)?;
        if a > best.0 {
            best = (a, p);
        }
    }
    Ok(best)
}

/// Smallest supply pressure (kPa) at which `pair`, closing inward from rest
/// at the given engagement, first touches `object`; `None` if it never does
/// within the working range.
pub fn closing_contact_pressure(
    cfg: &GripperConfig,
    pair: PairId,
    law: &ExtensionLaw,
    object: &ObjectModel,
    engagement: f64,
) -> Result<Option<f64>> {
    let touch = 2.0 * object.blocking_radius_mm() + 2.0 * CONTACT_TOL_MM;
    let p_max = cfg
        .pair(pair)
        .iter()
        .map(|g| g.p_max_kpa)
        .fold(f64::INFINITY, f64::min)
        .min(law.max_pressure_kpa());
    if pair_aperture(cfg, pair, law, 0.0, ApertureMode::Inward, engagement)? <= touch {
        return Ok(Some(0.0));
    }
    // Coarse scan for the first crossing, then bisect inside the bracket.
    let n = 400;
    let mut prev_p = 0.0;
    for k in 1..=n {
        let p = p_max * (k as f64) / (n as f64);
        if pair_aperture(cfg, pair, law, p, ApertureMode::Inward, engagement)? <= touch {
            let (mut lo, mut hi) = (prev_p, p);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if pair_aperture(cfg, pair, law, mid, ApertureMode::Inward, engagement)? <= touch {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        prev_p = p;
    }
    Ok(None)
}

/// Evaluates a grasp: the given pairs against one object.
///
/// Statuses are data, not errors; only malformed inputs fail. A pair
/// contributes its two (opposed) fingertip contacts when the object is
/// inside its capture envelope and the aperture has closed onto the blocking
/// diameter. Normal force per contact is `grip_force_gain` times the
/// residual pressure above first contact; the grasp holds when total
/// friction covers the object's weight.
pub fn grip_check(
    cfg: &GripperConfig,
    pairs: &[PairGripState],
    object: &ObjectModel,
) -> Result<GripOutcome> {
    let violations = object.violations("object");
    if !violations.is_empty() {
        return Err(Error::Validation { violations });
    }
    if pairs.is_empty() {
        return Err(Error::domain("grip_check needs at least one pair state"));
    }

    let r_block = object.blocking_radius_mm();
    let half_span = object.axial_half_span_mm();
    let centered = object.center_mm[0].abs() <= CENTER_TOL_MM && object.center_mm[1].abs() <= CENTER_TOL_MM;

    let mut contacts = Vec::new();
    let mut total_force = 0.0;
    let mut any_in_range = false;
    for ps in pairs {
        let lateral_ok = r_block <= ps.capture_radius_mm(cfg);
        let axial_ok = ps
            .tip_positions_mm
            .iter()
            .any(|tip| (tip[2] - object.center_mm[2]).abs() <= half_span + AXIAL_TOL_MM);
        if !(lateral_ok && axial_ok && centered) {
            continue;
        }
        any_in_range = true;
        let touching = ps.aperture_mm <= 2.0 * r_block + 2.0 * CONTACT_TOL_MM;
        if !touching {
            continue;
        }
        let residual = (ps.pressure_kpa - ps.contact_pressure_kpa.unwrap_or(ps.pressure_kpa)).max(0.0);
        let f_tip = cfg.grip_force_gain_n_per_kpa * residual;
        for tip in &ps.tip_positions_mm {
            contacts.push(ContactPoint { position_mm: *tip, normal_force_n: f_tip });
            total_force += f_tip;
        }
    }

    if !any_in_range {
        return Ok(GripOutcome {
            status: GripStatus::OutOfRange,
            contacts: Vec::new(),
            total_normal_force_n: 0.0,
            payload_margin: 0.0,
        });
    }
    if contacts.len() < 2 {
        return Ok(GripOutcome {
            status: GripStatus::NoContact,
            contacts,
            total_normal_force_n: total_force,
            payload_margin: 0.0,
        });
    }

    let mu_eff = cfg.fingertip_mu.min(object.surface_mu);
    let holdable_kg = total_force * mu_eff / GRAVITY;
    let payload_margin = if object.mass_kg > 0.0 {
        holdable_kg / object.mass_kg
    } else {
        UNLOADED_MARGIN
    };
    let status = if payload_margin >= 1.0 { GripStatus::Gripped } else { GripStatus::Slipped };
    Ok(GripOutcome { status, contacts, total_normal_force_n: total_force, payload_margin })
}
