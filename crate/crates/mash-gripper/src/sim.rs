//! Deterministic quasi-static closed-loop simulation.
//!
//! The world tracks, per actuator, the lengths of its two walls and the
//! engagement state of the two brake layers. Each fixed step:
//!
//! 1. the strategy reads an [`Observation`] and emits a [`Command`];
//! 2. brake engagements relax toward their commanded targets; energizing a
//!    layer captures the wall's current length as the lock reference;
//! 3. each wall's unconstrained target blends the free pressure length with
//!    its lock reference by engagement, and walls move straight toward the
//!    targets in wall-space;
//! 4. objects block that motion: a pair closing from outside an object
//!    stops where the aperture equals the blocking diameter, a pair opening
//!    inside an annulus stops at the hole diameter. The supply pressure at
//!    first contact is recorded; squeeze force grows with pressure above it.
//!
//! Everything is pure `f64` arithmetic over fixed-order arrays, so a
//! scenario always reproduces a byte-identical log.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuator::{arc_from_walls, ArcConfig};
use crate::brake::{engagement_step, BrakeState};
use crate::controller::{
    self, Command, ObjectObservation, Observation, Phase, Strategy, StrategyEvent, StrategyState,
    TipPose,
};
use crate::error::Result;
use crate::gripper::{
    grip_check, max_outward_aperture, GripOutcome, GripStatus, GripperConfig, ObjectModel,
    PairGripState, PairId, CENTER_TOL_MM, CONTACT_TOL_MM,
};
use crate::material::ExtensionLaw;
use crate::scenario::Scenario;

/// Margin added to an object's wrap aperture when deciding how far to
/// pre-expand, mm.
pub const CLEARANCE_MARGIN_MM: f64 = 10.0;

/// One brake layer: engagement dynamics plus the wall length captured when
/// the layer was last energized.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LayerSim {
    state: BrakeState,
    lock_mm: Option<f64>,
}

/// An active finger-object contact of one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ContactState {
    object: usize,
    /// Aperture pinned by the contact, mm.
    boundary_mm: f64,
    /// Pair pressure when the contact formed, kPa.
    pressure_kpa: f64,
    /// True when the fingers press the object from outside (closing),
    /// false when they press the hole wall from inside (opening).
    outside: bool,
}

/// Closed-loop plant state.
#[derive(Debug, Clone)]
pub struct World {
    cfg: GripperConfig,
    law: ExtensionLaw,
    objects: Vec<ObjectModel>,
    /// Which pairs watch each object (index 0 = pair A, 1 = pair B).
    assignment: Vec<[bool; 2]>,
    /// `[actuator][inner, outer]`.
    layers: [[LayerSim; 2]; 4],
    /// Wall lengths `[actuator][inner, outer]`, mm.
    walls_mm: [[f64; 2]; 4],
    pressures_kpa: [f64; 2],
    /// Widest observed aperture per pair outside contact, mm.
    approach_mm: [f64; 2],
    contact: [Option<ContactState>; 2],
    /// Capture radius after full outward expansion, per pair, mm.
    max_capture_mm: [f64; 2],
}

fn pair_actuators(pair: usize) -> [usize; 2] {
    if pair == 0 {
        [0, 1]
    } else {
        [2, 3]
    }
}

impl World {
    /// Builds the rest-state world for a validated scenario. `law` must be
    /// the scenario's resolved extension law.
    pub fn new(scenario: &Scenario, law: ExtensionLaw) -> Result<World> {
        let cfg = scenario.gripper.clone();
        // Object-to-pair assignment mirrors the strategies: the two-object
        // strategy dedicates pair A to object 0 and pair B to object 1;
        // single-object strategies use all four fingers on every object.
        let assignment = scenario
            .objects
            .iter()
            .enumerate()
            .map(|(k, _)| match scenario.strategy {
                Strategy::MultiObject => [k == 0, k == 1],
                _ => [true, true],
            })
            .collect();
        let mut walls_mm = [[0.0; 2]; 4];
        for (i, walls) in walls_mm.iter_mut().enumerate() {
            let rest = cfg.geometry(i).rest_length_mm;
            *walls = [rest, rest];
        }
        let layer = LayerSim { state: BrakeState::default(), lock_mm: None };
        let mut max_capture_mm = [0.0; 2];
        for (p, cap) in max_capture_mm.iter_mut().enumerate() {
            let pair = if p == 0 { PairId::A } else { PairId::B };
            let (aperture, _) = max_outward_aperture(&cfg, pair, &law)?;
            *cap = cfg.capture_ratio * aperture / 2.0;
        }
        Ok(World {
            approach_mm: [cfg.mount_separation_mm; 2],
            cfg,
            law,
            objects: scenario.objects.clone(),
            assignment,
            layers: [[layer; 2]; 4],
            walls_mm,
            pressures_kpa: [0.0; 2],
            contact: [None; 2],
            max_capture_mm,
        })
    }

    /// Wall lengths `[actuator][inner, outer]`, mm.
    pub fn walls_mm(&self) -> &[[f64; 2]; 4] {
        &self.walls_mm
    }

    fn arc(&self, walls: &[[f64; 2]; 4], idx: usize) -> Result<ArcConfig> {
        arc_from_walls(walls[idx][0], walls[idx][1], self.cfg.geometry(idx).layer_gap_mm)
    }

    /// Signed tip-to-tip distance of a pair; negative means crossed tips.
    fn raw_aperture(&self, walls: &[[f64; 2]; 4], pair: usize) -> Result<f64> {
        let [i, j] = pair_actuators(pair);
        let xi = self.arc(walls, i)?.tip_mm[0];
        let xj = self.arc(walls, j)?.tip_mm[0];
        Ok(self.cfg.mount_separation_mm - xi - xj)
    }

    fn brake_snapshot(&self) -> [BrakePairSnapshot; 4] {
        let mut out = [BrakePairSnapshot::default(); 4];
        for (i, snap) in out.iter_mut().enumerate() {
            snap.inner = self.layers[i][0].state;
            snap.outer = self.layers[i][1].state;
        }
        out
    }

    /// Does `pair` physically overlap the object along the axis right now?
    fn axial_overlap(&self, walls: &[[f64; 2]; 4], pair: usize, obj: &ObjectModel) -> Result<bool> {
        let half = obj.axial_half_span_mm() + CONTACT_TOL_MM;
        for idx in pair_actuators(pair) {
            let tip_z = self.arc(walls, idx)?.tip_mm[1];
            if (tip_z - obj.center_mm[2]).abs() <= half {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Assembles the strategy-facing observation and per-object outcomes.
    pub fn observe(&self) -> Result<(Observation, Vec<GripOutcome>)> {
        let mut tip_poses = [TipPose { position_mm: [0.0; 3], tangent_rad: 0.0 }; 4];
        let mut arcs = Vec::with_capacity(4);
        for idx in 0..4 {
            let arc = self.arc(&self.walls_mm, idx)?;
            tip_poses[idx] = TipPose {
                position_mm: self.cfg.tip_position(idx, &arc),
                tangent_rad: arc.tip_tangent_rad,
            };
            arcs.push(arc);
        }
        let mut pair_apertures_mm = [0.0; 2];
        for p in 0..2 {
            pair_apertures_mm[p] = self.raw_aperture(&self.walls_mm, p)?.max(0.0);
        }
        let mut contact_flags = [false; 4];
        for p in 0..2 {
            if self.contact[p].is_some() {
                for idx in pair_actuators(p) {
                    contact_flags[idx] = true;
                }
            }
        }
        let mut brake_engagements = [[0.0; 2]; 4];
        for (i, eng) in brake_engagements.iter_mut().enumerate() {
            *eng = [self.layers[i][0].state.engagement, self.layers[i][1].state.engagement];
        }

        let mut objects = Vec::with_capacity(self.objects.len());
        let mut grips = Vec::with_capacity(self.objects.len());
        for (k, obj) in self.objects.iter().enumerate() {
            let assigned: Vec<usize> = (0..2).filter(|&p| self.assignment[k][p]).collect();
            let states: Vec<PairGripState> = assigned
                .iter()
                .map(|&p| {
                    let [i, j] = pair_actuators(p);
                    PairGripState {
                        pair: if p == 0 { PairId::A } else { PairId::B },
                        aperture_mm: pair_apertures_mm[p],
                        approach_aperture_mm: self.approach_mm[p],
                        pressure_kpa: self.pressures_kpa[p],
                        contact_pressure_kpa: self.contact[p]
                            .filter(|c| c.object == k)
                            .map(|c| c.pressure_kpa),
                        tip_positions_mm: [tip_poses[i].position_mm, tip_poses[j].position_mm],
                    }
                })
                .collect();
            let grip = grip_check(&self.cfg, &states, obj)?;
            let r_block = obj.blocking_radius_mm();
            let axial_ref = assigned.first().map_or(0.0, |&p| {
                let [i, j] = pair_actuators(p);
                (tip_poses[i].position_mm[2] + tip_poses[j].position_mm[2]) / 2.0
            });
            objects.push(ObjectObservation {
                in_range: grip.status != GripStatus::OutOfRange,
                reachable_with_expansion: assigned
                    .iter()
                    .any(|&p| self.max_capture_mm[p] >= r_block),
                required_clearance_mm: 2.0 * r_block / self.cfg.capture_ratio
                    + CLEARANCE_MARGIN_MM,
                axial_offset_mm: axial_ref - obj.center_mm[2],
                status: grip.status,
                payload_margin: grip.payload_margin,
            });
            grips.push(grip);
        }

        Ok((
            Observation {
                tip_poses,
                pair_apertures_mm,
                pair_pressures_kpa: self.pressures_kpa,
                contact_flags,
                brake_engagements,
                objects,
            },
            grips,
        ))
    }

    /// Advances the plant by `dt` under `cmd`.
    pub fn apply(&mut self, cmd: &Command, dt_s: f64) -> Result<()> {
        // Brake engagement dynamics; energizing captures the lock reference.
        for i in 0..4 {
            let geom = self.cfg.geometry(i).clone();
            for (s, params) in [(0, &geom.inner_brake), (1, &geom.outer_brake)] {
                let v = cmd.voltages_v[i][s];
                let layer = &mut self.layers[i][s];
                if v > 0.0 && layer.state.voltage_v == 0.0 {
                    layer.lock_mm = Some(self.walls_mm[i][s]);
                }
                layer.state = engagement_step(&layer.state, v, dt_s, params)?;
            }
        }
        self.pressures_kpa = [cmd.pressure_pair_a_kpa, cmd.pressure_pair_b_kpa];

        // Unconstrained wall targets: free length blended toward the lock
        // reference by engagement.
        let mut targets = self.walls_mm;
        for i in 0..4 {
            let pair = if i < 2 { 0 } else { 1 };
            let free = self.law.length_at(self.pressures_kpa[pair])?;
            for s in 0..2 {
                let layer = &self.layers[i][s];
                targets[i][s] = match layer.lock_mm {
                    Some(lock) => free + (lock - free) * layer.state.engagement,
                    None => free,
                };
            }
        }

        // Per pair: move along the straight path in wall-space until an
        // object boundary blocks it.
        for p in 0..2 {
            let walls_at = |lambda: f64| {
                let mut w = self.walls_mm;
                for idx in pair_actuators(p) {
                    for s in 0..2 {
                        w[idx][s] = self.walls_mm[idx][s]
                            + lambda * (targets[idx][s] - self.walls_mm[idx][s]);
                    }
                }
                w
            };
            let a0 = self.raw_aperture(&self.walls_mm, p)?;
            let a1 = self.raw_aperture(&walls_at(1.0), p)?;

            // The binding constraint is the first boundary crossed.
            let mut binding: Option<(f64, ContactState)> = None;
            for (k, obj) in self.objects.iter().enumerate() {
                if !self.assignment[k][p] {
                    continue;
                }
                let centered = obj.center_mm[0].abs() <= CENTER_TOL_MM
                    && obj.center_mm[1].abs() <= CENTER_TOL_MM;
                if !centered || !self.axial_overlap(&self.walls_mm, p, obj)? {
                    continue;
                }
                let hi = 2.0 * obj.blocking_radius_mm();
                let lo = obj.hole_radius_mm().map(|r| 2.0 * r);
                let candidate = if a0 >= hi - 1e-9 && a1 < hi {
                    // Closing from outside; stop at the blocking diameter.
                    Some((hi, true))
                } else if let Some(lo) = lo.filter(|&lo| a0 <= lo + 1e-9 && a1 > lo) {
                    // Opening inside the hole; stop at the hole diameter.
                    Some((lo, false))
                } else {
                    None
                };
                let Some((boundary, outside)) = candidate else { continue };
                // Largest step that stays on the feasible side.
                let feasible = |a: f64| if outside { a >= boundary } else { a <= boundary };
                let mut lo_l = 0.0;
                let mut hi_l = 1.0;
                for _ in 0..60 {
                    let mid = 0.5 * (lo_l + hi_l);
                    if feasible(self.raw_aperture(&walls_at(mid), p)?) {
                        lo_l = mid;
                    } else {
                        hi_l = mid;
                    }
                }
                let contact = ContactState {
                    object: k,
                    boundary_mm: boundary,
                    pressure_kpa: self.contact[p]
                        .filter(|c| c.object == k)
                        .map_or(self.pressures_kpa[p], |c| c.pressure_kpa),
                    outside,
                };
                if binding.map_or(true, |(best, _)| lo_l < best) {
                    binding = Some((lo_l, contact));
                }
            }

            match binding {
                Some((lambda, contact)) => {
                    self.walls_mm = walls_at(lambda);
                    self.contact[p] = Some(contact);
                }
                None => {
                    self.walls_mm = walls_at(1.0);
                    // A persisting contact survives only while the target
                    // still presses against the boundary.
                    if let Some(c) = self.contact[p] {
                        let still_pressed = if c.outside {
                            a1 <= c.boundary_mm + CONTACT_TOL_MM
                        } else {
                            a1 >= c.boundary_mm - CONTACT_TOL_MM
                        };
                        let obj = &self.objects[c.object];
                        if !still_pressed || !self.axial_overlap(&self.walls_mm, p, obj)? {
                            self.contact[p] = None;
                        }
                    }
                }
            }
            if self.contact[p].is_none() {
                let observed = self.raw_aperture(&self.walls_mm, p)?.max(0.0);
                self.approach_mm[p] = self.approach_mm[p].max(observed);
            }
        }
        Ok(())
    }
}

/// Per-actuator brake layer states at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BrakePairSnapshot {
    pub inner: BrakeState,
    pub outer: BrakeState,
}

/// One record per control step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub t_s: f64,
    pub phase: Phase,
    pub command: Command,
    pub observation: Observation,
    pub brakes: [BrakePairSnapshot; 4],
    /// One outcome per scene object, in scenario order.
    pub grips: Vec<GripOutcome>,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Completed,
    Timeout,
    Abort,
}

/// Full log of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub scenario: String,
    pub dt_s: f64,
    pub seed: u64,
    pub records: Vec<SimRecord>,
    pub events: Vec<StrategyEvent>,
    pub terminal: Terminal,
}

impl SimLog {
    /// Canonical serialization (pretty JSON, trailing newline); two runs of
    /// the same scenario produce byte-identical output.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Runs a scenario to its terminal state. `base_dir` anchors relative paths
/// referenced by the scenario.
pub fn run_scenario(scenario: &Scenario, base_dir: &Path) -> Result<SimLog> {
    let law = scenario.validate(base_dir)?;
    let mut world = World::new(scenario, law)?;
    let mut state = StrategyState::new(scenario.strategy);
    let mut records = Vec::new();
    let terminal;
    let mut k: u64 = 0;
    loop {
        let t = k as f64 * scenario.dt_s;
        let (obs, grips) = world.observe()?;
        let (cmd, next) = controller::step(&scenario.strategy_params, &state, &obs, t);
        state = next;
        records.push(SimRecord {
            t_s: t,
            phase: state.phase,
            command: cmd.clone(),
            observation: obs,
            brakes: world.brake_snapshot(),
            grips,
        });
        if state.completed {
            terminal = Terminal::Completed;
            break;
        }
        match state.phase {
            Phase::Aborted => {
                terminal = Terminal::Abort;
                break;
            }
            Phase::TimedOut => {
                terminal = Terminal::Timeout;
                break;
            }
            _ => {}
        }
        if (k + 1) as f64 * scenario.dt_s > scenario.t_max_s + 1e-9 {
            terminal = Terminal::Timeout;
            break;
        }
        world.apply(&cmd, scenario.dt_s)?;
        k += 1;
    }
    Ok(SimLog {
        scenario: scenario.name.clone(),
        dt_s: scenario.dt_s,
        seed: scenario.seed,
        records,
        events: state.events.clone(),
        terminal,
    })
}
