//! Grasp strategy state machines.
//!
//! Strategies are deterministic Mealy machines stepped at the simulation
//! rate: `(state, observation, time) -> (command, state')`. Transitions fire
//! on observed guards (brake engagement thresholds, apertures, grip status),
//! never on open-loop timing, except for explicit hold dwells. Three
//! strategies are provided:
//!
//! * **SmallSingle** - close all four fingers directly onto an object that
//!   already fits the rest grasp envelope.
//! * **LargeSingle** - splay the fingers around an oversized object with the
//!   outer brakes, release, re-brake inward, and close. Degenerates to the
//!   SmallSingle chain when no expansion is needed.
//! * **MultiObject** - grip one object with pair A, extend pair B past it to
//!   a second object below, grip that too, then release in reverse order.
//!
//! Two safety invariants hold by construction: a pair is pressurized only
//! once the brakes its phase relies on are engaged (or the phase needs
//! none), and the inner and outer brake of one actuator are never commanded
//! on together.

use serde::{Deserialize, Serialize};

use crate::gripper::GripStatus;

/// Grasp strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    SmallSingle,
    LargeSingle,
    MultiObject,
}

/// Union of all strategy phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    // Single-object chain.
    ArmInnerBrakes,
    Pressurize,
    ArmOuterBrakes,
    ExpandOutward,
    ReleaseOuter,
    CloseInward,
    Gripped,
    Hold,
    // Multi-object chain, one phase per demonstration step (i)-(viii).
    ExpandFirst,
    GripFirst,
    ExtendSecond,
    GripSecond,
    HoldLift,
    ReleaseSecond,
    ReleaseFirst,
    Depressurize,
    // Failure terminals. Successful runs end in the chain's last phase with
    // the `completed` flag set, so the phase-entry log of a completed run is
    // exactly the declared chain.
    Aborted,
    TimedOut,
}

impl Phase {
    pub fn is_failure(self) -> bool {
        matches!(self, Phase::Aborted | Phase::TimedOut)
    }

    /// Position of this phase in `strategy`'s declared order; terminal
    /// failure phases rank last. Monotone over any legal run.
    pub fn rank(self, strategy: Strategy) -> usize {
        let order: &[&[Phase]] = match strategy {
            Strategy::SmallSingle => &[
                &[Phase::Idle],
                &[Phase::ArmInnerBrakes],
                &[Phase::Pressurize],
                &[Phase::Gripped],
                &[Phase::Hold],
            ],
            Strategy::LargeSingle => &[
                &[Phase::Idle],
                &[Phase::ArmOuterBrakes],
                &[Phase::ExpandOutward],
                &[Phase::ReleaseOuter],
                &[Phase::ArmInnerBrakes],
                // The degenerate (no expansion) path pressurizes under the
                // SmallSingle label; both close at the same rank.
                &[Phase::CloseInward, Phase::Pressurize],
                &[Phase::Gripped],
                &[Phase::Hold],
            ],
            Strategy::MultiObject => &[
                &[Phase::Idle],
                &[Phase::ExpandFirst],
                &[Phase::GripFirst],
                &[Phase::ExtendSecond],
                &[Phase::GripSecond],
                &[Phase::HoldLift],
                &[Phase::ReleaseSecond],
                &[Phase::ReleaseFirst],
                &[Phase::Depressurize],
            ],
        };
        order
            .iter()
            .position(|group| group.contains(&self))
            .unwrap_or(usize::MAX)
    }
}

/// Tunable strategy parameters with conservative defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyParams {
    /// Brake drive voltage when a layer is commanded on, V.
    pub drive_voltage_v: f64,
    /// A brake counts as engaged at or above this fraction.
    pub engage_threshold: f64,
    /// A brake counts as released at or below this fraction.
    pub disengage_threshold: f64,
    /// Pressure ramp rate, kPa/s.
    pub ramp_rate_kpa_per_s: f64,
    /// Ramp ceiling, kPa; must not exceed any actuator's working pressure.
    pub max_pressure_kpa: f64,
    /// A phase whose guard has not fired after this long times out, s.
    pub phase_timeout_s: f64,
    /// Dwell in Gripped before Hold, s.
    pub settle_time_s: f64,
    /// Dwell in Hold (or HoldLift) before finishing, s.
    pub hold_time_s: f64,
    /// Axial alignment window for extending onto a lower object, mm.
    pub align_tol_mm: f64,
    /// Required payload margin before a grasp counts as complete.
    pub min_payload_margin: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            drive_voltage_v: 2000.0,
            engage_threshold: 0.9,
            disengage_threshold: 0.1,
            ramp_rate_kpa_per_s: 20.0,
            max_pressure_kpa: 100.0,
            phase_timeout_s: 10.0,
            settle_time_s: 0.1,
            hold_time_s: 0.5,
            align_tol_mm: 5.0,
            min_payload_margin: 1.0,
        }
    }
}

impl StrategyParams {
    pub fn violations(&self, ctx: &str) -> Vec<String> {
        let mut v = Vec::new();
        for (name, val) in [
            ("drive_voltage_v", self.drive_voltage_v),
            ("ramp_rate_kpa_per_s", self.ramp_rate_kpa_per_s),
            ("max_pressure_kpa", self.max_pressure_kpa),
            ("phase_timeout_s", self.phase_timeout_s),
            ("align_tol_mm", self.align_tol_mm),
            ("min_payload_margin", self.min_payload_margin),
        ] {
            if !(val > 0.0) || !val.is_finite() {
                v.push(format!("{ctx}.{name}: must be finite and > 0, got {val}"));
            }
        }
        for (name, val) in [("settle_time_s", self.settle_time_s), ("hold_time_s", self.hold_time_s)] {
            if !(val >= 0.0) || !val.is_finite() {
                v.push(format!("{ctx}.{name}: must be finite and >= 0, got {val}"));
            }
        }
        if !(self.engage_threshold > 0.0 && self.engage_threshold < 1.0) {
            v.push(format!("{ctx}.engage_threshold: must lie in (0, 1), got {}", self.engage_threshold));
        }
        if !(self.disengage_threshold > 0.0 && self.disengage_threshold < self.engage_threshold) {
            v.push(format!(
                "{ctx}.disengage_threshold: must lie in (0, engage_threshold), got {}",
                self.disengage_threshold
            ));
        }
        v
    }
}

/// Actuator command for one control step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub pressure_pair_a_kpa: f64,
    pub pressure_pair_b_kpa: f64,
    /// Drive voltages per actuator: `[inner, outer]`, V. Actuators 0 and 1
    /// form pair A, 2 and 3 pair B.
    pub voltages_v: [[f64; 2]; 4],
}

impl Command {
    pub fn zero() -> Self {
        Command { pressure_pair_a_kpa: 0.0, pressure_pair_b_kpa: 0.0, voltages_v: [[0.0; 2]; 4] }
    }

    pub fn pair_pressure(&self, pair_index: usize) -> f64 {
        if pair_index == 0 {
            self.pressure_pair_a_kpa
        } else {
            self.pressure_pair_b_kpa
        }
    }

    /// Safety violations of the command itself (negative drives, inner and
    /// outer of one actuator on together).
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, p) in [("pressure_pair_a_kpa", self.pressure_pair_a_kpa), ("pressure_pair_b_kpa", self.pressure_pair_b_kpa)] {
            if !(p >= 0.0) || !p.is_finite() {
                v.push(format!("command.{name}: must be finite and >= 0, got {p}"));
            }
        }
        for (i, [inner, outer]) in self.voltages_v.iter().enumerate() {
            if !(*inner >= 0.0) || !(*outer >= 0.0) || !inner.is_finite() || !outer.is_finite() {
                v.push(format!("command.voltages_v[{i}]: must be finite and >= 0"));
            }
            if *inner > 0.0 && *outer > 0.0 {
                v.push(format!("command.voltages_v[{i}]: inner and outer brake driven simultaneously"));
            }
        }
        v
    }
}

/// Fingertip pose in the gripper frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipPose {
    pub position_mm: [f64; 3],
    pub tangent_rad: f64,
}

/// Per-object feedback computed by the plant (simulator or estimator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectObservation {
    /// Inside the assigned pair's current capture envelope and reach.
    pub in_range: bool,
    /// Capturable after outward pre-expansion at working pressure.
    pub reachable_with_expansion: bool,
    /// Aperture needed to wrap around the object from outside, mm.
    pub required_clearance_mm: f64,
    /// Assigned pair's mean tip height minus object center height, mm.
    pub axial_offset_mm: f64,
    pub status: GripStatus,
    pub payload_margin: f64,
}

/// Plant feedback consumed by the strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub tip_poses: [TipPose; 4],
    /// Lateral tip-to-tip distance per pair (A, B), mm.
    pub pair_apertures_mm: [f64; 2],
    /// Supply pressure per pair (A, B), kPa.
    pub pair_pressures_kpa: [f64; 2],
    /// Whether each fingertip is resting on its assigned object.
    pub contact_flags: [bool; 4],
    /// Brake engagement per actuator: `[inner, outer]`.
    pub brake_engagements: [[f64; 2]; 4],
    /// One entry per scene object, in scenario order.
    pub objects: Vec<ObjectObservation>,
}

/// Events appended by the strategies; the log is append-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EventKind {
    PhaseEntered { phase: Phase },
    Timeout { phase: Phase },
    Abort { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEvent {
    pub t_s: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Strategy execution state. Step functions take it by reference and return
/// the successor; they never mutate in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyState {
    pub strategy: Strategy,
    pub phase: Phase,
    pub phase_entry_t_s: f64,
    /// Pair pressures observed when the phase was entered, kPa.
    pub entry_pressures_kpa: [f64; 2],
    /// Ramp origin for phases whose pressurization is gated on a brake
    /// guard inside the phase: (gate pass time, pressures then).
    pub ramp_from: Option<(f64, [f64; 2])>,
    /// Whether the outward expansion path was taken (LargeSingle).
    pub expanded: bool,
    pub events: Vec<StrategyEvent>,
    pub completed: bool,
}

impl StrategyState {
    pub fn new(strategy: Strategy) -> Self {
        StrategyState {
            strategy,
            phase: Phase::Idle,
            phase_entry_t_s: 0.0,
            entry_pressures_kpa: [0.0; 2],
            ramp_from: None,
            expanded: false,
            events: Vec::new(),
            completed: false,
        }
    }

    fn enter(&mut self, phase: Phase, t: f64, obs: &Observation) {
        self.phase = phase;
        self.phase_entry_t_s = t;
        self.entry_pressures_kpa = obs.pair_pressures_kpa;
        self.ramp_from = None;
        self.events.push(StrategyEvent { t_s: t, kind: EventKind::PhaseEntered { phase } });
    }

    /// Failure terminals record their own event kind, not a phase entry, so
    /// a completed run's phase-entry log equals the declared chain.
    fn abort(&mut self, reason: String, t: f64) {
        self.events.push(StrategyEvent { t_s: t, kind: EventKind::Abort { reason } });
        self.phase = Phase::Aborted;
        self.phase_entry_t_s = t;
        self.ramp_from = None;
    }
}

/// Dispatches to the strategy the state was created for.
pub fn step(
    params: &StrategyParams,
    state: &StrategyState,
    obs: &Observation,
    t: f64,
) -> (Command, StrategyState) {
    match state.strategy {
        Strategy::SmallSingle => step_small_single(params, state, obs, t),
        Strategy::LargeSingle => step_large_single(params, state, obs, t),
        Strategy::MultiObject => step_multi_object(params, state, obs, t),
    }
}

fn min_engagement(obs: &Observation, actuators: &[usize], side: usize) -> f64 {
    actuators
        .iter()
        .map(|&i| obs.brake_engagements[i][side])
        .fold(f64::INFINITY, f64::min)
}

fn max_engagement(obs: &Observation, actuators: &[usize], side: usize) -> f64 {
    actuators
        .iter()
        .map(|&i| obs.brake_engagements[i][side])
        .fold(0.0, f64::max)
}

const INNER: usize = 0;
const OUTER: usize = 1;
const ALL: [usize; 4] = [0, 1, 2, 3];
const A: [usize; 2] = [0, 1];
const B: [usize; 2] = [2, 3];

/// Linear ramp from `(t0, p0)` toward `target` at the configured rate.
fn ramp(params: &StrategyParams, p0: f64, t0: f64, t: f64, target: f64) -> f64 {
    let delta = params.ramp_rate_kpa_per_s * (t - t0);
    if target >= p0 {
        (p0 + delta).min(target)
    } else {
        (p0 - delta).max(target)
    }
}

/// Builds a command: per-pair pressures and brake sides.
fn command(
    params: &StrategyParams,
    pa: f64,
    pb: f64,
    a_side: Option<usize>,
    b_side: Option<usize>,
) -> Command {
    let mut c = Command::zero();
    c.pressure_pair_a_kpa = pa;
    c.pressure_pair_b_kpa = pb;
    if let Some(side) = a_side {
        for i in A {
            c.voltages_v[i][side] = params.drive_voltage_v;
        }
    }
    if let Some(side) = b_side {
        for i in B {
            c.voltages_v[i][side] = params.drive_voltage_v;
        }
    }
    debug_assert!(c.violations().is_empty());
    c
}

/// Shared timeout bookkeeping; returns true when the phase timed out.
fn check_timeout(params: &StrategyParams, st: &mut StrategyState, t: f64) -> bool {
    if st.phase.is_failure() || st.completed {
        return false;
    }
    if t - st.phase_entry_t_s > params.phase_timeout_s {
        st.events.push(StrategyEvent { t_s: t, kind: EventKind::Timeout { phase: st.phase } });
        st.phase = Phase::TimedOut;
        st.phase_entry_t_s = t;
        st.ramp_from = None;
        return true;
    }
    false
}

fn object_gripped(params: &StrategyParams, obj: &ObjectObservation) -> bool {
    obj.status == GripStatus::Gripped && obj.payload_margin >= params.min_payload_margin
}

/// SmallSingle: arm every inner brake, then pressurize both pairs until the
/// object is gripped with margin, then settle and hold.
pub fn step_small_single(
    params: &StrategyParams,
    state: &StrategyState,
    obs: &Observation,
    t: f64,
) -> (Command, StrategyState) {
    let mut st = state.clone();
    if !check_timeout(params, &mut st, t) {
        match st.phase {
            Phase::Idle => {
                if let Some(obj) = obs.objects.first() {
                    if obj.in_range {
                        st.enter(Phase::ArmInnerBrakes, t, obs);
                    } else {
                        st.abort("object outside the rest grasp envelope (out of range)".to_string(), t);
                    }
                }
            }
            Phase::ArmInnerBrakes => {
                if min_engagement(obs, &ALL, INNER) >= params.engage_threshold {
                    st.enter(Phase::Pressurize, t, obs);
                }
            }
            Phase::Pressurize => {
                // All four fingertips seated and the payload check passing.
                let all_contacts = obs.contact_flags.iter().all(|&c| c);
                if all_contacts && obs.objects.first().is_some_and(|o| object_gripped(params, o)) {
                    st.enter(Phase::Gripped, t, obs);
                }
            }
            Phase::Gripped => {
                if t - st.phase_entry_t_s >= params.settle_time_s {
                    st.enter(Phase::Hold, t, obs);
                }
            }
            Phase::Hold => {
                if t - st.phase_entry_t_s >= params.hold_time_s {
                    st.completed = true;
                }
            }
            _ => {}
        }
    }
    let cmd = match st.phase {
        Phase::Idle | Phase::Aborted | Phase::TimedOut => Command::zero(),
        Phase::ArmInnerBrakes => command(params, 0.0, 0.0, Some(INNER), Some(INNER)),
        Phase::Pressurize => {
            let p = ramp(params, st.entry_pressures_kpa[0], st.phase_entry_t_s, t, params.max_pressure_kpa);
            let pb = ramp(params, st.entry_pressures_kpa[1], st.phase_entry_t_s, t, params.max_pressure_kpa);
            command(params, p, pb, Some(INNER), Some(INNER))
        }
        // Hold the grip at the pressures that achieved it.
        _ => command(params, st.entry_pressures_kpa[0], st.entry_pressures_kpa[1], Some(INNER), Some(INNER)),
    };
    (cmd, st)
}

/// LargeSingle: splay outward around the object, release the outer brakes so
/// the fingers land on it, re-brake inward, and squeeze. Falls back to the
/// SmallSingle chain when the object already fits the rest envelope.
pub fn step_large_single(
    params: &StrategyParams,
    state: &StrategyState,
    obs: &Observation,
    t: f64,
) -> (Command, StrategyState) {
    let mut st = state.clone();
    if !check_timeout(params, &mut st, t) {
        match st.phase {
            Phase::Idle => {
                if let Some(obj) = obs.objects.first() {
                    if obj.in_range {
                        st.enter(Phase::ArmInnerBrakes, t, obs);
                    } else if obj.reachable_with_expansion {
                        st.expanded = true;
                        st.enter(Phase::ArmOuterBrakes, t, obs);
                    } else {
                        st.abort("object exceeds the expanded grasp envelope (out of range)".to_string(), t);
                    }
                }
            }
            Phase::ArmOuterBrakes => {
                if min_engagement(obs, &ALL, OUTER) >= params.engage_threshold {
                    st.enter(Phase::ExpandOutward, t, obs);
                }
            }
            Phase::ExpandOutward => {
                let clearance = obs.objects.first().map_or(f64::INFINITY, |o| o.required_clearance_mm);
                if obs.pair_apertures_mm.iter().all(|&a| a >= clearance) {
                    st.enter(Phase::ReleaseOuter, t, obs);
                }
            }
            Phase::ReleaseOuter => {
                if max_engagement(obs, &ALL, OUTER) <= params.disengage_threshold {
                    st.enter(Phase::ArmInnerBrakes, t, obs);
                }
            }
            Phase::ArmInnerBrakes => {
                if min_engagement(obs, &ALL, INNER) >= params.engage_threshold {
                    let next = if st.expanded { Phase::CloseInward } else { Phase::Pressurize };
                    st.enter(next, t, obs);
                }
            }
            Phase::CloseInward | Phase::Pressurize => {
                let all_contacts = obs.contact_flags.iter().all(|&c| c);
                if all_contacts && obs.objects.first().is_some_and(|o| object_gripped(params, o)) {
                    st.enter(Phase::Gripped, t, obs);
                }
            }
            Phase::Gripped => {
                if t - st.phase_entry_t_s >= params.settle_time_s {
                    st.enter(Phase::Hold, t, obs);
                }
            }
            Phase::Hold => {
                if t - st.phase_entry_t_s >= params.hold_time_s {
                    st.completed = true;
                }
            }
            _ => {}
        }
    }
    let held = st.entry_pressures_kpa;
    let cmd = match st.phase {
        Phase::Idle | Phase::Aborted | Phase::TimedOut => Command::zero(),
        Phase::ArmOuterBrakes => command(params, 0.0, 0.0, Some(OUTER), Some(OUTER)),
        Phase::ExpandOutward => {
            let pa = ramp(params, held[0], st.phase_entry_t_s, t, params.max_pressure_kpa);
            let pb = ramp(params, held[1], st.phase_entry_t_s, t, params.max_pressure_kpa);
            command(params, pa, pb, Some(OUTER), Some(OUTER))
        }
        Phase::ReleaseOuter => command(params, held[0], held[1], None, None),
        Phase::ArmInnerBrakes => command(params, held[0], held[1], Some(INNER), Some(INNER)),
        Phase::CloseInward | Phase::Pressurize => {
            let pa = ramp(params, held[0], st.phase_entry_t_s, t, params.max_pressure_kpa);
            let pb = ramp(params, held[1], st.phase_entry_t_s, t, params.max_pressure_kpa);
            command(params, pa, pb, Some(INNER), Some(INNER))
        }
        _ => command(params, held[0], held[1], Some(INNER), Some(INNER)),
    };
    (cmd, st)
}

/// MultiObject: the eight-step two-object demonstration. Pair A wraps and
/// grips the first object; pair B extends past it, grips the second below;
/// both hold; then the second object is released strictly before the first
/// and the system depressurizes.
pub fn step_multi_object(
    params: &StrategyParams,
    state: &StrategyState,
    obs: &Observation,
    t: f64,
) -> (Command, StrategyState) {
    let mut st = state.clone();
    if !check_timeout(params, &mut st, t) {
        match st.phase {
            Phase::Idle => {
                if obs.objects.len() >= 2 {
                    let first = &obs.objects[0];
                    if first.in_range || first.reachable_with_expansion {
                        st.enter(Phase::ExpandFirst, t, obs);
                    } else {
                        st.abort("first object exceeds the expanded grasp envelope".to_string(), t);
                    }
                }
            }
            Phase::ExpandFirst => {
                // Pressure is gated on the outer brakes inside the phase.
                if st.ramp_from.is_none() && min_engagement(obs, &A, OUTER) >= params.engage_threshold {
                    st.ramp_from = Some((t, obs.pair_pressures_kpa));
                }
                if obs.pair_apertures_mm[0] >= obs.objects[0].required_clearance_mm {
                    st.enter(Phase::GripFirst, t, obs);
                }
            }
            Phase::GripFirst => {
                if st.ramp_from.is_none() && min_engagement(obs, &A, INNER) >= params.engage_threshold {
                    st.ramp_from = Some((t, obs.pair_pressures_kpa));
                }
                if object_gripped(params, &obs.objects[0]) {
                    st.enter(Phase::ExtendSecond, t, obs);
                }
            }
            Phase::ExtendSecond => {
                let second = &obs.objects[1];
                if second.in_range && second.axial_offset_mm.abs() <= params.align_tol_mm {
                    st.enter(Phase::GripSecond, t, obs);
                } else if obs.pair_pressures_kpa[1] >= params.max_pressure_kpa {
                    st.abort("second object unreachable at working pressure".to_string(), t);
                }
            }
            Phase::GripSecond => {
                if st.ramp_from.is_none() && min_engagement(obs, &B, INNER) >= params.engage_threshold {
                    st.ramp_from = Some((t, obs.pair_pressures_kpa));
                }
                if object_gripped(params, &obs.objects[1]) {
                    st.enter(Phase::HoldLift, t, obs);
                }
            }
            Phase::HoldLift => {
                let margins_ok = obs.objects[..2]
                    .iter()
                    .all(|o| o.payload_margin >= params.min_payload_margin);
                if t - st.phase_entry_t_s >= params.hold_time_s && margins_ok {
                    st.enter(Phase::ReleaseSecond, t, obs);
                }
            }
            Phase::ReleaseSecond => {
                if max_engagement(obs, &B, INNER) <= params.disengage_threshold {
                    st.enter(Phase::ReleaseFirst, t, obs);
                }
            }
            Phase::ReleaseFirst => {
                if max_engagement(obs, &A, INNER) <= params.disengage_threshold
                    && max_engagement(obs, &A, OUTER) <= params.disengage_threshold
                {
                    st.enter(Phase::Depressurize, t, obs);
                }
            }
            Phase::Depressurize => {
                if obs.pair_pressures_kpa.iter().all(|&p| p <= 0.01) {
                    st.completed = true;
                }
            }
            _ => {}
        }
    }

    let held = st.entry_pressures_kpa;
    // Ramps gated inside a phase start from the gate-pass snapshot.
    let gated = |pair: usize| match st.ramp_from {
        Some((t0, p0)) => ramp(params, p0[pair], t0, t, params.max_pressure_kpa),
        None => held[pair],
    };
    let cmd = match st.phase {
        Phase::Idle | Phase::Aborted | Phase::TimedOut | Phase::Depressurize => Command::zero(),
        Phase::ExpandFirst => command(params, gated(0), 0.0, Some(OUTER), None),
        Phase::GripFirst => command(params, gated(0), 0.0, Some(INNER), None),
        Phase::ExtendSecond => {
            let pb = ramp(params, held[1], st.phase_entry_t_s, t, params.max_pressure_kpa);
            command(params, held[0], pb, Some(INNER), None)
        }
        Phase::GripSecond => command(params, held[0], gated(1), Some(INNER), Some(INNER)),
        Phase::HoldLift => command(params, held[0], held[1], Some(INNER), Some(INNER)),
        Phase::ReleaseSecond => command(params, held[0], held[1], Some(INNER), None),
        Phase::ReleaseFirst => command(params, held[0], held[1], None, None),
        // Phases of the single-object strategies never occur here.
        _ => Command::zero(),
    };
    (cmd, st)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rest_obs(objects: Vec<ObjectObservation>) -> Observation {
        Observation {
            tip_poses: [TipPose { position_mm: [0.0, 0.0, 104.0], tangent_rad: 0.0 }; 4],
            pair_apertures_mm: [85.3, 85.3],
            pair_pressures_kpa: [0.0, 0.0],
            contact_flags: [false; 4],
            brake_engagements: [[0.0; 2]; 4],
            objects,
        }
    }

    fn in_range_object() -> ObjectObservation {
        ObjectObservation {
            in_range: true,
            reachable_with_expansion: true,
            required_clearance_mm: 70.0,
            axial_offset_mm: 0.0,
            status: GripStatus::NoContact,
            payload_margin: 0.0,
        }
    }

    #[test]
    fn small_single_arms_brakes_before_any_pressure() {
        let params = StrategyParams::default();
        let state = StrategyState::new(Strategy::SmallSingle);
        let obs = rest_obs(vec![in_range_object()]);
        let (cmd, st) = step_small_single(&params, &state, &obs, 0.0);
        assert_eq!(st.phase, Phase::ArmInnerBrakes);
        assert_eq!(cmd.pressure_pair_a_kpa, 0.0);
        assert_eq!(cmd.pressure_pair_b_kpa, 0.0);
        for v in cmd.voltages_v {
            assert_eq!(v[0], 2000.0);
            assert_eq!(v[1], 0.0);
        }

        // Brakes below threshold: still no pressure.
        let mut half = rest_obs(vec![in_range_object()]);
        half.brake_engagements = [[0.6, 0.0]; 4];
        let (cmd, st) = step_small_single(&params, &st, &half, 0.1);
        assert_eq!(st.phase, Phase::ArmInnerBrakes);
        assert_eq!(cmd.pressure_pair_a_kpa, 0.0);

        // Engagement reached: pressurization begins, ramp-limited.
        let mut ready = rest_obs(vec![in_range_object()]);
        ready.brake_engagements = [[0.95, 0.0]; 4];
        let (_, st) = step_small_single(&params, &st, &ready, 0.2);
        assert_eq!(st.phase, Phase::Pressurize);
        let (cmd, _) = step_small_single(&params, &st, &ready, 0.7);
        assert!((cmd.pressure_pair_a_kpa - 10.0).abs() < 1e-9, "20 kPa/s for 0.5 s");
    }

    #[test]
    fn small_single_aborts_on_out_of_range_object() {
        let params = StrategyParams::default();
        let state = StrategyState::new(Strategy::SmallSingle);
        let mut obj = in_range_object();
        obj.in_range = false;
        obj.status = GripStatus::OutOfRange;
        let (cmd, st) = step_small_single(&params, &state, &rest_obs(vec![obj]), 0.0);
        assert_eq!(st.phase, Phase::Aborted);
        assert_eq!(cmd, Command::zero());
        assert!(st
            .events
            .iter()
            .any(|e| matches!(&e.kind, EventKind::Abort { reason } if reason.contains("out of range"))));
    }

    #[test]
    fn small_single_times_out_without_objects() {
        let params = StrategyParams::default();
        let mut state = StrategyState::new(Strategy::SmallSingle);
        let obs = rest_obs(vec![]);
        for k in 0..=1100 {
            let t = k as f64 * 0.01;
            let (_, next) = step_small_single(&params, &state, &obs, t);
            state = next;
            if state.phase == Phase::TimedOut {
                break;
            }
        }
        assert_eq!(state.phase, Phase::TimedOut);
        assert!(state.events.iter().any(|e| matches!(e.kind, EventKind::Timeout { phase: Phase::Idle })));
    }

    #[test]
    fn large_single_degenerates_to_small_chain_for_fitting_object() {
        let params = StrategyParams::default();
        let state = StrategyState::new(Strategy::LargeSingle);
        let obs = rest_obs(vec![in_range_object()]);
        let (_, st) = step_large_single(&params, &state, &obs, 0.0);
        assert_eq!(st.phase, Phase::ArmInnerBrakes);
        let mut ready = rest_obs(vec![in_range_object()]);
        ready.brake_engagements = [[0.95, 0.0]; 4];
        let (_, st) = step_large_single(&params, &st, &ready, 0.2);
        assert_eq!(st.phase, Phase::Pressurize, "no expansion happened, SmallSingle chain");
    }

    #[test]
    fn large_single_expands_before_closing_on_oversized_object() {
        let params = StrategyParams::default();
        let mut obj = in_range_object();
        obj.in_range = false;
        obj.required_clearance_mm = 220.0;
        let state = StrategyState::new(Strategy::LargeSingle);
        let (_, st) = step_large_single(&params, &state, &rest_obs(vec![obj.clone()]), 0.0);
        assert_eq!(st.phase, Phase::ArmOuterBrakes);

        let mut outer_ready = rest_obs(vec![obj.clone()]);
        outer_ready.brake_engagements = [[0.0, 0.95]; 4];
        let (_, st) = step_large_single(&params, &st, &outer_ready, 0.2);
        assert_eq!(st.phase, Phase::ExpandOutward);

        // Apertures below clearance keep expanding; above it, release.
        let mut wide = outer_ready.clone();
        wide.pair_apertures_mm = [230.0, 230.0];
        wide.pair_pressures_kpa = [28.0, 28.0];
        let (cmd, st) = step_large_single(&params, &st, &wide, 1.5);
        assert_eq!(st.phase, Phase::ReleaseOuter);
        assert_eq!(cmd.voltages_v, [[0.0; 2]; 4], "all brakes released");
        assert_eq!(cmd.pressure_pair_a_kpa, 28.0, "pressure held during release");
    }

    #[test]
    fn multi_object_runs_all_eight_phases_in_order() {
        let params = StrategyParams::default();
        let mut state = StrategyState::new(Strategy::MultiObject);
        // Scripted observation sequence that satisfies each guard in turn.
        let first = in_range_object();
        let second = ObjectObservation {
            in_range: false,
            reachable_with_expansion: true,
            required_clearance_mm: 50.0,
            axial_offset_mm: -60.0,
            status: GripStatus::NoContact,
            payload_margin: 0.0,
        };
        let gripped = |o: &ObjectObservation| ObjectObservation {
            status: GripStatus::Gripped,
            payload_margin: 1.5,
            ..o.clone()
        };

        let mut t = 0.0;
        let mut obs = rest_obs(vec![first.clone(), second.clone()]);
        obs.objects[0].required_clearance_mm = 150.0;
        let mut drive = |state: &mut StrategyState, patch: &dyn Fn(&mut Observation)| {
            let mut o = rest_obs(vec![first.clone(), second.clone()]);
            o.objects[0].required_clearance_mm = 150.0;
            patch(&mut o);
            t += 0.1;
            let (cmd, next) = step_multi_object(&params, state, &o, t);
            *state = next;
            cmd
        };

        drive(&mut state, &|_| {});
        assert_eq!(state.phase, Phase::ExpandFirst);
        drive(&mut state, &|o| {
            o.brake_engagements = [[0.0, 0.95], [0.0, 0.95], [0.0, 0.0], [0.0, 0.0]];
            o.pair_apertures_mm = [155.0, 85.3];
        });
        assert_eq!(state.phase, Phase::GripFirst);
        drive(&mut state, &|o| {
            o.brake_engagements = [[0.95, 0.05], [0.95, 0.05], [0.0, 0.0], [0.0, 0.0]];
            o.objects[0] = gripped(&o.objects[0].clone());
        });
        assert_eq!(state.phase, Phase::ExtendSecond);
        drive(&mut state, &|o| {
            o.objects[0] = gripped(&o.objects[0].clone());
            o.objects[1].in_range = true;
            o.objects[1].axial_offset_mm = 2.0;
        });
        assert_eq!(state.phase, Phase::GripSecond);
        drive(&mut state, &|o| {
            o.brake_engagements = [[0.95, 0.0], [0.95, 0.0], [0.95, 0.0], [0.95, 0.0]];
            o.objects[0] = gripped(&o.objects[0].clone());
            o.objects[1] = gripped(&o.objects[1].clone());
        });
        assert_eq!(state.phase, Phase::HoldLift);
        // Dwell until the hold time passes; brakes stay engaged throughout.
        for _ in 0..7 {
            drive(&mut state, &|o| {
                o.brake_engagements = [[0.95, 0.0]; 4];
                o.objects[0] = gripped(&o.objects[0].clone());
                o.objects[1] = gripped(&o.objects[1].clone());
            });
        }
        assert_eq!(state.phase, Phase::ReleaseSecond);
        let cmd = drive(&mut state, &|o| {
            o.brake_engagements = [[0.95, 0.0], [0.95, 0.0], [0.05, 0.0], [0.05, 0.0]];
        });
        assert_eq!(state.phase, Phase::ReleaseFirst);
        assert_eq!(cmd.voltages_v[0][0], 0.0, "pair A inner released");
        let cmd = drive(&mut state, &|o| {
            o.brake_engagements = [[0.05, 0.0]; 4];
        });
        assert_eq!(state.phase, Phase::Depressurize);
        assert_eq!(cmd, Command::zero());
        drive(&mut state, &|_| {});
        assert_eq!(state.phase, Phase::Depressurize);
        assert!(state.completed, "zero observed pressure finishes the run");

        // The event log shows the eight demonstration phases in order, each once.
        let expected = [
            Phase::ExpandFirst,
            Phase::GripFirst,
            Phase::ExtendSecond,
            Phase::GripSecond,
            Phase::HoldLift,
            Phase::ReleaseSecond,
            Phase::ReleaseFirst,
            Phase::Depressurize,
        ];
        let logged: Vec<Phase> = state
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::PhaseEntered { phase } if expected.contains(&phase) => Some(phase),
                _ => None,
            })
            .collect();
        assert_eq!(logged, expected);

        // Phase ranks never decreased.
        let ranks: Vec<usize> = state
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::PhaseEntered { phase } => Some(phase.rank(Strategy::MultiObject)),
                _ => None,
            })
            .collect();
        assert!(ranks.windows(2).all(|w| w[0] < w[1]), "ranks {ranks:?}");
    }

    #[test]
    fn multi_object_aborts_when_second_object_unreachable() {
        let params = StrategyParams::default();
        let mut state = StrategyState::new(Strategy::MultiObject);
        state.phase = Phase::ExtendSecond;
        state.entry_pressures_kpa = [40.0, 0.0];
        let mut obs = rest_obs(vec![in_range_object(), ObjectObservation {
            in_range: false,
            reachable_with_expansion: false,
            required_clearance_mm: 50.0,
            axial_offset_mm: -120.0,
            status: GripStatus::OutOfRange,
            payload_margin: 0.0,
        }]);
        obs.pair_pressures_kpa = [40.0, 100.0]; // pair B saturated
        let (_, st) = step_multi_object(&params, &state, &obs, 5.0);
        assert_eq!(st.phase, Phase::Aborted);
        assert!(st
            .events
            .iter()
            .any(|e| matches!(&e.kind, EventKind::Abort { reason } if reason.contains("unreachable"))));
    }

    #[test]
    fn commands_never_drive_both_brakes_of_one_actuator() {
        // Exhaustive over every phase of every strategy with a stress
        // observation; the builder asserts too, but verify via violations().
        let params = StrategyParams::default();
        let mut obs = rest_obs(vec![in_range_object(), in_range_object()]);
        obs.brake_engagements = [[0.95, 0.95]; 4];
        obs.pair_pressures_kpa = [50.0, 50.0];
        for strategy in [Strategy::SmallSingle, Strategy::LargeSingle, Strategy::MultiObject] {
            for phase in [
                Phase::Idle,
                Phase::ArmInnerBrakes,
                Phase::Pressurize,
                Phase::ArmOuterBrakes,
                Phase::ExpandOutward,
                Phase::ReleaseOuter,
                Phase::CloseInward,
                Phase::Gripped,
                Phase::Hold,
                Phase::ExpandFirst,
                Phase::GripFirst,
                Phase::ExtendSecond,
                Phase::GripSecond,
                Phase::HoldLift,
                Phase::ReleaseSecond,
                Phase::ReleaseFirst,
                Phase::Depressurize,
            ] {
                let mut st = StrategyState::new(strategy);
                st.phase = phase;
                st.phase_entry_t_s = 1.0;
                let (cmd, _) = step(&params, &st, &obs, 1.05);
                assert!(cmd.violations().is_empty(), "{strategy:?}/{phase:?}: {:?}", cmd.violations());
            }
        }
    }

    #[test]
    fn step_is_deterministic() {
        let params = StrategyParams::default();
        let state = StrategyState::new(Strategy::SmallSingle);
        let obs = rest_obs(vec![in_range_object()]);
        let a = step_small_single(&params, &state, &obs, 0.0);
        let b = step_small_single(&params, &state, &obs, 0.0);
        assert_eq!(a, b);
    }
}
