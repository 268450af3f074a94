//! Acceptance gate: ten end-to-end criteria, one test (and one pass/fail
//! line in the harness output) per criterion. Run with `--nocapture` to see
//! the measured numbers behind each verdict.

use std::path::{Path, PathBuf};
use std::time::Instant;

use approx::{assert_abs_diff_eq, assert_relative_eq};

use mash_gripper::brake::{braking_force, BrakeParams};
use mash_gripper::calibrate::{calibrate, CalibrationProblem, DataRow, ModelKind};
use mash_gripper::characterize::{characterize, CharacterizeConfig, SweepKind};
use mash_gripper::controller::{EventKind, Phase};
use mash_gripper::gripper::{pair_aperture, ApertureMode, GripStatus, GripperConfig, PairId};
use mash_gripper::material::{
    uniaxial_invariant, uniaxial_stress, yeoh_energy, ExtensionLaw, YeohCoefficients,
};
use mash_gripper::scenario::Scenario;
use mash_gripper::sim::{run_scenario, SimLog, Terminal};

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run_shipped(name: &str) -> SimLog {
    let dir = scenario_dir();
    let path = dir.join(name);
    let scenario = Scenario::from_path(&path).expect("scenario parses");
    run_scenario(&scenario, &dir).expect("scenario runs")
}

#[test]
fn criterion_01_static_braking_force() {
    let brake = BrakeParams::default();
    let force = braking_force(&brake, 2000.0).unwrap();
    assert_relative_eq!(force, 1.962, max_relative = 0.005);
    // 1.962 N is exactly the weight of the 0.2 kg rated holding load.
    assert_relative_eq!(force, 0.2 * 9.81, max_relative = 0.005);
    println!("criterion 1 PASS: braking force at 2000 V = {force:.4} N (target 1.962 N +-0.5%)");
}

#[test]
fn criterion_02_engagement_rise_time() {
    let cfg = CharacterizeConfig::default();
    assert_eq!(cfg.response_dt_s, 1.0e-3);
    let table = characterize(SweepKind::BrakeResponse, &cfg).unwrap();
    let t = table.column("t_s").unwrap();
    let e = table.column("engagement").unwrap();
    let t10 = t.iter().zip(&e).find(|(_, &e)| e >= 0.1).map(|(&t, _)| t).unwrap();
    let t90 = t.iter().zip(&e).find(|(_, &e)| e >= 0.9).map(|(&t, _)| t).unwrap();
    let rise = t90 - t10;
    assert!(
        (0.150..=0.200).contains(&rise),
        "10%->90% rise time {rise} s outside [0.150, 0.200] s"
    );
    println!("criterion 2 PASS: 10%->90% engagement rise time = {:.1} ms", rise * 1e3);
}

#[test]
fn criterion_03_extension_anchors_and_monotone_sweep() {
    let law = ExtensionLaw::default();
    assert_eq!(law.length_at(0.0).unwrap(), 104.0);
    assert_eq!(law.length_at(100.0).unwrap(), 200.55);
    let table = characterize(SweepKind::Extension, &CharacterizeConfig::default()).unwrap();
    let p = table.column("pressure_kpa").unwrap();
    let l = table.column("length_mm").unwrap();
    assert_eq!((p[0], *p.last().unwrap()), (10.0, 100.0));
    assert!(l.windows(2).all(|w| w[1] > w[0]), "sweep not strictly monotone: {l:?}");
    println!(
        "criterion 3 PASS: anchors (0 kPa, 104 mm) and (100 kPa, 200.55 mm) exact; \
         10-100 kPa sweep strictly monotone"
    );
}

#[test]
fn criterion_04_calibrated_aperture_and_expansion_ratio() {
    let start = Instant::now();
    let problem = CalibrationProblem {
        model: ModelKind::LayerGap,
        dataset: vec![
            DataRow { input: vec![0.0], output: 85.3 },
            DataRow { input: vec![30.0], output: 256.0 },
        ],
        bounds: Vec::new(),
        tolerance: 1e-9,
        initial: None,
    };
    let fit = calibrate(&problem).unwrap();
    let gap = fit.parameters[0];

    let mut cfg = GripperConfig::default();
    for geom in &mut cfg.pair_a {
        geom.layer_gap_mm = gap;
    }
    let law = ExtensionLaw::default();
    let aperture =
        pair_aperture(&cfg, PairId::A, &law, 30.0, ApertureMode::Outward, 1.0).unwrap();
    let elapsed = start.elapsed();

    assert_abs_diff_eq!(aperture, 256.0, epsilon = 5.0);
    let ratio = aperture / cfg.mount_separation_mm;
    assert!((2.8..=3.2).contains(&ratio), "expansion ratio {ratio} outside [2.8, 3.2]");
    assert!(elapsed.as_secs_f64() < 1.0, "calibration took {elapsed:?}");
    println!(
        "criterion 4 PASS: fitted layer gap {gap:.3} mm gives aperture {aperture:.1} mm \
         (ratio {ratio:.2}) in {elapsed:?}"
    );
}

#[test]
fn criterion_05_grip_range_demonstrations() {
    // Small sphere: direct grip succeeds.
    let wall = Instant::now();
    let ball = run_shipped("small_ball.json");
    assert_eq!(ball.terminal, Terminal::Completed);
    let last = ball.records.last().unwrap();
    assert_eq!(last.grips[0].status, GripStatus::Gripped);
    assert!(last.t_s < 5.0, "ball grip took {} simulated s", last.t_s);

    // Oversized annulus under the direct strategy: aborts out of range.
    let abort = run_shipped("tape_small_single.json");
    assert_eq!(abort.terminal, Terminal::Abort);
    assert!(
        abort.events.iter().any(
            |e| matches!(&e.kind, EventKind::Abort { reason } if reason.contains("out of range"))
        ),
        "expected out-of-range abort, events: {:?}",
        abort.events
    );

    // Same annulus with pre-expansion: grips.
    let tape = run_shipped("tape_large_single.json");
    assert_eq!(tape.terminal, Terminal::Completed);
    let last = tape.records.last().unwrap();
    assert_eq!(last.grips[0].status, GripStatus::Gripped);
    assert!(last.t_s < 5.0, "tape grip took {} simulated s", last.t_s);

    let elapsed = wall.elapsed();
    assert!(elapsed.as_secs_f64() < 3.0, "three demo runs took {elapsed:?}");
    println!(
        "criterion 5 PASS: sphere gripped, annulus aborts under direct grip, \
         annulus gripped after expansion ({elapsed:?} wall)"
    );
}

#[test]
fn criterion_06_multi_object_phase_conformance() {
    let log = run_shipped("two_object_stack.json");
    assert_eq!(log.terminal, Terminal::Completed);
    let phases: Vec<Phase> = log
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::PhaseEntered { phase } => Some(phase),
            _ => None,
        })
        .collect();
    assert_eq!(
        phases,
        [
            Phase::ExpandFirst,
            Phase::GripFirst,
            Phase::ExtendSecond,
            Phase::GripSecond,
            Phase::HoldLift,
            Phase::ReleaseSecond,
            Phase::ReleaseFirst,
            Phase::Depressurize,
        ],
        "phase log mismatch"
    );
    let t_of = |phase: Phase| {
        log.events
            .iter()
            .find(|e| matches!(e.kind, EventKind::PhaseEntered { phase: p } if p == phase))
            .map(|e| e.t_s)
            .unwrap()
    };
    assert!(t_of(Phase::ReleaseSecond) < t_of(Phase::ReleaseFirst));
    println!(
        "criterion 6 PASS: exactly the eight staged phases in order; \
         second object released at {:.2} s, first at {:.2} s",
        t_of(Phase::ReleaseSecond),
        t_of(Phase::ReleaseFirst)
    );
}

#[test]
fn criterion_07_stiffness_trend() {
    let check = |cfg: &CharacterizeConfig| -> usize {
        let table = characterize(SweepKind::Stiffness, cfg).unwrap();
        // Strictly increasing in load at fixed voltage.
        for c in 1..table.columns.len() {
            for w in table.rows.windows(2) {
                assert!(w[1][c] > w[0][c], "column {} not increasing in load", table.columns[c]);
            }
        }
        // Nonincreasing in voltage at fixed load.
        for row in &table.rows {
            for c in 1..row.len() - 1 {
                assert!(row[c + 1] <= row[c], "row {row:?} not nonincreasing in voltage");
            }
        }
        // Every energized column whose loads all stay below the slip
        // threshold must deflect strictly less than the unpowered column.
        let mut no_slip_columns = 0;
        for (c, &u) in cfg.stiffness_voltages_v.iter().enumerate().skip(1) {
            let hold = cfg.stiffness.slip_lever_mm
                * braking_force(&cfg.geometry.inner_brake, u).unwrap();
            let all_hold = cfg.stiffness_loads_g.iter().all(|&g| {
                g / 1000.0 * 9.81 * cfg.geometry.rest_length_mm <= hold
            });
            if all_hold {
                no_slip_columns += 1;
                for row in &table.rows {
                    assert!(
                        row[c + 1] < row[1],
                        "no-slip column at {u} V not stiffer than 0 V: {row:?}"
                    );
                }
            }
        }
        no_slip_columns
    };

    // Default rig: the 20-100 g loads exceed the slip threshold everywhere,
    // so the no-slip clause holds vacuously.
    let vacuous = check(&CharacterizeConfig::default());
    // A longer slip lever keeps the high-voltage columns engaged, making the
    // same clause bite.
    let mut strong = CharacterizeConfig::default();
    strong.stiffness.slip_lever_mm = 200.0;
    let engaged = check(&strong);
    assert!(engaged > 0, "strengthened rig should produce no-slip columns");
    println!(
        "criterion 7 PASS: deflection increasing in load, nonincreasing in voltage \
         ({vacuous} no-slip columns at defaults, {engaged} with a 200 mm slip lever)"
    );
}

#[test]
fn criterion_08_calibration_round_trips() {
    // Layer gap from noiseless synthetic apertures.
    let truth_gap = 13.7;
    let mut cfg = GripperConfig::default();
    for geom in &mut cfg.pair_a {
        geom.layer_gap_mm = truth_gap;
    }
    let law = ExtensionLaw::default();
    let dataset: Vec<DataRow> = (0..=6)
        .map(|k| {
            let p = 5.0 * k as f64;
            let a = pair_aperture(&cfg, PairId::A, &law, p, ApertureMode::Outward, 1.0).unwrap();
            DataRow { input: vec![p], output: a }
        })
        .collect();
    let fit = calibrate(&CalibrationProblem {
        model: ModelKind::LayerGap,
        dataset,
        bounds: Vec::new(),
        tolerance: 1e-9,
        initial: None,
    })
    .unwrap();
    assert_relative_eq!(fit.parameters[0], truth_gap, max_relative = 0.01);

    // Brake time constant from a noiseless engagement curve.
    let truth_tau = 0.09;
    let dataset: Vec<DataRow> = (1..=40)
        .map(|k| {
            let t = 0.01 * k as f64;
            DataRow { input: vec![t], output: 1.0 - (-t / truth_tau).exp() }
        })
        .collect();
    let fit = calibrate(&CalibrationProblem {
        model: ModelKind::BrakeTau,
        dataset,
        bounds: Vec::new(),
        tolerance: 1e-9,
        initial: None,
    })
    .unwrap();
    assert_relative_eq!(fit.parameters[0], truth_tau, max_relative = 0.01);

    // Grip force gain from noiseless per-tip forces.
    let truth_gain = 0.07;
    let dataset: Vec<DataRow> =
        (1..=15).map(|k| DataRow { input: vec![k as f64], output: truth_gain * k as f64 }).collect();
    let fit = calibrate(&CalibrationProblem {
        model: ModelKind::GripForceGain,
        dataset,
        bounds: Vec::new(),
        tolerance: 1e-9,
        initial: None,
    })
    .unwrap();
    assert_relative_eq!(fit.parameters[0], truth_gain, max_relative = 0.01);

    // Interpolating model on the two anchor measurements: zero residual.
    let fit = calibrate(&CalibrationProblem {
        model: ModelKind::ExtensionLaw,
        dataset: vec![
            DataRow { input: vec![0.0], output: 104.0 },
            DataRow { input: vec![100.0], output: 200.55 },
        ],
        bounds: Vec::new(),
        tolerance: 1e-9,
        initial: None,
    })
    .unwrap();
    assert_eq!(fit.sse, 0.0);
    assert_eq!(fit.parameters, vec![104.0, 200.55]);

    println!(
        "criterion 8 PASS: layer gap, brake tau, and grip gain recovered within 1%; \
         anchor fit residual exactly 0"
    );
}

#[test]
fn criterion_09_stress_matches_energy_derivative() {
    let c = YeohCoefficients::default();
    let h = 1e-6;
    let mut worst = 0.0_f64;
    for k in 0..=120 {
        let lambda = 0.8 + 0.01 * k as f64;
        // Cauchy stress is lambda * dW/dlambda along the uniaxial path.
        let w_plus = yeoh_energy(&c, uniaxial_invariant(lambda + h)).unwrap();
        let w_minus = yeoh_energy(&c, uniaxial_invariant(lambda - h)).unwrap();
        let fd = lambda * (w_plus - w_minus) / (2.0 * h);
        let sigma = uniaxial_stress(&c, lambda).unwrap();
        assert_relative_eq!(fd, sigma, max_relative = 1e-5, epsilon = 1e-9);
        if sigma != 0.0 {
            worst = worst.max(((fd - sigma) / sigma).abs());
        }
    }
    println!(
        "criterion 9 PASS: uniaxial stress matches d(energy)/d(stretch) over \
         stretch 0.8-2.0 (worst relative gap {worst:.2e})"
    );
}

#[test]
fn criterion_10_byte_identical_reruns() {
    let dir = scenario_dir();
    let mut checked = 0;
    for name in [
        "small_ball.json",
        "small_ball_csv_law.json",
        "tape_small_single.json",
        "tape_large_single.json",
        "two_object_stack.json",
        "no_objects.json",
    ] {
        let scenario = Scenario::from_path(&dir.join(name)).unwrap();
        let first = run_scenario(&scenario, &dir).unwrap().to_json().unwrap();
        let second = run_scenario(&scenario, &dir).unwrap().to_json().unwrap();
        assert_eq!(first, second, "log for {name} not byte-identical across runs");
        checked += 1;
    }
    println!("criterion 10 PASS: {checked} scenarios re-ran byte-identically");
}
