//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdm::behavior::{IdmParams, Modality};
use spdm::dynamics::{bicycle_step, VehicleParams, DT};
use spdm::geometry::{boxes_overlap, OrientedBox, Vec2};
use spdm::map::extract_route_lanes;
use spdm::planner::{generate_candidates, PlannerConfig, PlannerKind};
use spdm::presets::TABLE3_GRID;
use spdm::proposals::{fit_velocity_profile, generate_pdm_proposals, STAGE1_COUNT};
use spdm::results::{mean_composite, mean_of, write_results_to, ResultRow, Status};
use spdm::scenario::{validate, Scenario};
use spdm::simulator::{measure_runtime, run_scenario, run_suite, Mode, SimConfig};
use spdm::suite_gen::{generate_suite, runtime_scenario, SuiteKind, DEFAULT_COMMON_COUNT, DEFAULT_INTERACTIVE_COUNT};
use spdm::tracking::{dare_residual, solve_dare, LqrGains, ReferenceTracker};

const COMMON_SEED: u64 = 1;
const INTERACTIVE_SEED: u64 = 2;
const RUNTIME_SCENARIOS: u64 = 10;
const RUNTIME_LANES: usize = 10;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn suite(kind: SuiteKind, count: usize, seed: u64) -> Vec<Scenario> {
    generate_suite(kind, count, seed)
        .iter()
        .map(|f| validate(f).expect("generated scenarios validate"))
        .collect()
}

fn mean(rows: &[ResultRow], pick: impl Fn(&ResultRow) -> bool) -> f64 {
    mean_composite(rows.iter().filter(|r| pick(r))).unwrap_or(f64::NAN)
}

fn spline_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (v0, a0, vt) = (rng.gen_range(0.0..30.0), rng.gen_range(-6.0..6.0), rng.gen_range(0.0..30.0));
        let t = rng.gen_range(1.0..12.0);
        let p = fit_velocity_profile(v0, a0, vt, t);
        for r in [p.speed(0.0) - v0, p.accel(0.0) - a0, p.speed(t) - vt, p.accel(t)] {
            worst = worst.max(r.abs());
        }
    }
    check(worst < 1e-9, format!("max boundary residual {worst:.3e} over 1000 draws"))
}

fn proposal_count_law() -> Outcome {
    let params = VehicleParams::default();
    let mut failures = Vec::new();
    let graph = common::straight_lanes(3, 400.0, 15.0, 0);
    let ego = common::ego(50.0, 0.0, 10.0, "L0");
    let stage1 = generate_pdm_proposals(&ego, &graph, &[], &IdmParams::default(), &params).map_err(|e| e.to_string())?;
    if stage1.len() != 15 || STAGE1_COUNT != 15 {
        failures.push(format!("stage 1 gave {}", stage1.len()));
    }
    let mut cases = 0;
    for lanes in 1..=5 {
        let graph = common::straight_lanes(lanes, 400.0, 15.0, lanes - 1);
        let route = extract_route_lanes(&graph, &ego.lane).map_err(|e| e.to_string())?;
        for n_p in [15, 20, 25, 30, 35, 45, 60] {
            let set = generate_candidates(&ego, &graph, &route, &[], &PlannerConfig::new(PlannerKind::Spdm, n_p))
                .map_err(|e| e.to_string())?;
            let expected = n_p.min(15 + 5 * route.len());
            if set.len() != expected {
                failures.push(format!("k={} N_p={n_p}: {} != {expected}", route.len(), set.len()));
            }
            cases += 1;
        }
        let pdm = generate_candidates(&ego, &graph, &route, &[], &PlannerConfig::new(PlannerKind::Pdm, 15));
        let spdm = generate_candidates(&ego, &graph, &route, &[], &PlannerConfig::new(PlannerKind::Spdm, 15));
        if pdm.map_err(|e| e.to_string())? != spdm.map_err(|e| e.to_string())? {
            failures.push(format!("{lanes} lanes: SPDM-15 differs from PDM-15"));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("stage 1 = 15, {cases} (k, N_p) cases match min(N_p, 15+5k), SPDM-15 == PDM-15")
        } else {
            failures.join("; ")
        },
    )
}

fn dynamics_oracles() -> Outcome {
    let p = VehicleParams::default();
    let expected = p.wheelbase / 0.1f64.tan();
    let mut s = common::ego(0.0, 0.0, 5.0, "L0");
    let start = s.position();
    let mut mid = start;
    for k in 0..1000 {
        s = bicycle_step(&s, 0.0, 0.1, 0.001, &p);
        if k == 499 {
            mid = s.position();
        }
    }
    let end = s.position();
    let area2 = (mid - start).cross(end - start).abs();
    let radius = start.distance(mid) * mid.distance(end) * end.distance(start) / (2.0 * area2);
    let radius_err = (radius - expected).abs() / expected;

    let a = Matrix2::new(1.0, 1.0, 0.0, 1.0);
    let b = Vector2::new(0.0, 1.0);
    let q = Matrix2::identity();
    let residual = solve_dare(&a, &b, &q, 1.0)
        .map(|sol| dare_residual(&a, &b, &q, 1.0, &sol.p))
        .map_err(|e| e.to_string())?;

    let reference = spdm::dynamics::Trajectory::new(
        DT,
        (0..=100)
            .map(|k| spdm::dynamics::TrajectoryState { x: k as f64, y: 0.0, theta: 0.0, v: 10.0, a: 0.0 })
            .collect(),
    );
    let tracker = ReferenceTracker::new(&reference, &p, &LqrGains::default());
    let mut ego = common::ego(0.0, 0.5, 10.0, "L0");
    let mut settle = None;
    for k in 0..100 {
        let c = tracker.control_at(k, &ego);
        ego = bicycle_step(&ego, c.accel, c.steering, DT, &p);
        if ego.y.abs() < 0.2 {
            settle.get_or_insert((k + 1) as f64 * DT);
        } else {
            settle = None;
        }
    }
    let settle = settle.unwrap_or(f64::INFINITY);
    check(
        radius_err < 0.005 && residual < 1e-8 && settle <= 3.0 + 1e-9,
        format!(
            "radius {radius:.3} m vs {expected:.3} m ({:.3}%), DARE residual {residual:.2e}, lateral error < 0.2 m from {settle:.1} s",
            radius_err * 100.0
        ),
    )
}

fn random_box(rng: &mut ChaCha8Rng) -> OrientedBox {
    OrientedBox::new(
        Vec2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)),
        rng.gen_range(-3.2..3.2),
        rng.gen_range(0.5..6.0),
        rng.gen_range(0.5..3.0),
    )
}

fn collision_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut overlaps, mut disagreements, mut outside_band) = (0, 0, 0);
    for _ in 0..1000 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let sat = boxes_overlap(&a, &b);
        let (raster, h) = common::raster_overlap(&a, &b);
        overlaps += sat as usize;
        if sat != raster {
            disagreements += 1;
            let separable = !boxes_overlap(&common::resized(&a, -h), &common::resized(&b, -h));
            let touching = boxes_overlap(&common::resized(&a, h), &common::resized(&b, h));
            if !(separable && touching) {
                outside_band += 1;
            }
        }
    }
    check(
        outside_band == 0,
        format!("{overlaps} overlapping pairs, {disagreements} disagreements, {outside_band} outside the tangency band"),
    )
}

fn modality_trend(common_suite: &[Scenario]) -> Outcome {
    let configs: Vec<SimConfig> = [Modality::ConstantVelocity, Modality::Perfect, Modality::None]
        .into_iter()
        .map(|m| SimConfig::new(Mode::ClosedNonReactive, PlannerKind::Pdm, m, 15))
        .collect();
    let rows = run_suite(common_suite, &configs);
    let cv = mean(&rows, |r| r.modality == "cv");
    let perfect = mean(&rows, |r| r.modality == "perfect");
    let none = mean(&rows, |r| r.modality == "none");
    let na_configs = [PlannerKind::Pdm, PlannerKind::Spdm]
        .map(|p| SimConfig::new(Mode::ClosedReactive, p, Modality::Perfect, 15));
    let na_rows = run_suite(&common_suite[..2], &na_configs);
    let all_na = na_rows.iter().all(|r| r.status == Status::Na);
    let errors = rows.iter().filter(|r| r.status != Status::Ok).count();
    check(
        none < cv && cv <= perfect + 1.0 && cv - none >= 15.0 && all_na && errors == 0,
        format!(
            "{} scenarios: none {none:.2} < cv {cv:.2} <= perfect {perfect:.2} + 1, gap {:.2}; perfect x R rows na: {all_na}; {errors} non-ok rows",
            common_suite.len(),
            cv - none
        ),
    )
}

fn np_saturation(common_suite: &[Scenario]) -> Outcome {
    let configs: Vec<SimConfig> = [3, 6, 15]
        .into_iter()
        .map(|n| SimConfig::new(Mode::ClosedNonReactive, PlannerKind::Pdm, Modality::ConstantVelocity, n))
        .collect();
    let rows = run_suite(common_suite, &configs);
    let [s3, s6, s15] = [3, 6, 15].map(|n| mean(&rows, |r| r.n_p == n));
    check(
        s3 < s6 - 2.0 && (s15 - s6).abs() < 3.0,
        format!("score(3) {s3:.2}, score(6) {s6:.2}, score(15) {s15:.2}"),
    )
}

fn spdm_on_interactive(common_suite: &[Scenario], interactive: &[Scenario]) -> Outcome {
    let configs: Vec<SimConfig> = [15, 60]
        .into_iter()
        .map(|n| SimConfig::new(Mode::ClosedReactive, PlannerKind::Spdm, Modality::ConstantVelocity, n))
        .collect();
    let inter = run_suite(interactive, &configs);
    let [i15, i60] = [15, 60].map(|n| mean(&inter, |r| r.n_p == n));
    let [lc15, lc60] =
        [15, 60].map(|n| mean_of(inter.iter().filter(|r| r.n_p == n), |r| r.lane_changes_to_goal).unwrap_or(f64::NAN));
    let com = run_suite(common_suite, &configs);
    let [c15, c60] = [15, 60].map(|n| mean(&com, |r| r.n_p == n));
    check(
        i60 >= i15 + 10.0 && lc60 > lc15 && (c60 - c15).abs() < 3.0,
        format!(
            "interactive SPDM-15 {i15:.2} -> SPDM-60 {i60:.2}, lane_changes_to_goal {lc15:.3} -> {lc60:.3}; common {c15:.2} -> {c60:.2}"
        ),
    )
}

fn csv_bytes(rows: &[ResultRow]) -> Vec<u8> {
    let mut out = Vec::new();
    write_results_to(rows, &mut out).expect("in-memory CSV");
    out
}

fn determinism_and_feasibility(common_suite: &[Scenario], interactive: &[Scenario]) -> Outcome {
    let mixed: Vec<Scenario> = common_suite[..10].iter().chain(&interactive[..10]).cloned().collect();
    let configs = [
        SimConfig::new(Mode::ClosedReactive, PlannerKind::Spdm, Modality::ConstantVelocity, 30),
        SimConfig::new(Mode::ClosedNonReactive, PlannerKind::Pdm, Modality::Perfect, 15),
        SimConfig::new(Mode::OpenLoop, PlannerKind::Spdm, Modality::None, 20),
    ];
    let identical = csv_bytes(&run_suite(&mixed, &configs)) == csv_bytes(&run_suite(&mixed, &configs));

    let params = VehicleParams::default();
    let mut worst: f64 = 0.0;
    let mut logs = 0;
    for s in common_suite.iter().chain(interactive) {
        for config in &configs[..2] {
            let out = run_scenario(s, config).map_err(|e| format!("{}: {e}", s.id))?;
            logs += 1;
            for w in out.log.records.windows(2) {
                let Some(c) = w[0].control else {
                    return Err(format!("{}: tick {} has no control", s.id, w[0].tick));
                };
                let next = bicycle_step(&w[0].ego, c.accel, c.steering, DT, &params);
                for e in [next.x - w[1].ego.x, next.y - w[1].ego.y, next.theta - w[1].ego.theta, next.v - w[1].ego.v] {
                    worst = worst.max(e.abs());
                }
            }
        }
    }
    check(
        identical && worst <= 1e-9,
        format!("repeat CSVs identical: {identical}; {logs} ego logs replay within {worst:.2e} per step"),
    )
}

fn runtime_shape() -> Outcome {
    let mut totals = vec![0.0; TABLE3_GRID.len()];
    for seed in 0..RUNTIME_SCENARIOS {
        let s = validate(&runtime_scenario(RUNTIME_LANES, seed)).map_err(|e| e.to_string())?;
        for (i, (_, secs)) in measure_runtime(&s, PlannerKind::Spdm, &TABLE3_GRID)
            .map_err(|e| e.to_string())?
            .into_iter()
            .enumerate()
        {
            totals[i] += secs;
        }
    }
    let means: Vec<f64> = totals.iter().map(|t| t / RUNTIME_SCENARIOS as f64).collect();
    let monotone = means.windows(2).all(|w| w[1] >= w[0]);
    let listed: Vec<String> = TABLE3_GRID
        .iter()
        .zip(&means)
        .map(|(n, t)| format!("{n}: {:.2} ms", t * 1e3))
        .collect();
    check(monotone, format!("seconds per replan over {RUNTIME_SCENARIOS} scenarios, {}", listed.join(", ")))
}

fn main() -> ExitCode {
    let common_suite = suite(SuiteKind::Common, DEFAULT_COMMON_COUNT, COMMON_SEED);
    let interactive = suite(SuiteKind::Interactive, DEFAULT_INTERACTIVE_COUNT, INTERACTIVE_SEED);
    let secs = Duration::from_secs;
    let criteria: Vec<(&str, Option<Duration>, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("spline correctness", Some(secs(1)), Box::new(spline_correctness)),
        ("proposal-count law", Some(secs(5)), Box::new(proposal_count_law)),
        ("dynamics oracles", Some(secs(5)), Box::new(dynamics_oracles)),
        ("collision oracle", Some(secs(10)), Box::new(collision_oracle)),
        ("modality trend", Some(secs(180)), Box::new(|| modality_trend(&common_suite))),
        ("N_p saturation", Some(secs(180)), Box::new(|| np_saturation(&common_suite))),
        ("SPDM on interactive", Some(secs(300)), Box::new(|| spdm_on_interactive(&common_suite, &interactive))),
        ("determinism and feasibility", None, Box::new(|| determinism_and_feasibility(&common_suite, &interactive))),
        ("runtime shape", None, Box::new(runtime_shape)),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let late = limit.is_some_and(|l| elapsed > l);
        let (ok, detail) = match outcome {
            Ok(d) => (!late, d),
            Err(d) => (false, d),
        };
        let budget = limit.map(|l| format!(" (limit {} s)", l.as_secs())).unwrap_or_default();
        println!(
            "{} {}. {name}: {detail} [{:.2} s{budget}]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
        failed += (!ok) as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
