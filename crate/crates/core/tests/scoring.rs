mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdm::behavior::{ObstaclePose, ObstacleTrack};
use spdm::dynamics::{AgentKind, Trajectory, TrajectoryState, VehicleParams, DT, HORIZON_STEPS};
use spdm::geometry::{boxes_overlap, OrientedBox, Vec2};
use spdm::map::{extract_route_lanes, LaneId};
use spdm::scoring::{score_trajectory, select_best, time_to_collision, ScoreReport, ScoringContext, Weights};

fn random_box(rng: &mut ChaCha8Rng) -> OrientedBox {
    OrientedBox::new(
        Vec2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)),
        rng.gen_range(-3.2..3.2),
        rng.gen_range(0.5..6.0),
        rng.gen_range(0.5..3.0),
    )
}

#[test]
fn separating_axis_matches_raster() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut disagreements = 0;
    for _ in 0..1000 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let (raster, h) = common::raster_overlap(&a, &b);
        if raster != boxes_overlap(&a, &b) {
            disagreements += 1;
            // Within one grid spacing of tangency: shrinking both boxes by the
            // spacing separates them and growing them makes them overlap.
            assert!(!boxes_overlap(&common::resized(&a, -h), &common::resized(&b, -h)));
            assert!(boxes_overlap(&common::resized(&a, h), &common::resized(&b, h)));
        }
    }
    assert!(disagreements < 50);
}

#[test]
fn box_examples() {
    let a = OrientedBox::new(Vec2::ZERO, 0.3, 1.0, 1.0);
    assert!(boxes_overlap(&a, &a));
    assert!(!boxes_overlap(&a, &OrientedBox::new(Vec2::new(10.0, 0.0), 0.0, 1.0, 1.0)));
    // Shared edge counts as overlap.
    let left = OrientedBox::new(Vec2::ZERO, 0.0, 2.0, 1.0);
    let right = OrientedBox::new(Vec2::new(2.0, 0.0), 0.0, 2.0, 1.0);
    assert!(boxes_overlap(&left, &right));
}

fn moved(b: &OrientedBox, angle: f64, shift: Vec2) -> OrientedBox {
    let (s, c) = angle.sin_cos();
    let center = Vec2::new(c * b.center.x - s * b.center.y, s * b.center.x + c * b.center.y) + shift;
    OrientedBox::new(center, b.heading + angle, b.length, b.width)
}

proptest! {
    #[test]
    fn overlap_is_symmetric_and_rigid(seed in any::<u64>(), angle in -3.2..3.2f64, sx in -50.0..50.0f64, sy in -50.0..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let verdict = boxes_overlap(&a, &b);
        prop_assert_eq!(verdict, boxes_overlap(&b, &a));
        let shift = Vec2::new(sx, sy);
        prop_assert_eq!(verdict, boxes_overlap(&moved(&a, angle, shift), &moved(&b, angle, shift)));
    }

    #[test]
    fn composite_is_monotone(values in prop::array::uniform8(0.0..1.0f64), field in 0usize..5, bump in 0.0..1.0f64) {
        let w = Weights::default();
        let build = |m: [f64; 5]| ScoreReport::new(1.0, 1.0, 1.0, 1.0, m[0], m[1], m[2], m[3], Some(m[4]), &w);
        let mut base = [values[0], values[1], values[2], values[3], values[4]];
        let before = build(base).composite;
        base[field] = (base[field] + bump).min(1.0);
        prop_assert!(build(base).composite >= before - 1e-12);
        prop_assert!((0.0..=100.0).contains(&before));
    }

    #[test]
    fn argmax_ignores_weight_scale(seed in any::<u64>(), factor in 0.01..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let metrics: Vec<[f64; 5]> = (0..8).map(|_| std::array::from_fn(|_| rng.gen_range(0.0..1.0))).collect();
        let reports = |w: &Weights| -> Vec<ScoreReport> {
            metrics.iter().map(|m| ScoreReport::new(1.0, 1.0, 1.0, 1.0, m[0], m[1], m[2], m[3], None, w)).collect()
        };
        let w = Weights::default();
        prop_assert_eq!(select_best(&reports(&w)), select_best(&reports(&w.scaled(factor))));
    }
}

#[test]
fn half_progress_hand_value() {
    let r = ScoreReport::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 1.0, 1.0, None, &Weights::default());
    assert!((r.composite - 84.375).abs() < 1e-12);
}

#[test]
fn select_best_follows_permutations() {
    let w = Weights::default();
    let progress = [0.1, 0.9, 0.4, 0.7, 0.3];
    let reports: Vec<ScoreReport> = progress
        .iter()
        .map(|&p| ScoreReport::new(1.0, 1.0, 1.0, 1.0, 1.0, p, 1.0, 1.0, None, &w))
        .collect();
    assert_eq!(select_best(&reports), 1);
    for rot in 0..5 {
        let mut permuted = reports.clone();
        permuted.rotate_left(rot);
        assert_eq!(permuted[select_best(&permuted)], reports[1]);
    }
    let tie = vec![reports[3], reports[1], reports[1]];
    assert_eq!(select_best(&tie), 1);
    assert_eq!(select_best(&reports[..1]), 0);
}

fn straight(x0: f64, v: f64) -> Trajectory {
    Trajectory::new(
        DT,
        (0..=HORIZON_STEPS)
            .map(|k| TrajectoryState { x: x0 + v * DT * k as f64, y: 0.0, theta: 0.0, v, a: 0.0 })
            .collect(),
    )
}

fn parked(id: &str, kind: AgentKind, x: f64) -> ObstacleTrack {
    ObstacleTrack {
        id: id.into(),
        kind,
        length: 4.6,
        width: 1.9,
        poses: vec![ObstaclePose { x, y: 0.0, theta: 0.0, v: 0.0 }; HORIZON_STEPS + 1],
    }
}

#[test]
fn time_to_collision_examples() {
    let p = VehicleParams::default();
    let traj = straight(0.0, 10.0);
    assert_eq!(time_to_collision(&traj, &[], &p), 1.0);
    let ego_center = p.rear_axle_to_center;
    // Centers 5 m apart: 0.4 m between bumpers.
    let close = parked("a", AgentKind::Vehicle, ego_center + 5.0);
    assert_eq!(time_to_collision(&traj, &[close], &p), 0.0);
    // 5 m between bumpers.
    let gap = parked("b", AgentKind::Vehicle, p.front_overhang() + 5.0 + 2.3);
    assert_eq!(time_to_collision(&traj, &[gap], &p), 0.0);
    let far = parked("c", AgentKind::Vehicle, 500.0);
    assert_eq!(time_to_collision(&traj, &[far], &p), 1.0);
}

#[test]
fn trajectory_scores() {
    let params = VehicleParams::default();
    let graph = common::straight_lanes(1, 400.0, 15.0, 0);
    let route = extract_route_lanes(&graph, &LaneId::from("L0")).unwrap();
    let ctx = ScoringContext::new(&graph, &route, params);
    let traj = straight(50.0, 10.0);
    let clean = score_trajectory(&traj, &[], &ctx, 80.0, false);
    assert!((clean.composite - 100.0).abs() < 1e-9, "{clean:?}");
    assert_eq!(clean, score_trajectory(&traj, &[], &ctx, 80.0, false));
    let hit = score_trajectory(&traj, &[parked("v", AgentKind::Vehicle, 100.0)], &ctx, 80.0, false);
    assert_eq!(hit.no_at_fault_collision, 0.0);
    assert_eq!(hit.composite, 0.0);
    let bump = score_trajectory(&traj, &[parked("s", AgentKind::Static, 100.0)], &ctx, 80.0, false);
    assert_eq!(bump.no_at_fault_collision, 0.5);
    let interactive = score_trajectory(&traj, &[], &ctx, 80.0, true);
    assert_eq!(interactive.lane_changes_to_goal, Some(1.0));
}
