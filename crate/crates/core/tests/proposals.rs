mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdm::behavior::{IdmParams, ObstaclePose, ObstacleTrack};
use spdm::dynamics::{AgentKind, VehicleParams, A_ABS_MAX, DT, HORIZON, HORIZON_STEPS};
use spdm::map::{extract_route_lanes, LaneId};
use spdm::planner::{generate_candidates, PlannerConfig, PlannerKind};
use spdm::proposals::{
    fit_velocity_profile, generate_pdm_proposals, generate_spdm_proposals, merge_candidates, Proposal, STAGE1_COUNT,
};
use spdm::Error;

fn id(s: &str) -> LaneId {
    LaneId::from(s)
}

#[test]
fn velocity_profile_hand_solution() {
    let p = fit_velocity_profile(10.0, 0.0, 20.0, 8.0);
    assert_eq!((p.c0, p.c1), (10.0, 0.0));
    assert!((p.c2 - 0.46875).abs() < 1e-12);
    assert!((p.c3 + 0.0390625).abs() < 1e-12);
}

#[test]
fn velocity_profile_boundary_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let (v0, a0, vt) = (rng.gen_range(0.0..30.0), rng.gen_range(-6.0..6.0), rng.gen_range(0.0..30.0));
        let t = rng.gen_range(1.0..12.0);
        let p = fit_velocity_profile(v0, a0, vt, t);
        let residuals = [p.speed(0.0) - v0, p.accel(0.0) - a0, p.speed(t) - vt, p.accel(t)];
        assert!(residuals.iter().all(|r| r.abs() < 1e-9), "{residuals:?}");
    }
}

fn spdm_set(lanes: usize, goal: usize, n_p: usize) -> Vec<Proposal> {
    let graph = common::straight_lanes(lanes, 400.0, 15.0, goal);
    let ego = common::ego(50.0, 0.0, 10.0, "L0");
    let route = extract_route_lanes(&graph, &id("L0")).unwrap();
    generate_candidates(&ego, &graph, &route, &[], &PlannerConfig::new(PlannerKind::Spdm, n_p)).unwrap()
}

#[test]
fn stage_one_is_fifteen() {
    let graph = common::straight_lanes(3, 400.0, 15.0, 0);
    let ego = common::ego(50.0, 0.0, 10.0, "L0");
    let set = generate_pdm_proposals(&ego, &graph, &[], &IdmParams::default(), &VehicleParams::default()).unwrap();
    assert_eq!(set.len(), STAGE1_COUNT);
    assert_eq!(STAGE1_COUNT, 15);
    let mut pairs: Vec<(f64, f64)> = set
        .iter()
        .map(|p| (p.target_fraction, p.lateral_offset.unwrap()))
        .collect();
    pairs.dedup();
    assert_eq!(pairs.len(), 15);
}

#[test]
fn count_law() {
    for lanes in 1..=4 {
        let goal = lanes - 1;
        let k = goal + 1;
        for n_p in [15, 20, 25, 30, 45, 60] {
            let set = spdm_set(lanes, goal, n_p);
            assert_eq!(set.len(), n_p.min(15 + 5 * k), "lanes {lanes} N_p {n_p}");
        }
    }
}

#[test]
fn spdm_at_fifteen_is_pdm() {
    let graph = common::straight_lanes(3, 400.0, 15.0, 2);
    let ego = common::ego(50.0, 0.2, 9.0, "L0");
    let route = extract_route_lanes(&graph, &id("L0")).unwrap();
    let spdm = generate_candidates(&ego, &graph, &route, &[], &PlannerConfig::new(PlannerKind::Spdm, 15)).unwrap();
    let pdm = generate_candidates(&ego, &graph, &route, &[], &PlannerConfig::new(PlannerKind::Pdm, 15)).unwrap();
    assert_eq!(spdm, pdm);
}

#[test]
fn adjacent_lane_proposals_end_on_its_centerline() {
    let graph = common::straight_lanes(2, 400.0, 15.0, 1);
    let ego = common::ego(50.0, 0.0, 10.0, "L0");
    let stage1 = generate_pdm_proposals(&ego, &graph, &[], &IdmParams::default(), &VehicleParams::default()).unwrap();
    let set = generate_spdm_proposals(&ego, &graph, stage1, &[id("L1")], 20).unwrap();
    assert_eq!(set.len(), 20);
    let line = graph.reference_path(&id("L1")).unwrap();
    for p in &set[15..] {
        assert_eq!(p.lane_id.as_ref(), Some(&id("L1")));
        let end = p.trajectory.states.last().unwrap();
        assert!(line.project(spdm::geometry::Vec2::new(end.x, end.y)).d.abs() < 0.2);
    }
}

#[test]
fn single_lane_budget_is_capped() {
    assert_eq!(spdm_set(1, 0, 60).len(), 20);
}

#[test]
fn stopped_lead_stops_centerline_proposals() {
    let params = VehicleParams::default();
    let idm = IdmParams::default();
    let graph = common::straight_lanes(1, 400.0, 15.0, 0);
    // Ego at the speed limit: slower starts leave the 3 m/s fraction still
    // short of the lead when the horizon ends.
    let ego = common::ego(50.0, 0.0, 15.0, "L0");
    let front = ego.x + params.front_overhang();
    let lead_x = front + 30.0 + 2.3;
    let lead = ObstacleTrack {
        id: "lead".into(),
        kind: AgentKind::Vehicle,
        length: 4.6,
        width: 1.9,
        poses: vec![ObstaclePose { x: lead_x, y: 0.0, theta: 0.0, v: 0.0 }; HORIZON_STEPS + 1],
    };
    let set = generate_pdm_proposals(&ego, &graph, &[lead], &idm, &params).unwrap();
    for p in set.iter().filter(|p| p.lateral_offset == Some(0.0)) {
        let end = p.trajectory.states.last().unwrap();
        let gap = lead_x - 2.3 - (end.x + params.front_overhang());
        assert!(end.v < 0.5, "fraction {} ends at {}", p.target_fraction, end.v);
        assert!(gap >= idm.min_gap, "gap {gap}");
    }
}

#[test]
fn far_off_lane_fails_projection() {
    let graph = common::straight_lanes(1, 400.0, 15.0, 0);
    let ego = common::ego(50.0, 8.0, 10.0, "L0");
    let r = generate_pdm_proposals(&ego, &graph, &[], &IdmParams::default(), &VehicleParams::default());
    assert!(matches!(r, Err(Error::ProjectionFailed { .. })));
}

#[test]
fn spdm_speeds_are_feasible_and_drivable() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let graph = common::straight_lanes(4, 600.0, 15.0, 3);
    for _ in 0..50 {
        let lane = rng.gen_range(0..4);
        let mut ego = common::ego(
            rng.gen_range(20.0..300.0),
            lane as f64 * common::LANE_WIDTH + rng.gen_range(-0.8..0.8),
            rng.gen_range(0.0..20.0),
            &format!("L{lane}"),
        );
        ego.a = rng.gen_range(-4.0..2.0);
        ego.theta = rng.gen_range(-0.1..0.1);
        let route = extract_route_lanes(&graph, &ego.lane).unwrap();
        let set = generate_candidates(&ego, &graph, &route, &[], &PlannerConfig::new(PlannerKind::Spdm, 60)).unwrap();
        for p in &set {
            let s = &p.trajectory.states;
            assert_eq!(s.len(), HORIZON_STEPS + 1);
            assert!(s.iter().all(|x| x.v >= 0.0));
            assert!(s.windows(2).all(|w| ((w[1].v - w[0].v) / DT).abs() <= A_ABS_MAX + 1e-9));
            let end = s.last().unwrap();
            assert!(graph.point_drivable(spdm::geometry::Vec2::new(end.x, end.y)));
        }
    }
    assert!((HORIZON - DT * HORIZON_STEPS as f64).abs() < 1e-12);
}

#[test]
fn merge_keeps_first_of_duplicates() {
    let set = spdm_set(3, 2, 30);
    let (stage1, stage2) = set.split_at(15);
    assert_eq!(merge_candidates(stage1.to_vec(), Vec::new()), stage1.to_vec());
    let merged = merge_candidates(stage1.to_vec(), stage2[..10].to_vec());
    assert_eq!(merged.len(), 25);
    assert_eq!(&merged[..15], stage1);
    assert_eq!(&merged[15..], &stage2[..10]);
    let dup = merge_candidates(stage1.to_vec(), vec![stage1[3].clone()]);
    assert_eq!(dup, stage1.to_vec());
}
