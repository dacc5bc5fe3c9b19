mod common;

use spdm::behavior::Modality;
use spdm::geometry::{boxes_overlap, OrientedBox, Vec2};
use spdm::planner::PlannerKind;
use spdm::dynamics::VehicleParams;
use spdm::results::Status;
use spdm::scenario::{load_scenario, parse_scenario, validate};
use spdm::simulator::{run_suite, Mode, SimConfig};
use spdm::suite_gen::{generate_suite, load_dir, write_suite, SuiteKind};
use spdm::Error;

fn minimal() -> spdm::scenario::ScenarioFile {
    common::straight_scenario("minimal", 1, 300.0, 0, 10.0, 8.0, vec![common::cruising_agent("lead", 50.0, 0.0, 6.0, 151)])
}

#[test]
fn save_then_load_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let file = minimal();
    file.save(&path).unwrap();
    let (loaded, scenario) = load_scenario(&path).unwrap();
    assert_eq!(loaded, file);
    assert_eq!(loaded.to_json(), std::fs::read_to_string(&path).unwrap());
    assert_eq!(scenario.agents.len(), 1);
    for f in generate_suite(SuiteKind::Interactive, 6, 3) {
        assert_eq!(parse_scenario(&f.to_json()).unwrap(), f);
    }
}

#[test]
fn malformed_json_is_a_parse_error() {
    assert!(matches!(parse_scenario("{ not json"), Err(Error::Parse(_))));
}

#[test]
fn short_agent_log_is_rejected() {
    let mut file = minimal();
    file.agents[0].trajectory.truncate(100);
    match validate(&file) {
        Err(Error::Validation(msg)) => assert!(msg.contains("lead"), "{msg}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn dangling_successor_is_rejected() {
    let mut file = minimal();
    file.map.lanes[0].successors.push("ghost".into());
    match validate(&file) {
        Err(Error::Validation(msg)) => assert!(msg.contains("ghost"), "{msg}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn generation_is_deterministic() {
    let a = generate_suite(SuiteKind::Interactive, 1, 7);
    let b = generate_suite(SuiteKind::Interactive, 1, 7);
    assert_eq!(a[0].to_json(), b[0].to_json());
    let dir = tempfile::tempdir().unwrap();
    write_suite(&generate_suite(SuiteKind::Common, 4, 1), dir.path()).unwrap();
    assert_eq!(load_dir(dir.path()).unwrap().len(), 4);
}

#[test]
fn generated_scenarios_are_well_formed() {
    let p = VehicleParams::default();
    for (kind, seed) in [(SuiteKind::Common, 1), (SuiteKind::Interactive, 2), (SuiteKind::Interactive, 9)] {
        for f in generate_suite(kind, 40, seed) {
            validate(&f).unwrap();
            if f.tags.iter().any(|t| t == "lane_change") {
                assert_ne!(f.map.goal_lane, f.ego.lane, "{}", f.id);
            }
            let mut boxes = vec![p.footprint(f.ego.x, f.ego.y, f.ego.theta)];
            for a in &f.agents {
                let b = OrientedBox::new(Vec2::new(a.x, a.y), a.theta, a.length, a.width);
                assert!(boxes.iter().all(|o| !boxes_overlap(o, &b)), "{}: agent {} overlaps", f.id, a.id);
                boxes.push(b);
            }
        }
    }
}

#[test]
fn interactive_suite_runs_under_every_configuration() {
    let scenarios: Vec<_> = generate_suite(SuiteKind::Interactive, 20, 2).iter().map(|f| validate(f).unwrap()).collect();
    let mut configs = Vec::new();
    for planner in [PlannerKind::Pdm, PlannerKind::Spdm] {
        for mode in [Mode::ClosedNonReactive, Mode::ClosedReactive, Mode::OpenLoop] {
            for modality in [Modality::ConstantVelocity, Modality::Perfect, Modality::None] {
                let mut c = SimConfig::new(mode, planner, modality, 20);
                // Smoke run: three seconds per scenario.
                c.duration = Some(3.0);
                configs.push(c);
            }
        }
    }
    let rows = run_suite(&scenarios, &configs);
    assert_eq!(rows.len(), 20 * 18);
    for r in &rows {
        let expected = if r.mode == "r" && r.modality == "perfect" { Status::Na } else { Status::Ok };
        assert_eq!(r.status, expected, "{} {} {} {}", r.scenario_id, r.mode, r.planner, r.modality);
    }
}
