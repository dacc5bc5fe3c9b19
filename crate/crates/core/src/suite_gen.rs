//! Seeded synthetic scenario suites.
//!
//! The common suite cycles through straight lane following, curved lane
//! following, car following, and nudging past a parked car that sticks out
//! into the lane. The interactive suite cycles through a parked car
//! blocking the ego lane, a crossing pedestrian, and a lane change to the
//! goal lane through dense traffic.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{AgentKind, VehicleParams, DT, HORIZON_STEPS};
use crate::error::Result;
use crate::geometry::{boxes_overlap, OrientedBox, Vec2};
use crate::map::Polyline;
use crate::scenario::{AgentSpec, EgoSpec, LaneSpec, MapSpec, ScenarioFile, INTERACTIVE_TAG, SCHEMA_VERSION};

pub const DEFAULT_COMMON_COUNT: usize = 40;
pub const DEFAULT_INTERACTIVE_COUNT: usize = 20;

const DURATION: f64 = 15.0;
const LANE_WIDTH: f64 = 3.5;
const SHOULDER: f64 = 1.0;
const ROAD_LENGTH: f64 = 500.0;
const EGO_START: f64 = 60.0;
const CAR_LENGTH: f64 = 4.6;
const CAR_WIDTH: f64 = 1.9;
const PEDESTRIAN_SIZE: f64 = 0.6;
/// Minimum clearance between initial footprints.
const SPAWN_CLEARANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Common,
    Interactive,
}

impl SuiteKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteKind::Common => "common",
            SuiteKind::Interactive => "interactive",
        }
    }
}

/// Samples per agent log: the scenario plus one planning horizon.
fn log_len() -> usize {
    (DURATION / DT).round() as usize + HORIZON_STEPS + 1
}

fn rng_for(kind: SuiteKind, seed: u64, index: usize) -> ChaCha8Rng {
    let salt = match kind {
        SuiteKind::Common => 0x5eed_c0de_0000_0001u64,
        SuiteKind::Interactive => 0x5eed_c0de_0000_0002u64,
    };
    ChaCha8Rng::seed_from_u64(seed ^ salt ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// A road of parallel straight lanes along +x. Lane `j` is centred on
/// `y = j * LANE_WIDTH`; lane 0 is rightmost.
struct Road {
    lanes: Vec<LaneSpec>,
    paths: Vec<Polyline>,
    drivable: Vec<[f64; 2]>,
}

fn lane_id(j: usize) -> String {
    format!("L{j}")
}

fn straight_road(n: usize, speed_limit: f64) -> Road {
    let lanes: Vec<LaneSpec> = (0..n)
        .map(|j| {
            let y = j as f64 * LANE_WIDTH;
            LaneSpec {
                id: lane_id(j),
                centerline: vec![[0.0, y], [ROAD_LENGTH, y]],
                speed_limit,
                successors: Vec::new(),
                left: (j + 1 < n).then(|| lane_id(j + 1)),
                right: (j > 0).then(|| lane_id(j - 1)),
                width: LANE_WIDTH,
            }
        })
        .collect();
    let paths = lanes.iter().map(|l| polyline(&l.centerline)).collect();
    let lo = -0.5 * LANE_WIDTH - SHOULDER;
    let hi = (n as f64 - 0.5) * LANE_WIDTH + SHOULDER;
    let drivable = vec![[-10.0, lo], [ROAD_LENGTH + 10.0, lo], [ROAD_LENGTH + 10.0, hi], [-10.0, hi]];
    Road { lanes, paths, drivable }
}

/// Single lane: straight run-in, a left-hand arc of `radius` turning
/// through `angle`, then a straight run-out.
fn curved_road(radius: f64, angle: f64, speed_limit: f64) -> Road {
    let run_in = EGO_START + 20.0;
    let arc_len = radius * angle;
    let run_out = (ROAD_LENGTH - run_in - arc_len).max(100.0);
    let mut pts = Vec::new();
    let mut s = 0.0;
    while s < run_in {
        pts.push(Vec2::new(s, 0.0));
        s += 2.0;
    }
    let centre = Vec2::new(run_in, radius);
    let steps = (arc_len / 2.0).ceil() as usize;
    for i in 0..=steps {
        let phi = angle * i as f64 / steps as f64;
        pts.push(centre + Vec2::new(radius * phi.sin(), -radius * phi.cos()));
    }
    let end = *pts.last().unwrap();
    let dir = Vec2::from_heading(angle);
    let mut t = 2.0;
    while t <= run_out {
        pts.push(end + dir * t);
        t += 2.0;
    }
    let centerline: Vec<[f64; 2]> = pts.iter().map(|p| [p.x, p.y]).collect();
    let path = polyline(&centerline);
    let half = 0.5 * LANE_WIDTH + SHOULDER;
    let left: Vec<[f64; 2]> = path
        .stations()
        .iter()
        .map(|&s| path.offset_point(s, half).into())
        .collect();
    let right: Vec<[f64; 2]> = path
        .stations()
        .iter()
        .map(|&s| path.offset_point(s, -half).into())
        .collect();
    let mut ring = right;
    ring.extend(left.into_iter().rev());
    Road {
        lanes: vec![LaneSpec {
            id: lane_id(0),
            centerline,
            speed_limit,
            successors: Vec::new(),
            left: None,
            right: None,
            width: LANE_WIDTH,
        }],
        paths: vec![path],
        drivable: ring,
    }
}

fn polyline(points: &[[f64; 2]]) -> Polyline {
    Polyline::resampled(&points.iter().map(|p| Vec2::from(*p)).collect::<Vec<_>>(), 1.0)
        .expect("generated centerlines are valid")
}

/// Station of an agent at each logged tick.
fn stations(s0: f64, speed_at: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut s = s0;
    let mut out = Vec::with_capacity(log_len());
    for k in 0..log_len() {
        out.push(s);
        let t = k as f64 * DT;
        s += 0.5 * (speed_at(t) + speed_at(t + DT)) * DT;
    }
    out
}

fn vehicle_on(id: &str, path: &Polyline, d: f64, s: &[f64]) -> AgentSpec {
    let trajectory: Vec<[f64; 3]> = s
        .iter()
        .map(|&s| {
            let p = path.offset_point(s, d);
            [p.x, p.y, path.heading_at(s)]
        })
        .collect();
    let first = trajectory[0];
    let v = Vec2::new(trajectory[1][0] - first[0], trajectory[1][1] - first[1]).norm() / DT;
    AgentSpec {
        id: id.into(),
        kind: AgentKind::Vehicle,
        length: CAR_LENGTH,
        width: CAR_WIDTH,
        x: first[0],
        y: first[1],
        v,
        theta: first[2],
        trajectory,
    }
}

fn parked(id: &str, path: &Polyline, s: f64, d: f64) -> AgentSpec {
    let p = path.offset_point(s, d);
    let theta = path.heading_at(s);
    AgentSpec {
        id: id.into(),
        kind: AgentKind::Static,
        length: CAR_LENGTH,
        width: CAR_WIDTH,
        x: p.x,
        y: p.y,
        v: 0.0,
        theta,
        trajectory: vec![[p.x, p.y, theta]; log_len()],
    }
}

fn ego_on(path: &Polyline, s: f64, v: f64) -> EgoSpec {
    let p = path.point_at(s);
    EgoSpec {
        x: p.x,
        y: p.y,
        v,
        a: 0.0,
        theta: path.heading_at(s),
        lane: lane_id(0),
    }
}

/// Distance covered in `DURATION` starting at `v0` and accelerating at
/// 1 m/s^2 up to `v_max`.
fn free_distance(v0: f64, v_max: f64) -> f64 {
    let ramp = ((v_max - v0) / 1.0).clamp(0.0, DURATION);
    let v_end = v0 + ramp;
    0.5 * (v0 + v_end) * ramp + v_max * (DURATION - ramp)
}

/// Drops agents whose initial footprint comes within the spawn clearance
/// of the ego or of an earlier agent.
fn without_overlaps(ego: &EgoSpec, agents: Vec<AgentSpec>) -> Vec<AgentSpec> {
    let params = VehicleParams::default();
    let grow = |b: OrientedBox| OrientedBox {
        length: b.length + SPAWN_CLEARANCE,
        width: b.width + SPAWN_CLEARANCE,
        ..b
    };
    let mut boxes = vec![grow(params.footprint(ego.x, ego.y, ego.theta))];
    let mut kept = Vec::new();
    for a in agents {
        let b = grow(OrientedBox::new(Vec2::new(a.x, a.y), a.theta, a.length, a.width));
        if boxes.iter().all(|o| !boxes_overlap(o, &b)) {
            boxes.push(b);
            kept.push(a);
        }
    }
    kept
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    id: String,
    road: Road,
    goal: usize,
    ego: EgoSpec,
    agents: Vec<AgentSpec>,
    reference_progress: f64,
    tags: Vec<&str>,
) -> ScenarioFile {
    let agents = without_overlaps(&ego, agents);
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        id,
        map: MapSpec {
            lanes: road.lanes,
            drivable_area: vec![road.drivable],
            goal_lane: lane_id(goal),
        },
        ego,
        agents,
        reference_progress,
        duration: DURATION,
        tags: tags.into_iter().map(String::from).collect(),
        idm: None,
    }
}

fn straight_follow(id: String, rng: &mut ChaCha8Rng) -> ScenarioFile {
    let limit = rng.gen_range(10.0..14.0);
    let road = straight_road(2, limit);
    let v0 = limit * rng.gen_range(0.6..1.0);
    let ego = ego_on(&road.paths[0], EGO_START, v0);
    let mut agents = Vec::new();
    let lead_v = limit * rng.gen_range(0.95..1.0);
    agents.push(vehicle_on(
        "lead",
        &road.paths[0],
        0.0,
        &stations(EGO_START + rng.gen_range(60.0..80.0), |_| lead_v),
    ));
    let mut s = EGO_START - rng.gen_range(20.0..30.0);
    for i in 0..3 {
        let v = limit * rng.gen_range(0.8..1.0);
        agents.push(vehicle_on(&format!("side{i}"), &road.paths[1], 0.0, &stations(s, |_| v)));
        s += rng.gen_range(30.0..45.0);
    }
    let reference = 0.8 * free_distance(v0, limit);
    assemble(id, road, 0, ego, agents, reference, vec!["common", "straight"])
}

fn curved_follow(id: String, rng: &mut ChaCha8Rng) -> ScenarioFile {
    let radius = rng.gen_range(80.0..150.0);
    let limit = rng.gen_range(9.0..12.0);
    let road = curved_road(radius, rng.gen_range(1.2..1.9), limit);
    let v0 = limit * rng.gen_range(0.6..1.0);
    let ego = ego_on(&road.paths[0], EGO_START, v0);
    let lead_v = limit;
    let agents = vec![vehicle_on(
        "lead",
        &road.paths[0],
        0.0,
        &stations(EGO_START + rng.gen_range(50.0..70.0), |_| lead_v),
    )];
    let reference = 0.8 * free_distance(v0, limit);
    assemble(id, road, 0, ego, agents, reference, vec!["common", "curve"])
}

fn car_following(id: String, rng: &mut ChaCha8Rng) -> ScenarioFile {
    let limit = rng.gen_range(11.0..14.0);
    let road = straight_road(1, limit);
    let v0 = limit * rng.gen_range(0.7..0.9);
    let ego = ego_on(&road.paths[0], EGO_START, v0);
    let lead_s0 = EGO_START + rng.gen_range(28.0..40.0);
    let braking = rng.gen_bool(0.5);
    let lead_stations = if braking {
        let cruise = v0;
        let t_brake = rng.gen_range(3.0..6.0);
        let decel = rng.gen_range(2.0..3.0);
        stations(lead_s0, move |t| {
            if t < t_brake {
                cruise
            } else {
                (cruise - decel * (t - t_brake)).max(0.0)
            }
        })
    } else {
        let v = rng.gen_range(4.0..7.0);
        stations(lead_s0, move |_| v)
    };
    let travelled = lead_stations[(DURATION / DT) as usize] - lead_s0;
    let agents = vec![vehicle_on("lead", &road.paths[0], 0.0, &lead_stations)];
    let reference = 0.8 * travelled.max(5.0);
    assemble(
        id,
        road,
        0,
        ego,
        agents,
        reference,
        vec!["common", "car_following", if braking { "braking_lead" } else { "slow_lead" }],
    )
}

fn nudge(id: String, rng: &mut ChaCha8Rng) -> ScenarioFile {
    let limit = rng.gen_range(9.0..12.0);
    let road = straight_road(1, limit);
    let v0 = rng.gen_range(7.0..9.0);
    let ego = ego_on(&road.paths[0], EGO_START, v0);
    let parked_s = EGO_START + rng.gen_range(25.0..35.0);
    let offset = -rng.gen_range(1.4..1.6);
    let agents = vec![parked("parked", &road.paths[0], parked_s, offset)];
    let reference = 0.8 * free_distance(v0, limit);
    assemble(id, road, 0, ego, agents, reference, vec!["common", "nudge"])
}

fn blockage(id: String, rng: &mut ChaCha8Rng) -> ScenarioFile {
    let limit = rng.gen_range(10.0..13.0);
    let road = straight_road(2, limit);
    let v0 = rng.gen_range(6.0..9.0);
    let ego = ego_on(&road.paths[0], EGO_START, v0);
    let mut agents = vec![parked("parked", &road.paths[0], EGO_START + rng.gen_range(40.0..60.0), 0.0)];
    let mut s = EGO_START + rng.gen_range(-18.0..-8.0);
    for i in 0..2 {
        let v = limit * rng.gen_range(0.7..0.9);
        agents.push(vehicle_on(&format!("traffic{i}"), &road.paths[1], 0.0, &stations(s, |_| v)));
        s += rng.gen_range(90.0..120.0);
    }
    let reference = 0.7 * free_distance(v0, limit);
    assemble(
        id,
        road,
        1,
        ego,
        agents,
        reference,
        vec![INTERACTIVE_TAG, "parked_vehicle", "lane_change"],
    )
}

fn jaywalker(id: String, rng: &mut ChaCha8Rng) -> ScenarioFile {
    let limit = rng.gen_range(9.0..12.0);
    let road = straight_road(1, limit);
    let v0 = rng.gen_range(8.0..10.0);
    let ego = ego_on(&road.paths[0], EGO_START, v0);
    let arrival = rng.gen_range(4.0..6.0);
    let x = EGO_START + v0 * arrival + VehicleParams::default().front_overhang();
    let speed = rng.gen_range(1.2..1.5);
    let start = arrival - 3.0;
    let y0 = -(0.5 * LANE_WIDTH + SHOULDER + 1.5);
    let y1 = -y0;
    let trajectory: Vec<[f64; 3]> = (0..log_len())
        .map(|k| {
            let t = k as f64 * DT;
            let y = (y0 + speed * (t - start).max(0.0)).min(y1);
            [x, y, std::f64::consts::FRAC_PI_2]
        })
        .collect();
    let pedestrian = AgentSpec {
        id: "pedestrian".into(),
        kind: AgentKind::Pedestrian,
        length: PEDESTRIAN_SIZE,
        width: PEDESTRIAN_SIZE,
        x,
        y: y0,
        v: if start <= 0.0 { speed } else { 0.0 },
        theta: std::f64::consts::FRAC_PI_2,
        trajectory,
    };
    let reference = 0.6 * free_distance(v0, limit);
    assemble(
        id,
        road,
        0,
        ego,
        vec![pedestrian],
        reference,
        vec![INTERACTIVE_TAG, "jaywalker"],
    )
}

fn dense_lane_change(id: String, rng: &mut ChaCha8Rng) -> ScenarioFile {
    let limit = rng.gen_range(10.0..13.0);
    let road = straight_road(2, limit);
    let traffic_v = limit * rng.gen_range(0.65..0.8);
    let ego = ego_on(&road.paths[0], EGO_START, traffic_v);
    let mut agents = vec![vehicle_on(
        "lead",
        &road.paths[0],
        0.0,
        &stations(EGO_START + rng.gen_range(35.0..45.0), |_| traffic_v),
    )];
    let mut s = EGO_START - rng.gen_range(45.0..55.0);
    let mut i = 0;
    while s < EGO_START + 150.0 {
        agents.push(vehicle_on(&format!("traffic{i}"), &road.paths[1], 0.0, &stations(s, |_| traffic_v)));
        s += rng.gen_range(24.0..32.0);
        i += 1;
    }
    let reference = 0.8 * traffic_v * DURATION;
    assemble(
        id,
        road,
        1,
        ego,
        agents,
        reference,
        vec![INTERACTIVE_TAG, "lane_change", "dense_traffic"],
    )
}

/// Generates `count` scenarios of `kind`, identical for identical seeds.
pub fn generate_suite(kind: SuiteKind, count: usize, seed: u64) -> Vec<ScenarioFile> {
    (0..count)
        .map(|i| {
            let mut rng = rng_for(kind, seed, i);
            let id = format!("{}_{i:03}", kind.as_str());
            match (kind, i % 4, i % 3) {
                (SuiteKind::Common, 0, _) => straight_follow(id, &mut rng),
                (SuiteKind::Common, 1, _) => curved_follow(id, &mut rng),
                (SuiteKind::Common, 2, _) => car_following(id, &mut rng),
                (SuiteKind::Common, _, _) => nudge(id, &mut rng),
                (SuiteKind::Interactive, _, 0) => blockage(id, &mut rng),
                (SuiteKind::Interactive, _, 1) => jaywalker(id, &mut rng),
                (SuiteKind::Interactive, _, _) => dense_lane_change(id, &mut rng),
            }
        })
        .collect()
}

/// A wide road whose goal lies `lanes - 1` lanes to the left, so every
/// lane is a route lane. Used for runtime measurements.
pub fn runtime_scenario(lanes: usize, seed: u64) -> ScenarioFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = 12.0;
    let road = straight_road(lanes, limit);
    let ego = ego_on(&road.paths[0], EGO_START, 10.0);
    let agents = (0..lanes.min(10))
        .map(|j| {
            let v = limit * rng.gen_range(0.6..0.9);
            let s0 = EGO_START + rng.gen_range(30.0..60.0);
            vehicle_on(&format!("car{j}"), &road.paths[j], 0.0, &stations(s0, |_| v))
        })
        .collect();
    assemble(
        format!("runtime_{lanes}"),
        road,
        lanes - 1,
        ego,
        agents,
        0.8 * free_distance(10.0, limit),
        vec!["runtime"],
    )
}

/// Writes scenarios as `<id>.json` under `dir`.
pub fn write_suite(files: &[ScenarioFile], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(format!("{}.json", f.id));
            f.save(&path)?;
            Ok(path)
        })
        .collect()
}

/// Loads every `*.json` scenario in `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<crate::scenario::Scenario>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| crate::scenario::load_scenario(p).map(|(_, s)| s))
        .collect()
}
