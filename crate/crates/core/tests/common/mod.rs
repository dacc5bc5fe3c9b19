#![allow(dead_code)]

use spdm::dynamics::{AgentKind, AgentState, EgoState};
use spdm::geometry::{OrientedBox, Vec2};
use spdm::map::{Lane, LaneGraph, LaneId, Polygon};
use spdm::scenario::{AgentSpec, EgoSpec, LaneSpec, MapSpec, ScenarioFile, SCHEMA_VERSION};

pub const LANE_WIDTH: f64 = 3.5;

/// Parallel straight lanes along +x, `L0` at y = 0 and `Lk` at y = 3.5 k,
/// each left-adjacent to the previous one, inside one drivable rectangle.
pub fn straight_lanes(count: usize, length: f64, speed_limit: f64, goal: usize) -> LaneGraph {
    let lanes = (0..count)
        .map(|k| {
            let y = LANE_WIDTH * k as f64;
            let mut lane = Lane::new(
                format!("L{k}").as_str(),
                &[Vec2::new(0.0, y), Vec2::new(length, y)],
                speed_limit,
                LANE_WIDTH,
            )
            .unwrap();
            if k + 1 < count {
                lane = lane.with_left(&format!("L{}", k + 1));
            }
            if k > 0 {
                lane = lane.with_right(&format!("L{}", k - 1));
            }
            lane
        })
        .collect();
    let lo = -0.5 * LANE_WIDTH - 1.0;
    let hi = LANE_WIDTH * (count as f64 - 0.5) + 1.0;
    let area = Polygon::new(vec![
        Vec2::new(-10.0, lo),
        Vec2::new(length + 10.0, lo),
        Vec2::new(length + 10.0, hi),
        Vec2::new(-10.0, hi),
    ])
    .unwrap();
    LaneGraph::new(lanes, vec![area], LaneId::new(&format!("L{goal}"))).unwrap()
}

pub fn ego(x: f64, y: f64, v: f64, lane: &str) -> EgoState {
    EgoState {
        x,
        y,
        v,
        a: 0.0,
        theta: 0.0,
        lane: LaneId::new(lane),
        steering: 0.0,
        timestamp: 0.0,
    }
}

pub fn vehicle(id: &str, x: f64, y: f64, v: f64) -> AgentState {
    AgentState {
        id: id.into(),
        kind: AgentKind::Vehicle,
        x,
        y,
        v,
        theta: 0.0,
        length: 4.6,
        width: 1.9,
    }
}

/// Scenario file on the same straight-lane layout as `straight_lanes`.
pub fn straight_scenario(id: &str, count: usize, length: f64, goal: usize, ego_x: f64, ego_v: f64, agents: Vec<AgentSpec>) -> ScenarioFile {
    let lanes = (0..count)
        .map(|k| {
            let y = LANE_WIDTH * k as f64;
            LaneSpec {
                id: format!("L{k}"),
                centerline: vec![[0.0, y], [length, y]],
                speed_limit: 15.0,
                successors: Vec::new(),
                left: (k + 1 < count).then(|| format!("L{}", k + 1)),
                right: (k > 0).then(|| format!("L{}", k - 1)),
                width: LANE_WIDTH,
            }
        })
        .collect();
    let lo = -0.5 * LANE_WIDTH - 1.0;
    let hi = LANE_WIDTH * (count as f64 - 0.5) + 1.0;
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        id: id.into(),
        map: MapSpec {
            lanes,
            drivable_area: vec![vec![[-10.0, lo], [length + 10.0, lo], [length + 10.0, hi], [-10.0, hi]]],
            goal_lane: format!("L{goal}"),
        },
        ego: EgoSpec { x: ego_x, y: 0.0, v: ego_v, a: 0.0, theta: 0.0, lane: "L0".into() },
        agents,
        reference_progress: 150.0,
        duration: 15.0,
        tags: Vec::new(),
        idm: None,
    }
}

/// Vehicle driving along y at constant speed, logged for `ticks` ticks.
pub fn cruising_agent(id: &str, x: f64, y: f64, v: f64, ticks: usize) -> AgentSpec {
    AgentSpec {
        id: id.into(),
        kind: AgentKind::Vehicle,
        length: 4.6,
        width: 1.9,
        x,
        y,
        v,
        theta: 0.0,
        trajectory: (0..ticks).map(|k| [x + v * 0.1 * k as f64, y, 0.0]).collect(),
    }
}

pub fn resized(b: &OrientedBox, by: f64) -> OrientedBox {
    OrientedBox::new(b.center, b.heading, (b.length + 2.0 * by).max(1e-6), (b.width + 2.0 * by).max(1e-6))
}

/// Overlap by sampling a 200 x 200 grid over both boxes' bounds; returns
/// the verdict and the grid spacing.
pub fn raster_overlap(a: &OrientedBox, b: &OrientedBox) -> (bool, f64) {
    let corners: Vec<Vec2> = a.corners().into_iter().chain(b.corners()).collect();
    let (min_x, max_x) = corners.iter().fold((f64::MAX, f64::MIN), |(l, h), c| (l.min(c.x), h.max(c.x)));
    let (min_y, max_y) = corners.iter().fold((f64::MAX, f64::MIN), |(l, h), c| (l.min(c.y), h.max(c.y)));
    let (dx, dy) = ((max_x - min_x) / 199.0, (max_y - min_y) / 199.0);
    for i in 0..200 {
        for j in 0..200 {
            let p = Vec2::new(min_x + dx * i as f64, min_y + dy * j as f64);
            if a.contains_point(p) && b.contains_point(p) {
                return (true, dx.max(dy));
            }
        }
    }
    (false, dx.max(dy))
}
