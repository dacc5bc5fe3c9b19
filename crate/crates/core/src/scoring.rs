//! Closed-loop scoring: collisions, drivable area, driving direction,
//! progress, time-to-collision, speed limit, comfort, and lane-to-goal,
//! folded into a multiplicative and weighted 0-100 composite.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use crate::geometry::{boxes_overlap, OrientedBox};

use crate::behavior::ObstacleTrack;
use crate::dynamics::{AgentKind, Trajectory, VehicleParams};
use crate::geometry::{wrap_angle, Vec2};
use crate::map::{LaneGraph, LaneId};

/// Below this speed the ego counts as stopped for fault and TTC purposes.
const STOPPED_FAULT_SPEED: f64 = 0.1;
const TTC_MIN_SPEED: f64 = 0.5;
const TTC_THRESHOLD: f64 = 1.0;
const TTC_STEP: f64 = 0.3;
const TTC_HORIZON: f64 = 3.0;
const MIN_REFERENCE_PROGRESS: f64 = 5.0;
const MAKING_PROGRESS_RATIO: f64 = 0.2;
const OVERSPEED_SCALE: f64 = 2.23;
const DIRECTION_FULL: f64 = 2.0;
const DIRECTION_HALF: f64 = 6.0;

/// Comfort bounds.
pub const MAX_LON_ACCEL: f64 = 2.40;
pub const MIN_LON_ACCEL: f64 = -4.05;
pub const MAX_LAT_ACCEL: f64 = 4.89;
pub const MAX_JERK: f64 = 8.37;
pub const MAX_YAW_RATE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub ttc: f64,
    pub progress: f64,
    pub speed_limit: f64,
    pub comfort: f64,
    pub lane_changes_to_goal: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            ttc: 5.0,
            progress: 5.0,
            speed_limit: 4.0,
            comfort: 2.0,
            lane_changes_to_goal: 5.0,
        }
    }
}

impl Weights {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            ttc: self.ttc * factor,
            progress: self.progress * factor,
            speed_limit: self.speed_limit * factor,
            comfort: self.comfort * factor,
            lane_changes_to_goal: self.lane_changes_to_goal * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub no_at_fault_collision: f64,
    pub drivable_area: f64,
    pub driving_direction: f64,
    pub making_progress: f64,
    pub ttc: f64,
    pub progress: f64,
    pub speed_limit: f64,
    pub comfort: f64,
    /// Only scored on interactive scenarios.
    pub lane_changes_to_goal: Option<f64>,
    pub composite: f64,
}

impl ScoreReport {
    /// Builds a report from its sub-metrics, computing the composite.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        no_at_fault_collision: f64,
        drivable_area: f64,
        driving_direction: f64,
        making_progress: f64,
        ttc: f64,
        progress: f64,
        speed_limit: f64,
        comfort: f64,
        lane_changes_to_goal: Option<f64>,
        weights: &Weights,
    ) -> Self {
        let mut report = Self {
            no_at_fault_collision,
            drivable_area,
            driving_direction,
            making_progress,
            ttc,
            progress,
            speed_limit,
            comfort,
            lane_changes_to_goal,
            composite: 0.0,
        };
        report.composite = report.composite_with(weights);
        report
    }

    pub fn multiplier(&self) -> f64 {
        self.no_at_fault_collision * self.drivable_area * self.driving_direction * self.making_progress
    }

    pub fn composite_with(&self, w: &Weights) -> f64 {
        let mut num = w.ttc * self.ttc
            + w.progress * self.progress
            + w.speed_limit * self.speed_limit
            + w.comfort * self.comfort;
        let mut den = w.ttc + w.progress + w.speed_limit + w.comfort;
        if let Some(lc) = self.lane_changes_to_goal {
            num += w.lane_changes_to_goal * lc;
            den += w.lane_changes_to_goal;
        }
        100.0 * self.multiplier() * num / den
    }
}

/// Scenario-independent pieces every score needs.
pub struct ScoringContext<'a> {
    pub graph: &'a LaneGraph,
    pub params: VehicleParams,
    route: Vec<LaneId>,
}

impl<'a> ScoringContext<'a> {
    /// `route` plus the goal lane's successors count towards progress.
    pub fn new(graph: &'a LaneGraph, route: &[LaneId], params: VehicleParams) -> Self {
        let mut lanes: BTreeSet<LaneId> = route.iter().cloned().collect();
        if let Ok(goal) = graph.lane(graph.goal_lane()) {
            lanes.extend(goal.successors.iter().cloned());
        }
        lanes.insert(graph.goal_lane().clone());
        Self {
            graph,
            params,
            route: lanes.into_iter().collect(),
        }
    }

    /// Tangent of the nearest route lane at `p`.
    fn route_tangent(&self, p: Vec2) -> Option<Vec2> {
        self.route
            .iter()
            .filter_map(|id| self.graph.lane(id).ok())
            .map(|lane| lane.centerline.project(p))
            .min_by(|a, b| a.distance().partial_cmp(&b.distance()).unwrap())
            .map(|proj| Vec2::from_heading(proj.heading))
    }
}

/// Raw, reference-free measurements of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub no_at_fault_collision: f64,
    pub drivable_area: f64,
    pub driving_direction: f64,
    pub ttc: f64,
    /// Metres travelled along the route.
    pub progress_m: f64,
    pub speed_limit: f64,
    pub comfort: f64,
    pub final_lane: Option<LaneId>,
}

impl Evaluation {
    /// Normalises progress against `reference_progress` and assembles the
    /// report. With `gate_progress` off the making-progress multiplier is
    /// held at 1.
    pub fn report(
        &self,
        graph: &LaneGraph,
        reference_progress: f64,
        interactive: bool,
        gate_progress: bool,
        weights: &Weights,
    ) -> ScoreReport {
        let progress = (self.progress_m / reference_progress.max(MIN_REFERENCE_PROGRESS)).clamp(0.0, 1.0);
        let making_progress = if !gate_progress || progress > MAKING_PROGRESS_RATIO {
            1.0
        } else {
            0.0
        };
        let lane_changes = interactive.then(|| {
            if self.final_lane.as_ref() == Some(graph.goal_lane()) {
                1.0
            } else {
                0.0
            }
        });
        ScoreReport::new(
            self.no_at_fault_collision,
            self.drivable_area,
            self.driving_direction,
            making_progress,
            self.ttc,
            progress,
            self.speed_limit,
            self.comfort,
            lane_changes,
            weights,
        )
    }

    /// Whether the trajectory is collision-free and stays on the map.
    pub fn is_admissible(&self) -> bool {
        self.no_at_fault_collision == 1.0 && self.drivable_area == 1.0
    }
}

/// True when a contact with `other` counts against the ego: always, unless
/// the ego is (nearly) stopped and the other box touches its rear half.
fn at_fault(ego: &OrientedBox, ego_v: f64, other: &OrientedBox) -> bool {
    if ego_v >= STOPPED_FAULT_SPEED {
        return true;
    }
    let forward = Vec2::from_heading(ego.heading);
    let contact = other
        .corners()
        .into_iter()
        .filter(|c| ego.contains_point(*c))
        .chain(ego.corners().into_iter().filter(|c| other.contains_point(*c)))
        .fold((Vec2::ZERO, 0usize), |(sum, n), c| (sum + c, n + 1));
    let point = if contact.1 > 0 {
        contact.0 * (1.0 / contact.1 as f64)
    } else {
        other.center
    };
    (point - ego.center).dot(forward) >= 0.0
}

fn collision_multiplier(traj: &Trajectory, obstacles: &[ObstacleTrack], params: &VehicleParams) -> f64 {
    let mut worst: f64 = 1.0;
    for (k, s) in traj.states.iter().enumerate() {
        let ego = params.footprint(s.x, s.y, s.theta);
        for o in obstacles {
            let other = o.footprint(k);
            if boxes_overlap(&ego, &other) && at_fault(&ego, s.v, &other) {
                worst = worst.min(match o.kind {
                    AgentKind::Static => 0.5,
                    AgentKind::Vehicle | AgentKind::Pedestrian => 0.0,
                });
                if worst == 0.0 {
                    return 0.0;
                }
            }
        }
    }
    worst
}

/// 1 unless, at some step with the ego moving, projecting ego and agents
/// forward at constant velocity produces an at-fault overlap sooner than
/// the TTC threshold. Agents already in contact are left to the collision
/// metric.
pub fn time_to_collision(traj: &Trajectory, obstacles: &[ObstacleTrack], params: &VehicleParams) -> f64 {
    let taus: Vec<f64> = (1..)
        .map(|i| i as f64 * TTC_STEP)
        .take_while(|t| *t <= TTC_HORIZON + 1e-9 && *t < TTC_THRESHOLD)
        .collect();
    for (k, s) in traj.states.iter().enumerate() {
        if s.v <= TTC_MIN_SPEED {
            continue;
        }
        let ego = params.footprint(s.x, s.y, s.theta);
        let ego_dir = Vec2::from_heading(s.theta) * s.v;
        for o in obstacles {
            let now = o.footprint(k);
            if boxes_overlap(&ego, &now) {
                continue;
            }
            let pose = o.pose(k);
            let dir = Vec2::from_heading(pose.theta) * pose.v;
            let reach = s.v * TTC_THRESHOLD + pose.v * TTC_THRESHOLD;
            if (now.center - ego.center).norm() > reach + ego.circumradius() + now.circumradius() {
                continue;
            }
            for &tau in &taus {
                let e = OrientedBox {
                    center: ego.center + ego_dir * tau,
                    ..ego
                };
                let a = OrientedBox {
                    center: now.center + dir * tau,
                    ..now
                };
                if boxes_overlap(&e, &a) && ahead_or_beside(&e, &a) {
                    return 0.0;
                }
            }
        }
    }
    1.0
}

/// Rules out projected contacts where the other box approaches from
/// behind the ego.
fn ahead_or_beside(ego: &OrientedBox, other: &OrientedBox) -> bool {
    let forward = Vec2::from_heading(ego.heading);
    (other.center - ego.center).dot(forward) > -0.5 * ego.length
}

fn comfort(traj: &Trajectory) -> f64 {
    let dt = traj.dt;
    let st = &traj.states;
    let lon_ok = st.iter().all(|s| s.a <= MAX_LON_ACCEL && s.a >= MIN_LON_ACCEL);
    let jerk_ok = st.windows(2).all(|w| ((w[1].a - w[0].a) / dt).abs() <= MAX_JERK);
    let yaw_ok = st.windows(2).all(|w| {
        let yaw_rate = wrap_angle(w[1].theta - w[0].theta) / dt;
        yaw_rate.abs() <= MAX_YAW_RATE && (w[0].v * yaw_rate).abs() <= MAX_LAT_ACCEL
    });
    if lon_ok && jerk_ok && yaw_ok {
        1.0
    } else {
        0.0
    }
}

/// Measures a trajectory against obstacle tracks aligned with its samples.
pub fn evaluate(traj: &Trajectory, obstacles: &[ObstacleTrack], ctx: &ScoringContext<'_>) -> Evaluation {
    let params = &ctx.params;
    let drivable = traj
        .states
        .iter()
        .all(|s| ctx.graph.contains(&params.footprint(s.x, s.y, s.theta)));

    let matches: Vec<_> = traj
        .states
        .iter()
        .map(|s| ctx.graph.match_lane(s.position(), s.theta))
        .collect();

    let mut against = 0.0;
    let mut progress_m = 0.0;
    for (k, w) in traj.states.windows(2).enumerate() {
        let step = w[1].position() - w[0].position();
        if step.norm_sq() == 0.0 {
            continue;
        }
        if let Some((lane, pose, _)) = &matches[k] {
            let tangent = lane.centerline.tangent_at(pose.s);
            against += (-step.dot(tangent)).max(0.0);
        }
        if let Some(t) = ctx.route_tangent(w[0].position()) {
            progress_m += step.dot(t);
        }
    }
    let driving_direction = if against <= DIRECTION_FULL {
        1.0
    } else if against <= DIRECTION_HALF {
        0.5
    } else {
        0.0
    };

    let overspeed: f64 = traj
        .states
        .iter()
        .zip(&matches)
        .map(|(s, m)| m.as_ref().map_or(0.0, |(lane, _, _)| (s.v - lane.speed_limit).max(0.0)))
        .sum::<f64>()
        / traj.len().max(1) as f64;

    Evaluation {
        no_at_fault_collision: collision_multiplier(traj, obstacles, params),
        drivable_area: if drivable { 1.0 } else { 0.0 },
        driving_direction,
        ttc: time_to_collision(traj, obstacles, params),
        progress_m,
        speed_limit: 1.0 - (overspeed / OVERSPEED_SCALE).clamp(0.0, 1.0),
        comfort: comfort(traj),
        final_lane: matches.last().and_then(|m| m.as_ref()).map(|(l, _, _)| l.id.clone()),
    }
}

/// Full report for one trajectory with the making-progress gate on.
pub fn score_trajectory(
    traj: &Trajectory,
    obstacles: &[ObstacleTrack],
    ctx: &ScoringContext<'_>,
    reference_progress: f64,
    interactive: bool,
) -> ScoreReport {
    evaluate(traj, obstacles, ctx).report(ctx.graph, reference_progress, interactive, true, &Weights::default())
}

/// Index of the best report: highest composite, then highest progress,
/// then lowest index.
pub fn select_best(reports: &[ScoreReport]) -> usize {
    let mut best = 0;
    for (i, r) in reports.iter().enumerate().skip(1) {
        let b = &reports[best];
        if r.composite > b.composite || (r.composite == b.composite && r.progress > b.progress) {
            best = i;
        }
    }
    best
}
