//! Trajectory proposals: IDM centerline proposals (stage 1) and cubic
//! velocity-profile proposals on every route lane (stage 2).

use serde::{Deserialize, Serialize};

use crate::behavior::{idm_accel, IdmParams, ObstacleTrack};
use crate::dynamics::{
    EgoState, Trajectory, TrajectoryState, VehicleParams, A_ABS_MAX, DT, HORIZON, HORIZON_STEPS,
};
use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::map::{LaneGraph, LaneId};

pub const TARGET_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const LATERAL_OFFSETS: [f64; 3] = [-1.0, 0.0, 1.0];
pub const STAGE1_COUNT: usize = TARGET_FRACTIONS.len() * LATERAL_OFFSETS.len();
pub const PROPOSALS_PER_LANE: usize = TARGET_FRACTIONS.len();

/// Lateral clearance added to the ego half-width when deciding whether an
/// agent blocks an offset corridor.
const CORRIDOR_MARGIN: f64 = 0.3;
/// Two proposals closer than this everywhere are the same proposal.
const DUPLICATE_DISTANCE: f64 = 0.01;

/// Order in which stage-1 (fraction, offset) pairs are kept when the
/// proposal budget is below the full grid.
const REDUCED_GRID_PRIORITY: [(f64, f64); STAGE1_COUNT] = [
    (1.0, 0.0),
    (0.6, 0.0),
    (0.2, 0.0),
    (1.0, -1.0),
    (1.0, 1.0),
    (0.6, -1.0),
    (0.6, 1.0),
    (0.8, 0.0),
    (0.4, 0.0),
    (0.2, -1.0),
    (0.2, 1.0),
    (0.8, -1.0),
    (0.8, 1.0),
    (0.4, -1.0),
    (0.4, 1.0),
];

/// `v(t) = c0 + c1 t + c2 t^2 + c3 t^3` on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityProfile {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub horizon: f64,
}

impl VelocityProfile {
    pub fn speed(&self, t: f64) -> f64 {
        self.c0 + t * (self.c1 + t * (self.c2 + t * self.c3))
    }

    pub fn accel(&self, t: f64) -> f64 {
        self.c1 + t * (2.0 * self.c2 + 3.0 * self.c3 * t)
    }
}

/// Cubic with `v(0) = v0`, `v'(0) = a0`, `v(T) = v_target`, `v'(T) = 0`.
pub fn fit_velocity_profile(v0: f64, a0: f64, v_target: f64, horizon: f64) -> VelocityProfile {
    let t = horizon;
    let dv = v_target - v0;
    VelocityProfile {
        c0: v0,
        c1: a0,
        c2: (3.0 * dv - 2.0 * a0 * t) / (t * t),
        c3: (a0 * t - 2.0 * dv) / (t * t * t),
        horizon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    PdmCenterline,
    SpdmLane,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub trajectory: Trajectory,
    pub source: ProposalSource,
    pub target_fraction: f64,
    /// Set for centerline proposals.
    pub lateral_offset: Option<f64>,
    /// Set for route-lane proposals.
    pub lane_id: Option<LaneId>,
}

/// Stage-1 (fraction, offset) pairs for a budget of `n` proposals, in
/// canonical order (fraction ascending, then offset ascending).
///
/// Fifteen gives the full five-by-three grid. Smaller budgets keep a fixed
/// priority subset; larger budgets refine the fraction axis to `ceil(n/3)`
/// evenly spaced values.
pub fn pdm_grid(n: usize) -> Vec<(f64, f64)> {
    let mut grid: Vec<(f64, f64)> = if n <= STAGE1_COUNT {
        REDUCED_GRID_PRIORITY[..n.max(1)].to_vec()
    } else {
        let fractions = n.div_ceil(LATERAL_OFFSETS.len());
        let mut dense: Vec<(f64, f64)> = (1..=fractions)
            .flat_map(|i| {
                let f = i as f64 / fractions as f64;
                LATERAL_OFFSETS.iter().map(move |&o| (f, o))
            })
            .collect();
        // Keep the fastest fractions when the budget is not a multiple of three.
        dense.drain(..dense.len() - n);
        dense
    };
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid
}

/// Stage-1 proposals on the full five-by-three grid.
pub fn generate_pdm_proposals(
    ego: &EgoState,
    graph: &LaneGraph,
    obstacles: &[ObstacleTrack],
    idm: &IdmParams,
    params: &VehicleParams,
) -> Result<Vec<Proposal>> {
    generate_pdm_grid(ego, graph, obstacles, idm, params, &pdm_grid(STAGE1_COUNT))
}

/// IDM rollouts along the ego lane's reference path, one per
/// (target fraction, lateral offset) pair. Agents whose footprint reaches
/// into the offset corridor act as leaders at their time-aligned pose.
pub fn generate_pdm_grid(
    ego: &EgoState,
    graph: &LaneGraph,
    obstacles: &[ObstacleTrack],
    idm: &IdmParams,
    params: &VehicleParams,
    grid: &[(f64, f64)],
) -> Result<Vec<Proposal>> {
    let lane = graph.lane(&ego.lane)?;
    let path = graph.reference_path(&ego.lane)?;
    let here = path.project(ego.position());
    let limit = 2.0 * lane.width;
    if here.distance() > limit {
        return Err(Error::ProjectionFailed {
            lane: lane.id.clone(),
            offset: here.distance(),
            limit,
        });
    }

    // Obstacle poses in path coordinates, per step: (s, d, lateral half,
    // longitudinal half, speed along the path).
    let projected: Vec<Vec<(f64, f64, f64, f64, f64)>> = (0..=HORIZON_STEPS)
        .map(|k| {
            obstacles
                .iter()
                .filter_map(|o| {
                    let pose = o.pose(k);
                    let proj = path.project(crate::geometry::Vec2::new(pose.x, pose.y));
                    if proj.overshoot.abs() > 1.0 {
                        return None;
                    }
                    let rel = wrap_angle(pose.theta - proj.heading);
                    let (sin, cos) = rel.sin_cos();
                    let (hl, hw) = (0.5 * o.length, 0.5 * o.width);
                    Some((
                        proj.s,
                        proj.d,
                        (hl * sin).abs() + (hw * cos).abs(),
                        (hl * cos).abs() + (hw * sin).abs(),
                        (pose.v * cos).max(0.0),
                    ))
                })
                .collect()
        })
        .collect();

    let ego_half = 0.5 * params.width + CORRIDOR_MARGIN;
    Ok(grid
        .iter()
        .map(|&(fraction, offset)| {
            let idm = idm.with_desired_speed(fraction * lane.speed_limit);
            let mut s = here.s;
            let mut v = ego.v;
            let mut states = Vec::with_capacity(HORIZON_STEPS + 1);
            for k in 0..=HORIZON_STEPS {
                let front = s + params.front_overhang();
                let lead = projected[k]
                    .iter()
                    .filter(|o| o.0 > s && (o.1 - offset).abs() - o.2 <= ego_half)
                    .map(|o| (o.0 - o.3 - front, o.4))
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let a = match lead {
                    Some((gap, lead_v)) => idm_accel(v, gap, lead_v, &idm),
                    None => idm_accel(v, f64::INFINITY, 0.0, &idm),
                };
                let p = path.offset_point(s, offset);
                states.push(TrajectoryState {
                    x: p.x,
                    y: p.y,
                    theta: path.heading_at(s),
                    v,
                    a,
                });
                let next_v = (v + a * DT).max(0.0);
                s += 0.5 * (v + next_v) * DT;
                v = next_v;
            }
            Proposal {
                trajectory: Trajectory::new(DT, states),
                source: ProposalSource::PdmCenterline,
                target_fraction: fraction,
                lateral_offset: Some(offset),
                lane_id: None,
            }
        })
        .collect())
}

/// Quintic lateral move from offset `d0` with rate `rate0` to zero offset
/// with zero rate and acceleration at `duration`, starting at zero
/// acceleration. Holds zero afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralProfile {
    coeffs: [f64; 6],
    duration: f64,
}

impl LateralProfile {
    pub fn new(d0: f64, rate0: f64, duration: f64) -> Self {
        let t = duration;
        Self {
            coeffs: [
                d0,
                rate0,
                0.0,
                (-20.0 * d0 - 12.0 * rate0 * t) / (2.0 * t.powi(3)),
                (30.0 * d0 + 16.0 * rate0 * t) / (2.0 * t.powi(4)),
                (-12.0 * d0 - 6.0 * rate0 * t) / (2.0 * t.powi(5)),
            ],
            duration,
        }
    }

    /// Offset and its time derivative at `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        if t >= self.duration {
            return (0.0, 0.0);
        }
        let c = &self.coeffs;
        let d = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
        let rate = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        (d, rate)
    }
}

/// Duration of the lateral move onto a lane `d0` metres away.
pub fn lateral_transition_time(d0: f64, horizon: f64) -> f64 {
    (1.5 * d0.abs()).max(3.0).min(horizon)
}

/// Five proposals on `lane` (one per target fraction), or `None` when the
/// ego does not project onto the lane's reference path.
pub fn lane_proposals(
    ego: &EgoState,
    graph: &LaneGraph,
    lane_id: &LaneId,
) -> Result<Option<Vec<Proposal>>> {
    let lane = graph.lane(lane_id)?;
    let path = graph.reference_path(lane_id)?;
    let here = path.project(ego.position());
    if here.overshoot != 0.0 {
        return Ok(None);
    }
    // Continue any lateral motion already under way so that replanning
    // mid-manoeuvre does not restart it from rest.
    let rate0 = ego.v * wrap_angle(ego.theta - path.heading_at(here.s)).sin();
    let lateral = LateralProfile::new(here.d, rate0, lateral_transition_time(here.d, HORIZON));
    let proposals = TARGET_FRACTIONS
        .iter()
        .map(|&fraction| {
            let profile = fit_velocity_profile(ego.v, ego.a, fraction * lane.speed_limit, HORIZON);
            let mut speeds = Vec::with_capacity(HORIZON_STEPS + 1);
            let mut prev = ego.v;
            for k in 0..=HORIZON_STEPS {
                let v = if k == 0 {
                    ego.v
                } else {
                    profile
                        .speed(k as f64 * DT)
                        .max(0.0)
                        .clamp(prev - A_ABS_MAX * DT, prev + A_ABS_MAX * DT)
                };
                speeds.push(v);
                prev = v;
            }
            let mut s = here.s;
            let states = (0..=HORIZON_STEPS)
                .map(|k| {
                    if k > 0 {
                        s += 0.5 * (speeds[k - 1] + speeds[k]) * DT;
                    }
                    let t = k as f64 * DT;
                    let (d, d_rate) = lateral.at(t);
                    let v = speeds[k];
                    let p = path.offset_point(s, d);
                    let heading = if v > 0.1 {
                        path.heading_at(s) + d_rate.atan2(v)
                    } else {
                        path.heading_at(s)
                    };
                    let a = match speeds.get(k + 1) {
                        Some(next) => (next - v) / DT,
                        None => 0.0,
                    };
                    TrajectoryState {
                        x: p.x,
                        y: p.y,
                        theta: wrap_angle(heading),
                        v,
                        a,
                    }
                })
                .collect();
            Proposal {
                trajectory: Trajectory::new(DT, states),
                source: ProposalSource::SpdmLane,
                target_fraction: fraction,
                lateral_offset: None,
                lane_id: Some(lane_id.clone()),
            }
        })
        .collect();
    Ok(Some(proposals))
}

/// Stage-2 proposals for the route lanes in order, at most `max_count`.
/// Lanes the ego cannot be projected onto contribute nothing.
pub fn generate_lane_proposals(
    ego: &EgoState,
    graph: &LaneGraph,
    route_lanes: &[LaneId],
    max_count: usize,
) -> Result<Vec<Proposal>> {
    let mut out = Vec::new();
    for id in route_lanes {
        if out.len() >= max_count {
            break;
        }
        if let Some(mut lane) = lane_proposals(ego, graph, id)? {
            lane.truncate(max_count - out.len());
            out.extend(lane);
        }
    }
    Ok(out)
}

/// The full SPDM set for budget `budget`: the stage-1 set followed by
/// route-lane proposals until the budget is used or the lanes run out.
pub fn generate_spdm_proposals(
    ego: &EgoState,
    graph: &LaneGraph,
    stage1: Vec<Proposal>,
    route_lanes: &[LaneId],
    budget: usize,
) -> Result<Vec<Proposal>> {
    let extra = budget.saturating_sub(stage1.len());
    let mut out = stage1;
    out.extend(generate_lane_proposals(ego, graph, route_lanes, extra)?);
    Ok(out)
}

/// Stage 1 followed by stage 2, dropping any proposal that duplicates an
/// earlier one.
pub fn merge_candidates(stage1: Vec<Proposal>, stage2: Vec<Proposal>) -> Vec<Proposal> {
    let mut out: Vec<Proposal> = Vec::with_capacity(stage1.len() + stage2.len());
    for p in stage1.into_iter().chain(stage2) {
        if out
            .iter()
            .all(|q| q.trajectory.max_distance(&p.trajectory) >= DUPLICATE_DISTANCE)
        {
            out.push(p);
        }
    }
    out
}
