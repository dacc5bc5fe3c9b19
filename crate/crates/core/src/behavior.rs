//! Intelligent Driver Model, reactive background vehicles, and the three
//! prediction modalities (constant velocity, perfect, none).

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    AgentKind, AgentState, EgoState, Trajectory, VehicleParams, A_ABS_MAX, DT, HORIZON_STEPS,
};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, OrientedBox, Vec2};
use crate::map::Polyline;

/// Number of agents kept in a prediction set.
pub const MAX_PREDICTED_AGENTS: usize = 10;

/// Recorded paths shorter than this are treated as parked.
const DEGENERATE_PATH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    pub desired_speed: f64,
    pub time_headway: f64,
    pub min_gap: f64,
    pub max_accel: f64,
    pub comfort_decel: f64,
    pub exponent: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            desired_speed: 15.0,
            time_headway: 1.5,
            min_gap: 2.0,
            max_accel: 1.5,
            comfort_decel: 2.0,
            exponent: 4.0,
        }
    }
}

impl IdmParams {
    pub fn with_desired_speed(self, desired_speed: f64) -> Self {
        Self {
            desired_speed,
            ..self
        }
    }

    /// Desired dynamic gap `s*`.
    pub fn desired_gap(&self, v: f64, lead_v: f64) -> f64 {
        self.min_gap
            + v * self.time_headway
            + v * (v - lead_v) / (2.0 * (self.max_accel * self.comfort_decel).sqrt())
    }
}

/// IDM acceleration for bumper-to-bumper `gap` (infinite for a free road),
/// clamped to `[-A_ABS_MAX, max_accel]`. A non-positive gap brakes at the
/// physical limit.
pub fn idm_accel(v: f64, gap: f64, lead_v: f64, p: &IdmParams) -> f64 {
    if gap <= 0.0 {
        return -A_ABS_MAX;
    }
    let free = 1.0 - (v / p.desired_speed).powf(p.exponent);
    let interaction = if gap.is_finite() {
        let ratio = p.desired_gap(v, lead_v).max(0.0) / gap;
        ratio * ratio
    } else {
        0.0
    };
    (p.max_accel * (free - interaction)).clamp(-A_ABS_MAX, p.max_accel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    ConstantVelocity,
    Perfect,
    None,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::ConstantVelocity => "cv",
            Modality::Perfect => "perfect",
            Modality::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoggedPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl LoggedPose {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Recorded agent motion, one pose per tick starting at tick 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentLog {
    pub poses: Vec<LoggedPose>,
}

impl AgentLog {
    /// Pose at `tick`, holding the last recorded pose afterwards.
    pub fn pose(&self, tick: usize) -> LoggedPose {
        self.poses[tick.min(self.poses.len() - 1)]
    }

    /// Finite-difference speed at `tick`.
    pub fn speed(&self, tick: usize) -> f64 {
        let n = self.poses.len();
        if n < 2 || tick >= n - 1 {
            return if n >= 2 && tick == n - 1 {
                self.poses[n - 1].position().distance(self.poses[n - 2].position()) / DT
            } else {
                0.0
            };
        }
        self.poses[tick + 1].position().distance(self.poses[tick].position()) / DT
    }

    /// Agent state replayed from the log at `tick`.
    pub fn replay(&self, template: &AgentState, tick: usize) -> AgentState {
        let pose = self.pose(tick);
        AgentState {
            x: pose.x,
            y: pose.y,
            theta: pose.theta,
            v: self.speed(tick),
            ..template.clone()
        }
    }
}

/// Spatial path an IDM-driven vehicle follows, taken from its recording.
#[derive(Debug, Clone)]
pub struct AgentPath {
    path: Option<Polyline>,
    pub desired_speed: f64,
}

impl AgentPath {
    pub fn from_log(log: &AgentLog) -> Self {
        let path = Polyline::new(log.poses.iter().map(|p| p.position()))
            .ok()
            .filter(|p| p.length() >= DEGENERATE_PATH)
            .and_then(|p| p.extended(300.0).ok());
        let desired_speed = (0..log.poses.len())
            .map(|t| log.speed(t))
            .fold(0.0, f64::max)
            .max(1.0);
        Self {
            path,
            desired_speed,
        }
    }

    /// `None` for agents whose recording never moves.
    pub fn polyline(&self) -> Option<&Polyline> {
        self.path.as_ref()
    }
}

/// Something a reactive vehicle may have to follow.
#[derive(Debug, Clone, Copy)]
struct Obstacle {
    footprint: OrientedBox,
    speed: f64,
}

fn ego_obstacle(ego: &EgoState, params: &VehicleParams) -> Obstacle {
    Obstacle {
        footprint: params.footprint(ego.x, ego.y, ego.theta),
        speed: ego.v,
    }
}

/// Advances an IDM vehicle one step along its recorded path, following the
/// nearest obstacle (ego or other agent) inside a corridor of width
/// `agent.width + 1 m`.
pub fn reactive_agent_step(
    agent: &AgentState,
    path: &AgentPath,
    ego: &EgoState,
    ego_params: &VehicleParams,
    others: &[AgentState],
    idm: &IdmParams,
    dt: f64,
) -> Result<AgentState> {
    if agent.kind != AgentKind::Vehicle {
        return Err(Error::WrongKind {
            id: agent.id.clone(),
            kind: agent.kind.as_str().into(),
        });
    }
    let Some(line) = path.polyline() else {
        return Ok(AgentState {
            v: 0.0,
            ..agent.clone()
        });
    };
    let obstacles = std::iter::once(ego_obstacle(ego, ego_params)).chain(
        others
            .iter()
            .filter(|o| o.id != agent.id)
            .map(|o| Obstacle {
                footprint: o.footprint(),
                speed: o.v,
            }),
    );
    let here = line.project(agent.position());
    let corridor_half = 0.5 * (agent.width + 1.0);
    let mut lead: Option<(f64, f64)> = None;
    for obs in obstacles {
        let proj = line.project(obs.footprint.center);
        if proj.overshoot.abs() > 1.0 || proj.s <= here.s {
            continue;
        }
        let rel = wrap_angle(obs.footprint.heading - proj.heading);
        let (sin, cos) = rel.sin_cos();
        let half_len = 0.5 * obs.footprint.length;
        let half_wid = 0.5 * obs.footprint.width;
        let lateral_half = (half_len * sin).abs() + (half_wid * cos).abs();
        if proj.d.abs() - lateral_half > corridor_half {
            continue;
        }
        let longitudinal_half = (half_len * cos).abs() + (half_wid * sin).abs();
        let gap = proj.s - longitudinal_half - (here.s + 0.5 * agent.length);
        if lead.is_none_or(|(g, _)| gap < g) {
            lead = Some((gap, (obs.speed * cos).max(0.0)));
        }
    }
    let params = idm.with_desired_speed(path.desired_speed);
    let accel = match lead {
        Some((gap, lead_v)) => idm_accel(agent.v, gap, lead_v, &params),
        None => idm_accel(agent.v, f64::INFINITY, 0.0, &params),
    };
    let mut v = (agent.v + accel * dt).max(0.0);
    let mut advance = 0.5 * (agent.v + v) * dt;
    // Discrete braking can creep past the standstill gap behind a stopped lead.
    if let Some((gap, lead_v)) = lead {
        let room = (gap - params.min_gap).max(0.0);
        if lead_v == 0.0 && advance > room {
            advance = room;
            v = 0.0;
        }
    }
    let s = here.s + advance;
    let (point, tangent, _) = line.frame_at(s);
    Ok(AgentState {
        x: point.x,
        y: point.y,
        theta: tangent.heading(),
        v,
        ..agent.clone()
    })
}

/// Snapshot the predictor works from. Indices of `agents`, `logs` and
/// `paths` line up.
#[derive(Debug, Clone, Copy)]
pub struct Scene<'a> {
    pub ego: &'a EgoState,
    pub ego_params: &'a VehicleParams,
    pub agents: &'a [AgentState],
    pub logs: &'a [AgentLog],
    pub paths: &'a [AgentPath],
    pub tick: usize,
    pub idm: &'a IdmParams,
}

impl Scene<'_> {
    /// Advances every agent one tick: IDM for vehicles in reactive mode,
    /// replay otherwise.
    pub fn step_agents(
        &self,
        ego: &EgoState,
        current: &[AgentState],
        tick: usize,
        reactive: bool,
    ) -> Result<Vec<AgentState>> {
        current
            .iter()
            .enumerate()
            .map(|(i, agent)| {
                if reactive && agent.kind == AgentKind::Vehicle && self.paths[i].polyline().is_some() {
                    reactive_agent_step(agent, &self.paths[i], ego, self.ego_params, current, self.idm, DT)
                } else {
                    Ok(self.logs[i].replay(agent, tick + 1))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedAgent {
    pub id: String,
    pub current: Vec2,
    /// Positions at steps 1..=HORIZON_STEPS.
    pub future: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub modality: Modality,
    pub agents: Vec<PredictedAgent>,
}

/// Indices of the `MAX_PREDICTED_AGENTS` agents nearest to the ego, nearest first.
pub fn nearest_agents(ego: &EgoState, agents: &[AgentState]) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.position().distance(ego.position()), i))
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    order
        .into_iter()
        .take(MAX_PREDICTED_AGENTS)
        .map(|(_, i)| i)
        .collect()
}

/// Forecasts the nearest agents over the planning horizon.
pub fn predict(
    scene: &Scene<'_>,
    modality: Modality,
    ego_plan: Option<&Trajectory>,
    reactive: bool,
) -> Result<PredictionSet> {
    let chosen = nearest_agents(scene.ego, scene.agents);
    let agents = match modality {
        Modality::None => chosen
            .iter()
            .map(|&i| PredictedAgent {
                id: scene.agents[i].id.clone(),
                current: Vec2::ZERO,
                future: vec![Vec2::ZERO; HORIZON_STEPS],
            })
            .collect(),
        Modality::ConstantVelocity => chosen
            .iter()
            .map(|&i| {
                let a = &scene.agents[i];
                let vel = Vec2::from_heading(a.theta) * a.v;
                PredictedAgent {
                    id: a.id.clone(),
                    current: a.position(),
                    future: (1..=HORIZON_STEPS)
                        .map(|k| a.position() + vel * (k as f64 * DT))
                        .collect(),
                }
            })
            .collect(),
        Modality::Perfect if !reactive => chosen
            .iter()
            .map(|&i| PredictedAgent {
                id: scene.agents[i].id.clone(),
                current: scene.agents[i].position(),
                future: (1..=HORIZON_STEPS)
                    .map(|k| scene.logs[i].pose(scene.tick + k).position())
                    .collect(),
            })
            .collect(),
        Modality::Perfect => {
            let plan = ego_plan.ok_or(Error::MissingEgoPlan)?;
            let futures = reactive_rollout(scene, plan)?;
            chosen
                .iter()
                .map(|&i| PredictedAgent {
                    id: scene.agents[i].id.clone(),
                    current: scene.agents[i].position(),
                    future: futures.iter().map(|step| step[i].position()).collect(),
                })
                .collect()
        }
    };
    Ok(PredictionSet { modality, agents })
}

/// Simulates all agents against a fixed ego plan; returns states for steps
/// 1..=HORIZON_STEPS.
fn reactive_rollout(scene: &Scene<'_>, plan: &Trajectory) -> Result<Vec<Vec<AgentState>>> {
    let mut current = scene.agents.to_vec();
    let mut out = Vec::with_capacity(HORIZON_STEPS);
    for k in 0..HORIZON_STEPS {
        let s = plan.states[k.min(plan.len() - 1)];
        let ego = EgoState {
            x: s.x,
            y: s.y,
            v: s.v,
            a: s.a,
            theta: s.theta,
            ..scene.ego.clone()
        };
        current = scene.step_agents(&ego, &current, scene.tick + k, true)?;
        out.push(current.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstaclePose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

/// Time-indexed footprint track of one agent, aligned with a trajectory
/// (pose `k` belongs to trajectory sample `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleTrack {
    pub id: String,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
    pub poses: Vec<ObstaclePose>,
}

impl ObstacleTrack {
    pub fn footprint(&self, k: usize) -> OrientedBox {
        let p = self.poses[k.min(self.poses.len() - 1)];
        OrientedBox::new(Vec2::new(p.x, p.y), p.theta, self.length, self.width)
    }

    pub fn pose(&self, k: usize) -> ObstaclePose {
        self.poses[k.min(self.poses.len() - 1)]
    }

    /// Tracks for the agents of a prediction set. Headings and speeds come
    /// from finite differences; "none" predictions yield no obstacles.
    pub fn from_predictions(preds: &PredictionSet, agents: &[AgentState]) -> Vec<ObstacleTrack> {
        if preds.modality == Modality::None {
            return Vec::new();
        }
        preds
            .agents
            .iter()
            .filter_map(|p| {
                let agent = agents.iter().find(|a| a.id == p.id)?;
                let positions: Vec<Vec2> =
                    std::iter::once(p.current).chain(p.future.iter().copied()).collect();
                let mut poses = Vec::with_capacity(positions.len());
                poses.push(ObstaclePose {
                    x: agent.x,
                    y: agent.y,
                    theta: agent.theta,
                    v: agent.v,
                });
                let mut theta = agent.theta;
                for k in 1..positions.len() {
                    let step = match positions.get(k + 1) {
                        Some(next) => *next - positions[k],
                        None => positions[k] - positions[k - 1],
                    };
                    if step.norm() > 1e-3 {
                        theta = step.heading();
                    }
                    poses.push(ObstaclePose {
                        x: positions[k].x,
                        y: positions[k].y,
                        theta,
                        v: step.norm() / DT,
                    });
                }
                Some(ObstacleTrack {
                    id: agent.id.clone(),
                    kind: agent.kind,
                    length: agent.length,
                    width: agent.width,
                    poses,
                })
            })
            .collect()
    }

    /// Tracks from realized agent states, one slice per tick.
    pub fn from_history(history: &[Vec<AgentState>]) -> Vec<ObstacleTrack> {
        let Some(first) = history.first() else {
            return Vec::new();
        };
        first
            .iter()
            .enumerate()
            .map(|(i, a)| ObstacleTrack {
                id: a.id.clone(),
                kind: a.kind,
                length: a.length,
                width: a.width,
                poses: history
                    .iter()
                    .map(|tick| {
                        let s = &tick[i];
                        ObstaclePose {
                            x: s.x,
                            y: s.y,
                            theta: s.theta,
                            v: s.v,
                        }
                    })
                    .collect(),
            })
            .collect()
    }
}
