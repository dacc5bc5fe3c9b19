//! Ego and agent state, the kinematic bicycle model, and trajectories on the
//! fixed simulation clock.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, OrientedBox, Vec2};
use crate::map::LaneId;

/// Simulation step (s).
pub const DT: f64 = 0.1;
/// Planning horizon (s).
pub const HORIZON: f64 = 8.0;
/// Number of future steps in a planning horizon.
pub const HORIZON_STEPS: usize = 80;
/// Bound on |acceleration| (m/s^2).
pub const A_ABS_MAX: f64 = 6.0;
/// Bound on |steering angle| (rad).
pub const STEERING_MAX: f64 = 0.61;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub length: f64,
    pub width: f64,
    /// Distance from the rear axle (the reference point) forward to the box center.
    pub rear_axle_to_center: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 3.1,
            length: 4.6,
            width: 1.9,
            rear_axle_to_center: 1.35,
        }
    }
}

impl VehicleParams {
    /// Footprint of a vehicle whose rear axle sits at `(x, y)`.
    pub fn footprint(&self, x: f64, y: f64, theta: f64) -> OrientedBox {
        let center = Vec2::new(x, y) + Vec2::from_heading(theta) * self.rear_axle_to_center;
        OrientedBox::new(center, theta, self.length, self.width)
    }

    /// Distance from the rear axle to the front bumper.
    pub fn front_overhang(&self) -> f64 {
        self.rear_axle_to_center + 0.5 * self.length
    }

    /// Distance from the rear axle back to the rear bumper.
    pub fn rear_overhang(&self) -> f64 {
        0.5 * self.length - self.rear_axle_to_center
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
    pub theta: f64,
    pub lane: LaneId,
    pub steering: f64,
    pub timestamp: f64,
}

impl EgoState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn sample(&self) -> TrajectoryState {
        TrajectoryState {
            x: self.x,
            y: self.y,
            theta: self.theta,
            v: self.v,
            a: self.a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Vehicle,
    Pedestrian,
    Static,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Vehicle => "vehicle",
            AgentKind::Pedestrian => "pedestrian",
            AgentKind::Static => "static",
        }
    }
}

/// A surrounding agent; `(x, y)` is the footprint center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: String,
    pub kind: AgentKind,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
    pub length: f64,
    pub width: f64,
}

impl AgentState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn footprint(&self) -> OrientedBox {
        OrientedBox::new(self.position(), self.theta, self.length, self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub accel: f64,
    pub steering: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub a: f64,
}

impl TrajectoryState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Time-indexed samples at a fixed step; sample 0 is "now".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<TrajectoryState>,
}

impl Trajectory {
    pub fn new(dt: f64, states: Vec<TrajectoryState>) -> Self {
        Self { dt, states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.states.len().saturating_sub(1) as f64
    }

    /// The trajectory seen from `steps` ticks later.
    pub fn shifted(&self, steps: usize) -> Trajectory {
        let from = steps.min(self.states.len().saturating_sub(1));
        Trajectory::new(self.dt, self.states[from..].to_vec())
    }

    /// Largest pointwise distance between two trajectories; infinite when
    /// the lengths differ.
    pub fn max_distance(&self, other: &Trajectory) -> f64 {
        if self.states.len() != other.states.len() {
            return f64::INFINITY;
        }
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.position().distance(b.position()))
            .fold(0.0, f64::max)
    }
}

/// Forward-Euler step of the rear-axle kinematic bicycle. Acceleration and
/// steering are clamped to their physical bounds; speed never goes negative.
pub fn bicycle_step(
    state: &EgoState,
    accel: f64,
    steering: f64,
    dt: f64,
    params: &VehicleParams,
) -> EgoState {
    let accel = accel.clamp(-A_ABS_MAX, A_ABS_MAX);
    let steering = steering.clamp(-STEERING_MAX, STEERING_MAX);
    let (sin, cos) = state.theta.sin_cos();
    EgoState {
        x: state.x + state.v * cos * dt,
        y: state.y + state.v * sin * dt,
        theta: wrap_angle(state.theta + state.v * steering.tan() / params.wheelbase * dt),
        v: (state.v + accel * dt).max(0.0),
        a: accel,
        lane: state.lane.clone(),
        steering,
        timestamp: state.timestamp + dt,
    }
}

/// Applies `controls` in sequence. The result has `controls.len() + 1`
/// samples; each later sample records the commanded acceleration.
pub fn rollout(
    initial: &EgoState,
    controls: &[Control],
    dt: f64,
    params: &VehicleParams,
) -> Trajectory {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(initial.sample());
    let mut state = initial.clone();
    for c in controls {
        state = bicycle_step(&state, c.accel, c.steering, dt, params);
        states.push(state.sample());
    }
    Trajectory::new(dt, states)
}
