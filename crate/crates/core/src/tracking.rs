//! Decoupled lateral/longitudinal LQR trajectory tracking.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::{Matrix2, RowVector2, Vector2};

use crate::dynamics::{
    bicycle_step, Control, EgoState, Trajectory, VehicleParams, A_ABS_MAX, STEERING_MAX,
};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};

const DARE_TOLERANCE: f64 = 1e-9;
const DARE_MAX_ITERATIONS: usize = 10_000;

/// Actuator rate limits applied on top of the magnitude clamps.
pub const MAX_JERK: f64 = 6.0;
pub const MAX_STEERING_RATE: f64 = 0.6;

/// Lateral model speeds are floored here to keep the pair controllable.
const MIN_LATERAL_SPEED: f64 = 1.0;
/// Lateral gains are tabulated on this speed grid and interpolated.
const GAIN_GRID: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqrGains {
    /// Weights on [lateral error, heading error].
    pub lateral_q: [f64; 2],
    pub lateral_r: f64,
    /// Weights on [station error, speed error].
    pub longitudinal_q: [f64; 2],
    pub longitudinal_r: f64,
}

impl Default for LqrGains {
    fn default() -> Self {
        Self {
            lateral_q: [1.0, 2.0],
            lateral_r: 8.0,
            longitudinal_q: [0.5, 1.0],
            longitudinal_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DareSolution {
    pub p: Matrix2<f64>,
    pub gain: RowVector2<f64>,
    pub iterations: usize,
}

/// Solves the discrete algebraic Riccati equation by fixed-point iteration
/// from `P = Q` and returns the state-feedback gain `K` (control `u = -K x`).
pub fn solve_dare(
    a: &Matrix2<f64>,
    b: &Vector2<f64>,
    q: &Matrix2<f64>,
    r: f64,
) -> Result<DareSolution> {
    let at = a.transpose();
    let mut p = *q;
    for iteration in 1..=DARE_MAX_ITERATIONS {
        let pb = p * b;
        let s = r + (b.transpose() * pb)[0];
        let bpa = b.transpose() * p * a;
        let next = at * p * a - (at * pb) * bpa / s + q;
        let delta = (next - p).abs().max();
        p = next;
        if !delta.is_finite() {
            break;
        }
        if delta < DARE_TOLERANCE {
            let s = r + (b.transpose() * p * b)[0];
            let gain = (b.transpose() * p * a) / s;
            return Ok(DareSolution {
                p,
                gain,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: DARE_MAX_ITERATIONS,
    })
}

/// `A^T P A - P - A^T P B (R + B^T P B)^-1 B^T P A + Q`, max-abs entry.
pub fn dare_residual(
    a: &Matrix2<f64>,
    b: &Vector2<f64>,
    q: &Matrix2<f64>,
    r: f64,
    p: &Matrix2<f64>,
) -> f64 {
    let at = a.transpose();
    let s = r + (b.transpose() * p * b)[0];
    let res = at * p * a - p - (at * p * b) * (b.transpose() * p * a) / s + q;
    res.abs().max()
}

type GainKey = [u64; 6];

thread_local! {
    static GAIN_CACHE: RefCell<HashMap<(GainKey, i64), [f64; 2]>> = RefCell::new(HashMap::new());
}

fn cached_gain(key: GainKey, index: i64, build: impl FnOnce() -> [f64; 2]) -> [f64; 2] {
    if let Some(g) = GAIN_CACHE.with(|c| c.borrow().get(&(key, index)).copied()) {
        return g;
    }
    let g = build();
    GAIN_CACHE.with(|c| c.borrow_mut().insert((key, index), g));
    g
}

fn solve_gain(a: Matrix2<f64>, b: Vector2<f64>, q: [f64; 2], r: f64) -> [f64; 2] {
    let sol = solve_dare(&a, &b, &Matrix2::new(q[0], 0.0, 0.0, q[1]), r)
        .expect("tracking models are controllable");
    [sol.gain[0], sol.gain[1]]
}

fn lateral_model(v: f64, dt: f64, wheelbase: f64) -> (Matrix2<f64>, Vector2<f64>) {
    (
        Matrix2::new(1.0, v * dt, 0.0, 1.0),
        Vector2::new(0.0, v * dt / wheelbase),
    )
}

/// Lateral gain at speed `v`, interpolated between exact DARE solutions on
/// a 0.1 m/s grid.
pub fn lateral_gain(v: f64, dt: f64, params: &VehicleParams, gains: &LqrGains) -> [f64; 2] {
    let v = v.max(MIN_LATERAL_SPEED);
    let key = [
        dt.to_bits(),
        params.wheelbase.to_bits(),
        gains.lateral_q[0].to_bits(),
        gains.lateral_q[1].to_bits(),
        gains.lateral_r.to_bits(),
        0,
    ];
    let pos = v / GAIN_GRID;
    let lo = pos.floor() as i64;
    let t = pos - lo as f64;
    let at = |i: i64| {
        cached_gain(key, i, || {
            let (a, b) = lateral_model(i as f64 * GAIN_GRID, dt, params.wheelbase);
            solve_gain(a, b, gains.lateral_q, gains.lateral_r)
        })
    };
    let k0 = at(lo);
    if t == 0.0 {
        return k0;
    }
    let k1 = at(lo + 1);
    [k0[0] + (k1[0] - k0[0]) * t, k0[1] + (k1[1] - k0[1]) * t]
}

pub fn longitudinal_gain(dt: f64, gains: &LqrGains) -> [f64; 2] {
    let key = [
        dt.to_bits(),
        gains.longitudinal_q[0].to_bits(),
        gains.longitudinal_q[1].to_bits(),
        gains.longitudinal_r.to_bits(),
        1,
        1,
    ];
    cached_gain(key, 0, || {
        solve_gain(
            Matrix2::new(1.0, dt, 0.0, 1.0),
            Vector2::new(0.0, dt),
            gains.longitudinal_q,
            gains.longitudinal_r,
        )
    })
}

/// Pose of the reference matched to the ego position.
struct Match {
    station: f64,
    lateral: f64,
    heading: f64,
    curvature: f64,
}

/// A reference trajectory prepared for repeated tracking queries.
pub struct ReferenceTracker<'a> {
    reference: &'a Trajectory,
    stations: Vec<f64>,
    params: VehicleParams,
    gains: LqrGains,
}

impl<'a> ReferenceTracker<'a> {
    pub fn new(reference: &'a Trajectory, params: &VehicleParams, gains: &LqrGains) -> Self {
        let mut stations = Vec::with_capacity(reference.len());
        let mut s = 0.0;
        for (i, st) in reference.states.iter().enumerate() {
            if i > 0 {
                s += st.position().distance(reference.states[i - 1].position());
            }
            stations.push(s);
        }
        Self {
            reference,
            stations,
            params: *params,
            gains: *gains,
        }
    }

    fn matched(&self, p: Vec2) -> Match {
        let st = &self.reference.states;
        let mut best: Option<(f64, usize, f64)> = None;
        for i in 0..st.len().saturating_sub(1) {
            let a = st[i].position();
            let ab = st[i + 1].position() - a;
            let len2 = ab.norm_sq();
            if len2 < 1e-12 {
                continue;
            }
            let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
            let dist = (a + ab * t - p).norm_sq();
            // On a shared vertex prefer the later segment so the feedforward
            // uses the curvature ahead.
            if best.is_none_or(|(d, _, _)| dist <= d + 1e-12) {
                best = Some((dist, i, t));
            }
        }
        let Some((_, i, t)) = best else {
            // Stationary reference: measure against its single pose.
            let forward = Vec2::from_heading(st[0].theta);
            let rel = p - st[0].position();
            return Match {
                station: rel.dot(forward),
                lateral: forward.cross(rel),
                heading: st[0].theta,
                curvature: 0.0,
            };
        };
        let a = st[i].position();
        let b = st[i + 1].position();
        let dir = (b - a).normalized();
        let rel = p - a;
        let seg_len = self.stations[i + 1] - self.stations[i];
        let last = i + 2 == st.len() || self.stations[i + 2] - self.stations[i + 1] < 1e-9;
        // Extend the station past either end so the longitudinal error keeps its sign.
        let along = if (t == 0.0 && i == 0) || (t == 1.0 && last) {
            rel.dot(dir)
        } else {
            t * seg_len
        };
        let heading = st[i].theta + wrap_angle(st[i + 1].theta - st[i].theta) * t;
        let curvature = wrap_angle(st[i + 1].theta - st[i].theta) / seg_len;
        Match {
            station: self.stations[i] + along,
            lateral: dir.cross(rel),
            heading,
            curvature,
        }
    }

    /// Control for `state` at reference sample `step` ("now" on the plan's clock).
    pub fn control_at(&self, step: usize, state: &EgoState) -> Control {
        let dt = self.reference.dt;
        let k = step.min(self.reference.len() - 1);
        let target = self.reference.states[k];
        let m = self.matched(state.position());

        let lat_err = [m.lateral, wrap_angle(state.theta - m.heading)];
        let k_lat = lateral_gain(state.v, dt, &self.params, &self.gains);
        let feedforward = (self.params.wheelbase * m.curvature).atan();
        let steering = -(k_lat[0] * lat_err[0] + k_lat[1] * lat_err[1]) + feedforward;

        let lon_err = [m.station - self.stations[k], state.v - target.v];
        let k_lon = longitudinal_gain(dt, &self.gains);
        // Feedforward from the reference speed change, which is the applied
        // acceleration for rollouts and the planned one for proposals.
        let a_ff = match self.reference.states.get(k + 1) {
            Some(next) => (next.v - target.v) / dt,
            None => target.a,
        };
        let accel = a_ff - (k_lon[0] * lon_err[0] + k_lon[1] * lon_err[1]);

        let jerk_step = MAX_JERK * dt;
        let steer_step = MAX_STEERING_RATE * dt;
        Control {
            accel: accel
                .clamp(state.a - jerk_step, state.a + jerk_step)
                .clamp(-A_ABS_MAX, A_ABS_MAX),
            steering: steering
                .clamp(state.steering - steer_step, state.steering + steer_step)
                .clamp(-STEERING_MAX, STEERING_MAX),
        }
    }
}

/// One tracking step against a reference whose first sample is "now".
pub fn track(
    reference: &Trajectory,
    state: &EgoState,
    params: &VehicleParams,
    gains: &LqrGains,
) -> Control {
    ReferenceTracker::new(reference, params, gains).control_at(0, state)
}

/// Closed-loop rollout of the bicycle model tracking `reference` over its
/// full length.
pub fn track_rollout(
    reference: &Trajectory,
    initial: &EgoState,
    params: &VehicleParams,
    gains: &LqrGains,
) -> (Trajectory, Vec<Control>) {
    let tracker = ReferenceTracker::new(reference, params, gains);
    let steps = reference.len().saturating_sub(1);
    let mut state = initial.clone();
    let mut samples = Vec::with_capacity(steps + 1);
    let mut controls = Vec::with_capacity(steps);
    samples.push(state.sample());
    for k in 0..steps {
        let c = tracker.control_at(k, &state);
        state = bicycle_step(&state, c.accel, c.steering, reference.dt, params);
        samples.push(state.sample());
        controls.push(c);
    }
    (Trajectory::new(reference.dt, samples), controls)
}
