//! Closed-loop motion-planning benchmark: lane maps, kinematic vehicles,
//! IDM traffic, centerline and spline-fitting trajectory proposals, LQR
//! tracking, nuPlan-style scoring, and a scenario simulator with a CLI
//! harness.

pub mod behavior;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod map;
pub mod planner;
pub mod plot;
pub mod presets;
pub mod proposals;
pub mod results;
pub mod scenario;
pub mod scoring;
pub mod simulator;
pub mod suite_gen;
pub mod tracking;

pub use error::{Error, Result};
