use thiserror::Error;

use crate::map::LaneId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown lane id '{0}'")]
    UnknownLane(LaneId),

    #[error("no route from lane '{from}' to goal lane '{goal}'")]
    NoRoute { from: LaneId, goal: LaneId },

    #[error("ego is {offset:.2} m from the centerline of lane '{lane}' (limit {limit:.2} m)")]
    ProjectionFailed { lane: LaneId, offset: f64, limit: f64 },

    #[error("agent '{id}' is a {kind}; only vehicles are driven by IDM")]
    WrongKind { id: String, kind: String },

    #[error("perfect predictions in reactive mode need an ego plan")]
    MissingEgoPlan,

    #[error("Riccati iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("incompatible configuration: {0}")]
    IncompatibleConfig(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
