//! Scenario files: JSON schema, validation, and the runtime form the
//! simulator consumes.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::{AgentLog, AgentPath, IdmParams, LoggedPose};
use crate::dynamics::{AgentKind, AgentState, EgoState, DT};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::map::{project_to_lane, Lane, LaneGraph, LaneId, Polygon};

pub const SCHEMA_VERSION: u32 = 1;
/// Tag marking scenarios scored with the lane-to-goal term.
pub const INTERACTIVE_TAG: &str = "interactive";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSpec {
    pub id: String,
    pub centerline: Vec<[f64; 2]>,
    pub speed_limit: f64,
    #[serde(default)]
    pub successors: Vec<String>,
    #[serde(default)]
    pub left: Option<String>,
    #[serde(default)]
    pub right: Option<String>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub lanes: Vec<LaneSpec>,
    pub drivable_area: Vec<Vec<[f64; 2]>>,
    pub goal_lane: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoSpec {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
    pub theta: f64,
    pub lane: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: String,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
    /// Recorded `[x, y, theta]` per tick, starting at tick 0.
    pub trajectory: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub id: String,
    pub map: MapSpec,
    pub ego: EgoSpec,
    pub agents: Vec<AgentSpec>,
    pub reference_progress: f64,
    pub duration: f64,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idm: Option<IdmParams>,
}

impl ScenarioFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// A validated scenario ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub graph: LaneGraph,
    pub ego: EgoState,
    pub agents: Vec<AgentState>,
    pub logs: Vec<AgentLog>,
    pub paths: Vec<AgentPath>,
    pub reference_progress: f64,
    pub duration: f64,
    pub tags: Vec<String>,
    pub idm: IdmParams,
}

impl Scenario {
    pub fn is_interactive(&self) -> bool {
        self.tags.iter().any(|t| t == INTERACTIVE_TAG)
    }

    pub fn steps(&self) -> usize {
        ticks(self.duration)
    }
}

fn ticks(duration: f64) -> usize {
    (duration / DT).round() as usize
}

fn invalid(msg: String) -> Error {
    Error::Validation(msg)
}

fn points(raw: &[[f64; 2]]) -> Vec<Vec2> {
    raw.iter().map(|p| Vec2::from(*p)).collect()
}

/// Checks every invariant and builds the runtime scenario.
pub fn validate(file: &ScenarioFile) -> Result<Scenario> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(invalid(format!(
            "scenario {}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.id, file.schema_version
        )));
    }
    if !(file.duration > 0.0) {
        return Err(invalid(format!("scenario {}: duration must be positive", file.id)));
    }
    if !(file.reference_progress > 0.0) {
        return Err(invalid(format!("scenario {}: reference_progress must be positive", file.id)));
    }

    let mut lanes = Vec::with_capacity(file.map.lanes.len());
    for spec in &file.map.lanes {
        if spec.centerline.len() < 2 {
            return Err(invalid(format!("lane {}: centerline needs at least two points", spec.id)));
        }
        if let Some(w) = spec.centerline.windows(2).position(|w| w[0] == w[1]) {
            return Err(invalid(format!(
                "lane {}: duplicate consecutive centerline point at index {}",
                spec.id,
                w + 1
            )));
        }
        let mut lane = Lane::new(spec.id.as_str(), &points(&spec.centerline), spec.speed_limit, spec.width)?;
        lane.successors = spec.successors.iter().map(|s| LaneId::new(s)).collect();
        lane.left_adjacent = spec.left.as_deref().map(LaneId::new);
        lane.right_adjacent = spec.right.as_deref().map(LaneId::new);
        lanes.push(lane);
    }
    let polygons = file
        .map
        .drivable_area
        .iter()
        .enumerate()
        .map(|(i, poly)| {
            Polygon::new(points(poly)).map_err(|e| invalid(format!("drivable polygon {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let graph = LaneGraph::new(lanes, polygons, LaneId::new(&file.map.goal_lane))?;

    let ego_lane = LaneId::new(&file.ego.lane);
    let lane = graph
        .lane(&ego_lane)
        .map_err(|_| invalid(format!("ego lane id '{ego_lane}' does not resolve")))?;
    let pose = project_to_lane(Vec2::new(file.ego.x, file.ego.y), file.ego.theta, lane);
    if pose.d.abs() >= lane.width {
        return Err(invalid(format!(
            "ego is {:.2} m off lane {ego_lane}, wider than the lane",
            pose.d.abs()
        )));
    }
    if !(file.ego.v >= 0.0) {
        return Err(invalid("ego speed must be non-negative".into()));
    }
    let ego = EgoState {
        x: file.ego.x,
        y: file.ego.y,
        v: file.ego.v,
        a: file.ego.a,
        theta: file.ego.theta,
        lane: ego_lane,
        steering: 0.0,
        timestamp: 0.0,
    };

    let needed = ticks(file.duration) + 1;
    let mut seen = BTreeSet::new();
    let mut agents = Vec::with_capacity(file.agents.len());
    let mut logs = Vec::with_capacity(file.agents.len());
    for a in &file.agents {
        if !seen.insert(a.id.as_str()) {
            return Err(invalid(format!("duplicate agent id {}", a.id)));
        }
        if !(a.length > 0.0 && a.width > 0.0) {
            return Err(invalid(format!("agent {}: length and width must be positive", a.id)));
        }
        if !(a.v >= 0.0) {
            return Err(invalid(format!("agent {}: speed must be non-negative", a.id)));
        }
        if a.trajectory.len() < needed {
            return Err(invalid(format!(
                "agent {}: recorded trajectory has {} samples, duration needs {needed}",
                a.id,
                a.trajectory.len()
            )));
        }
        agents.push(AgentState {
            id: a.id.clone(),
            kind: a.kind,
            x: a.x,
            y: a.y,
            v: a.v,
            theta: a.theta,
            length: a.length,
            width: a.width,
        });
        logs.push(AgentLog {
            poses: a
                .trajectory
                .iter()
                .map(|p| LoggedPose {
                    x: p[0],
                    y: p[1],
                    theta: p[2],
                })
                .collect(),
        });
    }
    let paths = logs.iter().map(AgentPath::from_log).collect();

    Ok(Scenario {
        id: file.id.clone(),
        graph,
        ego,
        agents,
        logs,
        paths,
        reference_progress: file.reference_progress,
        duration: file.duration,
        tags: file.tags.clone(),
        idm: file.idm.unwrap_or_default(),
    })
}

pub fn parse_scenario(json: &str) -> Result<ScenarioFile> {
    Ok(serde_json::from_str(json)?)
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<(ScenarioFile, Scenario)> {
    let file = parse_scenario(&std::fs::read_to_string(path)?)?;
    let scenario = validate(&file)?;
    Ok((file, scenario))
}
