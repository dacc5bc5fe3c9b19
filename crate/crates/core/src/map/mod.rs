//! Lane graph, Frenet geometry, drivable area and route extraction.

mod polygon;
mod polyline;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use polygon::Polygon;
pub use polyline::{Polyline, Projection};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, OrientedBox, Vec2};

/// Centerlines are resampled to at most this spacing on load.
pub const CENTERLINE_SPACING: f64 = 1.0;

/// How far past the end of a lane (through successors, then straight) its
/// reference path reaches.
const PATH_LOOKAHEAD: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LaneId(Arc<str>);

impl LaneId {
    pub fn new(id: &str) -> Self {
        Self(Arc::from(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LaneId {
    fn from(s: &str) -> Self {
        LaneId::new(s)
    }
}

#[derive(Debug, Clone)]
pub struct Lane {
    pub id: LaneId,
    pub centerline: Polyline,
    pub speed_limit: f64,
    pub successors: Vec<LaneId>,
    pub left_adjacent: Option<LaneId>,
    pub right_adjacent: Option<LaneId>,
    pub width: f64,
}

impl Lane {
    /// Builds a lane, resampling the centerline to at most 1 m spacing.
    pub fn new(
        id: impl Into<LaneId>,
        centerline: &[Vec2],
        speed_limit: f64,
        width: f64,
    ) -> Result<Self> {
        let id = id.into();
        let centerline = Polyline::resampled(centerline, CENTERLINE_SPACING)
            .map_err(|e| Error::Validation(format!("lane {id}: {e}")))?;
        Ok(Self {
            id,
            centerline,
            speed_limit,
            successors: Vec::new(),
            left_adjacent: None,
            right_adjacent: None,
            width,
        })
    }

    pub fn with_successors(mut self, successors: &[&str]) -> Self {
        self.successors = successors.iter().map(|s| LaneId::new(s)).collect();
        self
    }

    pub fn with_left(mut self, id: &str) -> Self {
        self.left_adjacent = Some(LaneId::new(id));
        self
    }

    pub fn with_right(mut self, id: &str) -> Self {
        self.right_adjacent = Some(LaneId::new(id));
        self
    }

    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    fn neighbours(&self) -> impl Iterator<Item = &LaneId> {
        self.successors
            .iter()
            .chain(self.left_adjacent.iter())
            .chain(self.right_adjacent.iter())
    }
}

/// A lane-relative pose.
#[derive(Debug, Clone, PartialEq)]
pub struct FrenetPose {
    pub lane_id: LaneId,
    pub s: f64,
    pub d: f64,
    pub heading_err: f64,
}

/// Projects a pose onto a lane centerline. `s` is clamped to the lane.
pub fn project_to_lane(point: Vec2, heading: f64, lane: &Lane) -> FrenetPose {
    let p = lane.centerline.project(point);
    FrenetPose {
        lane_id: lane.id.clone(),
        s: p.s,
        d: p.d,
        heading_err: wrap_angle(heading - p.heading),
    }
}

/// Inverse of [`project_to_lane`]: point and heading of a Frenet pose.
pub fn frenet_to_cartesian(pose: &FrenetPose, graph: &LaneGraph) -> Result<(Vec2, f64)> {
    let lane = graph.lane(&pose.lane_id)?;
    let (c, tangent, normal) = lane.centerline.frame_at(pose.s);
    Ok((
        c + normal * pose.d,
        wrap_angle(tangent.heading() + pose.heading_err),
    ))
}

/// Immutable map: lanes, drivable polygons, and the goal lane.
#[derive(Debug, Clone)]
pub struct LaneGraph {
    lanes: BTreeMap<LaneId, Lane>,
    paths: HashMap<LaneId, Polyline>,
    drivable_area: Vec<Polygon>,
    goal_lane: LaneId,
}

impl LaneGraph {
    /// Validates topology and drivable-area coverage, then builds the graph.
    pub fn new(lanes: Vec<Lane>, drivable_area: Vec<Polygon>, goal_lane: LaneId) -> Result<Self> {
        let mut map = BTreeMap::new();
        for lane in lanes {
            if !(lane.width > 0.0) {
                return Err(Error::Validation(format!("lane {}: width must be positive", lane.id)));
            }
            if !(lane.speed_limit > 0.0) {
                return Err(Error::Validation(format!(
                    "lane {}: speed limit must be positive",
                    lane.id
                )));
            }
            let id = lane.id.clone();
            if map.insert(id.clone(), lane).is_some() {
                return Err(Error::Validation(format!("duplicate lane id {id}")));
            }
        }
        for lane in map.values() {
            for s in &lane.successors {
                if !map.contains_key(s) {
                    return Err(Error::Validation(format!(
                        "lane {}: successor id '{s}' does not resolve",
                        lane.id
                    )));
                }
            }
            for (side, adj) in [("left", &lane.left_adjacent), ("right", &lane.right_adjacent)] {
                let Some(adj) = adj else { continue };
                let Some(other) = map.get(adj) else {
                    return Err(Error::Validation(format!(
                        "lane {}: {side} adjacent id '{adj}' does not resolve",
                        lane.id
                    )));
                };
                let back = if side == "left" {
                    &other.right_adjacent
                } else {
                    &other.left_adjacent
                };
                if back.as_ref() != Some(&lane.id) {
                    return Err(Error::Validation(format!(
                        "lane {}: {side} adjacency to '{adj}' is not mirrored",
                        lane.id
                    )));
                }
            }
        }
        if !map.contains_key(&goal_lane) {
            return Err(Error::Validation(format!("goal lane id '{goal_lane}' does not resolve")));
        }
        if drivable_area.is_empty() {
            return Err(Error::Validation("drivable area is empty".into()));
        }
        let mut graph = Self {
            lanes: map,
            paths: HashMap::new(),
            drivable_area,
            goal_lane,
        };
        for lane in graph.lanes.values() {
            if let Some(p) = lane
                .centerline
                .points()
                .iter()
                .find(|p| !graph.point_drivable(**p))
            {
                return Err(Error::Validation(format!(
                    "lane {}: centerline point ({:.2}, {:.2}) leaves the drivable area",
                    lane.id, p.x, p.y
                )));
            }
        }
        let paths = graph
            .lanes
            .keys()
            .map(|id| Ok((id.clone(), graph.build_path(id)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        graph.paths = paths;
        Ok(graph)
    }

    fn build_path(&self, id: &LaneId) -> Result<Polyline> {
        let start = &self.lanes[id];
        let mut path = start.centerline.clone();
        let mut current = start;
        let mut visited = vec![id.clone()];
        while path.length() < start.length() + PATH_LOOKAHEAD {
            let Some(next) = current.successors.iter().find(|s| !visited.contains(s)) else {
                break;
            };
            visited.push(next.clone());
            current = &self.lanes[next];
            path = path.concat(&current.centerline)?;
        }
        let missing = (start.length() + PATH_LOOKAHEAD - path.length()).max(0.0);
        if missing > 0.0 {
            path = path.extended(missing)?;
        }
        Ok(path)
    }

    pub fn lane(&self, id: &LaneId) -> Result<&Lane> {
        self.lanes.get(id).ok_or_else(|| Error::UnknownLane(id.clone()))
    }

    pub fn lanes(&self) -> impl Iterator<Item = &Lane> {
        self.lanes.values()
    }

    pub fn goal_lane(&self) -> &LaneId {
        &self.goal_lane
    }

    pub fn drivable_area(&self) -> &[Polygon] {
        &self.drivable_area
    }

    /// The lane's centerline continued through its first successors and
    /// then straight on, so that planning horizons never run off the end.
    /// Arc-length 0 is the start of the lane itself.
    pub fn reference_path(&self, id: &LaneId) -> Result<&Polyline> {
        self.paths.get(id).ok_or_else(|| Error::UnknownLane(id.clone()))
    }

    pub fn point_drivable(&self, p: Vec2) -> bool {
        self.drivable_area.iter().any(|poly| poly.contains(p))
    }

    /// True iff every corner of the box lies in the drivable area.
    pub fn contains(&self, footprint: &OrientedBox) -> bool {
        footprint.corners().iter().all(|c| self.point_drivable(*c))
    }

    /// Lane whose projection is closest (then best aligned).
    pub fn match_lane(&self, point: Vec2, heading: f64) -> Option<(&Lane, FrenetPose, f64)> {
        self.lanes
            .values()
            .map(|lane| {
                let p = lane.centerline.project(point);
                let pose = FrenetPose {
                    lane_id: lane.id.clone(),
                    s: p.s,
                    d: p.d,
                    heading_err: wrap_angle(heading - p.heading),
                };
                (lane, pose, p.distance())
            })
            .min_by(|a, b| {
                a.2.partial_cmp(&b.2)
                    .unwrap()
                    .then(a.1.heading_err.abs().partial_cmp(&b.1.heading_err.abs()).unwrap())
            })
    }

    fn bfs(&self, from: &LaneId, reverse: bool) -> HashMap<LaneId, usize> {
        let mut incoming: HashMap<&LaneId, Vec<&LaneId>> = HashMap::new();
        if reverse {
            for lane in self.lanes.values() {
                for n in lane.neighbours() {
                    incoming.entry(n).or_default().push(&lane.id);
                }
            }
        }
        let mut dist = HashMap::new();
        dist.insert(from.clone(), 0);
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(id) = queue.pop_front() {
            let d = dist[&id];
            let next: Vec<&LaneId> = if reverse {
                incoming.get(&id).cloned().unwrap_or_default()
            } else {
                self.lanes[&id].neighbours().collect()
            };
            for n in next {
                if !dist.contains_key(n) {
                    dist.insert(n.clone(), d + 1);
                    queue.push_back(n.clone());
                }
            }
        }
        dist
    }
}

/// Lanes lying on a shortest (fewest-hop) successor/adjacency path from
/// `current` to the goal lane, ordered by hop distance from `current` and
/// then by lane id. `current` is always first.
pub fn extract_route_lanes(graph: &LaneGraph, current: &LaneId) -> Result<Vec<LaneId>> {
    graph.lane(current)?;
    let goal = graph.goal_lane().clone();
    let from_current = graph.bfs(current, false);
    let Some(&total) = from_current.get(&goal) else {
        return Err(Error::NoRoute {
            from: current.clone(),
            goal,
        });
    };
    let to_goal = graph.bfs(&goal, true);
    let mut route: Vec<(usize, LaneId)> = from_current
        .iter()
        .filter(|(id, &d)| to_goal.get(*id).is_some_and(|&r| d + r == total))
        .map(|(id, &d)| (d, id.clone()))
        .collect();
    route.sort();
    Ok(route.into_iter().map(|(_, id)| id).collect())
}
