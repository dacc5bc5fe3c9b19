//! One planning cycle: proposals, tracked rollouts, scoring, selection.

use serde::{Deserialize, Serialize};

use crate::behavior::{IdmParams, ObstacleTrack};
use crate::dynamics::{Control, EgoState, Trajectory, VehicleParams};
use crate::error::Result;
use crate::map::{LaneGraph, LaneId};
use crate::proposals::{generate_lane_proposals, generate_pdm_grid, merge_candidates, pdm_grid, Proposal, STAGE1_COUNT};
use crate::scoring::{evaluate, select_best, ScoreReport, ScoringContext, Weights};
use crate::tracking::{track_rollout, LqrGains};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Pdm,
    Spdm,
}

impl PlannerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Pdm => "pdm",
            PlannerKind::Spdm => "spdm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    /// Proposal budget.
    pub n_p: usize,
    pub interactive: bool,
    pub params: VehicleParams,
    pub gains: LqrGains,
    pub idm: IdmParams,
    pub weights: Weights,
}

impl PlannerConfig {
    pub fn new(kind: PlannerKind, n_p: usize) -> Self {
        Self {
            kind,
            n_p,
            interactive: false,
            params: VehicleParams::default(),
            gains: LqrGains::default(),
            idm: IdmParams::default(),
            weights: Weights::default(),
        }
    }
}

/// Everything one planning cycle produced.
#[derive(Debug, Clone)]
pub struct PlanResult {
    pub candidates: Vec<Proposal>,
    /// Tracked bicycle rollouts, one per candidate.
    pub rollouts: Vec<Trajectory>,
    pub controls: Vec<Vec<Control>>,
    pub reports: Vec<ScoreReport>,
    pub best: usize,
}

impl PlanResult {
    pub fn plan(&self) -> &Trajectory {
        &self.rollouts[self.best]
    }

    pub fn plan_controls(&self) -> &[Control] {
        &self.controls[self.best]
    }
}

/// Proposal set for the configured planner and budget.
///
/// The centerline planner spends its whole budget on the IDM grid. The
/// spline-fitting planner keeps the fifteen-proposal grid and spends the
/// remainder on route lanes.
pub fn generate_candidates(
    ego: &EgoState,
    graph: &LaneGraph,
    route: &[LaneId],
    obstacles: &[ObstacleTrack],
    cfg: &PlannerConfig,
) -> Result<Vec<Proposal>> {
    match cfg.kind {
        PlannerKind::Pdm => generate_pdm_grid(ego, graph, obstacles, &cfg.idm, &cfg.params, &pdm_grid(cfg.n_p)),
        PlannerKind::Spdm => {
            let grid = pdm_grid(cfg.n_p.min(STAGE1_COUNT));
            let stage1 = generate_pdm_grid(ego, graph, obstacles, &cfg.idm, &cfg.params, &grid)?;
            let stage2 = generate_lane_proposals(ego, graph, route, cfg.n_p.saturating_sub(stage1.len()))?;
            Ok(merge_candidates(stage1, stage2))
        }
    }
}

/// Runs one planning cycle. Candidates are tracked from the current ego
/// state, scored against the obstacle forecasts, and the best is chosen.
/// Progress is normalised by the farthest admissible candidate.
pub fn plan(
    ego: &EgoState,
    graph: &LaneGraph,
    route: &[LaneId],
    obstacles: &[ObstacleTrack],
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    let candidates = generate_candidates(ego, graph, route, obstacles, cfg)?;
    let (rollouts, controls): (Vec<_>, Vec<_>) = candidates
        .iter()
        .map(|p| track_rollout(&p.trajectory, ego, &cfg.params, &cfg.gains))
        .unzip();
    let ctx = ScoringContext::new(graph, route, cfg.params);
    let evaluations: Vec<_> = rollouts.iter().map(|t| evaluate(t, obstacles, &ctx)).collect();
    let reference = evaluations
        .iter()
        .filter(|e| e.is_admissible())
        .map(|e| e.progress_m)
        .fold(f64::NEG_INFINITY, f64::max);
    let reference = if reference.is_finite() {
        reference
    } else {
        evaluations.iter().map(|e| e.progress_m).fold(0.0, f64::max)
    };
    let reports: Vec<ScoreReport> = evaluations
        .iter()
        .map(|e| e.report(graph, reference, cfg.interactive, false, &cfg.weights))
        .collect();
    let best = select_best(&reports);
    Ok(PlanResult {
        candidates,
        rollouts,
        controls,
        reports,
        best,
    })
}
