//! Closed- and open-loop scenario execution and suite running.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{predict, AgentLog, Modality, ObstacleTrack, PredictedAgent, PredictionSet, Scene};
use crate::dynamics::{bicycle_step, AgentState, Control, EgoState, Trajectory, DT, HORIZON, HORIZON_STEPS};
use crate::error::{Error, Result};
use crate::map::{extract_route_lanes, LaneGraph, LaneId};
use crate::planner::{plan, PlanResult, PlannerConfig, PlannerKind};
use crate::results::{ResultRow, Status};
use crate::scenario::Scenario;
use crate::scoring::{score_trajectory, ScoreReport, ScoringContext};
use crate::tracking::ReferenceTracker;

/// Environment variable capping suite parallelism.
pub const THREADS_ENV: &str = "SPDM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ClosedReactive,
    ClosedNonReactive,
    OpenLoop,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ClosedReactive => "r",
            Mode::ClosedNonReactive => "nr",
            Mode::OpenLoop => "ol",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: Mode,
    pub planner: PlannerKind,
    pub modality: Modality,
    pub n_p: usize,
    pub replan_period: f64,
    /// Overrides the scenario's own duration.
    pub duration: Option<f64>,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(mode: Mode, planner: PlannerKind, modality: Modality, n_p: usize) -> Self {
        Self {
            mode,
            planner,
            modality,
            n_p,
            replan_period: 0.5,
            duration: None,
            seed: 0,
        }
    }

    fn check(&self) -> Result<usize> {
        if self.modality == Modality::Perfect && self.mode == Mode::ClosedReactive {
            return Err(Error::IncompatibleConfig(format!(
                "{} planner cannot use perfect predictions in reactive closed loop",
                self.planner.as_str()
            )));
        }
        if self.n_p == 0 {
            return Err(Error::IncompatibleConfig("proposal budget must be at least 1".into()));
        }
        let ratio = self.replan_period / DT;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::IncompatibleConfig(format!(
                "replan period {} s is not a multiple of {DT} s",
                self.replan_period
            )));
        }
        Ok(ratio.round() as usize)
    }
}

/// One line of the tick log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: usize,
    pub time: f64,
    pub ego: EgoState,
    /// Control applied during this tick; absent on the final record.
    pub control: Option<Control>,
    pub agents: Vec<AgentState>,
    pub replanned: bool,
    /// Index of the executed candidate in the most recent replan.
    pub selected: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TickLog {
    pub records: Vec<TickRecord>,
}

impl TickLog {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { records })
    }

    pub fn ego_trajectory(&self) -> Trajectory {
        Trajectory::new(DT, self.records.iter().map(|r| r.ego.sample()).collect())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ScoreReport,
    pub log: TickLog,
    /// Wall-clock seconds spent inside the planner.
    pub planning_seconds: f64,
    pub replans: usize,
}

/// Route lanes from `lane`, or just `lane` when the goal is unreachable.
fn route_from(graph: &LaneGraph, lane: &LaneId) -> Vec<LaneId> {
    extract_route_lanes(graph, lane).unwrap_or_else(|_| vec![lane.clone()])
}

fn planner_config(scenario: &Scenario, config: &SimConfig) -> PlannerConfig {
    let mut cfg = PlannerConfig::new(config.planner, config.n_p);
    cfg.interactive = scenario.is_interactive();
    cfg.idm = scenario.idm;
    cfg
}

/// Logged futures of every agent over the planning horizon from `tick`,
/// used to score open-loop plans.
fn logged_futures(agents: &[AgentState], logs: &[AgentLog], tick: usize) -> PredictionSet {
    PredictionSet {
        modality: Modality::Perfect,
        agents: agents
            .iter()
            .zip(logs)
            .map(|(a, log)| PredictedAgent {
                id: a.id.clone(),
                current: a.position(),
                future: (1..=HORIZON_STEPS).map(|k| log.pose(tick + k).position()).collect(),
            })
            .collect(),
    }
}

fn mean_report(reports: &[ScoreReport]) -> ScoreReport {
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&ScoreReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    ScoreReport {
        no_at_fault_collision: mean(&|r| r.no_at_fault_collision),
        drivable_area: mean(&|r| r.drivable_area),
        driving_direction: mean(&|r| r.driving_direction),
        making_progress: mean(&|r| r.making_progress),
        ttc: mean(&|r| r.ttc),
        progress: mean(&|r| r.progress),
        speed_limit: mean(&|r| r.speed_limit),
        comfort: mean(&|r| r.comfort),
        lane_changes_to_goal: reports[0]
            .lane_changes_to_goal
            .map(|_| mean(&|r| r.lane_changes_to_goal.unwrap_or(0.0))),
        composite: mean(&|r| r.composite),
    }
}

/// Simulates one scenario under `config`.
///
/// Every replan period the planner sees fresh predictions and picks a
/// plan; every tick the ego tracks the latest plan (closed loop) or
/// replays its controls exactly (open loop), then the agents advance.
pub fn run_scenario(scenario: &Scenario, config: &SimConfig) -> Result<RunOutput> {
    let replan_every = config.check()?;
    let reactive = config.mode == Mode::ClosedReactive;
    let open_loop = config.mode == Mode::OpenLoop;
    let duration = config.duration.unwrap_or(scenario.duration);
    let steps = (duration / DT).round() as usize;
    let graph = &scenario.graph;
    let pcfg = planner_config(scenario, config);
    let interactive = scenario.is_interactive();

    let mut ego = scenario.ego.clone();
    let mut agents = scenario.agents.clone();
    let mut records = Vec::with_capacity(steps + 1);
    let mut agent_history = vec![agents.clone()];
    let mut current: Option<(PlanResult, usize)> = None;
    let mut ol_reports = Vec::new();
    let mut planning_seconds = 0.0;
    let mut replans = 0;

    for tick in 0..steps {
        if let Some((lane, _, _)) = graph.match_lane(ego.position(), ego.theta) {
            ego.lane = lane.id.clone();
        }
        let replanned = tick % replan_every == 0 || current.is_none();
        if replanned {
            let scene = Scene {
                ego: &ego,
                ego_params: &pcfg.params,
                agents: &agents,
                logs: &scenario.logs,
                paths: &scenario.paths,
                tick,
                idm: &scenario.idm,
            };
            let previous = current.as_ref().map(|(p, at)| p.plan().shifted(tick - at));
            let preds = predict(&scene, config.modality, previous.as_ref(), reactive)?;
            let obstacles = ObstacleTrack::from_predictions(&preds, &agents);
            let route = route_from(graph, &ego.lane);
            let started = Instant::now();
            let result = plan(&ego, graph, &route, &obstacles, &pcfg)?;
            planning_seconds += started.elapsed().as_secs_f64();
            replans += 1;
            if open_loop {
                let truth = ObstacleTrack::from_predictions(&logged_futures(&agents, &scenario.logs, tick), &agents);
                let ctx = ScoringContext::new(graph, &route, pcfg.params);
                let reference = scenario.reference_progress * HORIZON / duration;
                ol_reports.push(score_trajectory(result.plan(), &truth, &ctx, reference, interactive));
            }
            current = Some((result, tick));
        }
        let (result, planned_at) = current.as_ref().expect("plan exists after replanning");
        let elapsed = tick - planned_at;
        let control = if open_loop {
            result.plan_controls()[elapsed.min(result.plan_controls().len() - 1)]
        } else {
            let tracker = ReferenceTracker::new(result.plan(), &pcfg.params, &pcfg.gains);
            tracker.control_at(elapsed, &ego)
        };
        let scene = Scene {
            ego: &ego,
            ego_params: &pcfg.params,
            agents: &agents,
            logs: &scenario.logs,
            paths: &scenario.paths,
            tick,
            idm: &scenario.idm,
        };
        let next_agents = scene.step_agents(&ego, &agents, tick, reactive)?;
        let next_ego = bicycle_step(&ego, control.accel, control.steering, DT, &pcfg.params);
        records.push(TickRecord {
            tick,
            time: tick as f64 * DT,
            ego: ego.clone(),
            control: Some(control),
            agents: agents.clone(),
            replanned,
            selected: Some(result.best),
        });
        ego = next_ego;
        agents = next_agents;
        agent_history.push(agents.clone());
    }
    if let Some((lane, _, _)) = graph.match_lane(ego.position(), ego.theta) {
        ego.lane = lane.id.clone();
    }
    records.push(TickRecord {
        tick: steps,
        time: steps as f64 * DT,
        ego,
        control: None,
        agents,
        replanned: false,
        selected: current.as_ref().map(|(r, _)| r.best),
    });
    let log = TickLog { records };

    let report = if open_loop {
        mean_report(&ol_reports)
    } else {
        let route = route_from(graph, &scenario.ego.lane);
        let ctx = ScoringContext::new(graph, &route, pcfg.params);
        let obstacles = ObstacleTrack::from_history(&agent_history);
        score_trajectory(&log.ego_trajectory(), &obstacles, &ctx, scenario.reference_progress, interactive)
    };
    Ok(RunOutput {
        report,
        log,
        planning_seconds,
        replans,
    })
}

/// A results row for one run; failures become `na` or `error` rows.
pub fn run_row(scenario: &Scenario, config: &SimConfig) -> ResultRow {
    let mut row = ResultRow {
        scenario_id: scenario.id.clone(),
        tags: scenario.tags.join(";"),
        mode: config.mode.as_str().into(),
        planner: config.planner.as_str().into(),
        modality: config.modality.as_str().into(),
        n_p: config.n_p,
        seed: config.seed,
        status: Status::Ok,
        composite: None,
        no_at_fault_collision: None,
        drivable_area: None,
        driving_direction: None,
        making_progress: None,
        ttc: None,
        progress: None,
        speed_limit: None,
        comfort: None,
        lane_changes_to_goal: None,
        wall_time_s: None,
    };
    match run_scenario(scenario, config) {
        Ok(out) => row.fill_report(&out.report),
        Err(Error::IncompatibleConfig(_)) => row.status = Status::Na,
        Err(e) => {
            eprintln!("scenario {} ({}): {e}", scenario.id, config.mode.as_str());
            row.status = Status::Error;
        }
    }
    row
}

fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Runs every (scenario, config) pair; rows come back in scenario-major,
/// then config order regardless of scheduling.
pub fn run_suite(scenarios: &[Scenario], configs: &[SimConfig]) -> Vec<ResultRow> {
    let jobs: Vec<(&Scenario, &SimConfig)> = scenarios
        .iter()
        .flat_map(|s| configs.iter().map(move |c| (s, c)))
        .collect();
    thread_pool().install(|| jobs.par_iter().map(|(s, c)| run_row(s, c)).collect())
}

/// Runs used per runtime measurement; the fastest is kept.
pub const RUNTIME_REPEATS: usize = 3;
/// Simulated seconds per runtime measurement (ten replans).
pub const RUNTIME_DURATION: f64 = 5.0;

/// Mean planner seconds per replan for each budget in `grid`, the minimum
/// over `RUNTIME_REPEATS` non-reactive runs.
pub fn measure_runtime(scenario: &Scenario, planner: PlannerKind, grid: &[usize]) -> Result<Vec<(usize, f64)>> {
    grid.iter()
        .map(|&n_p| {
            let mut config = SimConfig::new(Mode::ClosedNonReactive, planner, Modality::ConstantVelocity, n_p);
            config.duration = Some(RUNTIME_DURATION.min(scenario.duration));
            let mut best = f64::INFINITY;
            for _ in 0..RUNTIME_REPEATS {
                let out = run_scenario(scenario, &config)?;
                best = best.min(out.planning_seconds / out.replans.max(1) as f64);
            }
            Ok((n_p, best))
        })
        .collect()
}
