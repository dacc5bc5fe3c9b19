//! Results table: one row per (scenario, configuration) run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scoring::ScoreReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Na,
    Error,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(self, Status::Ok | Status::Na)
    }
}

/// Column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    /// Scenario tags joined with `;`.
    pub tags: String,
    pub mode: String,
    pub planner: String,
    pub modality: String,
    pub n_p: usize,
    pub seed: u64,
    pub status: Status,
    pub composite: Option<f64>,
    pub no_at_fault_collision: Option<f64>,
    pub drivable_area: Option<f64>,
    pub driving_direction: Option<f64>,
    pub making_progress: Option<f64>,
    pub ttc: Option<f64>,
    pub progress: Option<f64>,
    pub speed_limit: Option<f64>,
    pub comfort: Option<f64>,
    pub lane_changes_to_goal: Option<f64>,
    /// Left empty by suite runs so that repeated runs stay byte-identical.
    pub wall_time_s: Option<f64>,
}

pub const HEADER: [&str; 19] = [
    "scenario_id",
    "tags",
    "mode",
    "planner",
    "modality",
    "n_p",
    "seed",
    "status",
    "composite",
    "no_at_fault_collision",
    "drivable_area",
    "driving_direction",
    "making_progress",
    "ttc",
    "progress",
    "speed_limit",
    "comfort",
    "lane_changes_to_goal",
    "wall_time_s",
];

impl ResultRow {
    pub fn fill_report(&mut self, r: &ScoreReport) {
        self.composite = Some(r.composite);
        self.no_at_fault_collision = Some(r.no_at_fault_collision);
        self.drivable_area = Some(r.drivable_area);
        self.driving_direction = Some(r.driving_direction);
        self.making_progress = Some(r.making_progress);
        self.ttc = Some(r.ttc);
        self.progress = Some(r.progress);
        self.speed_limit = Some(r.speed_limit);
        self.comfort = Some(r.comfort);
        self.lane_changes_to_goal = r.lane_changes_to_goal;
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.split(';').any(|t| t == tag)
    }
}

pub fn write_results_to<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_results_to(rows, std::fs::File::create(path)?)
}

pub fn read_results_from<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    read_results_from(std::fs::File::open(path)?)
}

/// Mean composite over `ok` rows; `None` when there are none.
pub fn mean_composite<'a>(rows: impl IntoIterator<Item = &'a ResultRow>) -> Option<f64> {
    mean_of(rows, |r| r.composite)
}

/// Mean of a column over `ok` rows that have a value.
pub fn mean_of<'a>(
    rows: impl IntoIterator<Item = &'a ResultRow>,
    column: impl Fn(&ResultRow) -> Option<f64>,
) -> Option<f64> {
    let (sum, n) = rows
        .into_iter()
        .filter(|r| r.status == Status::Ok)
        .filter_map(|r| column(r))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
