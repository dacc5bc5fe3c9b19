//! Experiment presets: the configuration sets behind each results table
//! and chart.

use crate::behavior::Modality;
use crate::planner::PlannerKind;
use crate::simulator::{Mode, SimConfig};

pub const TABLE3_GRID: [usize; 6] = [15, 20, 25, 30, 45, 60];
pub const FIG4A_GRID: [usize; 6] = [1, 3, 6, 9, 12, 15];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Centerline planner under every mode and prediction modality.
    Table1,
    /// Spline-fitting planner across proposal budgets, plus the centerline
    /// planner at the largest budget.
    Table3,
    /// Centerline planner with reduced proposal budgets.
    Fig4a,
    /// Planner runtime across proposal budgets.
    Fig4b,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table3 => "table3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
        }
    }

    /// Simulation configurations, in output order. Empty for the runtime
    /// preset, which measures instead of scoring.
    pub fn configs(self, seed: u64) -> Vec<SimConfig> {
        let with_seed = |mut c: SimConfig| {
            c.seed = seed;
            c
        };
        let configs: Vec<SimConfig> = match self {
            Preset::Table1 => {
                let mut v = Vec::new();
                for mode in [Mode::ClosedNonReactive, Mode::ClosedReactive, Mode::OpenLoop] {
                    for modality in [Modality::ConstantVelocity, Modality::Perfect, Modality::None] {
                        v.push(SimConfig::new(mode, PlannerKind::Pdm, modality, 15));
                    }
                }
                v.push(SimConfig::new(Mode::ClosedReactive, PlannerKind::Spdm, Modality::Perfect, 15));
                v
            }
            Preset::Table3 => TABLE3_GRID
                .iter()
                .map(|&n| SimConfig::new(Mode::ClosedReactive, PlannerKind::Spdm, Modality::ConstantVelocity, n))
                .chain(std::iter::once(SimConfig::new(
                    Mode::ClosedReactive,
                    PlannerKind::Pdm,
                    Modality::ConstantVelocity,
                    60,
                )))
                .collect(),
            Preset::Fig4a => FIG4A_GRID
                .iter()
                .map(|&n| SimConfig::new(Mode::ClosedNonReactive, PlannerKind::Pdm, Modality::ConstantVelocity, n))
                .collect(),
            Preset::Fig4b => Vec::new(),
        };
        configs.into_iter().map(with_seed).collect()
    }
}
