use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use spdm::behavior::Modality;
use spdm::planner::PlannerKind;
use spdm::plot::{emit_plot, PlotKind};
use spdm::presets::{Preset, TABLE3_GRID};
use spdm::results::{mean_composite, write_results, ResultRow, Status};
use spdm::scenario::{load_scenario, validate, Scenario};
use spdm::simulator::{measure_runtime, run_row, run_scenario, run_suite, Mode, SimConfig};
use spdm::suite_gen::{generate_suite, load_dir, runtime_scenario, write_suite, SuiteKind};

#[derive(Parser)]
#[command(name = "spdm", version, about = "Closed-loop motion-planning benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerArg {
    Pdm,
    Spdm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Nr,
    R,
    Ol,
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictionArg {
    Cv,
    Perfect,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Table1,
    Table3,
    Fig4a,
    Fig4b,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Common,
    Interactive,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario under one configuration.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        planner: PlannerArg,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, value_enum)]
        predictions: PredictionArg,
        #[arg(long)]
        proposals: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ticklog: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a preset over every scenario in a directory.
    Suite {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_enum)]
        preset: PresetArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plots: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic scenario suite.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Wide-road scenarios measured by the runtime preset when the directory
/// holds none tagged `runtime`.
const RUNTIME_SCENARIOS: u64 = 10;
const RUNTIME_LANES: usize = 10;

fn main() -> ExitCode {
    match try_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn all_succeeded(rows: &[ResultRow]) -> bool {
    rows.iter().all(|r| r.status.is_success())
}

fn try_main() -> anyhow::Result<bool> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            planner,
            mode,
            predictions,
            proposals,
            out,
            ticklog,
            seed,
        } => {
            let (_, scenario) =
                load_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let mut config = SimConfig::new(mode.into(), planner.into(), predictions.into(), proposals);
            config.seed = seed;
            let row = run_row(&scenario, &config);
            if let Some(path) = ticklog {
                if row.status == Status::Ok {
                    run_scenario(&scenario, &config)?.log.save(&path)?;
                }
            }
            print_summary(std::slice::from_ref(&row));
            write_results(std::slice::from_ref(&row), &out)?;
            Ok(row.status.is_success())
        }
        Command::Suite {
            dir,
            preset,
            out,
            plots,
            seed,
        } => {
            let preset: Preset = preset.into();
            let rows = if preset == Preset::Fig4b {
                runtime_rows(&dir, seed)?
            } else {
                let scenarios = load_dir(&dir).with_context(|| format!("loading suite {}", dir.display()))?;
                if scenarios.is_empty() {
                    bail!("no scenarios in {}", dir.display());
                }
                run_suite(&scenarios, &preset.configs(seed))
            };
            write_results(&rows, &out)?;
            print_summary(&rows);
            if let Some(plot_dir) = plots {
                std::fs::create_dir_all(&plot_dir)?;
                write_plots(preset, &rows, &plot_dir)?;
            }
            Ok(all_succeeded(&rows))
        }
        Command::Gen { kind, count, seed, dir } => {
            if count == 0 {
                bail!("--count must be at least 1");
            }
            let files = generate_suite(kind.into(), count, seed);
            for f in &files {
                validate(f).with_context(|| format!("generated scenario {}", f.id))?;
            }
            let paths = write_suite(&files, &dir)?;
            println!("wrote {} scenarios to {}", paths.len(), dir.display());
            Ok(true)
        }
    }
}

fn runtime_rows(dir: &Path, seed: u64) -> anyhow::Result<Vec<ResultRow>> {
    let tagged: Vec<Scenario> = if dir.is_dir() {
        load_dir(dir)?
            .into_iter()
            .filter(|s| s.tags.iter().any(|t| t == "runtime"))
            .collect()
    } else {
        Vec::new()
    };
    let scenarios = if tagged.is_empty() {
        (0..RUNTIME_SCENARIOS)
            .map(|i| validate(&runtime_scenario(RUNTIME_LANES, seed.wrapping_add(i))))
            .collect::<spdm::Result<Vec<_>>>()?
    } else {
        tagged
    };
    let mut totals = vec![0.0; TABLE3_GRID.len()];
    for s in &scenarios {
        for (i, (_, secs)) in measure_runtime(s, PlannerKind::Spdm, &TABLE3_GRID)?.into_iter().enumerate() {
            totals[i] += secs;
        }
    }
    Ok(TABLE3_GRID
        .iter()
        .zip(totals)
        .map(|(&n_p, total)| ResultRow {
            scenario_id: format!("mean_of_{}", scenarios.len()),
            tags: "runtime".into(),
            mode: Mode::ClosedNonReactive.as_str().into(),
            planner: PlannerKind::Spdm.as_str().into(),
            modality: Modality::ConstantVelocity.as_str().into(),
            n_p,
            seed,
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
            wall_time_s: Some(total / scenarios.len() as f64),
        })
        .collect())
}

fn write_plots(preset: Preset, rows: &[ResultRow], dir: &Path) -> anyhow::Result<()> {
    let (kind, name) = match preset {
        Preset::Table1 => (PlotKind::ModalityBars, "modality_bars.svg"),
        Preset::Table3 | Preset::Fig4a => (PlotKind::NpSweep, "np_sweep.svg"),
        Preset::Fig4b => (PlotKind::Runtime, "runtime.svg"),
    };
    emit_plot(rows, kind, &dir.join(name))?;
    Ok(())
}

/// Prints the mean composite per configuration.
fn print_summary(rows: &[ResultRow]) {
    let mut keys: Vec<(String, String, String, usize)> = Vec::new();
    for r in rows {
        let k = (r.mode.clone(), r.planner.clone(), r.modality.clone(), r.n_p);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    for (mode, planner, modality, n_p) in keys {
        let group: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.mode == mode && r.planner == planner && r.modality == modality && r.n_p == n_p)
            .collect();
        let label = format!("{mode:>2} {planner:<4} {modality:<7} N_p={n_p:<3}");
        if let Some(t) = group.iter().find_map(|r| r.wall_time_s) {
            println!("{label} {:.6} s/replan", t);
        } else if group.iter().all(|r| r.status == Status::Na) {
            println!("{label} N/A");
        } else {
            let errors = group.iter().filter(|r| r.status == Status::Error).count();
            match mean_composite(group.iter().copied()) {
                Some(m) => println!("{label} mean composite {m:7.2} over {} rows ({errors} errors)", group.len()),
                None => println!("{label} no scored rows ({errors} errors)"),
            }
        }
    }
}

impl From<PlannerArg> for PlannerKind {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::Pdm => PlannerKind::Pdm,
            PlannerArg::Spdm => PlannerKind::Spdm,
        }
    }
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Nr => Mode::ClosedNonReactive,
            ModeArg::R => Mode::ClosedReactive,
            ModeArg::Ol => Mode::OpenLoop,
        }
    }
}

impl From<PredictionArg> for Modality {
    fn from(p: PredictionArg) -> Self {
        match p {
            PredictionArg::Cv => Modality::ConstantVelocity,
            PredictionArg::Perfect => Modality::Perfect,
            PredictionArg::None => Modality::None,
        }
    }
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Table1 => Preset::Table1,
            PresetArg::Table3 => Preset::Table3,
            PresetArg::Fig4a => Preset::Fig4a,
            PresetArg::Fig4b => Preset::Fig4b,
        }
    }
}

impl From<KindArg> for SuiteKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Common => SuiteKind::Common,
            KindArg::Interactive => SuiteKind::Interactive,
        }
    }
}
