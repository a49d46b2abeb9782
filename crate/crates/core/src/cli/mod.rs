//! Command-line driver: gendb, plan, validate, bench, render, robot.

mod bench;
mod render;

use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::graspdb::{generate_database, load_database, save_database, DbParams, ToolModel};
use crate::planner::{plan_task_traced, TaskSpec};
use crate::replay::replay;
use crate::robot::{default_dual_arm, DualArmModel};
use crate::scene::parse_scene;
use crate::trajectory::{read_trajectory, write_trajectory};

pub use bench::{run_bench, BenchEntry, BenchReport, BenchSuite};
pub use render::{render_frames, render_svg};

pub const EXIT_PLANNING_FAILURE: u8 = 2;
pub const EXIT_INPUT_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "tooltamp", version, about = "Dual-arm suction-tool task and motion planner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the grasp and handover database of a tool.
    Gendb {
        #[arg(long)]
        tool: PathBuf,
        /// Robot model file; the built-in model when omitted.
        #[arg(long)]
        robot: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Generation parameters (JSON); defaults when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Plan a scene and write the trajectory.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Return the tool to its start pose at the end.
        #[arg(long)]
        stow_tool: bool,
        /// Write the regrasp graphs that produced the plan as DOT files into this directory.
        #[arg(long)]
        dump_graph: Option<PathBuf>,
        /// Write episodes and per-phase statistics (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replay a trajectory against its scene and check it.
    Validate {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        /// Largest joint step between checked states, rad.
        #[arg(long, default_value_t = 0.02)]
        resolution: f64,
        /// Write the replay report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a benchmark suite: timings per phase and success rates per tool.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file (JSON); `<suite>/report.json` when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw top-down SVG frames of a trajectory.
    Render {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        times: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Side view (x–z) instead of top-down.
        #[arg(long)]
        side: bool,
    },
    /// Write the built-in robot model to a file.
    Robot {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Planning(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Planning(m) => f.write_str(m),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn load_robot(path: Option<&Path>) -> Result<DualArmModel, CliError> {
    match path {
        Some(p) => DualArmModel::load(p).map_err(input),
        None => Ok(default_dual_arm()),
    }
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Scene plus a database generated for the scene's tool.
pub fn load_problem(scene: &Path, db: &Path) -> Result<(TaskSpec, crate::graspdb::GraspDatabase), CliError> {
    let spec = parse_scene(scene).map_err(input)?;
    let db = load_database(db).map_err(input)?;
    if db.tool_name != spec.tool.name {
        return Err(CliError::Input(format!(
            "database is for tool `{}` but the scene uses `{}`",
            db.tool_name, spec.tool.name
        )));
    }
    Ok((spec, db))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gendb {
            tool,
            robot,
            seed,
            out,
            params,
        } => {
            let model = load_robot(robot.as_deref())?;
            let tool = ToolModel::load(&tool).map_err(input)?;
            let params: DbParams = match params {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
                }
                None => DbParams::default(),
            };
            let db = generate_database(&model, &tool, &params, seed).map_err(|e| CliError::Planning(e.to_string()))?;
            log::info!(
                "{}: {} grasps, {} handover pairs",
                db.tool_name,
                db.grasps.len(),
                db.handover_pairs.len()
            );
            save_database(&db, &out).map_err(input)
        }
        Command::Plan {
            scene,
            db,
            seed,
            out,
            stow_tool,
            dump_graph,
            report,
        } => {
            let (mut spec, db) = load_problem(&scene, &db)?;
            spec.params.stow_tool |= stow_tool;
            let graphs = RefCell::new(Vec::new());
            let result = plan_task_traced(&spec, &db, seed, dump_graph.as_ref().map(|_| &graphs));
            if let Some(dir) = &dump_graph {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
                for (label, dot) in graphs.borrow().iter() {
                    let p = dir.join(format!("{label}.dot"));
                    std::fs::write(&p, dot).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                }
            }
            let result = result.map_err(|f| CliError::Planning(f.to_string()))?;
            for e in &result.episodes {
                let s = &e.stats;
                log::info!(
                    "{}: suction {:.2}s regrasp-1 {:.2}s motion-1 {:.2}s regrasp-2 {:.2}s motion-2 {:.2}s total {:.2}s",
                    e.object,
                    s.suction,
                    s.regrasp_1,
                    s.motion_1,
                    s.regrasp_2,
                    s.motion_2,
                    s.total()
                );
            }
            write_trajectory(&result.trajectory, &out).map_err(input)?;
            if let Some(r) = report {
                write_json(&result.episodes, &r)?;
            }
            Ok(())
        }
        Command::Validate {
            traj,
            scene,
            resolution,
            report,
        } => {
            let spec = parse_scene(&scene).map_err(input)?;
            let tr = read_trajectory(&traj).map_err(input)?;
            if !(resolution > 0.0) {
                return Err(CliError::Input("resolution must be positive".into()));
            }
            let rep = replay(&spec, &tr, resolution);
            if let Some(r) = report {
                write_json(&rep, &r)?;
            }
            for v in rep.violations.iter().take(20) {
                log::error!("t = {:.3}s: {}", v.t, v.message);
            }
            for o in &rep.objects {
                log::info!(
                    "{}: {:.2e} m, {:.2e} rad from goal{}",
                    o.name,
                    o.position_error,
                    o.orientation_error,
                    if o.at_goal { "" } else { " (not at goal)" }
                );
            }
            if rep.is_valid() {
                log::info!("trajectory valid ({} states checked)", rep.states_checked);
                Ok(())
            } else {
                Err(CliError::Planning(format!(
                    "trajectory invalid: {} violations, grammar {}, all at goal {}",
                    rep.violations.len(),
                    if rep.grammar_ok { "ok" } else { "broken" },
                    rep.all_at_goal()
                )))
            }
        }
        Command::Bench { suite, reps, seed, out } => {
            let report = run_bench(&suite, reps, seed).map_err(input)?;
            eprint!("{}", report.to_text());
            let out = out.unwrap_or_else(|| suite.join("report.json"));
            write_json(&report, &out)
        }
        Command::Render {
            traj,
            scene,
            times,
            out,
            side,
        } => {
            let spec = parse_scene(&scene).map_err(input)?;
            let tr = read_trajectory(&traj).map_err(input)?;
            let files = render_frames(&spec, &tr, &times, &out, side).map_err(input)?;
            log::info!("wrote {} frames to {}", files.len(), out.display());
            Ok(())
        }
        Command::Robot { out } => default_dual_arm().save(&out).map_err(input),
    }
}

/// Parses arguments, runs, and maps errors to exit codes.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(m)) => {
            log::error!("{m}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
        Err(CliError::Planning(m)) => {
            log::error!("{m}");
            ExitCode::from(EXIT_PLANNING_FAILURE)
        }
    }
}
