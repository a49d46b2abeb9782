use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::graspdb::load_database;
use crate::planner::{plan_task, PhaseStats};
use crate::replay::replay;
use crate::scene::parse_scene;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntry {
    pub name: String,
    /// Paths relative to the suite file.
    pub scene: PathBuf,
    pub db: PathBuf,
    /// Label grouping entries for success rates; the tool name when absent.
    #[serde(default)]
    pub tool: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSuite {
    pub entries: Vec<BenchEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectTiming {
    pub entry: String,
    pub object: String,
    pub runs: usize,
    pub mean: PhaseStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub entry: String,
    pub seed: u64,
    pub success: bool,
    pub wall_s: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolRate {
    pub tool: String,
    pub runs: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub runs: Vec<RunOutcome>,
    pub timings: Vec<ObjectTiming>,
    pub tools: Vec<ToolRate>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Suite(String, #[source] serde_json::Error),
    #[error("entry `{0}`: {1}")]
    Entry(String, String),
}

fn add(a: &mut PhaseStats, b: &PhaseStats) {
    a.suction += b.suction;
    a.regrasp_1 += b.regrasp_1;
    a.motion_1 += b.motion_1;
    a.regrasp_2 += b.regrasp_2;
    a.motion_2 += b.motion_2;
    a.suction_poses_tried += b.suction_poses_tried;
    a.edges_deleted += b.edges_deleted;
    a.searches += b.searches;
}

fn scale(a: &PhaseStats, n: usize) -> PhaseStats {
    let f = 1.0 / n.max(1) as f64;
    let d = n.max(1);
    PhaseStats {
        suction: a.suction * f,
        regrasp_1: a.regrasp_1 * f,
        motion_1: a.motion_1 * f,
        regrasp_2: a.regrasp_2 * f,
        motion_2: a.motion_2 * f,
        suction_poses_tried: a.suction_poses_tried / d,
        edges_deleted: a.edges_deleted / d,
        searches: a.searches / d,
    }
}

/// Plans every entry `reps` times with seeds `seed, seed+1, ...`. A run
/// succeeds when planning succeeds and the replay finds the result valid.
pub fn run_bench(suite_path: &Path, reps: usize, seed: u64) -> Result<BenchReport, BenchError> {
    let path = if suite_path.is_dir() {
        suite_path.join("suite.json")
    } else {
        suite_path.to_path_buf()
    };
    let text = std::fs::read_to_string(&path).map_err(|e| BenchError::Io(path.display().to_string(), e))?;
    let suite: BenchSuite =
        serde_json::from_str(&text).map_err(|e| BenchError::Suite(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut runs = Vec::new();
    let mut sums: BTreeMap<(usize, String), (usize, PhaseStats)> = BTreeMap::new();
    let mut rates: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (ei, entry) in suite.entries.iter().enumerate() {
        let err = |m: String| BenchError::Entry(entry.name.clone(), m);
        let spec = parse_scene(&base.join(&entry.scene)).map_err(|e| err(e.to_string()))?;
        let db = load_database(&base.join(&entry.db)).map_err(|e| err(e.to_string()))?;
        let tool = entry.tool.clone().unwrap_or_else(|| spec.tool.name.clone());
        for rep in 0..reps {
            let s = seed.wrapping_add(rep as u64);
            let start = Instant::now();
            let result = plan_task(&spec, &db, s);
            let wall_s = start.elapsed().as_secs_f64();
            let (success, failure) = match &result {
                Ok(r) => {
                    for e in &r.episodes {
                        let slot = sums.entry((ei, e.object.clone())).or_default();
                        slot.0 += 1;
                        add(&mut slot.1, &e.stats);
                    }
                    let rep = replay(&spec, &r.trajectory, 0.02);
                    if rep.is_valid() {
                        (true, None)
                    } else {
                        (false, Some(format!("replay: {} violations", rep.violations.len())))
                    }
                }
                Err(f) => (false, Some(f.to_string())),
            };
            log::info!(
                "{} seed {s}: {} in {wall_s:.1}s",
                entry.name,
                if success { "ok" } else { "failed" }
            );
            let r = rates.entry(tool.clone()).or_default();
            r.0 += 1;
            r.1 += success as usize;
            runs.push(RunOutcome {
                entry: entry.name.clone(),
                seed: s,
                success,
                wall_s,
                failure,
            });
        }
    }
    let timings = sums
        .into_iter()
        .map(|((ei, object), (n, sum))| ObjectTiming {
            entry: suite.entries[ei].name.clone(),
            object,
            runs: n,
            mean: scale(&sum, n),
        })
        .collect();
    let tools = rates
        .into_iter()
        .map(|(tool, (runs, successes))| ToolRate {
            tool,
            runs,
            successes,
            rate: successes as f64 / runs.max(1) as f64,
        })
        .collect();
    Ok(BenchReport { runs, timings, tools })
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:<10} {:>4} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "entry", "object", "runs", "suction", "regr-1", "motion-1", "regr-2", "motion-2", "total"
        );
        for t in &self.timings {
            let m = &t.mean;
            let _ = writeln!(
                out,
                "{:<24} {:<10} {:>4} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
                t.entry,
                t.object,
                t.runs,
                m.suction,
                m.regrasp_1,
                m.motion_1,
                m.regrasp_2,
                m.motion_2,
                m.total()
            );
        }
        out.push('\n');
        for r in &self.tools {
            let _ = writeln!(
                out,
                "{:<24} {}/{} succeeded ({:.0}%)",
                r.tool,
                r.successes,
                r.runs,
                100.0 * r.rate
            );
        }
        out
    }
}
