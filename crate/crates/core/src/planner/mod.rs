//! Task-level orchestration: for each object in distance order, iterate its
//! suction poses, fetch the tool to the chosen pose through the tool regrasp
//! graph, then carry the tool–object complex to the goal through the complex
//! regrasp graph. Motion failures delete graph edges; missing grasps and
//! exhausted graphs advance to the next suction pose.

mod context;
mod episode;

use std::cell::RefCell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geom::{Body, RigidTransform, Shape};
use crate::graspdb::{GraspDatabase, ToolModel};
use crate::motion::RrtParams;
use crate::regrasp::{EdgeKind, Layer};
use crate::robot::{Arm, DualArmModel};
use crate::suction::{SuctionParams, SuctionPose};
use crate::trajectory::{EventKind, Trajectory};

pub use context::{filter_handover_for_attachment, ObjectState, PlanState};
use episode::EpisodePlanner;

/// Position tolerance for an object to count as placed, m.
pub const GOAL_POSITION_TOL: f64 = 1e-3;
/// Orientation tolerance for an object to count as placed, rad.
pub const GOAL_ORIENTATION_TOL: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskObject {
    pub name: String,
    pub shape: Shape,
    pub pose: RigidTransform,
    pub goal: RigidTransform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    pub rrt: RrtParams,
    pub shortcut_attempts: usize,
    /// rad/s, applied to every joint.
    pub max_joint_speed: f64,
    pub ik_restarts: usize,
    /// Suction poses tried per object before giving up.
    pub max_suction_poses: usize,
    /// Wall-clock budget per object, s.
    pub wall_clock_s: f64,
    /// Offer every facet, not only the upward-facing ones.
    pub all_facets: bool,
    /// Put the tool back at its start pose after the last object.
    pub stow_tool: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            rrt: RrtParams::default(),
            shortcut_attempts: 40,
            max_joint_speed: 1.0,
            ik_restarts: 1,
            max_suction_poses: 16,
            wall_clock_s: 120.0,
            all_facets: false,
            stow_tool: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TaskSpec {
    pub robot: DualArmModel,
    pub tool: ToolModel,
    pub tool_pose: RigidTransform,
    pub table: Body,
    pub objects: Vec<TaskObject>,
    pub suction: SuctionParams,
    pub params: PlannerParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    NoGraspAtStart,
    NoGraspAtSuction,
    NoGraspAtGoal,
    NoSequence,
    NoMotion,
    NoSuctionPose,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub object: String,
    pub kind: FailureKind,
    /// Outcome of every suction pose tried, in rank order.
    pub attempts: Vec<FailureKind>,
}

impl std::fmt::Display for TaskFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "planning failed for `{}`: {:?}", self.object, self.kind)?;
        if !self.attempts.is_empty() {
            write!(f, " (suction poses tried: {:?})", self.attempts)?;
        }
        Ok(())
    }
}

impl std::error::Error for TaskFailure {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraspRef {
    pub arm: Arm,
    pub grasp_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceStep {
    pub layer: Layer,
    pub arm: Arm,
    pub grasp_id: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub steps: Vec<SequenceStep>,
    pub kinds: Vec<EdgeKind>,
}

/// Seconds per sub-planner plus backtracking counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub suction: f64,
    pub regrasp_1: f64,
    pub motion_1: f64,
    pub regrasp_2: f64,
    pub motion_2: f64,
    pub suction_poses_tried: usize,
    pub edges_deleted: usize,
    pub searches: usize,
}

impl PhaseStats {
    pub fn total(&self) -> f64 {
        self.suction + self.regrasp_1 + self.motion_1 + self.regrasp_2 + self.motion_2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub object: String,
    pub suction: SuctionPose,
    pub tool_sequence: SequenceRecord,
    pub complex_sequence: SequenceRecord,
    pub initial_grasp: GraspRef,
    pub final_grasp: GraspRef,
    pub final_tool_pose: RigidTransform,
    pub final_object_pose: RigidTransform,
    pub stats: PhaseStats,
    /// Range of this episode's events in the trajectory.
    pub events: std::ops::Range<usize>,
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    pub episodes: Vec<Episode>,
    pub trajectory: Trajectory,
}

/// Objects by ascending distance to their goals, ties by name.
pub fn order_objects(objects: &[TaskObject]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..objects.len()).collect();
    let d = |o: &TaskObject| o.pose.distance_to(&o.goal);
    idx.sort_by(|&a, &b| {
        d(&objects[a])
            .total_cmp(&d(&objects[b]))
            .then_with(|| objects[a].name.cmp(&objects[b].name))
    });
    idx
}

/// Event string check: grasp (handover)* suction_on (handover)* place suction_off.
pub fn episode_grammar_ok(kinds: &[EventKind]) -> bool {
    let mut it = kinds.iter().peekable();
    if it.next() != Some(&EventKind::Grasp) {
        return false;
    }
    while it.peek() == Some(&&EventKind::HandoverExchange) {
        it.next();
    }
    if it.next() != Some(&EventKind::SuctionOn) {
        return false;
    }
    while it.peek() == Some(&&EventKind::HandoverExchange) {
        it.next();
    }
    it.next() == Some(&EventKind::Place) && it.next() == Some(&EventKind::SuctionOff) && it.next().is_none()
}

/// Plans every object of `spec` in order, chaining the tool grasp between
/// episodes. Deterministic for a fixed seed.
pub fn plan_task(spec: &TaskSpec, db: &GraspDatabase, seed: u64) -> Result<PlanResult, TaskFailure> {
    plan_task_traced(spec, db, seed, None)
}

/// [`plan_task`], also collecting the regrasp graphs that produced each
/// sequence as (label, DOT text).
pub fn plan_task_traced(
    spec: &TaskSpec,
    db: &GraspDatabase,
    seed: u64,
    graphs: Option<&RefCell<Vec<(String, String)>>>,
) -> Result<PlanResult, TaskFailure> {
    if db.tool_name != spec.tool.name {
        return Err(TaskFailure {
            object: String::new(),
            kind: FailureKind::NoGraspAtStart,
            attempts: vec![],
        });
    }
    let mut state = PlanState::initial(spec);
    let mut builder = state.builder();
    let mut episodes = Vec::new();
    for (k, idx) in order_objects(&spec.objects).into_iter().enumerate() {
        let started = Instant::now();
        let mut planner = EpisodePlanner::new(spec, db, crate::rng::mix(seed, k as u64 + 1), started);
        planner.graphs = graphs;
        let first_event = builder.tr.events.len();
        let (mut episode, part, next_state) = planner.plan_object(&state, idx)?;
        builder.append(&part);
        episode.events = first_event..builder.tr.events.len();
        log::info!(
            "placed {} in {:.2}s (suction poses tried: {}, edges deleted: {})",
            episode.object,
            episode.stats.total(),
            episode.stats.suction_poses_tried,
            episode.stats.edges_deleted
        );
        state = next_state;
        episodes.push(episode);
    }
    if spec.params.stow_tool {
        let planner = EpisodePlanner::new(spec, db, crate::rng::mix(seed, 0), Instant::now());
        let part = planner.stow(&state)?;
        builder.append(&part);
    }
    Ok(PlanResult {
        episodes,
        trajectory: builder.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(name: &str, d: f64) -> TaskObject {
        TaskObject {
            name: name.into(),
            shape: Shape::cuboid(0.05, 0.05, 0.05),
            pose: RigidTransform::identity(),
            goal: RigidTransform::from_translation(d, 0.0, 0.0),
        }
    }

    #[test]
    fn ordering_by_distance_then_name() {
        assert_eq!(order_objects(&[obj("a", 0.3), obj("b", 0.1), obj("c", 0.2)]), vec![1, 2, 0]);
        assert_eq!(order_objects(&[obj("z", 0.1), obj("y", 0.1)]), vec![1, 0]);
        assert_eq!(order_objects(&[obj("only", 1.0)]), vec![0]);
    }

    #[test]
    fn grammar() {
        use EventKind::*;
        assert!(episode_grammar_ok(&[Grasp, SuctionOn, Place, SuctionOff]));
        assert!(episode_grammar_ok(&[Grasp, HandoverExchange, SuctionOn, HandoverExchange, HandoverExchange, Place, SuctionOff]));
        assert!(!episode_grammar_ok(&[SuctionOn, Place, SuctionOff]));
        assert!(!episode_grammar_ok(&[Grasp, SuctionOn, SuctionOff, Place]));
        assert!(!episode_grammar_ok(&[Grasp, SuctionOn, Place, SuctionOff, Release]));
    }
}
