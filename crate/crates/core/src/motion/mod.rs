//! Joint-space motion planning for one arm at a time: RRT-Connect over a
//! collision-checked configuration space, path validation, shortcutting and
//! constant-speed timing.

mod rrt;

pub use rrt::{
    distance, lerp, path_length, rrt_connect, segment_free, shortcut_waypoints, timestamps, validate_waypoints,
    ConfigSpace, RrtParams,
};

use serde::{Deserialize, Serialize};

use crate::geom::{Body, RigidTransform, Shape};
use crate::rng::substream;
use crate::robot::{finger_bodies_from_tcp, frames_unchecked, link_bodies_from_frames, Arm, DualArmModel, Joints, DOF};
use crate::world::{pair_collides, pair_mode, Holders, Role, WorldBody};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MotionError {
    #[error("invalid motion query: {0}")]
    InvalidQuery(&'static str),
    #[error("no path found within the iteration budget")]
    NoPath,
}

/// A body carried rigidly by the moving arm, posed in its TCP frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Attached {
    pub name: String,
    pub shape: Shape,
    pub local: RigidTransform,
    pub role: Role,
}

impl Attached {
    /// Attaches world bodies to a TCP at `tcp`.
    pub fn from_bodies(tcp: &RigidTransform, bodies: impl IntoIterator<Item = Body>, role: Role) -> Vec<Attached> {
        let inv = tcp.inverse();
        bodies
            .into_iter()
            .map(|b| Attached {
                name: b.name,
                shape: b.shape,
                local: inv.compose(&b.pose),
                role,
            })
            .collect()
    }
}

/// One arm moves; everything else is frozen.
#[derive(Clone, Debug)]
pub struct MotionQuery {
    pub arm: Arm,
    pub start: Joints,
    pub goal: Joints,
    pub jaw_width: f64,
    pub attached: Vec<Attached>,
    /// Static bodies: torso, the other arm, table, objects, a tool not carried.
    pub obstacles: Vec<WorldBody>,
    pub holders: Holders,
    pub params: RrtParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub arm: Arm,
    pub waypoints: Vec<Joints>,
}

/// The moving arm's configuration space for one query.
pub struct ArmSpace<'a> {
    model: &'a DualArmModel,
    query: &'a MotionQuery,
}

impl<'a> ArmSpace<'a> {
    pub fn new(model: &'a DualArmModel, query: &'a MotionQuery) -> Self {
        Self { model, query }
    }

    /// Moving bodies at `q`: links, fingers, then carried bodies.
    pub fn moving_bodies(&self, q: &Joints) -> Vec<WorldBody> {
        let arm = self.query.arm;
        let am = self.model.arm(arm);
        let frames = frames_unchecked(am, q);
        let mut out: Vec<WorldBody> = link_bodies_from_frames(am, &frames)
            .enumerate()
            .map(|(index, (name, shape, pose))| WorldBody {
                name: name.to_owned(),
                shape,
                pose,
                role: Role::Link {
                    arm,
                    index,
                    frame: am.links[index].frame,
                },
            })
            .collect();
        for (_, shape, pose) in finger_bodies_from_tcp(&self.model.gripper, &frames.tcp, self.query.jaw_width) {
            out.push(WorldBody {
                name: String::new(),
                shape,
                pose,
                role: Role::Finger { arm },
            });
        }
        for a in &self.query.attached {
            out.push(WorldBody {
                name: a.name.clone(),
                shape: a.shape,
                pose: frames.tcp.compose(&a.local),
                role: a.role,
            });
        }
        out
    }
}

impl ConfigSpace<DOF> for ArmSpace<'_> {
    fn lower(&self) -> Joints {
        self.model.arm(self.query.arm).lower()
    }

    fn upper(&self) -> Joints {
        self.model.arm(self.query.arm).upper()
    }

    fn is_free(&self, q: &Joints) -> bool {
        if !self.model.arm(self.query.arm).within_limits(q) {
            return false;
        }
        let holders = self.query.holders;
        let moving = self.moving_bodies(q);
        for (i, a) in moving.iter().enumerate() {
            for b in &self.query.obstacles {
                if pair_collides(pair_mode(a.role, b.role, holders), a, b) {
                    return false;
                }
            }
            for b in &moving[i + 1..] {
                if pair_collides(pair_mode(a.role, b.role, holders), a, b) {
                    return false;
                }
            }
        }
        true
    }
}

/// Ratio between the search resolution and the resolution committed paths
/// are re-checked at.
pub const FINE_CHECK_FACTOR: f64 = 10.0;

/// RRT-Connect followed by shortcutting, seeded from `query.params.seed`.
/// The result is valid at `validation_resolution` and at that resolution
/// divided by [`FINE_CHECK_FACTOR`]; a path that only passes the coarse check
/// is replanned at the fine resolution.
pub fn plan_arm_motion(model: &DualArmModel, query: &MotionQuery, shortcut_attempts: usize) -> Result<Path, MotionError> {
    let space = ArmSpace::new(model, query);
    let coarse = query.params.validation_resolution;
    let fine = coarse / FINE_CHECK_FACTOR;
    let valid = |w: &[Joints]| {
        validate_waypoints(&space, w, &query.start, &query.goal, coarse)
            && validate_waypoints(&space, w, &query.start, &query.goal, fine)
    };
    for resolution in [coarse, fine] {
        let params = RrtParams {
            validation_resolution: resolution,
            ..query.params.clone()
        };
        let mut rng = substream(query.params.seed, 0);
        let raw = rrt_connect(&space, &query.start, &query.goal, &params, &mut rng)?;
        let waypoints = shortcut_waypoints(&space, &raw, shortcut_attempts, resolution, &mut rng);
        if valid(&waypoints) {
            return Ok(Path { arm: query.arm, waypoints });
        }
    }
    Err(MotionError::NoPath)
}

/// Dense validity of `path` for `query` at `resolution` radians.
pub fn validate_path(model: &DualArmModel, path: &Path, query: &MotionQuery, resolution: f64) -> bool {
    path.arm == query.arm
        && validate_waypoints(&ArmSpace::new(model, query), &path.waypoints, &query.start, &query.goal, resolution)
}

/// Piecewise-linear timing with every joint at or below `max_joint_speed`.
pub fn time_parameterize(path: &Path, max_joint_speed: f64) -> Vec<(f64, Joints)> {
    timestamps(&path.waypoints, max_joint_speed)
        .into_iter()
        .zip(path.waypoints.iter().copied())
        .collect()
}
