//! Scene files: table, objects with goals, the tool and its start pose, and
//! optional robot, suction and planner settings.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geom::{shape_distance, shapes_penetrate, Body, RigidTransform, Shape};
use crate::graspdb::ToolModel;
use crate::planner::{PlannerParams, TaskObject, TaskSpec};
use crate::robot::{default_dual_arm, DualArmModel, Units};
use crate::suction::SuctionParams;
use crate::world::{Role, World};

pub const SCENE_FORMAT_VERSION: u32 = 1;
/// Resting contact slack for support checks, m.
pub const SUPPORT_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub format_version: u32,
    #[serde(default)]
    pub units: Units,
    /// Robot model path relative to the scene file; the built-in model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<PathBuf>,
    /// Tool model path relative to the scene file.
    pub tool: PathBuf,
    pub tool_pose: RigidTransform,
    pub table: Body,
    pub objects: Vec<TaskObject>,
    /// Suction sampling; defaults use the tool's pad radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suction: Option<SuctionParams>,
    #[serde(default)]
    pub planner: PlannerParams,
}

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("scene schema error: {0}")]
    Schema(String),
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error(transparent)]
    Robot(#[from] crate::robot::RobotError),
    #[error(transparent)]
    Tool(#[from] crate::graspdb::GraspDbError),
}

/// Lowest and highest world z of a placed shape.
pub fn z_range(shape: &Shape, pose: &RigidTransform) -> (f64, f64) {
    let up = pose.rotation.inverse_transform_vector(&Vector3::z());
    let top = pose.transform_point(&shape.core_support(&up)).z + shape.core_radius();
    let bottom = pose.transform_point(&shape.core_support(&-up)).z - shape.core_radius();
    (bottom, top)
}

fn resting_on(shape: &Shape, pose: &RigidTransform, support: &Shape, spose: &RigidTransform) -> bool {
    let bottom = z_range(shape, pose).0;
    let top = z_range(support, spose).1;
    (bottom - top).abs() <= SUPPORT_TOLERANCE && shape_distance(shape, pose, support, spose) <= SUPPORT_TOLERANCE
}

pub fn parse_scene(path: &Path) -> Result<TaskSpec, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    scene_from_str(&text, base).map_err(|e| match e {
        SceneError::Schema(m) => SceneError::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses and validates scene text; relative file references resolve against `base`.
pub fn scene_from_str(text: &str, base: &Path) -> Result<TaskSpec, SceneError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: SceneFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        SceneError::Schema(format!("at `{field}`: {}", e.inner()))
    })?;
    let robot = match &file.robot {
        Some(p) => DualArmModel::load(&base.join(p))?,
        None => default_dual_arm(),
    };
    let tool = ToolModel::load(&base.join(&file.tool))?;
    let spec = TaskSpec {
        suction: file.suction.clone().unwrap_or_else(|| SuctionParams::with_pad(tool.pad_radius)),
        robot,
        tool,
        tool_pose: file.tool_pose,
        table: file.table.clone(),
        objects: file.objects.clone(),
        params: file.planner.clone(),
    };
    if file.format_version != SCENE_FORMAT_VERSION {
        return Err(SceneError::Schema(format!("unsupported format_version {}", file.format_version)));
    }
    if !file.units.is_si() {
        return Err(SceneError::Schema("units must be m/rad/s".into()));
    }
    validate_spec(&spec)?;
    Ok(spec)
}

/// Scene invariants: unique names, valid shapes, no interpenetration, every
/// object resting on the table or another object, goals above the table and
/// clear of each other, and the robot at home clear of everything.
pub fn validate_spec(spec: &TaskSpec) -> Result<(), SceneError> {
    let bad = |m: String| Err(SceneError::Validation(m));
    if spec.objects.is_empty() {
        return bad("scene has no objects".into());
    }
    let mut names = std::collections::BTreeSet::new();
    names.insert(spec.table.name.as_str());
    for o in &spec.objects {
        if !names.insert(o.name.as_str()) {
            return bad(format!("duplicate body name `{}`", o.name));
        }
        if !o.shape.is_valid() {
            return bad(format!("object `{}` has a non-positive dimension", o.name));
        }
    }
    if !spec.table.shape.is_valid() {
        return bad("table has a non-positive dimension".into());
    }
    let table_top = z_range(&spec.table.shape, &spec.table.pose).1;
    let t = &spec.table;
    for (i, o) in spec.objects.iter().enumerate() {
        if shapes_penetrate(&o.shape, &o.pose, &t.shape, &t.pose) {
            return bad(format!("object `{}` penetrates the table", o.name));
        }
        for p in &spec.objects[i + 1..] {
            if shapes_penetrate(&o.shape, &o.pose, &p.shape, &p.pose) {
                return bad(format!("objects `{}` and `{}` interpenetrate", o.name, p.name));
            }
            if shapes_penetrate(&o.shape, &o.goal, &p.shape, &p.goal) {
                return bad(format!("goals of `{}` and `{}` interpenetrate", o.name, p.name));
            }
        }
        let supported = resting_on(&o.shape, &o.pose, &t.shape, &t.pose)
            || spec
                .objects
                .iter()
                .filter(|p| p.name != o.name)
                .any(|p| resting_on(&o.shape, &o.pose, &p.shape, &p.pose));
        if !supported {
            let (bottom, _) = z_range(&o.shape, &o.pose);
            let what = if bottom < table_top - SUPPORT_TOLERANCE { "is below the table" } else { "is floating" };
            return bad(format!("object `{}` {what} (bottom at z = {bottom:.4})", o.name));
        }
        if z_range(&o.shape, &o.goal).0 < table_top - SUPPORT_TOLERANCE
            || shapes_penetrate(&o.shape, &o.goal, &t.shape, &t.pose)
        {
            return bad(format!("goal of `{}` is below the table top", o.name));
        }
    }
    for part in spec.tool.bodies(&spec.tool_pose) {
        for o in spec.objects.iter().map(|o| Body::new(o.name.clone(), o.shape, o.pose)).chain([t.clone()]) {
            if shapes_penetrate(&part.shape, &part.pose, &o.shape, &o.pose) {
                return bad(format!("tool part `{}` penetrates `{}`", part.name, o.name));
            }
        }
    }
    let mut w = World::new();
    w.add_robot(&spec.robot, &spec.robot.home(), [spec.robot.gripper.stroke; 2]);
    w.add_bodies([t.clone()], Role::Table);
    w.add_bodies(spec.objects.iter().map(|o| Body::new(o.name.clone(), o.shape, o.pose)), Role::Object);
    w.add_bodies(spec.tool.bodies(&spec.tool_pose), Role::Tool);
    if let Some((a, b)) = w.first_collision() {
        return bad(format!("`{a}` collides with `{b}` with the robot at home"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_range_of_rotated_box() {
        let s = Shape::cuboid(0.1, 0.2, 0.3);
        let p = RigidTransform::rot_x(std::f64::consts::FRAC_PI_2).with_position(Vector3::new(0.0, 0.0, 1.0));
        let (lo, hi) = z_range(&s, &p);
        assert!((lo - 0.8).abs() < 1e-12 && (hi - 1.2).abs() < 1e-12);
        let c = Shape::capsule(0.05, 0.2);
        let (lo, hi) = z_range(&c, &RigidTransform::identity());
        assert!((lo + 0.15).abs() < 1e-12 && (hi - 0.15).abs() < 1e-12);
    }
}
