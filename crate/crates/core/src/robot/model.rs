use std::fmt;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::RobotError;
use crate::geom::{RigidTransform, Shape};

pub const DOF: usize = 6;

/// Joint angles of one arm, radians.
pub type Joints = [f64; DOF];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Left, Arm::Right];

    pub fn other(self) -> Arm {
        match self {
            Arm::Left => Arm::Right,
            Arm::Right => Arm::Left,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Arm::Left => 0,
            Arm::Right => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Left => "left",
            Arm::Right => "right",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Revolute joint: a fixed offset from the parent frame followed by a rotation
/// about `axis` (expressed in the offset frame).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joint {
    pub offset: RigidTransform,
    pub axis: Vector3<f64>,
    pub lower: f64,
    pub upper: f64,
}

/// Collision shape rigidly attached to a kinematic frame. Frame 0 is the arm
/// base, frame `k` the frame after joint `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkGeometry {
    pub name: String,
    pub frame: usize,
    pub shape: Shape,
    pub local: RigidTransform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmModel {
    pub name: String,
    pub base: RigidTransform,
    pub joints: Vec<Joint>,
    /// Tool-center point relative to the last joint frame. Local Z is the
    /// approach direction, local Y the jaw closing axis.
    pub tcp: RigidTransform,
    pub links: Vec<LinkGeometry>,
    /// Parking configuration used whenever the arm holds nothing.
    pub home: Joints,
}

/// Parallel-jaw gripper shared by both arms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperModel {
    /// Maximum jaw opening, m.
    pub stroke: f64,
    pub finger_half_extents: Vector3<f64>,
    /// Finger center offset along the approach axis, relative to the TCP.
    pub finger_center_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualArmModel {
    pub format_version: u32,
    pub units: Units,
    pub left: ArmModel,
    pub right: ArmModel,
    pub gripper: GripperModel,
    pub torso: Vec<LinkGeometry>,
}

/// Unit declaration carried by every file header.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: String,
    pub angle: String,
    pub time: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            length: "m".into(),
            angle: "rad".into(),
            time: "s".into(),
        }
    }
}

impl Units {
    pub fn is_si(&self) -> bool {
        *self == Units::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub arm: Arm,
    pub angles: Joints,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualConfig {
    pub left: Joints,
    pub right: Joints,
}

impl DualConfig {
    pub fn arm(&self, arm: Arm) -> &Joints {
        match arm {
            Arm::Left => &self.left,
            Arm::Right => &self.right,
        }
    }

    pub fn arm_mut(&mut self, arm: Arm) -> &mut Joints {
        match arm {
            Arm::Left => &mut self.left,
            Arm::Right => &mut self.right,
        }
    }

    pub fn with(mut self, arm: Arm, q: Joints) -> Self {
        *self.arm_mut(arm) = q;
        self
    }
}

const LIMIT_SLACK: f64 = 1e-9;

impl ArmModel {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn lower(&self) -> Joints {
        std::array::from_fn(|i| self.joints[i].lower)
    }

    pub fn upper(&self) -> Joints {
        std::array::from_fn(|i| self.joints[i].upper)
    }

    pub fn check_limits(&self, q: &Joints) -> Result<(), RobotError> {
        for (i, (j, v)) in self.joints.iter().zip(q).enumerate() {
            if !v.is_finite() || *v < j.lower - LIMIT_SLACK || *v > j.upper + LIMIT_SLACK {
                return Err(RobotError::LimitViolation {
                    joint: i,
                    value: *v,
                    lower: j.lower,
                    upper: j.upper,
                });
            }
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &Joints) -> bool {
        self.check_limits(q).is_ok()
    }

    pub fn clamp(&self, q: &mut Joints) {
        for (v, j) in q.iter_mut().zip(&self.joints) {
            *v = v.clamp(j.lower, j.upper);
        }
    }

    /// Upper bound on the distance from the first joint origin to the TCP.
    pub fn max_reach(&self) -> f64 {
        self.joints.iter().skip(1).map(|j| j.offset.position.norm()).sum::<f64>() + self.tcp.position.norm()
    }

    /// World position of the first joint, which no joint motion moves.
    pub fn reach_origin(&self) -> Vector3<f64> {
        self.base.compose(&self.joints[0].offset).position
    }

    fn validate(&self) -> Result<(), RobotError> {
        let bad = |msg: String| Err(RobotError::InvalidModel(format!("arm {}: {msg}", self.name)));
        if self.joints.len() != DOF {
            return bad(format!("expected {DOF} joints, found {}", self.joints.len()));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if !(j.lower < j.upper) {
                return bad(format!("joint {i} has an empty limit interval"));
            }
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return bad(format!("joint {i} axis is not a unit vector"));
            }
        }
        for l in &self.links {
            if l.frame > DOF {
                return bad(format!("link {} refers to frame {}", l.name, l.frame));
            }
            if !l.shape.is_valid() {
                return bad(format!("link {} has a degenerate shape", l.name));
            }
        }
        if self.check_limits(&self.home).is_err() {
            return bad("home configuration violates joint limits".into());
        }
        Ok(())
    }
}

impl DualArmModel {
    pub fn arm(&self, arm: Arm) -> &ArmModel {
        match arm {
            Arm::Left => &self.left,
            Arm::Right => &self.right,
        }
    }

    pub fn home(&self) -> DualConfig {
        DualConfig {
            left: self.left.home,
            right: self.right.home,
        }
    }

    pub fn validate(&self) -> Result<(), RobotError> {
        self.left.validate()?;
        self.right.validate()?;
        if self.left.base.distance_to(&self.right.base) < 1e-6 {
            return Err(RobotError::InvalidModel("arm base poses coincide".into()));
        }
        if !(self.gripper.stroke > 0.0) {
            return Err(RobotError::InvalidModel("gripper stroke must be positive".into()));
        }
        if self.gripper.finger_half_extents.iter().any(|v| !(*v > 0.0)) {
            return Err(RobotError::InvalidModel("finger dimensions must be positive".into()));
        }
        if !self.units.is_si() {
            return Err(RobotError::InvalidModel("robot file must use m/rad/s units".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RobotError> {
        let text = std::fs::read_to_string(path).map_err(|e| RobotError::Io(path.display().to_string(), e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let model: DualArmModel = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| RobotError::Format(format!("{}: {}", path.display(), e)))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), RobotError> {
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, text + "\n").map_err(|e| RobotError::Io(path.display().to_string(), e))
    }
}
