//! Dual-arm kinematic model: forward and inverse kinematics, Jacobian,
//! manipulability and link collision bodies.

mod bodies;
mod default_model;
mod ik;
mod kinematics;
mod model;

pub use bodies::{
    arm_bodies, default_ignore_pairs, finger_name, link_name, robot_bodies, torso_bodies, torso_name, FingerSide,
};
pub(crate) use bodies::{finger_bodies_from_tcp, link_bodies_from_frames};
pub use default_model::default_dual_arm;
pub use ik::{ik_residual_ok, inverse_kinematics, solve_ik, IkOptions, IK_ORIENTATION_TOL, IK_POSITION_TOL};
pub(crate) use kinematics::{frames_unchecked, jacobian_from_frames, manipulability_of};
pub use kinematics::{arm_frames, forward_kinematics, jacobian, manipulability, ArmFrames};
pub use model::{
    Arm, ArmModel, DualArmModel, DualConfig, GripperModel, Joint, JointConfig, Joints, LinkGeometry, Units, DOF,
};

#[derive(Debug, thiserror::Error)]
pub enum RobotError {
    #[error("joint {joint} value {value} outside [{lower}, {upper}]")]
    LimitViolation { joint: usize, value: f64, lower: f64, upper: f64 },
    #[error("no inverse kinematics solution")]
    NoSolution,
    #[error("jaw width {width} exceeds gripper stroke {stroke}")]
    StrokeExceeded { width: f64, stroke: f64 },
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("robot file format error: {0}")]
    Format(String),
}
