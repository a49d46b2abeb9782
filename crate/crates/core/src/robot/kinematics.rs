use nalgebra::{Matrix6, Unit, UnitQuaternion, Vector3};

use super::model::{ArmModel, Joints, DOF};
use super::RobotError;
use crate::geom::RigidTransform;

/// Every frame of the chain at one configuration.
#[derive(Clone, Debug)]
pub struct ArmFrames {
    /// `frames[0]` is the base; `frames[k]` the frame after joint `k`.
    pub frames: [RigidTransform; DOF + 1],
    /// World joint axes and origins, one per joint.
    pub axes: [Vector3<f64>; DOF],
    pub origins: [Vector3<f64>; DOF],
    pub tcp: RigidTransform,
}

/// Chain evaluation without a limit check.
pub(crate) fn frames_unchecked(arm: &ArmModel, q: &Joints) -> ArmFrames {
    let mut frames = [arm.base; DOF + 1];
    let mut axes = [Vector3::zeros(); DOF];
    let mut origins = [Vector3::zeros(); DOF];
    for (k, joint) in arm.joints.iter().enumerate() {
        let pre = frames[k].compose(&joint.offset);
        axes[k] = pre.rotation * joint.axis;
        origins[k] = pre.position;
        let rot = UnitQuaternion::from_axis_angle(&Unit::new_unchecked(joint.axis), q[k]);
        frames[k + 1] = pre.compose(&RigidTransform::from_rotation(rot));
    }
    let tcp = frames[DOF].compose(&arm.tcp);
    ArmFrames {
        frames,
        axes,
        origins,
        tcp,
    }
}

pub fn arm_frames(arm: &ArmModel, q: &Joints) -> Result<ArmFrames, RobotError> {
    arm.check_limits(q)?;
    Ok(frames_unchecked(arm, q))
}

/// World pose of the tool-center point.
pub fn forward_kinematics(arm: &ArmModel, q: &Joints) -> Result<RigidTransform, RobotError> {
    Ok(arm_frames(arm, q)?.tcp)
}

pub(crate) fn jacobian_from_frames(f: &ArmFrames) -> Matrix6<f64> {
    let mut j = Matrix6::zeros();
    let pe = f.tcp.position;
    for k in 0..DOF {
        let z = f.axes[k];
        let lin = z.cross(&(pe - f.origins[k]));
        j.fixed_view_mut::<3, 1>(0, k).copy_from(&lin);
        j.fixed_view_mut::<3, 1>(3, k).copy_from(&z);
    }
    j
}

/// Geometric Jacobian at the TCP: rows 0..3 linear velocity, 3..6 angular.
pub fn jacobian(arm: &ArmModel, q: &Joints) -> Result<Matrix6<f64>, RobotError> {
    Ok(jacobian_from_frames(&arm_frames(arm, q)?))
}

pub(crate) fn manipulability_of(j: &Matrix6<f64>) -> f64 {
    (j * j.transpose()).determinant().max(0.0).sqrt()
}

/// Yoshikawa manipulability `sqrt(det(J Jᵀ))`.
pub fn manipulability(arm: &ArmModel, q: &Joints) -> Result<f64, RobotError> {
    Ok(manipulability_of(&jacobian(arm, q)?))
}

/// 6-vector error (position; rotation vector) taking `current` to `target`,
/// both in world coordinates.
pub(crate) fn pose_error(target: &RigidTransform, current: &RigidTransform) -> nalgebra::Vector6<f64> {
    let dp = target.position - current.position;
    let dr = (target.rotation * current.rotation.inverse()).scaled_axis();
    nalgebra::Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}
