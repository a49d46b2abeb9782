use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::tool::ToolModel;
use super::GraspDbError;
use crate::geom::{shapes_within, RigidTransform, Shape, COLLISION_MARGIN};
use crate::robot::{Arm, DualArmModel, FingerSide, GripperModel, DOF};

/// How far the fingers must sink into the handle when closed below the
/// nominal width for the grasp to count as contacting it.
pub const CONTACT_DEPTH: f64 = 2e-3;

/// Parallel-jaw grasp of the tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grasp {
    pub id: usize,
    /// Gripper (TCP) frame in the tool frame.
    pub hand_pose: RigidTransform,
    pub jaw_width: f64,
    /// Approach direction in the tool frame (TCP +Z).
    pub approach: Vector3<f64>,
}

/// Gripper geometry in the TCP frame, independent of the arm configuration:
/// the hand links and the fingers.
#[derive(Clone, Debug)]
pub struct HandGeometry {
    pub links: Vec<(Shape, RigidTransform)>,
    pub gripper: GripperModel,
}

impl HandGeometry {
    /// Links rigidly fixed to the last frame, plus links on the previous frame
    /// that are round about the last joint axis.
    pub fn from_model(model: &DualArmModel) -> Self {
        let arm = model.arm(Arm::Left);
        let tcp_inv = arm.tcp.inverse();
        let last = arm.joints[DOF - 1].offset.inverse();
        let mut links = Vec::new();
        for l in &arm.links {
            if l.frame == DOF {
                links.push((l.shape, tcp_inv.compose(&l.local)));
            } else if l.frame == DOF - 1 && !matches!(l.shape, Shape::Box { .. }) {
                links.push((l.shape, tcp_inv.compose(&last).compose(&l.local)));
            }
        }
        Self {
            links,
            gripper: model.gripper.clone(),
        }
    }

    /// Hand bodies in the tool frame with the jaws opened to `width`.
    pub fn posed(&self, hand_pose: &RigidTransform, width: f64) -> Vec<(Shape, RigidTransform)> {
        let mut out: Vec<_> = self.links.iter().map(|(s, l)| (*s, hand_pose.compose(l))).collect();
        out.extend(self.fingers(hand_pose, width));
        out
    }

    pub fn fingers(&self, hand_pose: &RigidTransform, width: f64) -> [(Shape, RigidTransform); 2] {
        [FingerSide::A, FingerSide::B].map(|side| {
            let (s, l) = self.gripper.finger_local(side, width);
            (s, hand_pose.compose(&l))
        })
    }
}

fn hits_tool(tool: &ToolModel, bodies: &[(Shape, RigidTransform)], margin: f64) -> bool {
    bodies.iter().any(|(s, p)| {
        tool.parts
            .iter()
            .any(|part| shapes_within(s, p, &part.shape, &part.local, margin))
    })
}

/// Fully open hand clears the tool, and closing the jaws slightly past the
/// grasp width makes both fingers touch it.
pub fn grasp_is_valid(tool: &ToolModel, hand: &HandGeometry, hand_pose: &RigidTransform, width: f64) -> bool {
    if !(width > 0.0) || width > hand.gripper.stroke {
        return false;
    }
    if hits_tool(tool, &hand.posed(hand_pose, hand.gripper.stroke), COLLISION_MARGIN) {
        return false;
    }
    let closed = (width - CONTACT_DEPTH).max(0.0);
    hand.fingers(hand_pose, closed)
        .iter()
        .all(|f| hits_tool(tool, std::slice::from_ref(f), 1e-9))
}

/// Candidate hand poses before collision filtering, in enumeration order:
/// segment, station, spin, then the same frame with the approach reversed.
pub fn grasp_candidates(tool: &ToolModel, step: f64, spin_count: usize) -> Vec<(RigidTransform, f64)> {
    let mut out = Vec::new();
    for seg in &tool.grasp_segments {
        let y = seg.closing_axis;
        let d = if seg.length() > 0.0 { seg.direction() } else { y.cross(&Vector3::x()).normalize() };
        let base_approach = d.cross(&y).normalize();
        for station in seg.stations(step) {
            for k in 0..spin_count {
                let spin = RigidTransform::from_axis_angle(&y, TAU * k as f64 / spin_count as f64);
                let z = spin.transform_vector(&base_approach);
                let frame = RigidTransform::from_axes(y.cross(&z), y, z, station);
                out.push((frame, seg.width));
                out.push((frame.compose(&RigidTransform::rot_x(PI)), seg.width));
            }
        }
    }
    out
}

/// Grasps sampled along every grasp segment, filtered for collision with the
/// tool and for handle contact. Ids follow enumeration order.
pub fn sample_tool_grasps(
    tool: &ToolModel,
    hand: &HandGeometry,
    step: f64,
    spin_count: usize,
) -> Result<Vec<Grasp>, GraspDbError> {
    if !(step > 0.0) || spin_count == 0 {
        return Err(GraspDbError::InvalidParameter("grasp step and spin count must be positive"));
    }
    if tool.max_grasp_width() > hand.gripper.stroke {
        return Err(GraspDbError::InvalidTool(format!(
            "{}: handle width {} exceeds gripper stroke {}",
            tool.name,
            tool.max_grasp_width(),
            hand.gripper.stroke
        )));
    }
    let grasps: Vec<Grasp> = grasp_candidates(tool, step, spin_count)
        .into_iter()
        .filter(|(pose, width)| grasp_is_valid(tool, hand, pose, *width))
        .enumerate()
        .map(|(id, (hand_pose, jaw_width))| Grasp {
            id,
            approach: hand_pose.axis(2),
            hand_pose,
            jaw_width,
        })
        .collect();
    if grasps.is_empty() {
        return Err(GraspDbError::NoGrasps);
    }
    Ok(grasps)
}
