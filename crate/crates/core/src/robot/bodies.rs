use super::kinematics::{frames_unchecked, ArmFrames};
use super::model::{Arm, ArmModel, DualArmModel, DualConfig, GripperModel, Joints, DOF};
use super::RobotError;
use crate::geom::{Body, NamePairSet, RigidTransform, Shape};

/// Which side of the gripper a finger is on (+Y or −Y of the TCP frame).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FingerSide {
    A,
    B,
}

pub fn finger_name(arm: Arm, side: FingerSide) -> String {
    match side {
        FingerSide::A => format!("{arm}/finger_a"),
        FingerSide::B => format!("{arm}/finger_b"),
    }
}

pub fn link_name(arm: Arm, link: &str) -> String {
    format!("{arm}/{link}")
}

pub fn torso_name(link: &str) -> String {
    format!("torso/{link}")
}

impl GripperModel {
    /// Finger shape and pose relative to the TCP at the given jaw opening.
    pub fn finger_local(&self, side: FingerSide, jaw_width: f64) -> (Shape, RigidTransform) {
        let h = self.finger_half_extents;
        let y = 0.5 * jaw_width + h.y;
        let y = match side {
            FingerSide::A => y,
            FingerSide::B => -y,
        };
        (Shape::Box { half_extents: h }, RigidTransform::from_translation(0.0, y, self.finger_center_z))
    }

    pub fn check_width(&self, jaw_width: f64) -> Result<(), RobotError> {
        if !(jaw_width >= 0.0) || jaw_width > self.stroke + 1e-12 {
            return Err(RobotError::StrokeExceeded {
                width: jaw_width,
                stroke: self.stroke,
            });
        }
        Ok(())
    }
}

/// World-posed link shapes of one arm, without the fingers.
pub(crate) fn link_bodies_from_frames<'a>(
    arm: &'a ArmModel,
    frames: &'a ArmFrames,
) -> impl Iterator<Item = (&'a str, Shape, RigidTransform)> + 'a {
    arm.links
        .iter()
        .map(move |l| (l.name.as_str(), l.shape, frames.frames[l.frame].compose(&l.local)))
}

pub(crate) fn finger_bodies_from_tcp(
    gripper: &GripperModel,
    tcp: &RigidTransform,
    jaw_width: f64,
) -> [(FingerSide, Shape, RigidTransform); 2] {
    [FingerSide::A, FingerSide::B].map(|side| {
        let (shape, local) = gripper.finger_local(side, jaw_width);
        (side, shape, tcp.compose(&local))
    })
}

/// Collision bodies of one arm (links then the two fingers).
pub fn arm_bodies(model: &DualArmModel, arm: Arm, q: &Joints, jaw_width: f64) -> Result<Vec<Body>, RobotError> {
    let am = model.arm(arm);
    am.check_limits(q)?;
    model.gripper.check_width(jaw_width)?;
    let frames = frames_unchecked(am, q);
    let mut out: Vec<Body> = link_bodies_from_frames(am, &frames)
        .map(|(name, shape, pose)| Body::new(link_name(arm, name), shape, pose))
        .collect();
    for (side, shape, pose) in finger_bodies_from_tcp(&model.gripper, &frames.tcp, jaw_width) {
        out.push(Body::new(finger_name(arm, side), shape, pose));
    }
    Ok(out)
}

pub fn torso_bodies(model: &DualArmModel) -> Vec<Body> {
    model
        .torso
        .iter()
        .map(|l| Body::new(torso_name(&l.name), l.shape, l.local))
        .collect()
}

/// World-posed collision bodies: torso, then left arm, then right arm.
pub fn robot_bodies(model: &DualArmModel, c: &DualConfig, jaw_widths: [f64; 2]) -> Result<Vec<Body>, RobotError> {
    let mut out = torso_bodies(model);
    out.extend(arm_bodies(model, Arm::Left, &c.left, jaw_widths[0])?);
    out.extend(arm_bodies(model, Arm::Right, &c.right, jaw_widths[1])?);
    Ok(out)
}

/// Pairs of robot bodies that are permanently in contact: consecutive links,
/// fingers with the hand links and each other, and the torso with the arm
/// pedestals.
pub fn default_ignore_pairs(model: &DualArmModel) -> NamePairSet {
    let mut set = NamePairSet::new();
    for arm in Arm::BOTH {
        let am = model.arm(arm);
        for w in am.links.windows(2) {
            set.insert(&link_name(arm, &w[0].name), &link_name(arm, &w[1].name));
        }
        let fa = finger_name(arm, FingerSide::A);
        let fb = finger_name(arm, FingerSide::B);
        set.insert(&fa, &fb);
        for l in am.links.iter().filter(|l| l.frame == DOF) {
            set.insert(&fa, &link_name(arm, &l.name));
            set.insert(&fb, &link_name(arm, &l.name));
        }
        for t in &model.torso {
            for l in am.links.iter().filter(|l| l.frame == 0) {
                set.insert(&torso_name(&t.name), &link_name(arm, &l.name));
            }
        }
    }
    set
}
