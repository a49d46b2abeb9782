use nalgebra::Vector3;

use super::model::{Arm, ArmModel, DualArmModel, GripperModel, Joint, Joints, LinkGeometry, Units};
use crate::geom::{RigidTransform, Shape};

use std::f64::consts::PI;

const BASE_SEPARATION: f64 = 0.5;

fn z_link(name: &str, frame: usize, radius: f64, length: f64) -> LinkGeometry {
    LinkGeometry {
        name: name.into(),
        frame,
        shape: Shape::capsule(radius, length),
        local: RigidTransform::from_translation(0.0, 0.0, 0.5 * length),
    }
}

fn joint(dz: f64, axis: Vector3<f64>, lower: f64, upper: f64) -> Joint {
    Joint {
        offset: RigidTransform::from_translation(0.0, 0.0, dz),
        axis,
        lower,
        upper,
    }
}

/// Six-joint arm with a spherical wrist: base yaw, shoulder and elbow pitch,
/// forearm roll, wrist pitch, flange roll. Reach from the shoulder to the TCP
/// is 0.83 m.
fn arm(side: Arm) -> ArmModel {
    let (y, home): (f64, Joints) = match side {
        Arm::Left => (0.5 * BASE_SEPARATION, [1.3, 0.1, 2.0, 0.0, 1.04, 0.0]),
        Arm::Right => (-0.5 * BASE_SEPARATION, [-1.3, 0.1, 2.0, 0.0, 1.04, 0.0]),
    };
    let z = Vector3::z();
    let yv = Vector3::y();
    ArmModel {
        name: side.name().into(),
        base: RigidTransform::from_translation(0.0, y, 0.0),
        joints: vec![
            joint(0.10, z, -PI, PI),
            joint(0.20, yv, -2.0, 2.0),
            joint(0.35, yv, -2.6, 2.6),
            joint(0.15, z, -PI, PI),
            joint(0.15, yv, -2.2, 2.2),
            joint(0.05, z, -PI, PI),
        ],
        tcp: RigidTransform::from_translation(0.0, 0.0, 0.13),
        links: vec![
            z_link("pedestal", 0, 0.06, 0.10),
            z_link("shoulder", 1, 0.055, 0.20),
            z_link("upper_arm", 2, 0.05, 0.35),
            z_link("forearm", 3, 0.045, 0.15),
            z_link("wrist", 4, 0.04, 0.15),
            z_link("flange", 5, 0.035, 0.05),
            LinkGeometry {
                name: "palm".into(),
                frame: 6,
                shape: Shape::cuboid(0.025, 0.045, 0.045),
                local: RigidTransform::from_translation(0.0, 0.0, 0.05),
            },
        ],
        home,
    }
}

/// The shipped dual-arm model: two mirrored arms on a fixed torso, bases
/// 0.5 m apart, with an 85 mm stroke parallel gripper on each.
pub fn default_dual_arm() -> DualArmModel {
    DualArmModel {
        format_version: 1,
        units: Units::default(),
        left: arm(Arm::Left),
        right: arm(Arm::Right),
        gripper: GripperModel {
            stroke: 0.085,
            finger_half_extents: Vector3::new(0.01, 0.008, 0.03),
            finger_center_z: -0.005,
        },
        torso: vec![LinkGeometry {
            name: "body".into(),
            frame: 0,
            shape: Shape::cuboid(0.12, 0.15, 0.45),
            local: RigidTransform::from_translation(-0.22, 0.0, 0.25),
        }],
    }
}
