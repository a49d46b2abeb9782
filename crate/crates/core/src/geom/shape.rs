use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::RigidTransform;

/// Convex collision primitive, centered on its local origin.
///
/// Cylinders and capsules are aligned with local Z. A capsule's `length` is
/// the length of its core segment, so its total extent is `length + 2 * radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Box { half_extents: Vector3<f64> },
    Cylinder { radius: f64, height: f64 },
    Capsule { radius: f64, length: f64 },
}

impl Shape {
    pub fn cuboid(hx: f64, hy: f64, hz: f64) -> Self {
        Shape::Box {
            half_extents: Vector3::new(hx, hy, hz),
        }
    }

    pub fn cylinder(radius: f64, height: f64) -> Self {
        Shape::Cylinder { radius, height }
    }

    pub fn capsule(radius: f64, length: f64) -> Self {
        Shape::Capsule { radius, length }
    }

    pub fn is_valid(&self) -> bool {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        match self {
            Shape::Box { half_extents } => half_extents.iter().all(|v| pos(*v)),
            Shape::Cylinder { radius, height } => pos(*radius) && pos(*height),
            Shape::Capsule { radius, length } => pos(*radius) && pos(*length),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::Box { .. } => "box",
            Shape::Cylinder { .. } => "cylinder",
            Shape::Capsule { .. } => "capsule",
        }
    }

    /// Radius of a sphere about the local origin enclosing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Box { half_extents } => half_extents.norm(),
            Shape::Cylinder { radius, height } => radius.hypot(0.5 * height),
            Shape::Capsule { radius, length } => 0.5 * length + radius,
        }
    }

    /// Half extents of the local axis-aligned bounding box.
    pub fn local_half_extents(&self) -> Vector3<f64> {
        match self {
            Shape::Box { half_extents } => *half_extents,
            Shape::Cylinder { radius, height } => Vector3::new(*radius, *radius, 0.5 * height),
            Shape::Capsule { radius, length } => Vector3::new(*radius, *radius, 0.5 * length + radius),
        }
    }

    /// Rounding radius swept around the core returned by [`Shape::core_support`].
    pub(crate) fn core_radius(&self) -> f64 {
        match self {
            Shape::Capsule { radius, .. } => *radius,
            _ => 0.0,
        }
    }

    /// Support point of the shape's core (the capsule core is its segment).
    pub(crate) fn core_support(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        let sgn = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
        match self {
            Shape::Box { half_extents: h } => {
                Vector3::new(sgn(dir.x) * h.x, sgn(dir.y) * h.y, sgn(dir.z) * h.z)
            }
            Shape::Cylinder { radius, height } => {
                let lateral = dir.x.hypot(dir.y);
                let z = sgn(dir.z) * 0.5 * height;
                if lateral > 1e-12 {
                    Vector3::new(radius * dir.x / lateral, radius * dir.y / lateral, z)
                } else {
                    Vector3::new(0.0, 0.0, z)
                }
            }
            Shape::Capsule { length, .. } => Vector3::new(0.0, 0.0, sgn(dir.z) * 0.5 * length),
        }
    }

    /// The shape shrunk inward by `by` on every face, clamped to stay valid.
    pub fn eroded(&self, by: f64) -> Shape {
        let shrink = |v: f64, floor: f64| (v - by).max(floor);
        match *self {
            Shape::Box { half_extents: h } => Shape::Box {
                half_extents: Vector3::new(shrink(h.x, 0.25 * h.x), shrink(h.y, 0.25 * h.y), shrink(h.z, 0.25 * h.z)),
            },
            Shape::Cylinder { radius, height } => Shape::Cylinder {
                radius: shrink(radius, 0.25 * radius),
                height: (height - 2.0 * by).max(0.25 * height),
            },
            Shape::Capsule { radius, length } => Shape::Capsule {
                radius: shrink(radius, 0.25 * radius),
                length,
            },
        }
    }
}

/// A named shape placed in the world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Body {
    pub name: String,
    pub shape: Shape,
    pub pose: RigidTransform,
}

impl Body {
    pub fn new(name: impl Into<String>, shape: Shape, pose: RigidTransform) -> Self {
        Self {
            name: name.into(),
            shape,
            pose,
        }
    }
}
