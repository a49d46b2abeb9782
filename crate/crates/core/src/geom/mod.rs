//! Rigid transforms, convex primitives and boolean collision queries.

mod collision;
mod gjk;
mod shape;
mod transform;

pub use collision::{
    collide_pair, collide_scene, colliding_pairs, shape_distance, shapes_penetrate, shapes_within, NamePairSet,
    COLLISION_MARGIN, CONTACT_TOLERANCE,
};
pub use shape::{Body, Shape};
pub use transform::RigidTransform;

/// `a ∘ b`: the transform applying `b` first, then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}
