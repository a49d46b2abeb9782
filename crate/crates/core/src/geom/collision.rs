use std::collections::BTreeSet;

use super::gjk::{self, Placed};
use super::{Body, RigidTransform, Shape};

/// Safety margin: shapes closer than this are reported as colliding.
pub const COLLISION_MARGIN: f64 = 1e-3;

/// Per-body erosion used for resting contact between workpieces. Two eroded
/// bodies overlap only if the originals interpenetrate by more than twice this.
pub const CONTACT_TOLERANCE: f64 = 1e-3;

/// Unordered set of body-name pairs exempt from collision checks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NamePairSet(BTreeSet<(String, String)>);

impl NamePairSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &str, b: &str) {
        self.0.insert(ordered(a, b));
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.0.contains(&ordered(a, b))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, String)> {
        self.0.iter()
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for NamePairSet {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut set = NamePairSet::new();
        for (a, b) in iter {
            set.insert(a, b);
        }
        set
    }
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

/// Distance between two placed shapes (0 when overlapping).
pub fn shape_distance(sa: &Shape, pa: &RigidTransform, sb: &Shape, pb: &RigidTransform) -> f64 {
    gjk::distance(&Placed { shape: sa, pose: pa }, &Placed { shape: sb, pose: pb })
}

/// True when the two shapes are closer than `margin`.
pub fn shapes_within(sa: &Shape, pa: &RigidTransform, sb: &Shape, pb: &RigidTransform, margin: f64) -> bool {
    let reach = sa.bounding_radius() + sb.bounding_radius() + margin;
    if (pa.position - pb.position).norm_squared() >= reach * reach {
        return false;
    }
    gjk::within(&Placed { shape: sa, pose: pa }, &Placed { shape: sb, pose: pb }, margin)
}

/// True when the shapes interpenetrate beyond the resting-contact tolerance.
pub fn shapes_penetrate(sa: &Shape, pa: &RigidTransform, sb: &Shape, pb: &RigidTransform) -> bool {
    let ea = sa.eroded(CONTACT_TOLERANCE);
    let eb = sb.eroded(CONTACT_TOLERANCE);
    shapes_within(&ea, pa, &eb, pb, 1e-12)
}

/// Overlap test with the default safety margin. Symmetric in its arguments.
pub fn collide_pair(a: &Body, b: &Body) -> bool {
    // Fixed argument order keeps the result exactly symmetric.
    let (first, second) = if (a.name.as_str(), a.pose.position.as_slice()) <= (b.name.as_str(), b.pose.position.as_slice()) {
        (a, b)
    } else {
        (b, a)
    };
    shapes_within(&first.shape, &first.pose, &second.shape, &second.pose, COLLISION_MARGIN)
}

/// True if any pair of bodies not listed in `ignore` collides.
pub fn collide_scene(bodies: &[Body], ignore: &NamePairSet) -> bool {
    colliding_pairs(bodies, ignore).next().is_some()
}

/// All colliding, non-ignored pairs, by name.
pub fn colliding_pairs<'a>(
    bodies: &'a [Body],
    ignore: &'a NamePairSet,
) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
    (0..bodies.len())
        .flat_map(move |i| (i + 1..bodies.len()).map(move |j| (i, j)))
        .filter(move |&(i, j)| !ignore.contains(&bodies[i].name, &bodies[j].name))
        .filter(move |&(i, j)| collide_pair(&bodies[i], &bodies[j]))
        .map(move |(i, j)| (bodies[i].name.as_str(), bodies[j].name.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(name: &str, x: f64) -> Body {
        Body::new(name, Shape::cuboid(0.5, 0.5, 0.5), RigidTransform::from_translation(x, 0.0, 0.0))
    }

    #[test]
    fn identical_and_disjoint_boxes() {
        assert!(collide_pair(&unit_box("a", 0.0), &unit_box("b", 0.0)));
        assert!(!collide_pair(&unit_box("a", 0.0), &unit_box("b", 10.0)));
    }

    #[test]
    fn box_versus_capsule() {
        let b = Body::new("b", Shape::cuboid(0.5, 0.5, 0.5), RigidTransform::identity());
        let c = Body::new("c", Shape::capsule(0.1, 1.0), RigidTransform::from_translation(0.55, 0.0, 0.0));
        assert!(collide_pair(&b, &c));
        assert!(collide_pair(&c, &b));
    }

    #[test]
    fn margin_is_respected() {
        let a = unit_box("a", 0.0);
        assert!(collide_pair(&a, &unit_box("b", 1.0005)));
        assert!(!collide_pair(&a, &unit_box("b", 1.002)));
    }

    #[test]
    fn resting_contact_is_not_penetration() {
        let s = Shape::cuboid(0.5, 0.5, 0.5);
        let a = RigidTransform::identity();
        assert!(!shapes_penetrate(&s, &a, &s, &RigidTransform::from_translation(0.0, 0.0, 1.0)));
        assert!(!shapes_penetrate(&s, &a, &s, &RigidTransform::from_translation(0.3, 0.2, 0.999)));
        assert!(shapes_penetrate(&s, &a, &s, &RigidTransform::from_translation(0.0, 0.0, 0.99)));
    }

    #[test]
    fn scene_checks() {
        let ignore = NamePairSet::new();
        assert!(!collide_scene(&[], &ignore));
        assert!(!collide_scene(&[unit_box("a", 0.0)], &ignore));
        let bodies = vec![unit_box("a", 0.0), unit_box("b", 0.5), unit_box("c", 5.0)];
        assert!(collide_scene(&bodies, &ignore));
        let ignore: NamePairSet = [("b", "a")].into_iter().collect();
        assert!(!collide_scene(&bodies, &ignore));
    }
}
