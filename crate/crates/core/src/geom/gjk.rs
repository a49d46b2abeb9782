//! GJK distance between convex support-mapped shapes.

use nalgebra::Vector3;

use super::{RigidTransform, Shape};

type V3 = Vector3<f64>;

const MAX_ITERATIONS: usize = 96;
const REL_EPS: f64 = 1e-12;
const ABS_EPS: f64 = 1e-22;

pub(crate) struct Placed<'a> {
    pub shape: &'a Shape,
    pub pose: &'a RigidTransform,
}

impl Placed<'_> {
    fn support(&self, dir: &V3) -> V3 {
        let local = self.pose.rotation.inverse_transform_vector(dir);
        self.pose.transform_point(&self.shape.core_support(&local))
    }
}

enum Query {
    /// Exact core distance.
    Distance,
    /// Stop as soon as the core distance is known to be below or above the bound.
    Below(f64),
}

enum Outcome {
    Distance(f64),
    Decided(bool),
}

/// Distance between the two cores (capsules reduced to their segments).
fn core_gjk(a: &Placed, b: &Placed, query: Query) -> Outcome {
    let support = |d: &V3| a.support(d) - b.support(&-d);
    let mut dir = b.pose.position - a.pose.position;
    if dir.norm_squared() < 1e-18 {
        dir = V3::x();
    }
    let mut simplex: Vec<V3> = Vec::with_capacity(4);
    let first = support(&-dir);
    simplex.push(first);
    let mut v = first;
    for _ in 0..MAX_ITERATIONS {
        let vv = v.norm_squared();
        if vv <= ABS_EPS {
            return Outcome::Distance(0.0);
        }
        if let Query::Below(bound) = query {
            if vv < bound * bound {
                return Outcome::Decided(true);
            }
        }
        let w = support(&-v);
        let vw = v.dot(&w);
        if let Query::Below(bound) = query {
            // v·w / |v| is a lower bound on the distance.
            if vw > 0.0 && vw * vw >= bound * bound * vv {
                return Outcome::Decided(false);
            }
        }
        if vv - vw <= REL_EPS * vv || simplex.iter().any(|p| (p - w).norm_squared() <= ABS_EPS) {
            return finish(vv.sqrt(), &query);
        }
        simplex.push(w);
        let (closest, reduced) = closest_on_simplex(&simplex);
        simplex = reduced;
        if simplex.len() == 4 {
            return finish(0.0, &query);
        }
        if closest.norm_squared() >= vv {
            return finish(vv.sqrt(), &query);
        }
        v = closest;
    }
    finish(v.norm(), &query)
}

fn finish(distance: f64, query: &Query) -> Outcome {
    match query {
        Query::Distance => Outcome::Distance(distance),
        Query::Below(bound) => Outcome::Decided(distance < *bound),
    }
}

/// Euclidean distance between two placed shapes; zero when they overlap.
pub(crate) fn distance(a: &Placed, b: &Placed) -> f64 {
    let radii = a.shape.core_radius() + b.shape.core_radius();
    match core_gjk(a, b, Query::Distance) {
        Outcome::Distance(d) => (d - radii).max(0.0),
        Outcome::Decided(_) => unreachable!(),
    }
}

/// `distance(a, b) < threshold`, with early termination.
pub(crate) fn within(a: &Placed, b: &Placed, threshold: f64) -> bool {
    let bound = threshold + a.shape.core_radius() + b.shape.core_radius();
    if bound <= 0.0 {
        return false;
    }
    match core_gjk(a, b, Query::Below(bound)) {
        Outcome::Decided(hit) => hit,
        Outcome::Distance(d) => d < bound,
    }
}

fn closest_on_simplex(s: &[V3]) -> (V3, Vec<V3>) {
    match s.len() {
        1 => (s[0], vec![s[0]]),
        2 => closest_on_segment(s[0], s[1]),
        3 => closest_on_triangle(s[0], s[1], s[2]),
        4 => closest_on_tetrahedron(s[0], s[1], s[2], s[3]),
        _ => unreachable!("simplex has at most four vertices"),
    }
}

fn closest_on_segment(a: V3, b: V3) -> (V3, Vec<V3>) {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom <= ABS_EPS {
        return (a, vec![a]);
    }
    let t = -a.dot(&ab) / denom;
    if t <= 0.0 {
        (a, vec![a])
    } else if t >= 1.0 {
        (b, vec![b])
    } else {
        (a + ab * t, vec![a, b])
    }
}

fn closest_on_triangle(a: V3, b: V3, c: V3) -> (V3, Vec<V3>) {
    let ab = b - a;
    let ac = c - a;
    let ap = -a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, vec![a]);
    }
    let bp = -b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, vec![b]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, vec![a, b]);
    }
    let cp = -c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, vec![c]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, vec![a, c]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, vec![b, c]);
    }
    let sum = va + vb + vc;
    if sum.abs() <= ABS_EPS {
        // Degenerate (collinear) triangle: fall back to its longest edge.
        let candidates = [closest_on_segment(a, b), closest_on_segment(a, c), closest_on_segment(b, c)];
        return candidates
            .into_iter()
            .min_by(|x, y| x.0.norm_squared().total_cmp(&y.0.norm_squared()))
            .unwrap();
    }
    let denom = 1.0 / sum;
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, vec![a, b, c])
}

fn closest_on_tetrahedron(a: V3, b: V3, c: V3, d: V3) -> (V3, Vec<V3>) {
    let faces = [(a, b, c, d), (a, c, d, b), (a, d, b, c), (b, d, c, a)];
    let mut best: Option<(V3, Vec<V3>)> = None;
    let mut inside = true;
    for (p, q, r, opposite) in faces {
        let n = (q - p).cross(&(r - p));
        let side_origin = (-p).dot(&n);
        let side_opposite = (opposite - p).dot(&n);
        let degenerate = side_opposite * side_opposite <= 1e-24 * n.norm_squared().max(1e-300);
        if degenerate || side_origin * side_opposite < 0.0 {
            inside = false;
            let candidate = closest_on_triangle(p, q, r);
            let better = match &best {
                Some((x, _)) => candidate.0.norm_squared() < x.norm_squared(),
                None => true,
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    if inside {
        return (V3::zeros(), vec![a, b, c, d]);
    }
    best.unwrap()
}
