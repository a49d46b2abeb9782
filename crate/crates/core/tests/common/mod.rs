//! Oracles shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use tooltamp::geom::{collide_pair, Body, RigidTransform, Shape};
use tooltamp::graspdb::{HandoverPair, HandoverSide};
use tooltamp::motion::ConfigSpace;
use tooltamp::regrasp::{build_graph, Attachment, Edge, GraspNode, Layer, RegraspGraph};
use tooltamp::robot::Arm;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn node(arm: Arm, grasp_id: usize, x: f64) -> GraspNode {
    GraspNode {
        layer: Layer::Initial,
        arm,
        grasp_id,
        held_pose: RigidTransform::from_translation(x, 0.0, 0.0),
        config: [0.0; 6],
        attachment: Attachment::ToolOnly,
        pair: None,
    }
}

pub fn pair(giver: Arm, gg: usize, gr: usize, score: f64) -> HandoverPair {
    HandoverPair {
        giver: HandoverSide {
            arm: giver,
            grasp_id: gg,
            config: [0.0; 6],
        },
        receiver: HandoverSide {
            arm: giver.other(),
            grasp_id: gr,
            config: [0.0; 6],
        },
        tool_pose: RigidTransform::from_translation(0.4, 0.0, 0.3),
        score,
    }
}

fn arm(rng: &mut ChaCha8Rng) -> Arm {
    if rng.random_bool(0.5) {
        Arm::Left
    } else {
        Arm::Right
    }
}

pub fn random_graph(rng: &mut ChaCha8Rng) -> RegraspGraph {
    let grasps = rng.random_range(2..6);
    let ni = rng.random_range(1..4);
    let ng = rng.random_range(1..4);
    let np = rng.random_range(0..6);
    let initial = (0..ni).map(|_| node(arm(rng), rng.random_range(0..grasps), 0.0)).collect();
    let goal = (0..ng).map(|_| node(arm(rng), rng.random_range(0..grasps), 1.0)).collect();
    let pairs: Vec<_> = (0..np)
        .map(|_| {
            let g = rng.random_range(0..grasps);
            let r = (g + rng.random_range(1..grasps)) % grasps;
            pair(arm(rng), g, r, rng.random_range(0.0..1.0))
        })
        .collect();
    build_graph(&pairs, initial, goal, &Attachment::ToolOnly).unwrap()
}

/// Hop count of the shortest initial-to-goal route over the given live edges.
pub fn bfs_hops(g: &RegraspGraph) -> Option<usize> {
    let edges: Vec<Edge> = g.live_edges().map(|(e, _)| e).collect();
    let goal: BTreeSet<_> = g.layer_ids(Layer::Goal).into_iter().collect();
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for s in g.layer_ids(Layer::Initial) {
        seen.insert(s);
        queue.push_back((s, 0));
    }
    while let Some((v, d)) = queue.pop_front() {
        if goal.contains(&v) {
            return Some(d);
        }
        for e in &edges {
            let u = if e.0 == v {
                e.1
            } else if e.1 == v {
                e.0
            } else {
                continue;
            };
            if seen.insert(u) {
                queue.push_back((u, d + 1));
            }
        }
    }
    None
}

/// Planar two-link arm (unit links) among disc obstacles, links as capsules.
pub struct Planar {
    pub discs: Vec<(f64, f64, f64)>,
}

impl Planar {
    fn links(q: &[f64; 2]) -> [Body; 2] {
        let (a, b) = (q[0], q[0] + q[1]);
        let elbow = Vector3::new(a.cos(), a.sin(), 0.0);
        let mid1 = elbow * 0.5;
        let mid2 = elbow + Vector3::new(b.cos(), b.sin(), 0.0) * 0.5;
        // Capsule axis is local z: tilt it into the plane.
        let pose = |mid: Vector3<f64>, ang: f64| {
            RigidTransform::rot_z(ang).compose(&RigidTransform::rot_y(std::f64::consts::FRAC_PI_2)).with_position(mid)
        };
        [
            Body::new("l1", Shape::capsule(0.02, 1.0), pose(mid1, a)),
            Body::new("l2", Shape::capsule(0.02, 1.0), pose(mid2, b)),
        ]
    }
}

impl ConfigSpace<2> for Planar {
    fn lower(&self) -> [f64; 2] {
        [-1.5, -2.5]
    }

    fn upper(&self) -> [f64; 2] {
        [1.5, 2.5]
    }

    fn is_free(&self, q: &[f64; 2]) -> bool {
        if q.iter().zip(self.lower()).zip(self.upper()).any(|((v, l), u)| *v < l || *v > u) {
            return false;
        }
        let links = Self::links(q);
        self.discs.iter().all(|&(x, y, r)| {
            let d = Body::new("d", Shape::cylinder(r, 0.2), RigidTransform::from_translation(x, y, 0.0));
            links.iter().all(|l| !collide_pair(l, &d))
        })
    }
}

/// Breadth-first search over 0.02 rad cells.
pub fn grid_reachable<S: ConfigSpace<2>>(space: &S, start: &[f64; 2], goal: &[f64; 2]) -> bool {
    let h = 0.02;
    let (lo, hi) = (space.lower(), space.upper());
    let n: Vec<usize> = (0..2).map(|i| ((hi[i] - lo[i]) / h).round() as usize + 1).collect();
    let cell = |q: &[f64; 2]| -> (usize, usize) {
        (((q[0] - lo[0]) / h).round() as usize, ((q[1] - lo[1]) / h).round() as usize)
    };
    let at = |i: usize, j: usize| [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
    let free: Vec<Vec<bool>> = (0..n[0]).map(|i| (0..n[1]).map(|j| space.is_free(&at(i, j))).collect()).collect();
    let (s, g) = (cell(start), cell(goal));
    let mut seen = vec![vec![false; n[1]]; n[0]];
    let mut q = VecDeque::from([s]);
    seen[s.0][s.1] = true;
    while let Some((i, j)) = q.pop_front() {
        if (i, j) == g {
            return true;
        }
        for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            if a < 0 || b < 0 || a >= n[0] as i64 || b >= n[1] as i64 {
                continue;
            }
            let (a, b) = (a as usize, b as usize);
            if free[a][b] && !seen[a][b] {
                seen[a][b] = true;
                q.push_back((a, b));
            }
        }
    }
    false
}

