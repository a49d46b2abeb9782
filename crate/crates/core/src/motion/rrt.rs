use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use super::MotionError;

/// Configuration space with box limits and a point validity test.
pub trait ConfigSpace<const N: usize> {
    fn lower(&self) -> [f64; N];
    fn upper(&self) -> [f64; N];
    /// Within limits and collision-free.
    fn is_free(&self, q: &[f64; N]) -> bool;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrtParams {
    pub step_size: f64,
    pub max_iterations: usize,
    pub goal_connect_threshold: f64,
    pub validation_resolution: f64,
    pub seed: u64,
}

impl Default for RrtParams {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_iterations: 5000,
            goal_connect_threshold: 0.1,
            validation_resolution: 0.02,
            seed: 0,
        }
    }
}

pub fn distance<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn max_abs_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn lerp<const N: usize>(a: &[f64; N], b: &[f64; N], t: f64) -> [f64; N] {
    std::array::from_fn(|i| a[i] + (b[i] - a[i]) * t)
}

/// Checks the interior and the end of segment `a → b`, sampled so that no
/// joint moves more than `resolution` between checks. `a` is assumed valid.
pub fn segment_free<const N: usize, S: ConfigSpace<N> + ?Sized>(
    space: &S,
    a: &[f64; N],
    b: &[f64; N],
    resolution: f64,
) -> bool {
    let steps = (max_abs_diff(a, b) / resolution).ceil().max(1.0) as usize;
    (1..=steps).all(|k| space.is_free(&lerp(a, b, k as f64 / steps as f64)))
}

/// Arc length of a waypoint chain.
pub fn path_length<const N: usize>(path: &[[f64; N]]) -> f64 {
    path.windows(2).map(|w| distance(&w[0], &w[1])).sum()
}

struct Tree<const N: usize> {
    nodes: Vec<[f64; N]>,
    parents: Vec<usize>,
}

impl<const N: usize> Tree<N> {
    fn new(root: [f64; N]) -> Self {
        Self {
            nodes: vec![root],
            parents: vec![usize::MAX],
        }
    }

    fn nearest(&self, q: &[f64; N]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d: f64 = n.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn push(&mut self, q: [f64; N], parent: usize) -> usize {
        self.nodes.push(q);
        self.parents.push(parent);
        self.nodes.len() - 1
    }

    /// Root-to-node chain.
    fn chain(&self, mut i: usize) -> Vec<[f64; N]> {
        let mut out = Vec::new();
        while i != usize::MAX {
            out.push(self.nodes[i]);
            i = self.parents[i];
        }
        out.reverse();
        out
    }
}

enum Extend {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

fn extend<const N: usize, S: ConfigSpace<N> + ?Sized>(
    space: &S,
    tree: &mut Tree<N>,
    target: &[f64; N],
    params: &RrtParams,
) -> Extend {
    let near = tree.nearest(target);
    let qn = tree.nodes[near];
    let d = distance(&qn, target);
    let (q_new, reached) = if d <= params.step_size {
        (*target, true)
    } else {
        (lerp(&qn, target, params.step_size / d), false)
    };
    if !segment_free(space, &qn, &q_new, params.validation_resolution) {
        return Extend::Trapped;
    }
    let id = tree.push(q_new, near);
    if reached {
        Extend::Reached(id)
    } else {
        Extend::Advanced(id)
    }
}

/// Greedy extension toward `target` until reached or blocked. A node within
/// the connect threshold is joined to `target` directly when that segment is free.
fn connect<const N: usize, S: ConfigSpace<N> + ?Sized>(
    space: &S,
    tree: &mut Tree<N>,
    target: &[f64; N],
    params: &RrtParams,
) -> Option<usize> {
    loop {
        match extend(space, tree, target, params) {
            Extend::Reached(id) => return Some(id),
            Extend::Advanced(id) => {
                let q = tree.nodes[id];
                if distance(&q, target) <= params.goal_connect_threshold
                    && segment_free(space, &q, target, params.validation_resolution)
                {
                    return Some(tree.push(*target, id));
                }
            }
            Extend::Trapped => return None,
        }
    }
}

fn sample<const N: usize, R: Rng + ?Sized>(lo: &[f64; N], hi: &[f64; N], rng: &mut R) -> [f64; N] {
    std::array::from_fn(|i| rng.random_range(lo[i]..=hi[i]))
}

/// Bidirectional RRT-Connect. Returns the waypoint chain from `start` to
/// `goal`, trying the straight segment first.
pub fn rrt_connect<const N: usize, S: ConfigSpace<N> + ?Sized, R: Rng + ?Sized>(
    space: &S,
    start: &[f64; N],
    goal: &[f64; N],
    params: &RrtParams,
    rng: &mut R,
) -> Result<Vec<[f64; N]>, MotionError> {
    if !space.is_free(start) {
        return Err(MotionError::InvalidQuery("start configuration is in collision or out of limits"));
    }
    if !space.is_free(goal) {
        return Err(MotionError::InvalidQuery("goal configuration is in collision or out of limits"));
    }
    if start == goal {
        return Ok(vec![*start]);
    }
    if segment_free(space, start, goal, params.validation_resolution) {
        return Ok(vec![*start, *goal]);
    }
    let (lo, hi) = (space.lower(), space.upper());
    let mut a = Tree::new(*start);
    let mut b = Tree::new(*goal);
    let mut a_is_start = true;
    for _ in 0..params.max_iterations {
        let q_rand = sample(&lo, &hi, rng);
        let new_a = match extend(space, &mut a, &q_rand, params) {
            Extend::Reached(id) | Extend::Advanced(id) => Some(id),
            Extend::Trapped => None,
        };
        if let Some(ia) = new_a {
            let target = a.nodes[ia];
            if let Some(ib) = connect(space, &mut b, &target, params) {
                let mut pa = a.chain(ia);
                let mut pb = b.chain(ib);
                pb.pop();
                pb.reverse();
                pa.extend(pb);
                if !a_is_start {
                    pa.reverse();
                }
                return Ok(pa);
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    Err(MotionError::NoPath)
}

/// Dense validity check of a whole path with fixed endpoints.
pub fn validate_waypoints<const N: usize, S: ConfigSpace<N> + ?Sized>(
    space: &S,
    path: &[[f64; N]],
    start: &[f64; N],
    goal: &[f64; N],
    resolution: f64,
) -> bool {
    let (Some(first), Some(last)) = (path.first(), path.last()) else {
        return false;
    };
    first == start
        && last == goal
        && space.is_free(first)
        && path.windows(2).all(|w| segment_free(space, &w[0], &w[1], resolution))
}

/// Random shortcutting: replaces the stretch between two random waypoints by
/// a straight segment when that segment is free. Never lengthens the path.
pub fn shortcut_waypoints<const N: usize, S: ConfigSpace<N> + ?Sized, R: Rng + ?Sized>(
    space: &S,
    path: &[[f64; N]],
    attempts: usize,
    resolution: f64,
    rng: &mut R,
) -> Vec<[f64; N]> {
    let mut p = path.to_vec();
    for _ in 0..attempts {
        if p.len() < 3 {
            break;
        }
        let i = rng.random_range(0..p.len() - 2);
        let j = rng.random_range(i + 2..p.len());
        let direct = distance(&p[i], &p[j]);
        let current = path_length(&p[i..=j]);
        if direct < current && segment_free(space, &p[i], &p[j], resolution) {
            p.drain(i + 1..j);
        }
    }
    p
}

/// Timestamps for a waypoint chain at constant `max_joint_speed` per segment.
pub fn timestamps<const N: usize>(path: &[[f64; N]], max_joint_speed: f64) -> Vec<f64> {
    let mut t = 0.0;
    let mut out = Vec::with_capacity(path.len());
    for (i, q) in path.iter().enumerate() {
        if i > 0 {
            t += max_abs_diff(&path[i - 1], q) / max_joint_speed;
        }
        out.push(t);
    }
    out
}
