use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grasps::Grasp;
use super::tool::ToolModel;
use super::GraspDbError;
use crate::geom::{shapes_within, RigidTransform, COLLISION_MARGIN};
use crate::rng::{halton, substream};
use crate::robot::{
    frames_unchecked, ik_residual_ok, jacobian_from_frames, manipulability_of, solve_ik, Arm, DualArmModel, IkOptions,
    Joints,
};
use crate::world::{arm_world_bodies, Holders, Role, World, WorldBody};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandoverParams {
    pub region_center: Vector3<f64>,
    /// Full edge lengths of the axis-aligned region box, m.
    pub region_size: Vector3<f64>,
    pub region_samples: usize,
    /// Largest random tilt applied to the nominal tool orientations, rad.
    pub orientation_jitter: f64,
    /// Pairs kept per sampled tool pose, best first.
    pub max_pairs_per_sample: usize,
    /// Minimum distance between the two grasp centers on the tool, m.
    pub min_grasp_separation: f64,
    pub ik_restarts: usize,
}

impl Default for HandoverParams {
    fn default() -> Self {
        Self {
            region_center: Vector3::new(0.35, 0.0, 0.35),
            region_size: Vector3::new(0.3, 0.3, 0.2),
            region_samples: 64,
            orientation_jitter: 0.2,
            max_pairs_per_sample: 32,
            min_grasp_separation: 0.07,
            ik_restarts: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandoverSide {
    pub arm: Arm,
    pub grasp_id: usize,
    pub config: Joints,
}

/// Two arms holding the tool at once with distinct grasps. Stored with the
/// left arm as giver; exchanges may run in either direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandoverPair {
    pub giver: HandoverSide,
    pub receiver: HandoverSide,
    pub tool_pose: RigidTransform,
    /// min of the two arms' manipulability.
    pub score: f64,
}

impl HandoverPair {
    pub fn side(&self, arm: Arm) -> &HandoverSide {
        if self.giver.arm == arm {
            &self.giver
        } else {
            &self.receiver
        }
    }
}

/// Nominal handover orientations: shaft along +Y, along −Y, and upright.
fn nominal_orientation(i: usize) -> RigidTransform {
    match i % 3 {
        0 => RigidTransform::rot_x(-FRAC_PI_2),
        1 => RigidTransform::rot_x(FRAC_PI_2),
        _ => RigidTransform::identity(),
    }
}

/// Quasi-random tool pose `i` in the handover region.
pub fn region_pose(params: &HandoverParams, i: usize, seed: u64) -> RigidTransform {
    let k = i as u64 + 1;
    let u = Vector3::new(halton(k, 2), halton(k, 3), halton(k, 5)) - Vector3::repeat(0.5);
    let position = params.region_center + params.region_size.component_mul(&u);
    let mut rng = substream(seed, i as u64);
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let tilt = if axis.norm() > 1e-9 && params.orientation_jitter > 0.0 {
        RigidTransform::from_axis_angle(&axis, rng.random_range(0.0..params.orientation_jitter))
    } else {
        RigidTransform::identity()
    };
    tilt.compose(&nominal_orientation(i)).with_position(position)
}

/// One arm holding the tool at `tool_pose` while the other arm rests at home:
/// no collision with the torso, the other arm, the tool or itself.
pub fn single_arm_clear(
    model: &DualArmModel,
    tool: &ToolModel,
    tool_pose: &RigidTransform,
    arm: Arm,
    q: &Joints,
    jaw_width: f64,
) -> bool {
    let mut w = World::new();
    w.add_torso(model);
    w.add_arm(model, arm, q, jaw_width);
    w.add_arm(model, arm.other(), model.home().arm(arm.other()), model.gripper.stroke);
    w.add_bodies(tool.bodies(tool_pose), Role::Tool);
    w.holders = Holders::one(arm);
    !w.collides()
}

pub(crate) fn hand_bodies(model: &DualArmModel, arm: Arm, q: &Joints, width: f64) -> Vec<WorldBody> {
    let mut b = arm_world_bodies(model, arm, q, width);
    b.extend(arm_world_bodies(model, arm, q, model.gripper.stroke).into_iter().filter(|b| matches!(b.role, Role::Finger { .. })));
    b
}

/// The two arms clear each other with the fingers closed or fully open.
pub fn arms_clear(model: &DualArmModel, left: (&Joints, f64), right: (&Joints, f64)) -> bool {
    let l = hand_bodies(model, Arm::Left, left.0, left.1);
    let r = hand_bodies(model, Arm::Right, right.0, right.1);
    !l.iter()
        .any(|a| r.iter().any(|b| shapes_within(&a.shape, &a.pose, &b.shape, &b.pose, COLLISION_MARGIN)))
}

struct Feasible {
    grasp: usize,
    config: Joints,
    manip: f64,
}

fn feasible_grasps(
    model: &DualArmModel,
    tool: &ToolModel,
    grasps: &[Grasp],
    tool_pose: &RigidTransform,
    arm: Arm,
    restarts: usize,
    seed: u64,
) -> Vec<Feasible> {
    let am = model.arm(arm);
    let opts = IkOptions::default();
    let mut out = Vec::new();
    for g in grasps {
        let target = tool_pose.compose(&g.hand_pose);
        let mut rng = substream(seed, (g.id as u64) << 1 | arm.index() as u64);
        let Ok(q) = solve_ik(am, &target, &[am.home], &mut rng, restarts, &opts) else {
            continue;
        };
        if !single_arm_clear(model, tool, tool_pose, arm, &q, g.jaw_width) {
            continue;
        }
        let manip = manipulability_of(&jacobian_from_frames(&frames_unchecked(am, &q)));
        out.push(Feasible {
            grasp: g.id,
            config: q,
            manip,
        });
    }
    out
}

fn grasp_separation(grasps: &[Grasp], a: usize, b: usize) -> f64 {
    (grasps[a].hand_pose.position - grasps[b].hand_pose.position).norm()
}

/// Best pairs at one tool pose, at most `max_pairs_per_sample`.
fn pairs_at(
    model: &DualArmModel,
    tool: &ToolModel,
    grasps: &[Grasp],
    params: &HandoverParams,
    tool_pose: &RigidTransform,
    seed: u64,
) -> Vec<HandoverPair> {
    let left = feasible_grasps(model, tool, grasps, tool_pose, Arm::Left, params.ik_restarts, seed);
    if left.is_empty() {
        return Vec::new();
    }
    let right = feasible_grasps(model, tool, grasps, tool_pose, Arm::Right, params.ik_restarts, seed);
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, l) in left.iter().enumerate() {
        for (j, r) in right.iter().enumerate() {
            if l.grasp != r.grasp && grasp_separation(grasps, l.grasp, r.grasp) >= params.min_grasp_separation {
                cands.push((l.manip.min(r.manip), i, j));
            }
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = Vec::new();
    for (score, i, j) in cands {
        if out.len() >= params.max_pairs_per_sample {
            break;
        }
        let (l, r) = (&left[i], &right[j]);
        if arms_clear(
            model,
            (&l.config, grasps[l.grasp].jaw_width),
            (&r.config, grasps[r.grasp].jaw_width),
        ) {
            out.push(HandoverPair {
                giver: HandoverSide {
                    arm: Arm::Left,
                    grasp_id: l.grasp,
                    config: l.config,
                },
                receiver: HandoverSide {
                    arm: Arm::Right,
                    grasp_id: r.grasp,
                    config: r.config,
                },
                tool_pose: *tool_pose,
                score,
            });
        }
    }
    out
}

/// Handover pairs over `region_samples` quasi-random tool poses, sorted by
/// score descending. Each sample uses its own random stream, so the result
/// does not depend on thread scheduling.
pub fn compute_handover_pairs(
    model: &DualArmModel,
    tool: &ToolModel,
    grasps: &[Grasp],
    params: &HandoverParams,
    seed: u64,
) -> Result<Vec<HandoverPair>, GraspDbError> {
    if grasps.is_empty() {
        return Err(GraspDbError::NoGrasps);
    }
    if grasps.iter().enumerate().any(|(i, g)| g.id != i) {
        return Err(GraspDbError::InvalidParameter("grasp ids must equal their list positions"));
    }
    let per_sample: Vec<Vec<HandoverPair>> = (0..params.region_samples)
        .into_par_iter()
        .map(|i| {
            let pose = region_pose(params, i, seed);
            pairs_at(model, tool, grasps, params, &pose, crate::rng::mix(seed, i as u64 + 1))
        })
        .collect();
    let mut pairs: Vec<(usize, HandoverPair)> = per_sample
        .into_iter()
        .enumerate()
        .flat_map(|(i, v)| v.into_iter().map(move |p| (i, p)))
        .collect();
    if pairs.is_empty() {
        return Err(GraspDbError::NoPairs);
    }
    // Stable sort keeps sample order among equal scores.
    pairs.sort_by(|a, b| b.1.score.total_cmp(&a.1.score));
    Ok(pairs.into_iter().map(|(_, p)| p).collect())
}

/// Re-checks a stored pair from scratch.
pub fn pair_is_valid(model: &DualArmModel, tool: &ToolModel, grasps: &[Grasp], p: &HandoverPair) -> bool {
    if p.giver.arm == p.receiver.arm || p.giver.grasp_id == p.receiver.grasp_id {
        return false;
    }
    let (Some(gg), Some(gr)) = (grasps.get(p.giver.grasp_id), grasps.get(p.receiver.grasp_id)) else {
        return false;
    };
    for (side, g) in [(&p.giver, gg), (&p.receiver, gr)] {
        let am = model.arm(side.arm);
        if !am.within_limits(&side.config) || !ik_residual_ok(am, &side.config, &p.tool_pose.compose(&g.hand_pose)) {
            return false;
        }
    }
    let mut w = World::new();
    w.add_torso(model);
    w.add_arm(model, p.giver.arm, &p.giver.config, gg.jaw_width);
    w.add_arm(model, p.receiver.arm, &p.receiver.config, gr.jaw_width);
    w.add_bodies(tool.bodies(&p.tool_pose), Role::Tool);
    w.holders = Holders::both();
    !w.collides()
}
