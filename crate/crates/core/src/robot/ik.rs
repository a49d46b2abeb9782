use nalgebra::{Matrix6, Vector6};
use rand::RngExt;

use super::kinematics::{frames_unchecked, jacobian_from_frames, pose_error};
use super::model::{ArmModel, Joints};
use super::RobotError;
use crate::geom::RigidTransform;

/// Position tolerance of an accepted solution, m.
pub const IK_POSITION_TOL: f64 = 1e-4;
/// Orientation tolerance of an accepted solution, rad.
pub const IK_ORIENTATION_TOL: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct IkOptions {
    pub damping: f64,
    pub max_step: f64,
    pub max_iterations: usize,
    /// Descents stop once below these (tighter than the acceptance tolerances).
    pub converge_position: f64,
    pub converge_orientation: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            damping: 1e-2,
            max_step: 0.2,
            max_iterations: 200,
            converge_position: 1e-6,
            converge_orientation: 1e-5,
        }
    }
}

/// Whether `q` places the TCP at `target` within the IK tolerances.
pub fn ik_residual_ok(arm: &ArmModel, q: &Joints, target: &RigidTransform) -> bool {
    let tcp = frames_unchecked(arm, q).tcp;
    tcp.distance_to(target) <= IK_POSITION_TOL && tcp.angle_to(target) <= IK_ORIENTATION_TOL
}

/// One damped-least-squares descent. Returns the final configuration and
/// whether it met the acceptance tolerances.
fn descend(arm: &ArmModel, target: &RigidTransform, mut q: Joints, opts: &IkOptions) -> (Joints, bool) {
    let lambda_sq = opts.damping * opts.damping;
    for _ in 0..opts.max_iterations {
        let frames = frames_unchecked(arm, &q);
        let err = pose_error(target, &frames.tcp);
        let pos = err.fixed_rows::<3>(0).norm();
        let ang = err.fixed_rows::<3>(3).norm();
        if pos <= opts.converge_position && ang <= opts.converge_orientation {
            return (q, true);
        }
        let j = jacobian_from_frames(&frames);
        let jjt = j * j.transpose() + Matrix6::identity() * lambda_sq;
        let Some(chol) = jjt.cholesky() else {
            break;
        };
        let mut dq: Vector6<f64> = j.transpose() * chol.solve(&err);
        let biggest = dq.amax();
        if biggest > opts.max_step {
            dq *= opts.max_step / biggest;
        }
        for (v, d) in q.iter_mut().zip(dq.iter()) {
            *v += d;
        }
        arm.clamp(&mut q);
    }
    let ok = ik_residual_ok(arm, &q, target);
    (q, ok)
}

/// Numeric IK: damped-least-squares descents from each of `initial` and then
/// from `restarts` uniformly random configurations.
pub fn solve_ik<R: rand::Rng + ?Sized>(
    arm: &ArmModel,
    target: &RigidTransform,
    initial: &[Joints],
    rng: &mut R,
    restarts: usize,
    opts: &IkOptions,
) -> Result<Joints, RobotError> {
    // Cheap rejection of targets beyond the chain's length.
    if (target.position - arm.reach_origin()).norm() > arm.max_reach() + 1e-6 {
        return Err(RobotError::NoSolution);
    }
    for seed in initial {
        let mut q = *seed;
        arm.clamp(&mut q);
        let (q, ok) = descend(arm, target, q, opts);
        if ok {
            return Ok(q);
        }
    }
    let lower = arm.lower();
    let upper = arm.upper();
    for _ in 0..restarts {
        let q: Joints = std::array::from_fn(|i| rng.random_range(lower[i]..=upper[i]));
        let (q, ok) = descend(arm, target, q, opts);
        if ok {
            return Ok(q);
        }
    }
    Err(RobotError::NoSolution)
}

/// IK from `restarts` random seeds with default options.
pub fn inverse_kinematics<R: rand::Rng + ?Sized>(
    arm: &ArmModel,
    target: &RigidTransform,
    rng: &mut R,
    restarts: usize,
) -> Result<Joints, RobotError> {
    solve_ik(arm, target, &[], rng, restarts, &IkOptions::default())
}
