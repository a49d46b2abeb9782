//! C ABI over the planner. Every object crosses the boundary as an opaque
//! handle owned by the caller and released with its `_free` function. Every
//! call returns a `TtStatus`; on failure `tt_last_error` describes it.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use tooltamp::geom::RigidTransform;
use tooltamp::graspdb::{generate_database, load_database, save_database, DbParams, GraspDatabase, ToolModel};
use tooltamp::planner::{plan_task, TaskSpec};
use tooltamp::replay::replay;
use tooltamp::robot::{
    default_dual_arm, forward_kinematics, inverse_kinematics, manipulability, Arm, DualArmModel, Joints, RobotError,
};
use tooltamp::scene::parse_scene;
use tooltamp::trajectory::{read_trajectory, write_trajectory, Trajectory};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    InputError = 3,
    PlanningFailure = 4,
    NoSolution = 5,
    LimitViolation = 6,
    Panic = 7,
}

pub const TT_ARM_LEFT: c_int = 0;
pub const TT_ARM_RIGHT: c_int = 1;

/// Robot model.
pub struct TtRobot {
    model: DualArmModel,
}

/// Grasp and handover database of one tool.
pub struct TtDatabase {
    db: GraspDatabase,
}

/// Scene with its database.
pub struct TtProblem {
    spec: TaskSpec,
    db: GraspDatabase,
}

/// Timed dual-arm trajectory with events.
pub struct TtTrajectory {
    tr: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let s = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn fail(status: TtStatus, msg: impl std::fmt::Display) -> TtStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> TtStatus) -> TtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(TtStatus::Panic, "internal panic"),
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, TtStatus> {
    if p.is_null() {
        return Err(fail(TtStatus::NullArgument, "null path"));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => Err(fail(TtStatus::InvalidArgument, "path is not UTF-8")),
    }
}

fn arm_arg(arm: c_int) -> Result<Arm, TtStatus> {
    match arm {
        TT_ARM_LEFT => Ok(Arm::Left),
        TT_ARM_RIGHT => Ok(Arm::Right),
        _ => Err(fail(TtStatus::InvalidArgument, format!("arm must be 0 or 1, got {arm}"))),
    }
}

fn robot_status(e: RobotError) -> TtStatus {
    let s = match e {
        RobotError::NoSolution => TtStatus::NoSolution,
        RobotError::LimitViolation { .. } | RobotError::StrokeExceeded { .. } => TtStatus::LimitViolation,
        _ => TtStatus::InputError,
    };
    fail(s, e)
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            return fail(TtStatus::NullArgument, "null argument");
        }
    };
}

/// Message of the last failed call on this thread. Valid until the next
/// call on the same thread; never null.
#[no_mangle]
pub extern "C" fn tt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_robot_default(out: *mut *mut TtRobot) -> TtStatus {
    non_null!(out);
    guard(|| {
        put(out, TtRobot { model: default_dual_arm() });
        TtStatus::Ok
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_robot_load(path: *const c_char, out: *mut *mut TtRobot) -> TtStatus {
    non_null!(out);
    guard(|| {
        let p = try_ffi!(path_arg(path));
        match DualArmModel::load(&p) {
            Ok(model) => {
                put(out, TtRobot { model });
                TtStatus::Ok
            }
            Err(e) => fail(TtStatus::InputError, e),
        }
    })
}

/// # Safety
/// `robot` must come from a `tt_robot_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn tt_robot_free(robot: *mut TtRobot) {
    if !robot.is_null() {
        drop(Box::from_raw(robot));
    }
}

/// TCP pose of `arm` at joints `q[6]`: position `[3]` and quaternion `[4]` as w, x, y, z.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tt_robot_fk(
    robot: *const TtRobot,
    arm: c_int,
    q: *const f64,
    out_position: *mut f64,
    out_quaternion: *mut f64,
) -> TtStatus {
    non_null!(robot, q, out_position, out_quaternion);
    guard(|| {
        let arm = try_ffi!(arm_arg(arm));
        let q: Joints = *(q as *const Joints);
        match forward_kinematics((*robot).model.arm(arm), &q) {
            Ok(t) => {
                let p = std::slice::from_raw_parts_mut(out_position, 3);
                p.copy_from_slice(t.position.as_slice());
                let r = t.rotation.quaternion();
                let o = std::slice::from_raw_parts_mut(out_quaternion, 4);
                o.copy_from_slice(&[r.w, r.i, r.j, r.k]);
                TtStatus::Ok
            }
            Err(e) => robot_status(e),
        }
    })
}

/// Joints reaching the TCP pose (`position[3]`, quaternion `[4]` w, x, y, z)
/// from `restarts` seeded random starts.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tt_robot_ik(
    robot: *const TtRobot,
    arm: c_int,
    position: *const f64,
    quaternion: *const f64,
    seed: u64,
    restarts: u32,
    out_q: *mut f64,
) -> TtStatus {
    non_null!(robot, position, quaternion, out_q);
    guard(|| {
        let arm = try_ffi!(arm_arg(arm));
        let p = std::slice::from_raw_parts(position, 3);
        let w = std::slice::from_raw_parts(quaternion, 4);
        let quat = Quaternion::new(w[0], w[1], w[2], w[3]);
        if !(quat.norm() > 1e-9) || p.iter().chain(w).any(|v| !v.is_finite()) {
            return fail(TtStatus::InvalidArgument, "target pose is not finite or quaternion is zero");
        }
        let target = RigidTransform::new(Vector3::new(p[0], p[1], p[2]), UnitQuaternion::from_quaternion(quat));
        let mut rng = tooltamp::rng::substream(seed, 0);
        match inverse_kinematics((*robot).model.arm(arm), &target, &mut rng, restarts.max(1) as usize) {
            Ok(q) => {
                std::slice::from_raw_parts_mut(out_q, 6).copy_from_slice(&q);
                TtStatus::Ok
            }
            Err(e) => robot_status(e),
        }
    })
}

/// # Safety
/// `q` must hold 6 values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_robot_manipulability(
    robot: *const TtRobot,
    arm: c_int,
    q: *const f64,
    out: *mut f64,
) -> TtStatus {
    non_null!(robot, q, out);
    guard(|| {
        let arm = try_ffi!(arm_arg(arm));
        match manipulability((*robot).model.arm(arm), &*(q as *const Joints)) {
            Ok(m) => {
                *out = m;
                TtStatus::Ok
            }
            Err(e) => robot_status(e),
        }
    })
}

/// Generates the database of the tool file at `tool_path` with default parameters.
///
/// # Safety
/// `tool_path` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_database_generate(
    robot: *const TtRobot,
    tool_path: *const c_char,
    seed: u64,
    out: *mut *mut TtDatabase,
) -> TtStatus {
    non_null!(robot, out);
    guard(|| {
        let p = try_ffi!(path_arg(tool_path));
        let tool = match ToolModel::load(&p) {
            Ok(t) => t,
            Err(e) => return fail(TtStatus::InputError, e),
        };
        match generate_database(&(*robot).model, &tool, &DbParams::default(), seed) {
            Ok(db) => {
                put(out, TtDatabase { db });
                TtStatus::Ok
            }
            Err(e) => fail(TtStatus::PlanningFailure, e),
        }
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_database_load(path: *const c_char, out: *mut *mut TtDatabase) -> TtStatus {
    non_null!(out);
    guard(|| {
        let p = try_ffi!(path_arg(path));
        match load_database(&p) {
            Ok(db) => {
                put(out, TtDatabase { db });
                TtStatus::Ok
            }
            Err(e) => fail(TtStatus::InputError, e),
        }
    })
}

/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tt_database_save(db: *const TtDatabase, path: *const c_char) -> TtStatus {
    non_null!(db);
    guard(|| {
        let p = try_ffi!(path_arg(path));
        match save_database(&(*db).db, &p) {
            Ok(()) => TtStatus::Ok,
            Err(e) => fail(TtStatus::InputError, e),
        }
    })
}

/// # Safety
/// `out_grasps` and `out_pairs` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_database_counts(
    db: *const TtDatabase,
    out_grasps: *mut usize,
    out_pairs: *mut usize,
) -> TtStatus {
    non_null!(db, out_grasps, out_pairs);
    *out_grasps = (*db).db.grasps.len();
    *out_pairs = (*db).db.handover_pairs.len();
    TtStatus::Ok
}

/// # Safety
/// `db` must come from a `tt_database_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn tt_database_free(db: *mut TtDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Loads a scene file and a database file for its tool.
///
/// # Safety
/// Paths must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_problem_load(
    scene_path: *const c_char,
    db_path: *const c_char,
    out: *mut *mut TtProblem,
) -> TtStatus {
    non_null!(out);
    guard(|| {
        let sp = try_ffi!(path_arg(scene_path));
        let dp = try_ffi!(path_arg(db_path));
        let spec = match parse_scene(&sp) {
            Ok(s) => s,
            Err(e) => return fail(TtStatus::InputError, e),
        };
        let db = match load_database(&dp) {
            Ok(d) => d,
            Err(e) => return fail(TtStatus::InputError, e),
        };
        if db.tool_name != spec.tool.name {
            return fail(
                TtStatus::InputError,
                format!("database is for tool `{}` but the scene uses `{}`", db.tool_name, spec.tool.name),
            );
        }
        put(out, TtProblem { spec, db });
        TtStatus::Ok
    })
}

/// # Safety
/// `problem` must come from `tt_problem_load` or be null.
#[no_mangle]
pub unsafe extern "C" fn tt_problem_free(problem: *mut TtProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_plan(problem: *const TtProblem, seed: u64, out: *mut *mut TtTrajectory) -> TtStatus {
    non_null!(problem, out);
    guard(|| {
        let p = &*problem;
        match plan_task(&p.spec, &p.db, seed) {
            Ok(r) => {
                put(out, TtTrajectory { tr: r.trajectory });
                TtStatus::Ok
            }
            Err(e) => fail(TtStatus::PlanningFailure, e),
        }
    })
}

/// Replays `tr` against the problem's scene; `*out_valid` is 1 when the
/// trajectory is collision-free, within limits and leaves every object at its goal.
///
/// # Safety
/// `out_valid` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_validate(
    problem: *const TtProblem,
    tr: *const TtTrajectory,
    resolution: f64,
    out_valid: *mut c_int,
) -> TtStatus {
    non_null!(problem, tr, out_valid);
    if !(resolution > 0.0) {
        return fail(TtStatus::InvalidArgument, "resolution must be positive");
    }
    guard(|| {
        let rep = replay(&(*problem).spec, &(*tr).tr, resolution);
        *out_valid = rep.is_valid() as c_int;
        TtStatus::Ok
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_trajectory_read(path: *const c_char, out: *mut *mut TtTrajectory) -> TtStatus {
    non_null!(out);
    guard(|| {
        let p = try_ffi!(path_arg(path));
        match read_trajectory(&p) {
            Ok(tr) => {
                put(out, TtTrajectory { tr });
                TtStatus::Ok
            }
            Err(e) => fail(TtStatus::InputError, e),
        }
    })
}

/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tt_trajectory_write(tr: *const TtTrajectory, path: *const c_char) -> TtStatus {
    non_null!(tr);
    guard(|| {
        let p = try_ffi!(path_arg(path));
        match write_trajectory(&(*tr).tr, &p) {
            Ok(()) => TtStatus::Ok,
            Err(e) => fail(TtStatus::InputError, e),
        }
    })
}

/// Duration in seconds and the sample and event counts.
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tt_trajectory_info(
    tr: *const TtTrajectory,
    out_duration: *mut f64,
    out_samples: *mut usize,
    out_events: *mut usize,
) -> TtStatus {
    non_null!(tr, out_duration, out_samples, out_events);
    let t = &(*tr).tr;
    *out_duration = t.duration();
    *out_samples = t.samples.len();
    *out_events = t.events.len();
    TtStatus::Ok
}

/// Sample `index`: time, left joints `[6]`, right joints `[6]`, jaw widths `[2]`.
/// Any output pointer may be null to skip it.
///
/// # Safety
/// Non-null output pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tt_trajectory_sample(
    tr: *const TtTrajectory,
    index: usize,
    out_t: *mut f64,
    out_left: *mut f64,
    out_right: *mut f64,
    out_jaw: *mut f64,
) -> TtStatus {
    non_null!(tr);
    let samples = &(*tr).tr.samples;
    let Some(s) = samples.get(index) else {
        return fail(TtStatus::InvalidArgument, format!("sample index {index} out of range"));
    };
    if !out_t.is_null() {
        *out_t = s.t;
    }
    for (dst, src) in [(out_left, &s.left[..]), (out_right, &s.right[..]), (out_jaw, &s.jaw[..])] {
        if !dst.is_null() {
            ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
        }
    }
    TtStatus::Ok
}

/// # Safety
/// `tr` must come from a `tt_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn tt_trajectory_free(tr: *mut TtTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}
