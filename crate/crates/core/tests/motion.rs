mod common;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{grid_reachable, Planar};
use tooltamp::geom::{Body, RigidTransform, Shape};
use tooltamp::motion::{
    path_length, plan_arm_motion, rrt_connect, shortcut_waypoints, time_parameterize, validate_path,
    validate_waypoints, ArmSpace, Attached, ConfigSpace, MotionError, MotionQuery, Path, RrtParams,
};
use tooltamp::robot::{default_dual_arm, forward_kinematics, torso_bodies, Arm, DualArmModel, Joints};
use tooltamp::world::{arm_world_bodies, Holders, Role, WorldBody};

#[test]
fn two_link_wall_agrees_with_grid_bfs() {
    let params = RrtParams {
        max_iterations: 3000,
        ..RrtParams::default()
    };
    let (start, goal) = ([-1.0, 0.3], [1.0, 0.3]);
    // A disc on the x axis near the shoulder blocks the first link at every elbow angle.
    let wall = Planar {
        discs: vec![(0.4, 0.0, 0.05)],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(rrt_connect(&wall, &start, &goal, &params, &mut rng), Err(MotionError::NoPath));
    assert!(!grid_reachable(&wall, &start, &goal));
    // Farther out only the forearm can hit it, and bending the elbow clears it.
    let gap = Planar {
        discs: vec![(1.6, 0.0, 0.05)],
    };
    assert!(grid_reachable(&gap, &start, &goal));
    let path = rrt_connect(&gap, &start, &goal, &params, &mut rng).unwrap();
    assert!(validate_waypoints(&gap, &path, &start, &goal, 0.02));
}

#[test]
fn shortcut_and_timing_on_the_plane() {
    let free = Planar { discs: vec![] };
    let zigzag = vec![[-1.0, 0.0], [-0.5, 1.0], [0.0, -1.0], [0.5, 1.0], [1.0, 0.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    assert_eq!(shortcut_waypoints(&free, &zigzag, 0, 0.02, &mut rng), zigzag);
    let short = shortcut_waypoints(&free, &zigzag, 20, 0.02, &mut rng);
    assert!(path_length(&short) < path_length(&zigzag));
    let straight = vec![[-1.0, 0.0], [1.0, 0.0]];
    assert_eq!(shortcut_waypoints(&free, &straight, 20, 0.02, &mut rng), straight);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let same = [0.2, 0.2];
    assert_eq!(rrt_connect(&free, &same, &same, &RrtParams::default(), &mut rng).unwrap(), vec![same]);

    let p = Path {
        arm: Arm::Left,
        waypoints: vec![[0.0; 6], [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]],
    };
    let t = time_parameterize(&p, 0.5);
    assert_eq!(t.last().unwrap().0, 2.0);
    assert_eq!(time_parameterize(&p, 1.0).last().unwrap().0, 1.0);
    let single = Path {
        arm: Arm::Left,
        waypoints: vec![[0.0; 6]],
    };
    assert_eq!(time_parameterize(&single, 1.0), vec![(0.0, [0.0; 6])]);
}

fn static_obstacles(m: &DualArmModel, other: Arm) -> Vec<WorldBody> {
    let mut out: Vec<WorldBody> = torso_bodies(m)
        .into_iter()
        .map(|b| WorldBody {
            name: b.name,
            shape: b.shape,
            pose: b.pose,
            role: Role::Torso,
        })
        .collect();
    out.extend(arm_world_bodies(m, other, m.home().arm(other), m.gripper.stroke));
    out.push(WorldBody {
        name: "table".into(),
        shape: Shape::cuboid(0.35, 0.6, 0.025),
        pose: RigidTransform::from_translation(0.5, 0.0, -0.025),
        role: Role::Table,
    });
    out
}

fn free_config(space: &ArmSpace, rng: &mut ChaCha8Rng) -> Joints {
    loop {
        let (lo, hi) = (space.lower(), space.upper());
        let q: Joints = std::array::from_fn(|i| rng.random_range(lo[i]..hi[i]));
        if space.is_free(&q) {
            return q;
        }
    }
}

#[test]
fn default_robot_queries_validate_at_two_resolutions() {
    let m = default_dual_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for k in 0..50 {
        let arm = if k % 2 == 0 { Arm::Left } else { Arm::Right };
        let mut query = MotionQuery {
            arm,
            start: *m.home().arm(arm),
            goal: *m.home().arm(arm),
            jaw_width: m.gripper.stroke,
            attached: vec![],
            obstacles: static_obstacles(&m, arm.other()),
            holders: Holders::none(),
            params: RrtParams {
                seed: k,
                ..RrtParams::default()
            },
        };
        let (start, goal) = {
            let space = ArmSpace::new(&m, &query);
            (free_config(&space, &mut rng), free_config(&space, &mut rng))
        };
        query.start = start;
        query.goal = goal;
        let path = plan_arm_motion(&m, &query, 40).unwrap_or_else(|e| panic!("query {k}: {e}"));
        assert!(validate_path(&m, &path, &query, 0.02));
        assert!(validate_path(&m, &path, &query, 0.002), "query {k} fails at the finer resolution");
        let again = plan_arm_motion(&m, &query, 40).unwrap();
        assert_eq!(path, again);
        // A waypoint moved into the torso invalidates the path.
        let mut bad = path.clone();
        let mid = RigidTransform::from_translation(-0.22, 0.0, 0.25);
        let mut ik_rng = ChaCha8Rng::seed_from_u64(k);
        if let Ok(q) = tooltamp::robot::inverse_kinematics(m.arm(arm), &mid, &mut ik_rng, 5) {
            bad.waypoints.insert(1, q);
            assert!(!validate_path(&m, &bad, &query, 0.02));
        }
    }
}

#[test]
fn attached_body_moves_rigidly_and_static_object_blocks() {
    let m = default_dual_arm();
    let arm = Arm::Left;
    let home = *m.home().arm(arm);
    let tcp = forward_kinematics(m.arm(arm), &home).unwrap();
    let block = Body::new("block", Shape::cuboid(0.02, 0.02, 0.02), tcp.compose(&RigidTransform::from_translation(0.0, 0.0, 0.06)));
    let query = MotionQuery {
        arm,
        start: home,
        goal: [1.0, 0.3, 1.7, 0.2, 0.9, 0.4],
        jaw_width: 0.02,
        attached: Attached::from_bodies(&tcp, [block.clone()], Role::Object),
        obstacles: static_obstacles(&m, Arm::Right),
        holders: Holders::one(arm),
        params: RrtParams::default(),
    };
    let path = plan_arm_motion(&m, &query, 40).unwrap();
    let space = ArmSpace::new(&m, &query);
    for w in path.waypoints.windows(2) {
        for k in 0..=10 {
            let q = tooltamp::motion::lerp(&w[0], &w[1], k as f64 / 10.0);
            let t = forward_kinematics(m.arm(arm), &q).unwrap();
            let carried = space.moving_bodies(&q).into_iter().find(|b| b.name == "block").unwrap();
            let rel = t.inverse().compose(&carried.pose);
            assert!(rel.approx_eq(&RigidTransform::from_translation(0.0, 0.0, 0.06), 1e-12, 1e-12));
        }
    }
    // The same block left in place is an obstacle the arm's start overlaps.
    let mut stuck = query.clone();
    stuck.attached.clear();
    stuck.jaw_width = 0.0;
    stuck.obstacles.push(WorldBody {
        name: "block".into(),
        shape: block.shape,
        pose: block.pose.compose(&RigidTransform::from_translation(0.0, 0.0, -0.04)),
        role: Role::Object,
    });
    assert!(matches!(plan_arm_motion(&m, &stuck, 0), Err(MotionError::InvalidQuery(_))));
}
