//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::process::{Command, ExitCode};

use nalgebra::Vector3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{bfs_hops, fixtures, grid_reachable, random_graph, Planar};
use tooltamp::cli::run_bench;
use tooltamp::geom::{compose, RigidTransform, Shape};
use tooltamp::graspdb::{load_database, GraspDatabase};
use tooltamp::motion::{rrt_connect, MotionError, RrtParams};
use tooltamp::planner::{episode_grammar_ok, plan_task, PlanResult, TaskSpec, GOAL_ORIENTATION_TOL, GOAL_POSITION_TOL};
use tooltamp::regrasp::RegraspError;
use tooltamp::replay::{replay, snapshot};
use tooltamp::robot::{
    default_dual_arm, forward_kinematics, inverse_kinematics, jacobian, manipulability, ArmModel, Joints,
    IK_ORIENTATION_TOL, IK_POSITION_TOL,
};
use tooltamp::scene::parse_scene;
use tooltamp::suction::{extract_facets, sample_suction_poses, tool_pose_on_object, Facet, FacetSet, SuctionParams, SuctionPose};

const SEEDS: u64 = 10;

struct Run {
    seed: u64,
    result: Result<PlanResult, String>,
}

struct Fixture {
    name: &'static str,
    spec: TaskSpec,
    db: GraspDatabase,
    runs: Vec<Run>,
}

fn run_fixture(name: &'static str, db: &str) -> Fixture {
    let spec = parse_scene(&fixtures().join(format!("scenes/{name}.json"))).unwrap();
    let db = load_database(&fixtures().join(format!("db/{db}.json"))).unwrap();
    let runs = (0..SEEDS)
        .into_par_iter()
        .map(|seed| Run {
            seed,
            result: plan_task(&spec, &db, seed).map_err(|e| e.to_string()),
        })
        .collect();
    Fixture { name, spec, db, runs }
}

/// Objects at their goals in the final replayed state and a clean replay.
fn succeeded(spec: &TaskSpec, r: &PlanResult) -> bool {
    let end = r.trajectory.duration();
    let Ok(s) = snapshot(spec, &r.trajectory, end) else {
        return false;
    };
    let at_goal = spec
        .objects
        .iter()
        .zip(&s.objects)
        .all(|(o, p)| o.goal.distance_to(p) <= GOAL_POSITION_TOL && o.goal.angle_to(p) <= GOAL_ORIENTATION_TOL);
    at_goal && replay(spec, &r.trajectory, 0.02).is_valid()
}

fn successes(f: &Fixture) -> usize {
    f.runs
        .par_iter()
        .filter(|r| r.result.as_ref().is_ok_and(|p| succeeded(&f.spec, p)))
        .count()
}

fn report(n: usize, ok: bool, what: &str, detail: String) -> bool {
    println!("criterion {n}: {} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn criterion_1(fixtures: &[&Fixture]) -> bool {
    let counts: Vec<(&str, usize)> = fixtures.iter().map(|f| (f.name, successes(f))).collect();
    for f in fixtures {
        for r in &f.runs {
            if let Err(e) = &r.result {
                eprintln!("  {} seed {}: {e}", f.name, r.seed);
            }
        }
    }
    let ok = counts.iter().all(|(_, c)| *c >= 9);
    let detail = counts.iter().map(|(n, c)| format!("{n} {c}/{SEEDS}")).collect::<Vec<_>>().join(", ");
    report(1, ok, "end-to-end fixtures", detail)
}

fn criterion_2(boxes: &Fixture) -> bool {
    let worst = boxes
        .runs
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .flat_map(|p| p.episodes.iter().map(|e| e.stats.total()))
        .fold(0.0, f64::max);
    let dir = tempfile::tempdir().unwrap();
    let suite = serde_json::json!({ "entries": [{
        "name": "three_boxes",
        "scene": fixtures().join("scenes/three_boxes.json"),
        "db": fixtures().join("db/symmetric_long.json"),
    }]});
    std::fs::write(dir.path().join("suite.json"), suite.to_string()).unwrap();
    let bench = run_bench(dir.path(), 1, 0).unwrap();
    let header = bench.to_text().lines().next().unwrap_or_default().to_string();
    let shape = bench.timings.len() == 3
        && ["suction", "regr-1", "motion-1", "regr-2", "motion-2", "total"]
            .iter()
            .all(|c| header.contains(c));
    let bench_worst = bench.timings.iter().map(|t| t.mean.total()).fold(0.0, f64::max);
    report(
        2,
        shape && worst <= 120.0 && bench_worst <= 120.0,
        "timing envelope",
        format!("max per-object total {worst:.2} s over {SEEDS} seeds, bench {bench_worst:.2} s, table shape {shape}"),
    )
}

fn criterion_3(sym: &Fixture, asym: &Fixture) -> bool {
    let (s, a) = (successes(sym), successes(asym));
    let (ps, pa) = (sym.db.handover_pairs.len(), asym.db.handover_pairs.len());
    report(
        3,
        s >= a && ps > pa,
        "tool comparison",
        format!("success symmetric {s}/{SEEDS} vs asymmetric {a}/{SEEDS}, handover pairs {ps} vs {pa}"),
    )
}

fn criterion_4() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let (mut agree, mut bounded) = (0, 0);
    for _ in 0..100 {
        let mut g = random_graph(&mut rng);
        let hops = |g: &tooltamp::regrasp::RegraspGraph| match g.search_sequence() {
            Ok(s) => Some(s.nodes.len() - 1),
            Err(RegraspError::NoSequence) => None,
            Err(e) => panic!("{e}"),
        };
        let mut same = hops(&g) == bfs_hops(&g);
        let budget = g.edge_count();
        let mut iterations = 0;
        while let Ok(s) = g.search_sequence() {
            let edges: Vec<_> = s.edges().collect();
            g.delete_edge(edges[rng.random_range(0..edges.len())]).unwrap();
            iterations += 1;
            same &= hops(&g) == bfs_hops(&g);
            if iterations > budget {
                break;
            }
        }
        agree += same as usize;
        bounded += (iterations <= budget) as usize;
    }
    report(
        4,
        agree == 100 && bounded == 100,
        "regrasp oracle",
        format!("BFS agreement {agree}/100, deletion loops within |edges| {bounded}/100"),
    )
}

fn criterion_5(all: &[&Fixture]) -> bool {
    let plans: Vec<(&TaskSpec, &PlanResult)> = all
        .iter()
        .flat_map(|f| f.runs.iter().filter_map(|r| r.result.as_ref().ok()).map(|p| (&f.spec, p)))
        .collect();
    let failures: usize = plans
        .par_iter()
        .map(|(spec, p)| {
            let coarse = replay(spec, &p.trajectory, 0.02).violations.len();
            let fine = replay(spec, &p.trajectory, 0.002).violations.len();
            (coarse + fine > 0) as usize
        })
        .sum();
    let wall = Planar {
        discs: vec![(0.4, 0.0, 0.05)],
    };
    let (start, goal) = ([-1.0, 0.3], [1.0, 0.3]);
    let params = RrtParams {
        max_iterations: 3000,
        ..RrtParams::default()
    };
    let rrt = rrt_connect(&wall, &start, &goal, &params, &mut ChaCha8Rng::seed_from_u64(0));
    let grid = grid_reachable(&wall, &start, &goal);
    let corridor = rrt == Err(MotionError::NoPath) && !grid;
    report(
        5,
        failures == 0 && corridor,
        "motion validity",
        format!(
            "{} trajectories with violations at 0.02 or 0.002 rad: {failures}; blocked corridor RRT {:?}, grid reachable {grid}",
            plans.len(),
            rrt.as_ref().err()
        ),
    )
}

fn random_q(arm: &ArmModel, rng: &mut ChaCha8Rng, inset: f64) -> Joints {
    let (lo, hi) = (arm.lower(), arm.upper());
    std::array::from_fn(|i| rng.random_range(lo[i] + inset..hi[i] - inset))
}

fn criterion_6() -> bool {
    let m = default_dual_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ik = 0;
    for k in 0..200 {
        let arm = if k % 2 == 0 { &m.left } else { &m.right };
        let target = forward_kinematics(arm, &random_q(arm, &mut rng, 0.0)).unwrap();
        if let Ok(q) = inverse_kinematics(arm, &target, &mut rng, 10) {
            let t = forward_kinematics(arm, &q).unwrap();
            ik += (t.distance_to(&target) <= IK_POSITION_TOL && t.angle_to(&target) <= IK_ORIENTATION_TOL) as usize;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 100 {
        let arm = if checked % 2 == 0 { &m.left } else { &m.right };
        let q = random_q(arm, &mut rng, 1e-3);
        if manipulability(arm, &q).unwrap() < 1e-4 {
            continue;
        }
        let j = jacobian(arm, &q).unwrap();
        let h = 1e-6;
        for c in 0..6 {
            let (mut qp, mut qm) = (q, q);
            qp[c] += h;
            qm[c] -= h;
            let (tp, tm) = (forward_kinematics(arm, &qp).unwrap(), forward_kinematics(arm, &qm).unwrap());
            let v = (tp.position - tm.position) / (2.0 * h);
            let w = (tp.rotation * tm.rotation.inverse()).scaled_axis() / (2.0 * h);
            for r in 0..6 {
                let fd = if r < 3 { v[r] } else { w[r - 3] };
                worst = worst.max((j[(r, c)] - fd).abs() / j[(r, c)].abs().max(1.0));
            }
        }
        checked += 1;
    }
    let singular = manipulability(&m.left, &[0.0; 6]).unwrap();
    report(
        6,
        ik >= 190 && worst <= 1e-5 && singular <= 1e-9,
        "kinematics",
        format!("IK round trip {ik}/200, worst Jacobian error {worst:.1e}, stretched manipulability {singular:.1e}"),
    )
}

fn random_transform(rng: &mut ChaCha8Rng) -> RigidTransform {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    RigidTransform::from_axis_angle(&axis, rng.random_range(-3.0..3.0)).with_position(Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ))
}

fn criterion_7() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut props = 0;
    for _ in 0..1000 {
        let (obj, rel, w) = (random_transform(&mut rng), random_transform(&mut rng), random_transform(&mut rng));
        let s = SuctionPose {
            relative: rel,
            facet_id: 0,
            contact_point: rel.position,
            rank_key: 0.0,
        };
        let moved = tool_pose_on_object(&compose(&w, &obj), &s);
        let equivariant = moved.approx_eq(&compose(&w, &tool_pose_on_object(&obj, &s)), 1e-9, 1e-9);
        let ident = SuctionPose {
            relative: RigidTransform::identity(),
            ..s.clone()
        };
        let identity = tool_pose_on_object(&obj, &ident).approx_eq(&obj, 1e-12, 1e-12)
            && tool_pose_on_object(&RigidTransform::identity(), &s).approx_eq(&rel, 1e-12, 1e-12);
        props += (equivariant && identity) as usize;
    }
    let square = FacetSet {
        facets: vec![Facet {
            id: 0,
            normal: Vector3::z(),
            vertices: vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            centroid: Vector3::new(0.5, 0.5, 0.0),
        }],
    };
    let mut counts = 0;
    for _ in 0..200 {
        let (step, pad, margin) = (rng.random_range(0.05..0.4), rng.random_range(0.02..0.3), rng.random_range(0.0..0.05));
        let mut oracle = 0;
        for i in -50i32..=50 {
            for j in -50i32..=50 {
                let (x, y) = (0.5 + i as f64 * step, 0.5 + j as f64 * step);
                oracle += (x.min(y).min(1.0 - x).min(1.0 - y) >= pad + margin - 1e-12) as usize;
            }
        }
        let params = SuctionParams {
            pad_radius: pad,
            grid_step: step,
            margin,
            spin_count: 1,
        };
        let got = sample_suction_poses(&square, &params).map_or(0, |p| p.len());
        counts += (got == oracle) as usize;
    }
    let mut first = 0;
    for _ in 0..100 {
        let shape = if rng.random_bool(0.5) {
            Shape::cuboid(rng.random_range(0.02..0.15), rng.random_range(0.02..0.15), rng.random_range(0.02..0.15))
        } else {
            Shape::cylinder(rng.random_range(0.02..0.08), rng.random_range(0.03..0.2))
        };
        let facets = extract_facets(&shape).unwrap();
        let params = SuctionParams {
            pad_radius: 0.01,
            grid_step: 0.01,
            margin: 0.005,
            spin_count: 4,
        };
        let ok = match sample_suction_poses(&facets, &params) {
            Ok(p) => p.iter().all(|q| {
                let f = facets.facets.iter().find(|f| f.id == q.facet_id).unwrap();
                (q.contact_point - f.centroid).norm() >= p[0].rank_key - 1e-12
            }),
            Err(_) => true,
        };
        first += ok as usize;
    }
    report(
        7,
        props == 1000 && counts == 200 && first == 100,
        "transform and suction",
        format!("composition properties {props}/1000, unit-square counts {counts}/200, centroid-first {first}/100"),
    )
}

fn criterion_8() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let scene = fixtures().join("scenes/three_boxes.json");
    let db = fixtures().join("db/symmetric_long.json");
    let outs: Vec<_> = ["a.json", "b.json"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let status = Command::new(env!("CARGO_BIN_EXE_tooltamp"))
                .args(["plan", "--seed", "7", "--scene"])
                .arg(&scene)
                .arg("--db")
                .arg(&db)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap()
                .status;
            status.success().then(|| std::fs::read(&out).unwrap())
        })
        .collect();
    let ok = outs[0].is_some() && outs[0] == outs[1];
    let size = outs[0].as_ref().map_or(0, |b| b.len());
    report(8, ok, "determinism", format!("two `plan` runs, {size} bytes each, identical {ok}"))
}

fn criterion_9(all: &[&Fixture]) -> bool {
    let (mut episodes, mut grammar, mut chained, mut links) = (0, 0, 0, 0);
    for f in all {
        for p in f.runs.iter().filter_map(|r| r.result.as_ref().ok()) {
            let kinds = p.trajectory.event_string();
            for e in &p.episodes {
                episodes += 1;
                grammar += episode_grammar_ok(&kinds[e.events.clone()]) as usize;
            }
            for w in p.episodes.windows(2) {
                links += 1;
                let next = &w[1].tool_sequence.steps[0];
                let same = w[0].final_grasp == w[1].initial_grasp
                    && (next.arm, next.grasp_id) == (w[0].final_grasp.arm, w[0].final_grasp.grasp_id);
                chained += same as usize;
            }
        }
    }
    report(
        9,
        episodes > 0 && grammar == episodes && chained == links,
        "event grammar",
        format!("{grammar}/{episodes} episodes match, chaining {chained}/{links}"),
    )
}

fn main() -> ExitCode {
    let blocks = run_fixture("three_blocks", "symmetric_long");
    let cylinders = run_fixture("two_cylinders", "symmetric_long_small_pad");
    let boxes = run_fixture("three_boxes", "symmetric_long");
    let asym = run_fixture("three_boxes_asymmetric", "short_asymmetric");
    let all = [&blocks, &cylinders, &boxes, &asym];
    let results = [
        criterion_1(&[&blocks, &cylinders, &boxes]),
        criterion_2(&boxes),
        criterion_3(&boxes, &asym),
        criterion_4(),
        criterion_5(&all),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(&all),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
