use nalgebra::Vector3;
use proptest::prelude::*;

use tooltamp::geom::{RigidTransform, Shape};
use tooltamp::suction::{
    extract_facets, sample_suction_poses, tool_pose_on_object, upward_facets, Facet, FacetSet, SuctionParams,
    SuctionPose,
};

fn unit_square() -> FacetSet {
    FacetSet {
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
    }
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    (prop::array::uniform3(-1.0..1.0f64), prop::array::uniform4(-1.0..1.0f64))
        .prop_filter("non-degenerate", |(_, q)| q.iter().map(|v| v * v).sum::<f64>() > 1e-3)
        .prop_map(|(p, q)| RigidTransform::from_position_wxyz(p, q).unwrap())
}

fn solid() -> impl Strategy<Value = Shape> {
    prop_oneof![
        prop::array::uniform3(0.02..0.15f64).prop_map(|h| Shape::cuboid(h[0], h[1], h[2])),
        (0.02..0.08f64, 0.03..0.2f64).prop_map(|(r, h)| Shape::cylinder(r, h)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_square_count_matches_enumeration(step in 0.05..0.4f64, pad in 0.02..0.3f64, margin in 0.0..0.05f64) {
        let params = SuctionParams { pad_radius: pad, grid_step: step, margin, spin_count: 1 };
        // Lattice through the centre, enumerated over a generous index range.
        let mut oracle = 0;
        for i in -50i32..=50 {
            for j in -50i32..=50 {
                let (x, y) = (0.5 + i as f64 * step, 0.5 + j as f64 * step);
                if x.min(y).min(1.0 - x).min(1.0 - y) >= pad + margin - 1e-12 {
                    oracle += 1;
                }
            }
        }
        match sample_suction_poses(&unit_square(), &params) {
            Ok(p) => prop_assert_eq!(p.len(), oracle),
            Err(_) => prop_assert_eq!(oracle, 0),
        }
    }

    #[test]
    fn every_pose_satisfies_its_invariants(shape in solid(), pad in 0.005..0.03f64, step in 0.01..0.04f64) {
        let facets = extract_facets(&shape).unwrap();
        let params = SuctionParams { pad_radius: pad, grid_step: step, margin: 0.005, spin_count: 4 };
        if let Ok(poses) = sample_suction_poses(&facets, &params) {
            for p in &poses {
                let f = facets.facets.iter().find(|f| f.id == p.facet_id).unwrap();
                let approach = p.relative.transform_vector(&-Vector3::z());
                prop_assert!((approach + f.normal).norm() <= 1e-6);
                prop_assert!(f.edge_clearance(&p.contact_point) >= pad + 0.005 - 1e-9);
                prop_assert!((p.contact_point - f.centroid).dot(&f.normal).abs() <= 1e-12);
                prop_assert!(((p.contact_point - f.centroid).norm() - p.rank_key).abs() <= 1e-12);
            }
            prop_assert!(poses.windows(2).all(|w| w[0].rank_key <= w[1].rank_key + 1e-9));
            // First pose is the contact nearest its facet's centroid.
            let best = poses.iter().map(|p| p.rank_key).fold(f64::INFINITY, f64::min);
            prop_assert!(poses[0].rank_key <= best + 1e-9);
        }
    }

    #[test]
    fn tool_pose_is_equivariant(obj in transform(), rel in transform(), w in transform()) {
        let s = SuctionPose { relative: rel, facet_id: 0, contact_point: rel.position, rank_key: 0.0 };
        let moved = tool_pose_on_object(&w.compose(&obj), &s);
        let expected = w.compose(&tool_pose_on_object(&obj, &s));
        prop_assert!((moved.to_homogeneous() - expected.to_homogeneous()).abs().max() <= 1e-9);
        let ident = SuctionPose { relative: RigidTransform::identity(), ..s.clone() };
        prop_assert!(tool_pose_on_object(&obj, &ident).approx_eq(&obj, 1e-12, 1e-12));
        prop_assert!(tool_pose_on_object(&RigidTransform::identity(), &s).approx_eq(&rel, 1e-12, 1e-12));
    }
}

#[test]
fn centre_of_a_box_top_is_the_first_pose() {
    let shape = Shape::cuboid(0.05, 0.05, 0.05);
    let facets = extract_facets(&shape).unwrap();
    let top = upward_facets(&facets, &RigidTransform::identity());
    let poses = sample_suction_poses(&top, &SuctionParams::with_pad(SuctionParams::LARGE_PAD)).unwrap();
    assert!((poses[0].contact_point - Vector3::new(0.0, 0.0, 0.05)).norm() < 1e-12);
    assert_eq!(poses.len(), 8);
}
