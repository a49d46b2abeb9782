//! Suction poses: planar facets of an object model, candidate pad contacts on
//! them, and the tool-in-object transforms those contacts define.
//!
//! Tool frame convention: the origin is the pad center and local −Z is the
//! approach axis, so a tool sitting on a facet has +Z along the facet's
//! outward normal.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geom::{RigidTransform, Shape};

/// Vertex count of the polygon inscribed in a cylinder cap.
pub const CYLINDER_CAP_VERTICES: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SuctionError {
    #[error("shape `{0}` has no planar facet")]
    UnsupportedShape(&'static str),
    #[error("no facet admits the suction pad")]
    NoPoses,
    #[error("invalid suction parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Convex planar facet in the object frame. Vertices wind counter-clockwise
/// seen from outside (along −normal).
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    /// Index in the shape's full facet list.
    pub id: usize,
    pub normal: Vector3<f64>,
    pub vertices: Vec<Vector3<f64>>,
    pub centroid: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetSet {
    pub facets: Vec<Facet>,
}

/// One element of the tool-on-object transform set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuctionPose {
    /// Tool frame expressed in the object frame.
    pub relative: RigidTransform,
    pub facet_id: usize,
    pub contact_point: Vector3<f64>,
    /// Distance of the contact from the facet centroid, m.
    pub rank_key: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuctionParams {
    pub pad_radius: f64,
    pub grid_step: f64,
    pub margin: f64,
    pub spin_count: usize,
}

impl SuctionParams {
    pub const SMALL_PAD: f64 = 0.015;
    pub const LARGE_PAD: f64 = 0.04;

    pub fn with_pad(pad_radius: f64) -> Self {
        Self {
            pad_radius,
            grid_step: 0.02,
            margin: 0.005,
            spin_count: 8,
        }
    }
}

impl Facet {
    fn from_vertices(id: usize, normal: Vector3<f64>, vertices: Vec<Vector3<f64>>) -> Self {
        let centroid = polygon_centroid(&vertices, &normal);
        Facet {
            id,
            normal,
            vertices,
            centroid,
        }
    }

    /// Smallest signed distance from an in-plane point to the edges
    /// (positive inside).
    pub fn edge_clearance(&self, p: &Vector3<f64>) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let edge = (b - a).normalize();
                let inward = self.normal.cross(&edge);
                (p - a).dot(&inward)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// In-plane axes: `u` along the first edge, `v = normal × u`.
    pub fn plane_axes(&self) -> (Vector3<f64>, Vector3<f64>) {
        let u = (self.vertices[1] - self.vertices[0]).normalize();
        (u, self.normal.cross(&u))
    }
}

fn polygon_centroid(vertices: &[Vector3<f64>], normal: &Vector3<f64>) -> Vector3<f64> {
    // Area-weighted centroid of the fan triangulation.
    let origin = vertices[0];
    let mut area_sum = 0.0;
    let mut acc = Vector3::zeros();
    for w in vertices[1..].windows(2) {
        let area = 0.5 * (w[0] - origin).cross(&(w[1] - origin)).dot(normal);
        acc += (origin + w[0] + w[1]) / 3.0 * area;
        area_sum += area;
    }
    acc / area_sum
}

/// Planar facets of a primitive: six for a box, the two caps (polygonized)
/// for a cylinder.
pub fn extract_facets(shape: &Shape) -> Result<FacetSet, SuctionError> {
    match shape {
        Shape::Box { half_extents: h } => {
            let mut facets = Vec::with_capacity(6);
            for axis in 0..3 {
                for sign in [1.0, -1.0] {
                    let mut n = Vector3::zeros();
                    n[axis] = sign;
                    let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
                    let corner = |s1: f64, s2: f64| {
                        let mut p = Vector3::zeros();
                        p[axis] = sign * h[axis];
                        p[a1] = s1 * h[a1];
                        p[a2] = s2 * h[a2];
                        p
                    };
                    let mut verts = vec![corner(-1.0, -1.0), corner(1.0, -1.0), corner(1.0, 1.0), corner(-1.0, 1.0)];
                    if sign < 0.0 {
                        verts.reverse();
                    }
                    facets.push(Facet::from_vertices(facets.len(), n, verts));
                }
            }
            Ok(FacetSet { facets })
        }
        Shape::Cylinder { radius, height } => {
            let mut facets = Vec::with_capacity(2);
            for sign in [1.0, -1.0] {
                let z = sign * 0.5 * height;
                let mut verts: Vec<_> = (0..CYLINDER_CAP_VERTICES)
                    .map(|i| {
                        let a = TAU * i as f64 / CYLINDER_CAP_VERTICES as f64;
                        Vector3::new(radius * a.cos(), radius * a.sin(), z)
                    })
                    .collect();
                if sign < 0.0 {
                    verts.reverse();
                }
                facets.push(Facet::from_vertices(facets.len(), Vector3::new(0.0, 0.0, sign), verts));
            }
            Ok(FacetSet { facets })
        }
        Shape::Capsule { .. } => Err(SuctionError::UnsupportedShape("capsule")),
    }
}

/// Tool orientation on a facet: +Z along the normal, +X along `u` spun by `angle`.
fn tool_frame_on_facet(normal: &Vector3<f64>, u: &Vector3<f64>, angle: f64, at: Vector3<f64>) -> RigidTransform {
    let x = u * angle.cos() + normal.cross(u) * angle.sin();
    let y = normal.cross(&x);
    RigidTransform::from_axes(x, y, *normal, at)
}

struct Candidate {
    key: f64,
    facet: usize,
    grid: (i64, i64),
    spin: usize,
    pose: SuctionPose,
}

/// Grid samples on every facet whose pad disk fits inside the facet shrunk by
/// `margin`, each expanded into `spin_count` rotations about the normal.
/// Sorted centroid-first; ties by facet index, then grid order, then spin.
pub fn sample_suction_poses(facets: &FacetSet, params: &SuctionParams) -> Result<Vec<SuctionPose>, SuctionError> {
    if !(params.pad_radius > 0.0) {
        return Err(SuctionError::InvalidParameter("pad_radius"));
    }
    if !(params.grid_step > 0.0) {
        return Err(SuctionError::InvalidParameter("grid_step"));
    }
    if !(params.margin >= 0.0) {
        return Err(SuctionError::InvalidParameter("margin"));
    }
    if params.spin_count == 0 {
        return Err(SuctionError::InvalidParameter("spin_count"));
    }
    let clearance = params.pad_radius + params.margin;
    let mut out = Vec::new();
    for facet in &facets.facets {
        let fi = facet.id;
        let (u, v) = facet.plane_axes();
        let extent = facet
            .vertices
            .iter()
            .map(|p| (p - facet.centroid).norm())
            .fold(0.0, f64::max);
        let steps = (extent / params.grid_step).ceil() as i64 + 1;
        for i in -steps..=steps {
            for j in -steps..=steps {
                let p = facet.centroid + u * (i as f64 * params.grid_step) + v * (j as f64 * params.grid_step);
                if facet.edge_clearance(&p) < clearance - 1e-12 {
                    continue;
                }
                let rank_key = (p - facet.centroid).norm();
                for s in 0..params.spin_count {
                    let angle = TAU * s as f64 / params.spin_count as f64;
                    out.push(Candidate {
                        key: (rank_key * 1e9).round(),
                        facet: fi,
                        grid: (i, j),
                        spin: s,
                        pose: SuctionPose {
                            relative: tool_frame_on_facet(&facet.normal, &u, angle, p),
                            facet_id: fi,
                            contact_point: p,
                            rank_key,
                        },
                    });
                }
            }
        }
    }
    if out.is_empty() {
        return Err(SuctionError::NoPoses);
    }
    out.sort_by(|a, b| {
        a.key
            .total_cmp(&b.key)
            .then(a.facet.cmp(&b.facet))
            .then(a.grid.cmp(&b.grid))
            .then(a.spin.cmp(&b.spin))
    });
    Ok(out.into_iter().map(|c| c.pose).collect())
}

/// Facets whose outward normal points up (normal·Z > 0.9) with the object at `object_pose`.
pub fn upward_facets(facets: &FacetSet, object_pose: &RigidTransform) -> FacetSet {
    FacetSet {
        facets: facets
            .facets
            .iter()
            .filter(|f| object_pose.transform_vector(&f.normal).z > 0.9)
            .cloned()
            .collect(),
    }
}

/// World pose of the tool attached at `suction` to an object at `object_pose`.
pub fn tool_pose_on_object(object_pose: &RigidTransform, suction: &SuctionPose) -> RigidTransform {
    object_pose.compose(&suction.relative)
}
