use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};

use crate::geom::{RigidTransform, Shape};
use crate::planner::TaskSpec;
use crate::replay::{snapshot, Snapshot, TimeOutOfRange};
use crate::robot::{robot_bodies, torso_bodies};
use crate::trajectory::Trajectory;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error(transparent)]
    TimeOutOfRange(#[from] TimeOutOfRange),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

const SCALE: f64 = 500.0;

/// Surface points of a placed shape, enough for a faithful projected hull.
fn outline_points(shape: &Shape, pose: &RigidTransform) -> Vec<Vector3<f64>> {
    let mut local = Vec::new();
    match *shape {
        Shape::Box { half_extents: h } => {
            for i in 0..8 {
                let s = |b: usize| if i & b == 0 { -1.0 } else { 1.0 };
                local.push(Vector3::new(s(1) * h.x, s(2) * h.y, s(4) * h.z));
            }
        }
        Shape::Cylinder { radius, height } => {
            for k in 0..24 {
                let a = TAU * k as f64 / 24.0;
                for z in [-0.5 * height, 0.5 * height] {
                    local.push(Vector3::new(radius * a.cos(), radius * a.sin(), z));
                }
            }
        }
        Shape::Capsule { radius, length } => {
            for k in 0..16 {
                let a = TAU * k as f64 / 16.0;
                for e in [-1.0, 0.0, 1.0] {
                    let r = radius * (1.0 - e * e * 0.5f64).sqrt();
                    for c in [-0.5 * length, 0.5 * length] {
                        local.push(Vector3::new(r * a.cos(), r * a.sin(), c + e * radius * 0.707));
                    }
                }
            }
            for c in [-0.5 * length - radius, 0.5 * length + radius] {
                local.push(Vector3::new(0.0, 0.0, c));
            }
        }
    }
    local.iter().map(|p| pose.transform_point(p)).collect()
}

fn hull(mut pts: Vec<Vector2<f64>>) -> Vec<Vector2<f64>> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| (a - o).perp(&(b - o));
    let mut lower: Vec<Vector2<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Vector2<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

struct Item {
    depth: f64,
    points: Vec<Vector2<f64>>,
    style: &'static str,
}

struct View {
    side: bool,
}

impl View {
    /// Top-down: robot at the bottom, facing up the page, left arm on the left.
    fn project(&self, p: &Vector3<f64>) -> Vector2<f64> {
        if self.side {
            Vector2::new((p.x + 0.45) * SCALE, (1.0 - p.z) * SCALE)
        } else {
            Vector2::new((0.75 - p.y) * SCALE, (1.0 - p.x) * SCALE)
        }
    }

    fn depth(&self, pts: &[Vector3<f64>]) -> f64 {
        if self.side {
            -pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max)
        } else {
            pts.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max)
        }
    }

    fn item(&self, shape: &Shape, pose: &RigidTransform, style: &'static str) -> Item {
        let pts = outline_points(shape, pose);
        Item {
            depth: self.depth(&pts),
            points: hull(pts.iter().map(|p| self.project(p)).collect()),
            style,
        }
    }

    fn size(&self) -> (f64, f64) {
        if self.side {
            (1.5 * SCALE, 1.15 * SCALE)
        } else {
            (1.5 * SCALE, 1.45 * SCALE)
        }
    }
}

const TABLE: &str = "fill:#d9d2c5;stroke:#8a8274;stroke-width:1";
const TORSO: &str = "fill:#7d7d7d;stroke:#404040;stroke-width:1";
const LINK: &str = "fill:#5b8bd0;stroke:#1f3f73;stroke-width:1";
const FINGER: &str = "fill:#274b82;stroke:#10213d;stroke-width:1";
const TOOL: &str = "fill:#f0a03c;stroke:#8a5210;stroke-width:1";
const OBJECT: &str = "fill:#b5673f;stroke:#5e2e14;stroke-width:1";
const GOAL: &str = "fill:#3cc85a;fill-opacity:0.35;stroke:#1f7a33;stroke-opacity:0.6;stroke-width:1";

/// One SVG frame of the scene in state `s`.
pub fn render_svg(spec: &TaskSpec, s: &Snapshot, side: bool) -> String {
    let view = View { side };
    let mut items = vec![view.item(&spec.table.shape, &spec.table.pose, TABLE)];
    for b in torso_bodies(&spec.robot) {
        items.push(view.item(&b.shape, &b.pose, TORSO));
    }
    let jaws = s.jaws.map(|j| j.clamp(0.0, spec.robot.gripper.stroke));
    if let Ok(bodies) = robot_bodies(&spec.robot, &s.config, jaws) {
        for b in bodies.iter().filter(|b| !b.name.starts_with("torso")) {
            let style = if b.name.contains("finger") { FINGER } else { LINK };
            items.push(view.item(&b.shape, &b.pose, style));
        }
    }
    for part in spec.tool.bodies(&s.tool) {
        items.push(view.item(&part.shape, &part.pose, TOOL));
    }
    for (o, p) in spec.objects.iter().zip(&s.objects) {
        items.push(view.item(&o.shape, p, OBJECT));
    }
    items.sort_by(|a, b| a.depth.total_cmp(&b.depth));
    for o in &spec.objects {
        items.push(view.item(&o.shape, &o.goal, GOAL));
    }
    let (w, h) = view.size();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for it in &items {
        let pts: Vec<String> = it.points.iter().map(|p| format!("{:.1},{:.1}", p.x, p.y)).collect();
        let _ = writeln!(out, r#"<polygon points="{}" style="{}"/>"#, pts.join(" "), it.style);
    }
    let _ = writeln!(
        out,
        r#"<text x="10" y="24" font-family="monospace" font-size="16">t = {:.2} s</text>"#,
        s.t
    );
    out.push_str("</svg>\n");
    out
}

/// Writes `frame_NNN.svg` for each requested time; checks every time first.
pub fn render_frames(
    spec: &TaskSpec,
    tr: &Trajectory,
    times: &[f64],
    out_dir: &Path,
    side: bool,
) -> Result<Vec<PathBuf>, RenderError> {
    let snaps = times
        .iter()
        .map(|&t| snapshot(spec, tr, t))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| RenderError::Io(out_dir.display().to_string(), e))?;
    let mut files = Vec::new();
    for (i, s) in snaps.iter().enumerate() {
        let p = out_dir.join(format!("frame_{i:03}.svg"));
        std::fs::write(&p, render_svg(spec, s, side)).map_err(|e| RenderError::Io(p.display().to_string(), e))?;
        files.push(p);
    }
    Ok(files)
}
