use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::GraspDbError;
use crate::geom::{Body, RigidTransform, Shape};
use crate::robot::Units;

/// One rigid primitive of the tool, posed in the tool frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolPart {
    pub name: String,
    pub shape: Shape,
    pub local: RigidTransform,
}

/// A stretch of handle the jaws may close on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspSegment {
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
    /// Direction the jaws close along; perpendicular to the segment.
    pub closing_axis: Vector3<f64>,
    /// Handle width across the jaws, m.
    pub width: f64,
}

impl GraspSegment {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn direction(&self) -> Vector3<f64> {
        (self.end - self.start).normalize()
    }

    /// Stations at `step` spacing centered on the segment; the midpoint alone
    /// when the segment is shorter than `step`.
    pub fn stations(&self, step: f64) -> Vec<Vector3<f64>> {
        let len = self.length();
        let n = (len / step + 1e-9).floor() as usize + 1;
        let d = self.end - self.start;
        let span = (n - 1) as f64 * step;
        let first = 0.5 * (len - span);
        (0..n)
            .map(|i| {
                let s = if len > 0.0 { (first + i as f64 * step) / len } else { 0.5 };
                self.start + d * s
            })
            .collect()
    }
}

/// Suction-cup tool: rigid parts, graspable handle segments and the pad.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolModel {
    pub format_version: u32,
    #[serde(default)]
    pub units: Units,
    pub name: String,
    pub parts: Vec<ToolPart>,
    pub grasp_segments: Vec<GraspSegment>,
    /// Pad frame in the tool frame: origin at the pad center, +Z pointing
    /// away from the suction face.
    pub pad_center: RigidTransform,
    pub pad_radius: f64,
}

pub fn tool_part_name(part: &str) -> String {
    format!("tool/{part}")
}

impl ToolModel {
    pub fn validate(&self) -> Result<(), GraspDbError> {
        let bad = |m: String| Err(GraspDbError::InvalidTool(format!("{}: {m}", self.name)));
        if self.parts.is_empty() {
            return bad("tool has no parts".into());
        }
        if let Some(p) = self.parts.iter().find(|p| !p.shape.is_valid()) {
            return bad(format!("part {} has a degenerate shape", p.name));
        }
        if self.grasp_segments.is_empty() {
            return bad("tool needs at least one grasp segment".into());
        }
        for (i, s) in self.grasp_segments.iter().enumerate() {
            if !(s.width > 0.0) {
                return bad(format!("grasp segment {i} has non-positive width"));
            }
            if (s.closing_axis.norm() - 1.0).abs() > 1e-9 {
                return bad(format!("grasp segment {i} closing axis is not a unit vector"));
            }
            if s.length() > 0.0 && s.direction().dot(&s.closing_axis).abs() > 1e-9 {
                return bad(format!("grasp segment {i} closing axis is not perpendicular to the segment"));
            }
        }
        if !(self.pad_radius > 0.0) {
            return bad("pad radius must be positive".into());
        }
        if !self.units.is_si() {
            return bad("tool file must use m/rad/s units".into());
        }
        Ok(())
    }

    /// Widest handle section; must fit the gripper stroke.
    pub fn max_grasp_width(&self) -> f64 {
        self.grasp_segments.iter().map(|s| s.width).fold(0.0, f64::max)
    }

    /// Tool pose that puts the pad frame at `pad_pose`.
    pub fn pose_from_pad(&self, pad_pose: &RigidTransform) -> RigidTransform {
        pad_pose.compose(&self.pad_center.inverse())
    }

    pub fn pad_pose(&self, pose: &RigidTransform) -> RigidTransform {
        pose.compose(&self.pad_center)
    }

    /// World bodies of the tool at `pose`.
    pub fn bodies(&self, pose: &RigidTransform) -> Vec<Body> {
        self.parts
            .iter()
            .map(|p| Body::new(tool_part_name(&p.name), p.shape, pose.compose(&p.local)))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self, GraspDbError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraspDbError::Io(path.display().to_string(), e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let tool: ToolModel = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| GraspDbError::Format(format!("{}: {}", path.display(), e)))?;
        tool.validate()?;
        Ok(tool)
    }

    pub fn save(&self, path: &Path) -> Result<(), GraspDbError> {
        let text = serde_json::to_string_pretty(self).expect("tool serializes");
        std::fs::write(path, text + "\n").map_err(|e| GraspDbError::Io(path.display().to_string(), e))
    }
}
