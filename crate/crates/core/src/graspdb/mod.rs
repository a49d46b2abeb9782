//! Offline grasp database for the suction tool: parallel-jaw grasps on its
//! handle and dual-arm handover pairs in front of the robot.

mod grasps;
mod handover;
mod tool;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use grasps::{grasp_candidates, grasp_is_valid, sample_tool_grasps, Grasp, HandGeometry, CONTACT_DEPTH};
pub use handover::{
    arms_clear, compute_handover_pairs, pair_is_valid, region_pose, single_arm_clear, HandoverPair, HandoverParams,
    HandoverSide,
};
pub(crate) use handover::hand_bodies;
pub use tool::{tool_part_name, GraspSegment, ToolModel, ToolPart};

use crate::robot::DualArmModel;

pub const DATABASE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum GraspDbError {
    #[error("no collision-free grasp on the tool")]
    NoGrasps,
    #[error("no feasible handover pair")]
    NoPairs,
    #[error("invalid tool: {0}")]
    InvalidTool(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbParams {
    pub grasp_step: f64,
    pub spin_count: usize,
    pub handover: HandoverParams,
}

impl Default for DbParams {
    fn default() -> Self {
        Self {
            grasp_step: 0.02,
            spin_count: 8,
            handover: HandoverParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspDatabase {
    pub format_version: u32,
    pub tool_name: String,
    pub params: DbParams,
    pub seed: u64,
    pub grasps: Vec<Grasp>,
    pub handover_pairs: Vec<HandoverPair>,
}

/// Samples the grasps and the handover pairs of `tool` for `model`.
pub fn generate_database(
    model: &DualArmModel,
    tool: &ToolModel,
    params: &DbParams,
    seed: u64,
) -> Result<GraspDatabase, GraspDbError> {
    tool.validate()?;
    let hand = HandGeometry::from_model(model);
    let grasps = sample_tool_grasps(tool, &hand, params.grasp_step, params.spin_count)?;
    let handover_pairs = compute_handover_pairs(model, tool, &grasps, &params.handover, seed)?;
    Ok(GraspDatabase {
        format_version: DATABASE_FORMAT_VERSION,
        tool_name: tool.name.clone(),
        params: params.clone(),
        seed,
        grasps,
        handover_pairs,
    })
}

impl GraspDatabase {
    pub fn grasp(&self, id: usize) -> Option<&Grasp> {
        self.grasps.get(id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("database serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, GraspDbError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let db: GraspDatabase =
            serde_path_to_error::deserialize(&mut de).map_err(|e| GraspDbError::Format(e.to_string()))?;
        if db.format_version != DATABASE_FORMAT_VERSION {
            return Err(GraspDbError::Format(format!("unsupported format_version {}", db.format_version)));
        }
        if db.grasps.iter().enumerate().any(|(i, g)| g.id != i) {
            return Err(GraspDbError::Format("grasp ids must equal their list positions".into()));
        }
        let n = db.grasps.len();
        if db
            .handover_pairs
            .iter()
            .any(|p| p.giver.grasp_id >= n || p.receiver.grasp_id >= n)
        {
            return Err(GraspDbError::Format("handover pair refers to an unknown grasp".into()));
        }
        Ok(db)
    }
}

pub fn save_database(db: &GraspDatabase, path: &Path) -> Result<(), GraspDbError> {
    std::fs::write(path, db.to_json()).map_err(|e| GraspDbError::Io(path.display().to_string(), e))
}

pub fn load_database(path: &Path) -> Result<GraspDatabase, GraspDbError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraspDbError::Io(path.display().to_string(), e))?;
    GraspDatabase::from_json(&text).map_err(|e| match e {
        GraspDbError::Format(m) => GraspDbError::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}
