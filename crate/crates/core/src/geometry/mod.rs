//! Point-based 4D scenes, projection, region decomposition, geometric
//! confidence, observation-backed cues and conditioning packing.

mod camera;
mod condition;
mod edit;
mod packing;
mod projection;
mod regions;
mod scene;
pub mod synth;

pub use camera::{CameraPose, ImagePoint, Intrinsics, Pose, ROTATION_TOLERANCE};
pub use condition::{
    attenuate_confidence, build_condition_field, build_control_frame, view_time_score,
    ConditionField, ControlFrame, GeometryConfig, SourceObservation, SourceVideo,
};
pub use edit::{apply_edit, EditOp, EditScript};
pub use packing::{
    pack_conditioning, unfold_masks, LatentRaster, PackedConditioning, APPEARANCE_CHANNELS,
    MASK_CHANNELS, MASK_CHANNELS_PER_REGION, PACKED_CHANNELS, SPATIAL_STRIDE, TEMPORAL_STRIDE,
};
pub use projection::{compute_confidence, project_scene, ConfidenceStats, Projection};
pub use regions::{decompose_regions, dynamic_mask, in_extent_mask, SceneExtent, EXTENT_INFLATION};
pub use scene::{RigidTransform, Scene, ScenePoint, STATIC_INSTANCE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
