use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scene::{CameraRecord, Scene, TransformRecord, STATIC_INSTANCE};
use super::GeometryError;

/// One operation of an edit script, tagged by `"op"` in JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    RemoveInstance {
        instance_id: u32,
    },
    /// Applies a world-space rigid transform after the instance's own track.
    TransformInstance {
        instance_id: u32,
        rotation: [f64; 4],
        translation: [f64; 3],
    },
    /// Frame `t` of the edited track shows source frame `t - offset`
    /// (clamped to the track).
    RetimeInstance {
        instance_id: u32,
        offset: i64,
    },
    SetCameraTrack {
        cameras: Vec<CameraTrackEntry>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CameraTrackEntry(CameraRecord);

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditScript(pub Vec<EditOp>);

impl EditScript {
    pub fn from_json_str(s: &str) -> Result<Self, GeometryError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, GeometryError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

fn known_instance(scene: &Scene, id: u32) -> Result<(), GeometryError> {
    if id == STATIC_INSTANCE || !scene.points.iter().any(|p| p.instance_id == id) {
        return Err(GeometryError::InvalidEdit(format!("no dynamic instance {id}")));
    }
    Ok(())
}

/// Applies `script` to `scene`, producing the edited scene. Point order is
/// kept so indices correspond between source and edited scenes.
pub fn apply_edit(scene: &Scene, script: &EditScript) -> Result<Scene, GeometryError> {
    let mut out = scene.clone();
    for op in &script.0 {
        match op {
            EditOp::RemoveInstance { instance_id } => {
                known_instance(&out, *instance_id)?;
                out.removed.insert(*instance_id);
            }
            EditOp::TransformInstance {
                instance_id,
                rotation,
                translation,
            } => {
                known_instance(&out, *instance_id)?;
                let g = TransformRecord {
                    rotation: *rotation,
                    translation: *translation,
                }
                .into_transform()?;
                let n = out.frame_count().max(1);
                let track: Vec<_> = (0..n)
                    .map(|t| g.compose(&out.instance_transform(*instance_id, t)))
                    .collect();
                out.tracks.insert(*instance_id, track);
            }
            EditOp::RetimeInstance {
                instance_id,
                offset,
            } => {
                known_instance(&out, *instance_id)?;
                let n = out.frame_count().max(1);
                let track: Vec<_> = (0..n as i64)
                    .map(|t| {
                        let src = (t - offset).clamp(0, n as i64 - 1) as usize;
                        out.instance_transform(*instance_id, src)
                    })
                    .collect();
                out.tracks.insert(*instance_id, track);
            }
            EditOp::SetCameraTrack { cameras } => {
                out.cameras = cameras
                    .iter()
                    .map(|c| c.0.clone().into_camera())
                    .collect::<Result<_, _>>()?;
            }
        }
    }
    Ok(out)
}
