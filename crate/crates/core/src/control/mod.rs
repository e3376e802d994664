//! Camera and object control fidelity: gauge-normalized camera errors and
//! Hungarian-matched object trajectory distance.

mod hungarian;

pub use hungarian::{hungarian_assign, Assignment};

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;

/// Default penalty for a controlled object with no matched prediction.
pub const DEFAULT_LAMBDA_OBJMC: f64 = 10.0;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid pose at frame {frame}: {reason}")]
    InvalidPose { frame: usize, reason: String },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty trajectory")]
    Empty,
    #[error("object {id:?} has {len} centers, expected {expected}")]
    TrackLength { id: String, len: usize, expected: usize },
    #[error("{0}")]
    Io(String),
}

/// Expresses every pose relative to the first: `P_1^{-1} P_t`.
pub fn normalize_gauge(poses: &[Pose]) -> Result<Vec<Pose>, ControlError> {
    let first = poses.first().ok_or(ControlError::Empty)?;
    for (frame, p) in poses.iter().enumerate() {
        p.validate().map_err(|e| ControlError::InvalidPose {
            frame,
            reason: e.to_string(),
        })?;
    }
    let inv = first.inverse();
    let mut out: Vec<Pose> = poses.iter().map(|p| inv.compose(p)).collect();
    out[0] = Pose::identity();
    Ok(out)
}

/// Geodesic angle of `a b^T` on SO(3), in `[0, pi]`.
///
/// Uses `atan2(|axis term|, (tr - 1) / 2)`, which equals the arccos of the
/// clamped trace term for exact rotations and keeps full precision near 0
/// and pi.
pub fn rotation_angle(a: &nalgebra::Matrix3<f64>, b: &nalgebra::Matrix3<f64>) -> f64 {
    let r = a * b.transpose();
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let axis = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let sin = (axis.norm() / 2.0).min(1.0);
    sin.atan2(cos)
}

fn check_lengths(gt: &[Pose], gen: &[Pose]) -> Result<(), ControlError> {
    if gt.len() != gen.len() {
        return Err(ControlError::LengthMismatch(gt.len(), gen.len()));
    }
    if gt.is_empty() {
        return Err(ControlError::Empty);
    }
    Ok(())
}

/// Mean geodesic rotation error in radians over gauge-normalized inputs.
pub fn cam_rot_err(gt: &[Pose], gen: &[Pose]) -> Result<f64, ControlError> {
    check_lengths(gt, gen)?;
    let sum: f64 = gt
        .iter()
        .zip(gen)
        .map(|(g, p)| rotation_angle(&p.rotation, &g.rotation))
        .sum();
    Ok(sum / gt.len() as f64)
}

/// Mean distance between camera centers over gauge-normalized inputs.
pub fn cam_trans_err(gt: &[Pose], gen: &[Pose]) -> Result<f64, ControlError> {
    check_lengths(gt, gen)?;
    let sum: f64 = gt.iter().zip(gen).map(|(g, p)| (p.center - g.center).norm()).sum();
    Ok(sum / gt.len() as f64)
}

/// Normalizes both trajectories and returns `(rotation error, translation error)`.
pub fn camera_errors(gt: &[Pose], gen: &[Pose]) -> Result<(f64, f64), ControlError> {
    check_lengths(gt, gen)?;
    let (g, p) = (normalize_gauge(gt)?, normalize_gauge(gen)?);
    Ok((cam_rot_err(&g, &p)?, cam_trans_err(&g, &p)?))
}

/// Per-object 3D center tracks keyed by object id.
pub type ObjectTracks = BTreeMap<String, Vec<Vector3<f64>>>;

/// Mean per-frame distance between two equally long tracks.
pub fn track_distance(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).sum::<f64>() / a.len() as f64
}

/// ObjMC: mean over ground-truth objects of the matched track distance, or
/// `lambda` for objects left unmatched. `None` without ground-truth objects.
pub fn objmc(gt: &ObjectTracks, gen: &ObjectTracks, lambda: f64) -> Result<Option<f64>, ControlError> {
    if gt.is_empty() {
        return Ok(None);
    }
    let t = gt.values().next().map_or(0, Vec::len);
    for (id, track) in gt.iter().chain(gen) {
        if track.len() != t {
            return Err(ControlError::TrackLength {
                id: id.clone(),
                len: track.len(),
                expected: t,
            });
        }
    }
    let cost: Vec<Vec<f64>> = gt
        .values()
        .map(|g| gen.values().map(|p| track_distance(p, g)).collect())
        .collect();
    Ok(Some(objmc_from_costs(&cost, lambda)))
}

/// ObjMC over a precomputed `N_gt x N_pred` distance matrix.
pub fn objmc_from_costs(cost: &[Vec<f64>], lambda: f64) -> f64 {
    let a = hungarian_assign(cost);
    let sum: f64 = a
        .row_to_col
        .iter()
        .enumerate()
        .map(|(i, c)| c.map_or(lambda, |j| cost[i][j]))
        .sum();
    sum / cost.len() as f64
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct PoseRecord {
    rotation: [f64; 9],
    center: [f64; 3],
}

/// Extracted trajectories for one case. Either part may be empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectorySet {
    pub cameras_gt: Vec<Pose>,
    pub cameras_gen: Vec<Pose>,
    pub objects_gt: ObjectTracks,
    pub objects_gen: ObjectTracks,
}

impl TrajectorySet {
    pub fn has_cameras(&self) -> bool {
        !self.cameras_gt.is_empty() || !self.cameras_gen.is_empty()
    }

    /// Checks that both camera lists and every object track have `frames`
    /// entries (empty parts are allowed).
    pub fn validate(&self, frames: usize) -> Result<(), ControlError> {
        if self.has_cameras() {
            for list in [&self.cameras_gt, &self.cameras_gen] {
                if list.len() != frames {
                    return Err(ControlError::LengthMismatch(list.len(), frames));
                }
            }
        }
        for (id, track) in self.objects_gt.iter().chain(&self.objects_gen) {
            if track.len() != frames {
                return Err(ControlError::TrackLength {
                    id: id.clone(),
                    len: track.len(),
                    expected: frames,
                });
            }
        }
        Ok(())
    }

    pub fn cameras_from_json(text: &str) -> Result<Vec<Pose>, ControlError> {
        let recs: Vec<PoseRecord> = serde_json::from_str(text).map_err(|e| ControlError::Io(e.to_string()))?;
        Ok(recs.iter().map(|r| Pose::from_arrays(r.rotation, r.center)).collect())
    }

    pub fn cameras_to_json(poses: &[Pose]) -> String {
        let recs: Vec<PoseRecord> = poses
            .iter()
            .map(|p| PoseRecord {
                rotation: p.rotation_row_major(),
                center: p.center.into(),
            })
            .collect();
        serde_json::to_string_pretty(&recs).expect("pose records serialize")
    }

    pub fn objects_from_json(text: &str) -> Result<ObjectTracks, ControlError> {
        let raw: BTreeMap<String, Vec<[f64; 3]>> =
            serde_json::from_str(text).map_err(|e| ControlError::Io(e.to_string()))?;
        Ok(raw
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().map(Vector3::from).collect()))
            .collect())
    }

    pub fn objects_to_json(tracks: &ObjectTracks) -> String {
        let raw: BTreeMap<&String, Vec<[f64; 3]>> = tracks
            .iter()
            .map(|(k, v)| (k, v.iter().map(|p| [p.x, p.y, p.z]).collect()))
            .collect();
        serde_json::to_string_pretty(&raw).expect("tracks serialize")
    }

    /// Reads `cameras_{gt,gen}.json` and `objects_{gt,gen}.json` from a case
    /// directory. Missing files leave the corresponding part empty; a camera
    /// or object pair must be present together.
    pub fn load_dir(dir: &Path) -> Result<Self, ControlError> {
        let read = |name: &str| -> Result<Option<String>, ControlError> {
            let p = dir.join(name);
            if p.exists() {
                std::fs::read_to_string(&p)
                    .map(Some)
                    .map_err(|e| ControlError::Io(format!("{}: {e}", p.display())))
            } else {
                Ok(None)
            }
        };
        let mut set = Self::default();
        match (read("cameras_gt.json")?, read("cameras_gen.json")?) {
            (Some(g), Some(p)) => {
                set.cameras_gt = Self::cameras_from_json(&g)?;
                set.cameras_gen = Self::cameras_from_json(&p)?;
            }
            (None, None) => {}
            _ => return Err(ControlError::Io("cameras_gt.json and cameras_gen.json must both be present".into())),
        }
        match (read("objects_gt.json")?, read("objects_gen.json")?) {
            (Some(g), Some(p)) => {
                set.objects_gt = Self::objects_from_json(&g)?;
                set.objects_gen = Self::objects_from_json(&p)?;
            }
            (None, None) => {}
            _ => return Err(ControlError::Io("objects_gt.json and objects_gen.json must both be present".into())),
        }
        Ok(set)
    }

    /// Writes whichever parts are non-empty.
    pub fn save_dir(&self, dir: &Path) -> std::io::Result<()> {
        if self.has_cameras() {
            std::fs::write(dir.join("cameras_gt.json"), Self::cameras_to_json(&self.cameras_gt))?;
            std::fs::write(dir.join("cameras_gen.json"), Self::cameras_to_json(&self.cameras_gen))?;
        }
        if !self.objects_gt.is_empty() || !self.objects_gen.is_empty() {
            std::fs::write(dir.join("objects_gt.json"), Self::objects_to_json(&self.objects_gt))?;
            std::fs::write(dir.join("objects_gen.json"), Self::objects_to_json(&self.objects_gen))?;
        }
        Ok(())
    }
}
