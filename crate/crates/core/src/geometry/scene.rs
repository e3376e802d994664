use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::{CameraPose, Intrinsics, Pose};
use super::GeometryError;
use crate::raster::Rgb;

/// Instance id of the static background.
pub const STATIC_INSTANCE: u32 = 0;

/// One colored scene point. Static points (`instance_id == 0`) store world
/// coordinates; dynamic points store coordinates in their instance's
/// canonical frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint {
    pub position: Vector3<f64>,
    pub color: Rgb,
    pub instance_id: u32,
}

/// Rotation plus translation placing an instance's canonical frame in the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: t,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

/// A point-based 4D scene: points, per-frame instance tracks and the camera
/// track. Instances listed in `removed` are invisible but keep their points,
/// so point indices stay aligned between a scene and its edits.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub points: Vec<ScenePoint>,
    pub tracks: BTreeMap<u32, Vec<RigidTransform>>,
    pub cameras: Vec<CameraPose>,
    pub removed: BTreeSet<u32>,
}

impl Scene {
    pub fn new(points: Vec<ScenePoint>, cameras: Vec<CameraPose>) -> Self {
        Self {
            points,
            tracks: BTreeMap::new(),
            cameras,
            removed: BTreeSet::new(),
        }
    }

    pub fn frame_count(&self) -> usize {
        self.cameras.len()
    }

    /// Instance placement at `frame`. Frames past the end of a track hold its
    /// last transform; untracked instances sit at the identity.
    pub fn instance_transform(&self, instance_id: u32, frame: usize) -> RigidTransform {
        if instance_id == STATIC_INSTANCE {
            return RigidTransform::identity();
        }
        match self.tracks.get(&instance_id) {
            Some(track) if !track.is_empty() => track[frame.min(track.len() - 1)],
            _ => RigidTransform::identity(),
        }
    }

    pub fn is_visible(&self, point: usize) -> bool {
        !self.removed.contains(&self.points[point].instance_id)
    }

    /// World position of point `i` at `frame`, or `None` if its instance was removed.
    pub fn world_position(&self, i: usize, frame: usize) -> Option<Vector3<f64>> {
        let p = &self.points[i];
        if self.removed.contains(&p.instance_id) {
            return None;
        }
        Some(self.instance_transform(p.instance_id, frame).apply(&p.position))
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.points.is_empty() {
            return Err(GeometryError::InvalidScene("scene has no points".into()));
        }
        for cam in &self.cameras {
            cam.pose.validate()?;
        }
        for p in &self.points {
            if !p.position.iter().all(|v| v.is_finite()) {
                return Err(GeometryError::InvalidScene("non-finite point position".into()));
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, GeometryError> {
        let file: SceneFile = serde_json::from_str(s)?;
        file.into_scene()
    }

    pub fn load(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SceneFile::from_scene(self)).expect("scene serializes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct TransformRecord {
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl TransformRecord {
    pub fn into_transform(self) -> Result<RigidTransform, GeometryError> {
        let [w, x, y, z] = self.rotation;
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
            return Err(GeometryError::InvalidScene(format!(
                "quaternion norm {n} is not 1"
            )));
        }
        Ok(RigidTransform {
            rotation: UnitQuaternion::new_normalize(q),
            translation: Vector3::from(self.translation),
        })
    }

    pub fn from_transform(t: &RigidTransform) -> Self {
        let q = t.rotation.quaternion();
        Self {
            rotation: [q.w, q.i, q.j, q.k],
            translation: t.translation.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct CameraRecord {
    /// Row-major camera-to-world rotation.
    pub rotation: [f64; 9],
    pub center: [f64; 3],
    pub intrinsics: Intrinsics,
}

impl CameraRecord {
    pub fn into_camera(self) -> Result<CameraPose, GeometryError> {
        let pose = Pose::from_arrays(self.rotation, self.center);
        pose.validate()?;
        Ok(CameraPose::new(pose, self.intrinsics))
    }

    pub fn from_camera(c: &CameraPose) -> Self {
        Self {
            rotation: c.pose.rotation_row_major(),
            center: c.pose.center.into(),
            intrinsics: c.intrinsics,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PointArrays {
    positions: Vec<[f64; 3]>,
    colors: Vec<[f64; 3]>,
    instance_ids: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneFile {
    points: PointArrays,
    #[serde(default)]
    instances: BTreeMap<u32, Vec<TransformRecord>>,
    cameras: Vec<CameraRecord>,
}

impl SceneFile {
    fn into_scene(self) -> Result<Scene, GeometryError> {
        let PointArrays {
            positions,
            colors,
            instance_ids,
        } = self.points;
        if positions.len() != colors.len() || positions.len() != instance_ids.len() {
            return Err(GeometryError::InvalidScene(format!(
                "point arrays disagree: {} positions, {} colors, {} instance ids",
                positions.len(),
                colors.len(),
                instance_ids.len()
            )));
        }
        let points = positions
            .into_iter()
            .zip(colors)
            .zip(instance_ids)
            .map(|((p, c), id)| ScenePoint {
                position: Vector3::from(p),
                color: c.map(|v| v.clamp(0.0, 1.0)),
                instance_id: id,
            })
            .collect();
        let cameras = self
            .cameras
            .into_iter()
            .map(CameraRecord::into_camera)
            .collect::<Result<Vec<_>, _>>()?;
        let mut tracks = BTreeMap::new();
        for (id, records) in self.instances {
            if id == STATIC_INSTANCE {
                return Err(GeometryError::InvalidScene(
                    "instance 0 is static and cannot have a track".into(),
                ));
            }
            let track = records
                .into_iter()
                .map(TransformRecord::into_transform)
                .collect::<Result<Vec<_>, _>>()?;
            tracks.insert(id, track);
        }
        let scene = Scene {
            points,
            tracks,
            cameras,
            removed: BTreeSet::new(),
        };
        scene.validate()?;
        Ok(scene)
    }

    fn from_scene(scene: &Scene) -> Self {
        let visible: Vec<&ScenePoint> = scene
            .points
            .iter()
            .filter(|p| !scene.removed.contains(&p.instance_id))
            .collect();
        Self {
            points: PointArrays {
                positions: visible.iter().map(|p| p.position.into()).collect(),
                colors: visible.iter().map(|p| p.color).collect(),
                instance_ids: visible.iter().map(|p| p.instance_id).collect(),
            },
            instances: scene
                .tracks
                .iter()
                .filter(|(id, _)| !scene.removed.contains(id))
                .map(|(id, t)| (*id, t.iter().map(TransformRecord::from_transform).collect()))
                .collect(),
            cameras: scene.cameras.iter().map(CameraRecord::from_camera).collect(),
        }
    }
}
