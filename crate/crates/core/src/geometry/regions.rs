use nalgebra::Vector3;

use super::camera::CameraPose;
use super::projection::Projection;
use super::scene::Scene;
use crate::raster::{Mask, RegionMasks};

/// Relative growth applied to the pre-edit bounding box.
pub const EXTENT_INFLATION: f64 = 0.05;

/// Axis-aligned bounding volume of the pre-edit scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneExtent {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl SceneExtent {
    /// Box around every visible point at every frame, scaled about its center
    /// by `1 + EXTENT_INFLATION`.
    pub fn from_scene(scene: &Scene) -> Option<Self> {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        let frames = scene.frame_count().max(1);
        for (i, p) in scene.points.iter().enumerate() {
            let span = if p.instance_id == 0 { 1 } else { frames };
            for t in 0..span {
                if let Some(q) = scene.world_position(i, t) {
                    min = min.inf(&q);
                    max = max.sup(&q);
                }
            }
        }
        if !min.x.is_finite() {
            return None;
        }
        let center = (min + max) * 0.5;
        let half = (max - min) * 0.5 * (1.0 + EXTENT_INFLATION);
        Some(Self {
            min: center - half,
            max: center + half,
        })
    }

    /// Slab test for the ray `origin + s * dir`, `s >= 0`.
    pub fn ray_hits(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> bool {
        let mut s_near = 0.0f64;
        let mut s_far = f64::INFINITY;
        for a in 0..3 {
            if dir[a].abs() < 1e-15 {
                if origin[a] < self.min[a] || origin[a] > self.max[a] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / dir[a];
            let (mut s0, mut s1) = ((self.min[a] - origin[a]) * inv, (self.max[a] - origin[a]) * inv);
            if s0 > s1 {
                std::mem::swap(&mut s0, &mut s1);
            }
            s_near = s_near.max(s0);
            s_far = s_far.min(s1);
            if s_near > s_far {
                return false;
            }
        }
        true
    }
}

/// Pixels whose center ray meets the pre-edit scene extent.
pub fn in_extent_mask(extent: &SceneExtent, cam: &CameraPose) -> Mask {
    let origin = cam.center();
    Mask::from_fn(cam.intrinsics.width, cam.intrinsics.height, |x, y| {
        extent.ray_hits(&origin, &cam.pixel_ray(x, y))
    })
}

/// Preserve = supported; Reveal = unsupported inside the original extent;
/// Expand = unsupported outside it. Dynamic is left empty; see
/// [`dynamic_mask`].
pub fn decompose_regions(support: &Mask, in_extent: &Mask) -> RegionMasks {
    let unsupported = support.not();
    RegionMasks {
        preserve: support.clone(),
        reveal: unsupported.and(in_extent),
        expand: unsupported.and_not(in_extent),
        dynamic: Mask::empty(support.width(), support.height()),
    }
}

/// Preserve pixels rendered from a dynamic instance.
pub fn dynamic_mask(preserve: &Mask, projection: &Projection) -> Mask {
    let w = preserve.width();
    Mask::from_fn(w, preserve.height(), |x, y| {
        preserve.get(x, y) && matches!(projection.instance[y * w + x], Some(id) if id > 0)
    })
}
