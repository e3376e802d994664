use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Tolerance for orthonormality and unit-determinant checks on rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// Rigid camera-to-world pose: `x_world = rotation * x_cam + center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub center: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, center: Vector3<f64>) -> Self {
        Self { rotation, center }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    /// Row-major 3x3 rotation plus center, the on-disk layout.
    pub fn from_arrays(rotation: [f64; 9], center: [f64; 3]) -> Self {
        Self::new(Matrix3::from_row_slice(&rotation), Vector3::from(center))
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
        ]
    }

    /// Fails when `R^T R` deviates from identity or `det R` from +1 by more
    /// than [`ROTATION_TOLERANCE`].
    pub fn validate(&self) -> Result<(), GeometryError> {
        let r = &self.rotation;
        if !r.iter().chain(self.center.iter()).all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidRotation("non-finite entry".into()));
        }
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        if ortho > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidRotation(format!(
                "R^T R deviates from identity by {ortho:.3e}"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidRotation(format!("determinant {det}")));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.center))
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation * other.center + self.center,
        )
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.center
    }
}

/// Pinhole intrinsics in pixels, with the raster size they apply to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    /// Centered principal point with the same focal length on both axes.
    pub fn simple(focal: f64, width: usize, height: usize) -> Self {
        Self {
            fx: focal,
            fy: focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }
}

/// Camera with pose and intrinsics. Camera axes: x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub pose: Pose,
    pub intrinsics: Intrinsics,
}

/// A world point seen through a camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl ImagePoint {
    /// Integer pixel containing the point, if inside the raster.
    pub fn pixel(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        if self.u < 0.0 || self.v < 0.0 {
            return None;
        }
        let (x, y) = (self.u.floor() as usize, self.v.floor() as usize);
        (x < width && y < height).then_some((x, y))
    }
}

impl CameraPose {
    pub fn new(pose: Pose, intrinsics: Intrinsics) -> Self {
        Self { pose, intrinsics }
    }

    pub fn center(&self) -> Vector3<f64> {
        self.pose.center
    }

    /// Projects a world point; `None` when it lies on or behind the image plane.
    pub fn project(&self, p: &Vector3<f64>) -> Option<ImagePoint> {
        let q = self.pose.rotation.transpose() * (p - self.pose.center);
        if q.z <= 1e-9 {
            return None;
        }
        let k = &self.intrinsics;
        Some(ImagePoint {
            u: k.fx * q.x / q.z + k.cx,
            v: k.fy * q.y / q.z + k.cy,
            depth: q.z,
        })
    }

    /// Unit world-space direction of the ray through the center of pixel `(x, y)`.
    pub fn pixel_ray(&self, x: usize, y: usize) -> Vector3<f64> {
        let k = &self.intrinsics;
        let d = Vector3::new(
            (x as f64 + 0.5 - k.cx) / k.fx,
            (y as f64 + 0.5 - k.cy) / k.fy,
            1.0,
        );
        (self.pose.rotation * d).normalize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    #[test]
    fn inverse_composes_to_identity() {
        let p = Pose::new(
            *Rotation3::from_euler_angles(0.3, -0.2, 1.1).matrix(),
            Vector3::new(1.0, -2.0, 0.5),
        );
        let id = p.inverse().compose(&p);
        assert!((id.rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!(id.center.norm() < 1e-12);
    }

    #[test]
    fn validate_rejects_scaled_rotation() {
        let p = Pose::new(Matrix3::identity() * 1.01, Vector3::zeros());
        assert!(p.validate().is_err());
        let reflect = Pose::new(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0)), Vector3::zeros());
        assert!(reflect.validate().is_err());
        assert!(Pose::identity().validate().is_ok());
    }

    #[test]
    fn projection_and_ray_agree() {
        let cam = CameraPose::new(Pose::identity(), Intrinsics::simple(50.0, 64, 48));
        let ray = cam.pixel_ray(10, 20);
        let ip = cam.project(&(ray * 7.0)).unwrap();
        assert!((ip.u - 10.5).abs() < 1e-9 && (ip.v - 20.5).abs() < 1e-9);
        assert_eq!(ip.pixel(64, 48), Some((10, 20)));
        assert!(cam.project(&Vector3::new(0.0, 0.0, -1.0)).is_none());
    }
}
