//! Pinhole intrinsics, rigid camera poses and plane parameters.
//!
//! Camera frames follow the usual computer-vision layout: `+x` right, `+y` down, `+z` forward.
//! Pixel `(i, j)` has its center at continuous coordinate `(i, j)`.

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Square-pixel camera with the principal point at the image center and the
    /// given horizontal field of view.
    pub fn from_fov(width: usize, height: usize, fov_x_deg: f64) -> Result<Self> {
        let half = (fov_x_deg.to_radians() / 2.0).tan();
        if !(half.is_finite() && half > 0.0) {
            return Err(Error::Invariant(format!("field of view {fov_x_deg} deg")));
        }
        let f = (width as f64 / 2.0) / half;
        Self::new(
            f,
            f,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::SingularIntrinsics);
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::SingularIntrinsics);
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Invariant("intrinsics with zero image size".into()));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, 0.0, self.cx, //
            0.0, self.fy, self.cy, //
            0.0, 0.0, 1.0,
        )
    }

    pub fn inverse_matrix(&self) -> Result<Matrix3<f64>> {
        self.validate()?;
        Ok(Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        ))
    }

    /// Same camera rendered at a different pixel resolution.
    pub fn resized(&self, width: usize, height: usize) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: (self.cx + 0.5) * sx - 0.5,
            cy: (self.cy + 0.5) * sy - 0.5,
            width,
            height,
        }
    }

    /// Ray direction (z = 1) through a pixel.
    pub fn unproject(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        )
    }
}

/// Rigid transform taking points from the target camera frame into the canonical frame:
/// `X_cano = rotation * X_tgt + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

const ROTATION_TOL: f64 = 1e-6;

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(ortho <= ROTATION_TOL) {
            return Err(Error::Invariant(format!(
                "rotation not orthonormal (max |R^T R - I| = {ortho:e})"
            )));
        }
        let det = rotation.determinant();
        if !((det - 1.0).abs() <= ROTATION_TOL) {
            return Err(Error::Invariant(format!("rotation determinant {det} != +1")));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Invariant("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation about the camera `y` axis by `yaw`, then about `x` by `pitch` (radians).
    pub fn yaw_pitch_rotation(yaw: f64, pitch: f64) -> Matrix3<f64> {
        let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), yaw);
        let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), pitch);
        (ry * rx).into_inner()
    }

    /// Camera orbiting a point on the canonical optical axis at `center_depth`, always
    /// looking at that point. Zero angles give the canonical pose.
    pub fn orbit(yaw: f64, pitch: f64, center_depth: f64) -> Self {
        let rotation = Self::yaw_pitch_rotation(yaw, pitch);
        let center = Vector3::new(0.0, 0.0, center_depth);
        let translation = center - rotation * center;
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Row-major flattened 4x4 extrinsic matrix.
    pub fn flattened(&self) -> [f64; 16] {
        let m = self.to_homogeneous();
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = m[(r, c)];
            }
        }
        out
    }
}

/// Plane `normal . X = b` expressed in target-camera coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneGeometry {
    normal: Vector3<f64>,
    b: f64,
}

impl PlaneGeometry {
    pub fn new(normal: Vector3<f64>, b: f64) -> Result<Self> {
        let norm = normal.norm();
        if !((norm - 1.0).abs() <= 1e-9) {
            return Err(Error::Invariant(format!("plane normal has length {norm}")));
        }
        if !(b > 0.0) {
            return Err(Error::PlaneBehindCamera(b));
        }
        Ok(Self { normal, b })
    }

    pub fn normal(&self) -> &Vector3<f64> {
        &self.normal
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn with_b(&self, b: f64) -> Result<Self> {
        Self::new(self.normal, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_rejects_non_rotation() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = -1.0;
        assert!(CameraPose::new(r, Vector3::zeros()).is_err());
        assert!(CameraPose::new(Matrix3::identity() * 1.01, Vector3::zeros()).is_err());
        assert!(CameraPose::new(CameraPose::yaw_pitch_rotation(0.3, -0.2), Vector3::zeros()).is_ok());
    }

    #[test]
    fn orbit_looks_at_center() {
        let pose = CameraPose::orbit(0.2, -0.1, 1.5);
        // The target optical axis passes through the orbit center.
        let center_in_target = pose.inverse().transform_point(&Vector3::new(0.0, 0.0, 1.5));
        assert!(center_in_target.x.abs() < 1e-12 && center_in_target.y.abs() < 1e-12);
        assert!((center_in_target.z - 1.5).abs() < 1e-12);
        assert!(CameraPose::orbit(0.0, 0.0, 1.5).is_identity());
    }

    #[test]
    fn intrinsics_inverse_and_resize() {
        let k = CameraIntrinsics::new(100.0, 120.0, 31.5, 15.5, 64, 32).unwrap();
        let prod = k.matrix() * k.inverse_matrix().unwrap();
        assert!((prod - Matrix3::identity()).abs().max() < 1e-13);
        let r = k.resized(128, 64);
        assert_eq!(r.fx, 200.0);
        assert_eq!(r.cx, 63.5);
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 4, 4).is_err());
    }

    #[test]
    fn flattened_pose_is_row_major() {
        let pose = CameraPose::from_translation(Vector3::new(1.0, 2.0, 3.0));
        let f = pose.flattened();
        assert_eq!(f[3], 1.0);
        assert_eq!(f[7], 2.0);
        assert_eq!(f[11], 3.0);
        assert_eq!(f[15], 1.0);
    }
}
