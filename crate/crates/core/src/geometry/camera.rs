//! Pinhole camera poses and projection.

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::real::{real, Real};

use super::GeometryError;

/// World-to-camera pose plus pinhole intrinsics (zero skew).
#[derive(Clone, Debug)]
pub struct CameraPose<T: Real> {
    r: Matrix3<T>,
    t: Vector3<T>,
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
}

/// Serialized camera record; one per view.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    /// Row-major world-to-camera rotation.
    pub r: [f64; 9],
    pub t: [f64; 3],
    /// `[fx, fy, cx, cy]`.
    pub k: [f64; 4],
    pub width: u32,
    pub height: u32,
    pub illuminant_id: String,
}

impl<T: Real> CameraPose<T> {
    pub fn new(
        r: Matrix3<T>,
        t: Vector3<T>,
        fx: T,
        fy: T,
        cx: T,
        cy: T,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let ortho_err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if ortho_err > real(1e-10) {
            return Err(GeometryError::NotARotation);
        }
        if (r.determinant() - T::one()).abs() > real(1e-10) {
            return Err(GeometryError::NotARotation);
        }
        if fx <= T::zero() || fy <= T::zero() {
            return Err(GeometryError::BadIntrinsics);
        }
        if cx < T::zero()
            || cy < T::zero()
            || cx > real((width.max(1) - 1) as f64)
            || cy > real((height.max(1) - 1) as f64)
        {
            return Err(GeometryError::BadIntrinsics);
        }
        Ok(Self {
            r,
            t,
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    pub fn rotation(&self) -> &Matrix3<T> {
        &self.r
    }

    pub fn translation(&self) -> &Vector3<T> {
        &self.t
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<T> {
        -(self.r.transpose() * self.t)
    }

    /// World point to camera frame.
    pub fn to_camera(&self, x: &Vector3<T>) -> Vector3<T> {
        self.r * x + self.t
    }

    /// Pinhole projection. `None` when the point is at or behind the camera
    /// plane, which excludes the vertex from this view.
    pub fn project(&self, x: &Vector3<T>) -> Option<(Vector2<T>, T)> {
        let q = self.to_camera(x);
        if q.z <= T::zero() {
            return None;
        }
        let px = self.fx * q.x / q.z + self.cx;
        let py = self.fy * q.y / q.z + self.cy;
        Some((Vector2::new(px, py), q.z))
    }

    /// Projection plus the 2x3 Jacobian of the pixel w.r.t. the world point.
    pub fn project_with_jacobian(&self, x: &Vector3<T>) -> Option<(Vector2<T>, T, Matrix2x3<T>)> {
        let q = self.to_camera(x);
        if q.z <= T::zero() {
            return None;
        }
        let inv_z = T::one() / q.z;
        let px = self.fx * q.x * inv_z + self.cx;
        let py = self.fy * q.y * inv_z + self.cy;
        let d_pixel_d_q = Matrix2x3::new(
            self.fx * inv_z,
            T::zero(),
            -self.fx * q.x * inv_z * inv_z,
            T::zero(),
            self.fy * inv_z,
            -self.fy * q.y * inv_z * inv_z,
        );
        Some((Vector2::new(px, py), q.z, d_pixel_d_q * self.r))
    }

    /// True when `pixel` lies at least `margin` pixels inside the image.
    pub fn in_bounds(&self, pixel: &Vector2<T>, margin: T) -> bool {
        let w = real::<T>(self.width as f64);
        let h = real::<T>(self.height as f64);
        pixel.x >= margin
            && pixel.y >= margin
            && pixel.x <= w - T::one() - margin
            && pixel.y <= h - T::one() - margin
    }
}

impl CameraPose<f64> {
    pub fn from_record(rec: &CameraRecord) -> Result<Self, GeometryError> {
        let r = Matrix3::from_row_slice(&rec.r);
        let t = Vector3::from_column_slice(&rec.t);
        Self::new(
            r, t, rec.k[0], rec.k[1], rec.k[2], rec.k[3], rec.width, rec.height,
        )
    }

    pub fn to_record(&self, illuminant_id: &str) -> CameraRecord {
        let mut r = [0.0; 9];
        for row in 0..3 {
            for col in 0..3 {
                r[row * 3 + col] = self.r[(row, col)];
            }
        }
        CameraRecord {
            r,
            t: [self.t.x, self.t.y, self.t.z],
            k: [self.fx, self.fy, self.cx, self.cy],
            width: self.width,
            height: self.height,
            illuminant_id: illuminant_id.to_string(),
        }
    }
}

/// World-to-camera look-at pose: camera `z` axis toward `target`, image `y`
/// pointing down.
pub fn look_at<T: Real>(center: &Vector3<T>, target: &Vector3<T>, up: &Vector3<T>) -> Matrix3<T> {
    let forward = (target - center).normalize();
    let mut up = *up;
    if forward.cross(&up).norm() < real(1e-6) {
        up = Vector3::new(T::zero(), T::one(), T::zero());
        if forward.cross(&up).norm() < real(1e-6) {
            up = Vector3::new(T::one(), T::zero(), T::zero());
        }
    }
    let x_cam = forward.cross(&up).normalize();
    let y_cam = forward.cross(&x_cam).normalize();
    Matrix3::from_rows(&[x_cam.transpose(), y_cam.transpose(), forward.transpose()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn optical_axis_projects_to_principal_point() {
        let pose = CameraPose::new(
            Matrix3::identity(),
            Vector3::zeros(),
            100.0,
            100.0,
            0.0,
            0.0,
            64,
            64,
        )
        .unwrap();
        let (px, depth) = pose.project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(px.x, 0.0);
        assert_relative_eq!(px.y, 0.0);
        assert_relative_eq!(depth, 1.0);
    }

    #[test]
    fn similar_triangles() {
        let pose = CameraPose::new(
            Matrix3::identity(),
            Vector3::zeros(),
            100.0,
            100.0,
            0.0,
            0.0,
            64,
            64,
        )
        .unwrap();
        let (px, _) = pose.project(&Vector3::new(0.1, 0.0, 1.0)).unwrap();
        assert_relative_eq!(px.x, 10.0, epsilon = 1e-12);
        assert_relative_eq!(px.y, 0.0);
    }

    #[test]
    fn behind_camera_is_excluded() {
        let pose = CameraPose::new(
            Matrix3::identity(),
            Vector3::zeros(),
            100.0,
            100.0,
            0.0,
            0.0,
            64,
            64,
        )
        .unwrap();
        assert!(pose.project(&Vector3::new(0.0, 0.0, -1.0)).is_none());
        assert!(pose.project(&Vector3::new(0.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn rejects_non_rotation() {
        let r = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            CameraPose::new(r, Vector3::zeros(), 10.0, 10.0, 5.0, 5.0, 16, 16),
            Err(GeometryError::NotARotation)
        ));
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(matches!(
            CameraPose::new(
                Matrix3::identity(),
                Vector3::zeros(),
                -1.0,
                10.0,
                5.0,
                5.0,
                16,
                16
            ),
            Err(GeometryError::BadIntrinsics)
        ));
        assert!(matches!(
            CameraPose::new(
                Matrix3::identity(),
                Vector3::zeros(),
                10.0,
                10.0,
                50.0,
                5.0,
                16,
                16
            ),
            Err(GeometryError::BadIntrinsics)
        ));
    }

    #[test]
    fn matches_explicit_projection_matrix() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let axis = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let r = nalgebra::Rotation3::from_scaled_axis(axis).into_inner();
            let t = Vector3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(2.0..4.0),
            );
            let pose =
                CameraPose::new(r, t, 320.0, 300.0, 256.0, 192.0, 512, 384).unwrap();
            let x = Vector3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            );
            // Oracle: compose the 3x4 projection matrix explicitly.
            let k = Matrix3::new(320.0, 0.0, 256.0, 0.0, 300.0, 192.0, 0.0, 0.0, 1.0);
            let q = k * (r * x + t);
            if q.z <= 0.0 {
                assert!(pose.project(&x).is_none());
                continue;
            }
            let (px, depth) = pose.project(&x).unwrap();
            assert_relative_eq!(px.x, q.x / q.z, epsilon = 1e-10);
            assert_relative_eq!(px.y, q.y / q.z, epsilon = 1e-10);
            assert_relative_eq!(depth, q.z, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let axis = Vector3::new(0.3, -0.2, 0.9);
        let r = nalgebra::Rotation3::from_scaled_axis(axis).into_inner();
        let pose = CameraPose::new(
            r,
            Vector3::new(0.1, -0.2, 3.0),
            400.0,
            380.0,
            128.0,
            96.0,
            256,
            192,
        )
        .unwrap();
        for _ in 0..20 {
            let x = Vector3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            );
            let (_, _, jac) = pose.project_with_jacobian(&x).unwrap();
            let h = 1e-7;
            for axis in 0..3 {
                let mut xp = x;
                xp[axis] += h;
                let mut xm = x;
                xm[axis] -= h;
                let (pp, _) = pose.project(&xp).unwrap();
                let (pm, _) = pose.project(&xm).unwrap();
                let fd = (pp - pm) / (2.0 * h);
                assert_relative_eq!(fd.x, jac[(0, axis)], epsilon = 1e-5);
                assert_relative_eq!(fd.y, jac[(1, axis)], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn look_at_is_a_rotation_facing_target() {
        let center = Vector3::new(3.0, -2.0, 1.5);
        let r = look_at(&center, &Vector3::zeros(), &Vector3::z());
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        let forward = r.row(2).transpose();
        let expected = (-center).normalize();
        assert_relative_eq!((forward - expected).norm(), 0.0, epsilon = 1e-12);
    }
}
