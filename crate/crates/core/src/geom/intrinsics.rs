use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::GeomError;

/// Five-parameter pinhole intrinsics, all in pixels.
///
/// ```text
///     | fx  skew  u0 |
/// K = |  0   fy   v0 |
///     |  0    0    1 |
/// ```
///
/// Used for the camera as well as for the projector once its matrix has
/// been decomposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub skew: f64,
    pub u0: f64,
    pub v0: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, skew: f64, u0: f64, v0: f64) -> Result<Self, GeomError> {
        let k = Self {
            fx,
            fy,
            skew,
            u0,
            v0,
        };
        if k.is_valid() {
            Ok(k)
        } else {
            Err(GeomError::InvalidIntrinsics(k.params()))
        }
    }

    /// Parameter vector in the order `[fx, fy, skew, u0, v0]`.
    pub fn params(&self) -> [f64; 5] {
        [self.fx, self.fy, self.skew, self.u0, self.v0]
    }

    pub fn from_params(p: [f64; 5]) -> Result<Self, GeomError> {
        Self::new(p[0], p[1], p[2], p[3], p[4])
    }

    pub fn is_valid(&self) -> bool {
        self.params().iter().all(|v| v.is_finite()) && self.fx > 0.0 && self.fy > 0.0
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, self.skew, self.u0, //
            0.0, self.fy, self.v0, //
            0.0, 0.0, 1.0,
        )
    }

    /// Closed-form `K⁻¹`.
    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        let (fx, fy, s, u0, v0) = (self.fx, self.fy, self.skew, self.u0, self.v0);
        Matrix3::new(
            1.0 / fx,
            -s / (fx * fy),
            (s * v0 - u0 * fy) / (fx * fy),
            0.0,
            1.0 / fy,
            -v0 / fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Image of the absolute conic, `ω = K⁻ᵀK⁻¹`.
    pub fn iac(&self) -> Matrix3<f64> {
        let ki = self.inverse_matrix();
        ki.transpose() * ki
    }

    /// Reads an upper-triangular matrix, rescaling so that `m[(2,2)] == 1`.
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self, GeomError> {
        let s = m[(2, 2)];
        let lower = m[(1, 0)].abs() + m[(2, 0)].abs() + m[(2, 1)].abs();
        if s == 0.0 || lower > 1e-12 * m.abs().max() {
            return Err(GeomError::NotUpperTriangular);
        }
        let m = m / s;
        Self::new(m[(0, 0)], m[(1, 1)], m[(0, 1)], m[(0, 2)], m[(1, 2)])
    }

    /// Pixel of a camera-frame point.
    pub fn project(&self, p: &Vector3<f64>) -> Vector2<f64> {
        let x = p.x / p.z;
        let y = p.y / p.z;
        Vector2::new(self.fx * x + self.skew * y + self.u0, self.fy * y + self.v0)
    }

    /// Ray direction `K⁻¹ (x, y, 1)ᵀ` (not normalized).
    pub fn back_project(&self, px: &Vector2<f64>) -> Vector3<f64> {
        let y = (px.y - self.v0) / self.fy;
        let x = (px.x - self.u0 - self.skew * y) / self.fx;
        Vector3::new(x, y, 1.0)
    }
}
