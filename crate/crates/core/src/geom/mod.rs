//! Projective-geometry primitives: intrinsics, conics, homogeneous points
//! and the pole-polar pair extracted from two sphere contours.

mod conic;
mod intrinsics;
mod pencil;

use nalgebra::{Matrix3, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conic::{adjugate, fit_conic, Conic};
pub use intrinsics::Intrinsics;
pub use pencil::{constraint_pair, pole_polar_residual, ConstraintPair};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("invalid intrinsics {0:?}: focal lengths must be finite and positive")]
    InvalidIntrinsics([f64; 5]),
    #[error("matrix is not upper triangular")]
    NotUpperTriangular,
    #[error("conic coefficients are zero or non-finite")]
    ZeroConic,
    #[error("homogeneous vector is zero or non-finite")]
    ZeroVector,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("conic fit is degenerate (null space is not one-dimensional)")]
    DegenerateConic,
    #[error("the two conics coincide; the pencil eigenvectors are undefined")]
    CoincidentConics,
    #[error("no admissible real eigenvector for the vanishing line")]
    NonRealSelection,
}

/// A homogeneous 3-vector: an image point or an image line.
///
/// Never zero; equality is tested up to scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "Vector3<f64>", into = "Vector3<f64>")]
pub struct HomPoint2(Vector3<f64>);

/// Lines share the representation of points.
pub type HomLine2 = HomPoint2;

/// A homogeneous 4-vector (a point in space).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "Vector4<f64>", into = "Vector4<f64>")]
pub struct HomPoint3(Vector4<f64>);

const SCALE_EQ_TOL: f64 = 1e-12;

macro_rules! hom_impl {
    ($name:ident, $vec:ident) => {
        impl $name {
            pub fn new(v: $vec<f64>) -> Result<Self, GeomError> {
                if v.iter().any(|x| !x.is_finite()) || v.iter().all(|&x| x == 0.0) {
                    Err(GeomError::ZeroVector)
                } else {
                    Ok(Self(v))
                }
            }

            pub fn vector(&self) -> &$vec<f64> {
                &self.0
            }

            pub fn unit(&self) -> $vec<f64> {
                self.0.normalize()
            }

            /// Distance between unit representatives, minimized over sign.
            pub fn distance_up_to_scale(&self, other: &Self) -> f64 {
                let a = self.unit();
                let b = other.unit();
                (a - b).norm().min((a + b).norm())
            }
        }

        impl PartialEq for $name {
            fn eq(&self, other: &Self) -> bool {
                self.distance_up_to_scale(other) < SCALE_EQ_TOL
            }
        }

        impl TryFrom<$vec<f64>> for $name {
            type Error = GeomError;
            fn try_from(v: $vec<f64>) -> Result<Self, GeomError> {
                Self::new(v)
            }
        }

        impl From<$name> for $vec<f64> {
            fn from(p: $name) -> Self {
                p.0
            }
        }
    };
}

hom_impl!(HomPoint2, Vector3);
hom_impl!(HomPoint3, Vector4);

impl HomPoint2 {
    pub fn from_pixel(px: &Vector2<f64>) -> Self {
        Self(Vector3::new(px.x, px.y, 1.0))
    }

    pub fn dehomogenize(&self) -> Option<Vector2<f64>> {
        (self.0.z != 0.0).then(|| self.0.xy() / self.0.z)
    }
}

impl HomPoint3 {
    pub fn from_point(p: &Vector3<f64>) -> Self {
        Self(p.push(1.0))
    }

    pub fn dehomogenize(&self) -> Option<Vector3<f64>> {
        (self.0.w != 0.0).then(|| self.0.xyz() / self.0.w)
    }
}

/// Similarity moving the centroid of `points` to the origin and scaling
/// their RMS distance to √2. `None` when all points coincide.
pub fn hartley_normalization(points: &[Vector2<f64>]) -> Option<Matrix3<f64>> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let ms = points
        .iter()
        .map(|p| (p - centroid).norm_squared())
        .sum::<f64>()
        / n;
    if ms <= 0.0 || !ms.is_finite() {
        return None;
    }
    let s = (2.0 / ms).sqrt();
    Some(Matrix3::new(
        s,
        0.0,
        -s * centroid.x,
        0.0,
        s,
        -s * centroid.y,
        0.0,
        0.0,
        1.0,
    ))
}
