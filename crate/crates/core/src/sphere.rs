//! Sphere center recovery from a contour conic and lifting of camera
//! pixels onto the recovered sphere.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Conic, Intrinsics};

/// Relative eigenvalue gap accepted for the double eigenvalue of the
/// back-projected cone when the conic is exact.
pub const EXACT_PAIR_GAP: f64 = 1e-6;
/// Relaxed gap for conics fitted to noisy contour points.
pub const NOISY_PAIR_GAP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SphereError {
    #[error("conic is not the image of a sphere (eigenvalues {0:?})")]
    NotASphereImage([f64; 3]),
    #[error("sphere center depth {depth} does not exceed radius {radius}")]
    BehindCamera { depth: f64, radius: f64 },
    #[error("ray through pixel ({0}, {1}) misses the sphere")]
    RayMissesSphere(f64, f64),
    #[error("sphere radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
}

/// A sphere in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePose {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl SpherePose {
    pub fn new(center: Vector3<f64>, radius: f64) -> Result<Self, SphereError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SphereError::InvalidRadius(radius));
        }
        if center.z <= radius {
            return Err(SphereError::BehindCamera {
                depth: center.z,
                radius,
            });
        }
        Ok(Self { center, radius })
    }

    /// Half-angle of the tangent cone seen from the origin.
    pub fn half_angle(&self) -> f64 {
        (self.radius / self.center.norm()).asin()
    }

    /// Signed distance of `p` from the surface.
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.center).norm() - self.radius
    }
}

/// Recovers the sphere whose silhouette under `k` is `c`, requiring the
/// cone's double eigenvalue to agree within [`EXACT_PAIR_GAP`].
pub fn sphere_center_from_conic(
    c: &Conic,
    k: &Intrinsics,
    radius: f64,
) -> Result<SpherePose, SphereError> {
    sphere_center_with_gap(c, k, radius, EXACT_PAIR_GAP)
}

/// As [`sphere_center_from_conic`] with an explicit tolerance on the
/// relative gap of the double eigenvalue. Pass `f64::INFINITY` to accept
/// elliptic cones.
///
/// The cone `Q = KᵀCK` is diagonalized; the eigenvector of the odd-signed
/// eigenvalue `λ₃` is the axis and `tan²α = |λ₃| / λ` gives the half-angle.
/// When the pair is split, `λ` is its mean, `(tr Q − λ₃)/2`, which stays
/// smooth in `K` where the pair is double.
pub fn sphere_center_with_gap(
    c: &Conic,
    k: &Intrinsics,
    radius: f64,
    max_gap: f64,
) -> Result<SpherePose, SphereError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(SphereError::InvalidRadius(radius));
    }
    let km = k.matrix();
    let q = km.transpose() * c.matrix() * km;
    let q = q / q.norm();
    let eig = q.symmetric_eigen();
    let mut vals = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let positives = vals.iter().filter(|&&v| v > tol).count();
    let negatives = vals.iter().filter(|&&v| v < -tol).count();
    let sign = match (positives, negatives) {
        (2, 1) => 1.0,
        (1, 2) => -1.0,
        _ => return Err(SphereError::NotASphereImage(vals)),
    };
    for v in &mut vals {
        *v *= sign;
    }
    let odd = (0..3)
        .find(|&i| vals[i] < 0.0)
        .ok_or(SphereError::NotASphereImage(vals))?;
    let (i, j) = ((odd + 1) % 3, (odd + 2) % 3);
    let (lo, hi) = (vals[i].min(vals[j]), vals[i].max(vals[j]));
    if (hi - lo) / hi > max_gap {
        return Err(SphereError::NotASphereImage(vals));
    }
    let tan2 = -vals[odd] / (0.5 * (lo + hi));
    let sin_alpha = (tan2 / (1.0 + tan2)).sqrt();
    let mut axis: Vector3<f64> = eig.eigenvectors.column(odd).into_owned();
    if axis.z < 0.0 {
        axis = -axis;
    }
    let center = axis.normalize() * (radius / sin_alpha);
    SpherePose::new(center, radius)
}

/// Near intersection of the ray through `px` with the sphere.
///
/// Slightly negative discriminants (within `1e-12·‖X_S‖²`) are clamped to
/// tangency; anything below is a miss.
pub fn lift_pixel_to_sphere(
    px: &Vector2<f64>,
    k: &Intrinsics,
    pose: &SpherePose,
) -> Result<Vector3<f64>, SphereError> {
    let d = k.back_project(px).normalize();
    let c = pose.center;
    let cc = c.norm_squared();
    let b = d.dot(&c);
    let c0 = cc - pose.radius * pose.radius;
    let disc = b * b - c0;
    if disc < -1e-12 * cc || b <= 0.0 {
        return Err(SphereError::RayMissesSphere(px.x, px.y));
    }
    let root = disc.max(0.0).sqrt();
    // Product of roots is c0, so the near root is c0 / far root.
    let t = c0 / (b + root);
    Ok(d * t)
}

/// As [`lift_pixel_to_sphere`], but a ray that misses is clamped to its
/// point of closest approach to the center. The flag reports a clamp.
pub fn lift_pixel_clamped(
    px: &Vector2<f64>,
    k: &Intrinsics,
    pose: &SpherePose,
) -> Result<(Vector3<f64>, bool), SphereError> {
    let d = k.back_project(px).normalize();
    let c = pose.center;
    let b = d.dot(&c);
    if b <= 0.0 {
        return Err(SphereError::RayMissesSphere(px.x, px.y));
    }
    let c0 = c.norm_squared() - pose.radius * pose.radius;
    let disc = b * b - c0;
    if disc < 0.0 {
        return Ok((d * b, true));
    }
    Ok((d * (c0 / (b + disc.sqrt())), false))
}
