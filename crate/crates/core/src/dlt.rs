//! Projector matrix estimation by the direct linear transform, residuals
//! and RQ decomposition into intrinsics and pose.

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Matrix4, Rotation3, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{hartley_normalization, GeomError, Intrinsics};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DltError {
    #[error("need at least 6 correspondences, got {0}")]
    TooFewPoints(usize),
    #[error("point and pixel lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("degenerate configuration (singular value ratio {0:.4})")]
    DegenerateConfiguration(f64),
    #[error("left 3x3 block of the projection matrix is singular")]
    SingularBlock,
    #[error("point {0} projects to infinity")]
    PointAtInfinity(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// A 3×4 projection matrix `K[R|T]` in a fixed gauge: the first three
/// entries of the third row form a unit vector and the left block has a
/// positive determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 4]; 3]", into = "[[f64; 4]; 3]")]
pub struct ProjMatrix {
    m: Matrix3x4<f64>,
}

impl TryFrom<[[f64; 4]; 3]> for ProjMatrix {
    type Error = DltError;
    fn try_from(rows: [[f64; 4]; 3]) -> Result<Self, DltError> {
        Self::new(Matrix3x4::from_fn(|r, c| rows[r][c]))
    }
}

impl From<ProjMatrix> for [[f64; 4]; 3] {
    fn from(p: ProjMatrix) -> Self {
        std::array::from_fn(|r| std::array::from_fn(|c| p.m[(r, c)]))
    }
}

impl ProjMatrix {
    /// Brings `m` into the gauge. Fails if the left block is singular.
    pub fn new(m: Matrix3x4<f64>) -> Result<Self, DltError> {
        let block = m.fixed_view::<3, 3>(0, 0);
        let det = block.determinant();
        let row_norm = block.row(2).norm();
        if !det.is_finite() || det.abs() <= 1e-14 * block.norm().powi(3) || row_norm == 0.0 {
            return Err(DltError::SingularBlock);
        }
        Ok(Self {
            m: m * (det.signum() / row_norm),
        })
    }

    pub fn compose(k: &Intrinsics, r: &Matrix3<f64>, t: &Vector3<f64>) -> Result<Self, DltError> {
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        rt.set_column(3, t);
        Self::new(k.matrix() * rt)
    }

    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.m
    }

    pub fn left_block(&self) -> Matrix3<f64> {
        self.m.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// Optical center `-B⁻¹m₄` in the world (camera) frame.
    pub fn center(&self) -> Vector3<f64> {
        let b = self.left_block();
        let m4: Vector3<f64> = self.m.column(3).into_owned();
        -b.try_inverse().expect("gauge guarantees invertibility") * m4
    }

    /// Homogeneous image of `p`.
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.m * Vector4::new(p.x, p.y, p.z, 1.0)
    }

    /// Dehomogenized projection; `None` when the projective depth is
    /// negligible relative to the other coordinates.
    pub fn project(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        let h = self.apply(p);
        (h.z.abs() >= 1e-12 * h.norm()).then(|| h.xy() / h.z)
    }

    /// Unit Frobenius distance to `other`, minimized over sign.
    pub fn distance_up_to_scale(&self, other: &ProjMatrix) -> f64 {
        let a = self.m.normalize();
        let b = other.m.normalize();
        (a - b).norm().min((a + b).norm())
    }

    /// RQ decomposition `M ∝ K[R|T]` with positive focal lengths and
    /// `det R = +1`.
    pub fn decompose(&self) -> Result<Decomposition, DltError> {
        let b = self.left_block();
        let (k_raw, r) = rq3(&b).ok_or(DltError::SingularBlock)?;
        let m4: Vector3<f64> = self.m.column(3).into_owned();
        let t = k_raw.try_inverse().ok_or(DltError::SingularBlock)? * m4;
        let k = Intrinsics::from_matrix(&k_raw)?;
        Ok(Decomposition {
            k,
            rotation: r,
            translation: t,
        })
    }
}

/// `K_P`, `R` and `T` of a projection matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    #[serde(rename = "K")]
    pub k: Intrinsics,
    #[serde(rename = "R", with = "rows3")]
    pub rotation: Matrix3<f64>,
    #[serde(rename = "T")]
    pub translation: Vector3<f64>,
}

impl Decomposition {
    pub fn compose(&self) -> Result<ProjMatrix, DltError> {
        ProjMatrix::compose(&self.k, &self.rotation, &self.translation)
    }
}

/// Row-major `[[f64; 3]; 3]` (de)serialization for rotation matrices.
pub(crate) mod rows3 {
    use nalgebra::Matrix3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix3<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: [[f64; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix3<f64>, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(d)?;
        Ok(Matrix3::from_fn(|r, c| rows[r][c]))
    }
}

/// `B = K R` with `K` upper triangular (positive diagonal) and `R` a
/// rotation. Requires `det B > 0` for `det R = +1`.
fn rq3(b: &Matrix3<f64>) -> Option<(Matrix3<f64>, Matrix3<f64>)> {
    // Reversal permutation turns QR of (P B)ᵀ into RQ of B.
    let p = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
    let qr = (p * b).transpose().qr();
    let (q, r) = (qr.q(), qr.r());
    let mut k = p * r.transpose() * p;
    let mut rot = p * q.transpose();
    for i in 0..3 {
        if k[(i, i)] < 0.0 {
            // Flip column i of K and row i of R together.
            for row in 0..3 {
                k[(row, i)] = -k[(row, i)];
            }
            for col in 0..3 {
                rot[(i, col)] = -rot[(i, col)];
            }
        }
        if k[(i, i)] == 0.0 {
            return None;
        }
    }
    Some((k, rot))
}

/// One camera-projector correspondence with its 3D point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub camera_px: Vector2<f64>,
    pub projector_px: Vector2<f64>,
    pub point: Vector3<f64>,
}

/// Similarity normalization in 3D: centroid to origin, RMS distance √3.
fn normalization_3d(points: &[Vector3<f64>]) -> Option<Matrix4<f64>> {
    let n = points.len() as f64;
    let c = points.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let ms = points.iter().map(|p| (p - c).norm_squared()).sum::<f64>() / n;
    if !(ms > 0.0 && ms.is_finite()) {
        return None;
    }
    let s = (3.0 / ms).sqrt();
    let mut t = Matrix4::identity() * s;
    t[(3, 3)] = 1.0;
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-s * c));
    Some(t)
}

/// DLT from correspondences (uses the projector pixel and the 3D point).
pub fn dlt_estimate(corrs: &[Correspondence]) -> Result<ProjMatrix, DltError> {
    let points: Vec<_> = corrs.iter().map(|c| c.point).collect();
    let pixels: Vec<_> = corrs.iter().map(|c| c.projector_px).collect();
    estimate_projection(&points, &pixels)
}

/// DLT with 2D and 3D similarity normalization.
///
/// The matrix minimizes the algebraic error in the normalized frames. A
/// configuration is rejected when the smallest two singular values of the
/// design matrix are within 1% of each other, or when the second smallest
/// is numerically zero.
pub fn estimate_projection(
    points: &[Vector3<f64>],
    pixels: &[Vector2<f64>],
) -> Result<ProjMatrix, DltError> {
    if points.len() != pixels.len() {
        return Err(DltError::LengthMismatch(points.len(), pixels.len()));
    }
    let n = points.len();
    if n < 6 {
        return Err(DltError::TooFewPoints(n));
    }
    let t2 = hartley_normalization(pixels).ok_or(DltError::DegenerateConfiguration(1.0))?;
    let t3 = normalization_3d(points).ok_or(DltError::DegenerateConfiguration(1.0))?;

    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (p, x)) in points.iter().zip(pixels).enumerate() {
        let ph = t3 * Vector4::new(p.x, p.y, p.z, 1.0);
        let xh = t2 * Vector3::new(x.x, x.y, 1.0);
        let (u, v) = (xh.x, xh.y);
        for j in 0..4 {
            a[(2 * i, j)] = ph[j];
            a[(2 * i, 8 + j)] = -u * ph[j];
            a[(2 * i + 1, 4 + j)] = ph[j];
            a[(2 * i + 1, 8 + j)] = -v * ph[j];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(DltError::DegenerateConfiguration(1.0))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let smallest = sv[order[11]];
    let second = sv[order[10]];
    let ratio = if second > 0.0 { smallest / second } else { 1.0 };
    if ratio > 0.99 || second <= 1e-10 * sv[order[0]] {
        return Err(DltError::DegenerateConfiguration(ratio));
    }
    let h = v_t.row(order[11]);
    let mn = Matrix3x4::from_fn(|r, c| h[4 * r + c]);
    let t2_inv = t2.try_inverse().ok_or(DltError::SingularBlock)?;
    ProjMatrix::new(t2_inv * mn * t3)
}

/// Euclidean reprojection error per correspondence, in pixels.
pub fn reprojection_residuals(
    m: &ProjMatrix,
    corrs: &[Correspondence],
) -> Result<Vec<f64>, DltError> {
    corrs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            m.project(&c.point)
                .map(|p| (c.projector_px - p).norm())
                .ok_or(DltError::PointAtInfinity(i))
        })
        .collect()
}

/// Rotation by `angle` radians about the unit `axis`.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn projector_k() -> Intrinsics {
        Intrinsics::new(1202.7, 1199.0, -8.2, 390.7, 222.8).unwrap()
    }

    fn cloud(n: usize) -> Vec<Vector3<f64>> {
        // Deterministic, non-coplanar points in front of the device.
        (0..n)
            .map(|i| {
                let t = i as f64;
                Vector3::new(
                    (t * 0.71).sin() * 0.6,
                    (t * 1.37).cos() * 0.4,
                    4.0 + (t * 0.53).sin(),
                )
            })
            .collect()
    }

    fn corrs_for(m: &ProjMatrix, pts: &[Vector3<f64>]) -> Vec<Correspondence> {
        pts.iter()
            .map(|p| Correspondence {
                camera_px: Vector2::zeros(),
                projector_px: m.project(p).unwrap(),
                point: *p,
            })
            .collect()
    }

    #[test]
    fn recovers_canonical_projector() {
        let m = ProjMatrix::compose(&projector_k(), &Matrix3::identity(), &Vector3::zeros()).unwrap();
        let est = dlt_estimate(&corrs_for(&m, &cloud(20))).unwrap();
        let diff = (est.matrix() - m.matrix()).abs().max();
        assert!(diff < 1e-9, "max entry error {diff}");
    }

    #[test]
    fn six_points_interpolate_exactly() {
        let r = axis_angle(&Vector3::new(0.2, 1.0, 0.1), 0.3);
        let m = ProjMatrix::compose(&projector_k(), &r, &Vector3::new(0.1, -0.2, 1.5)).unwrap();
        let corrs = corrs_for(&m, &cloud(6));
        let est = dlt_estimate(&corrs).unwrap();
        for r in reprojection_residuals(&est, &corrs).unwrap() {
            assert!(r < 1e-10, "residual {r}");
        }
    }

    #[test]
    fn five_points_are_too_few() {
        let m = ProjMatrix::compose(&projector_k(), &Matrix3::identity(), &Vector3::zeros()).unwrap();
        assert_eq!(
            dlt_estimate(&corrs_for(&m, &cloud(5))),
            Err(DltError::TooFewPoints(5))
        );
    }

    #[test]
    fn coplanar_points_are_degenerate() {
        let m = ProjMatrix::compose(&projector_k(), &Matrix3::identity(), &Vector3::zeros()).unwrap();
        let pts: Vec<_> = cloud(30).into_iter().map(|p| Vector3::new(p.x, p.y, 4.0)).collect();
        assert!(matches!(
            dlt_estimate(&corrs_for(&m, &pts)),
            Err(DltError::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn pythagorean_residual() {
        let m = ProjMatrix::compose(&projector_k(), &Matrix3::identity(), &Vector3::zeros()).unwrap();
        let mut corrs = corrs_for(&m, &cloud(10));
        corrs[3].projector_px += Vector2::new(3.0, 4.0);
        let res = reprojection_residuals(&m, &corrs).unwrap();
        assert_relative_eq!(res[3], 5.0, epsilon = 1e-9);
        assert!(res[0] < 1e-9);
    }

    #[test]
    fn point_at_infinity_is_reported() {
        let m = ProjMatrix::compose(&projector_k(), &Matrix3::identity(), &Vector3::zeros()).unwrap();
        let corrs = [Correspondence {
            camera_px: Vector2::zeros(),
            projector_px: Vector2::zeros(),
            point: Vector3::new(1.0, 1.0, 0.0),
        }];
        assert_eq!(
            reprojection_residuals(&m, &corrs),
            Err(DltError::PointAtInfinity(0))
        );
    }

    #[test]
    fn canonical_decomposition() {
        let k = projector_k();
        let m = ProjMatrix::compose(&k, &Matrix3::identity(), &Vector3::zeros()).unwrap();
        let d = m.decompose().unwrap();
        assert_relative_eq!(d.k.matrix(), k.matrix(), max_relative = 1e-12);
        assert_relative_eq!(d.rotation, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(d.translation, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn sign_gauge_is_absorbed() {
        let k = projector_k();
        let r = axis_angle(&Vector3::new(0.0, 1.0, 0.0), 0.26);
        let t = Vector3::new(0.1, -0.2, 1.5);
        let m = ProjMatrix::compose(&k, &r, &t).unwrap();
        let flipped = ProjMatrix::new(-m.matrix() * 7.0).unwrap();
        let (a, b) = (m.decompose().unwrap(), flipped.decompose().unwrap());
        assert_relative_eq!(a.k.matrix(), b.k.matrix(), max_relative = 1e-12);
        assert_relative_eq!(a.rotation, b.rotation, epsilon = 1e-12);
        assert_relative_eq!(a.translation, b.translation, epsilon = 1e-12);
        assert_relative_eq!(b.rotation, r, epsilon = 1e-12);
    }

    #[test]
    fn json_is_row_major() {
        let m = ProjMatrix::compose(&projector_k(), &Matrix3::identity(), &Vector3::zeros()).unwrap();
        let rows: [[f64; 4]; 3] = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(rows[0][2], m.matrix()[(0, 2)]);
    }
}
