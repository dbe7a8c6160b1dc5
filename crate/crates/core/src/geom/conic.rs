use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{hartley_normalization, GeomError};

/// A conic `xᵀ C x = 0` in homogeneous image coordinates.
///
/// Only the six unique entries of the symmetric matrix are stored, so
/// symmetry holds by construction. The JSON form is the unit-Frobenius,
/// `c11 ≥ 0` normalized array `[c11, c12, c13, c22, c23, c33]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 6]", try_from = "[f64; 6]")]
pub struct Conic {
    c: [f64; 6],
}

impl From<Conic> for [f64; 6] {
    fn from(c: Conic) -> Self {
        c.normalized().c
    }
}

impl TryFrom<[f64; 6]> for Conic {
    type Error = GeomError;

    fn try_from(c: [f64; 6]) -> Result<Self, Self::Error> {
        if c.iter().any(|v| !v.is_finite()) || c.iter().all(|&v| v == 0.0) {
            return Err(GeomError::ZeroConic);
        }
        Ok(Self { c })
    }
}

impl Conic {
    /// Builds a conic from any 3×3 matrix, keeping its symmetric part.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let s = (m + m.transpose()) * 0.5;
        Self {
            c: [
                s[(0, 0)],
                s[(0, 1)],
                s[(0, 2)],
                s[(1, 1)],
                s[(1, 2)],
                s[(2, 2)],
            ],
        }
    }

    pub fn coefficients(&self) -> [f64; 6] {
        self.c
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let [a, b, c, d, e, f] = self.c;
        Matrix3::new(a, b, c, b, d, e, c, e, f)
    }

    /// Unit Frobenius norm (of the full 3×3 matrix) with `c11 ≥ 0`.
    ///
    /// When `c11` is exactly zero the first non-zero coefficient decides
    /// the sign.
    pub fn normalized(&self) -> Self {
        let m = self.matrix();
        let norm = m.norm();
        if norm == 0.0 {
            return *self;
        }
        let lead = self.c.iter().copied().find(|v| *v != 0.0).unwrap_or(1.0);
        let sign = if self.c[0] > 0.0 || (self.c[0] == 0.0 && lead > 0.0) {
            1.0
        } else {
            -1.0
        };
        let mut c = self.c;
        for v in &mut c {
            *v *= sign / norm;
        }
        Self { c }
    }

    pub fn determinant(&self) -> f64 {
        self.matrix().determinant()
    }

    /// `xᵀ C x` for the pixel `(x, y, 1)`.
    pub fn eval(&self, px: &Vector2<f64>) -> f64 {
        let x = Vector3::new(px.x, px.y, 1.0);
        x.dot(&(self.matrix() * x))
    }

    /// True for a real, non-degenerate ellipse.
    pub fn is_real_ellipse(&self) -> bool {
        let n = self.normalized();
        let [a, b, _, d, _, _] = n.c;
        a * d - b * b > 0.0 && n.determinant() < 0.0
    }

    /// Transpose of the cofactor matrix (the dual conic `C*`).
    pub fn adjugate(&self) -> Self {
        Self::from_matrix(&adjugate(&self.matrix()))
    }

    /// The conic seen after the point map `x' = H x`, i.e. `H⁻ᵀ C H⁻¹`.
    pub fn transformed(&self, h: &Matrix3<f64>) -> Option<Self> {
        let hi = h.try_inverse()?;
        Some(Self::from_matrix(&(hi.transpose() * self.matrix() * hi)))
    }

    /// Ellipse center, the pole of the line at infinity.
    pub fn center(&self) -> Option<Vector2<f64>> {
        let p = adjugate(&self.matrix()) * Vector3::z();
        (p.z.abs() > f64::EPSILON * p.norm()).then(|| p.xy() / p.z)
    }

    /// Axis-aligned bounding box `(min, max)` of a real ellipse.
    pub fn bounding_box(&self) -> Option<(Vector2<f64>, Vector2<f64>)> {
        let dual = adjugate(&self.matrix());
        // Tangent lines (1, 0, -a) and (0, 1, -b): q22 - 2 q23 t + q33 t² = 0.
        let roots = |qaa: f64, qa3: f64, q33: f64| -> Option<(f64, f64)> {
            let disc = qa3 * qa3 - q33 * qaa;
            if disc < 0.0 || q33 == 0.0 {
                return None;
            }
            let s = disc.sqrt();
            let (t1, t2) = ((qa3 - s) / q33, (qa3 + s) / q33);
            Some((t1.min(t2), t1.max(t2)))
        };
        let (x0, x1) = roots(dual[(0, 0)], dual[(0, 2)], dual[(2, 2)])?;
        let (y0, y1) = roots(dual[(1, 1)], dual[(1, 2)], dual[(2, 2)])?;
        Some((Vector2::new(x0, y0), Vector2::new(x1, y1)))
    }

    /// First-order (Sampson) distance from a pixel to the curve, in pixels.
    pub fn sampson_distance(&self, px: &Vector2<f64>) -> f64 {
        let x = Vector3::new(px.x, px.y, 1.0);
        let cx = self.matrix() * x;
        let f = x.dot(&cx);
        let grad = 2.0 * cx.xy().norm();
        if grad == 0.0 {
            f64::INFINITY
        } else {
            f.abs() / grad
        }
    }

    /// Whether a pixel lies strictly inside a real ellipse.
    pub fn contains(&self, px: &Vector2<f64>) -> bool {
        self.normalized().eval(px) < 0.0
    }

    /// Grid pixels (integer multiples of `stride`) inside the ellipse and
    /// at least `margin` pixels from the curve.
    pub fn interior_grid(&self, stride: u32, margin: f64) -> Vec<Vector2<f64>> {
        let stride = stride.max(1) as i64;
        let Some((lo, hi)) = self.bounding_box() else {
            return Vec::new();
        };
        let n = self.normalized();
        let kx0 = (lo.x / stride as f64).ceil() as i64;
        let kx1 = (hi.x / stride as f64).floor() as i64;
        let ky0 = (lo.y / stride as f64).ceil() as i64;
        let ky1 = (hi.y / stride as f64).floor() as i64;
        let mut out = Vec::new();
        for ky in ky0..=ky1 {
            for kx in kx0..=kx1 {
                let px = Vector2::new((kx * stride) as f64, (ky * stride) as f64);
                if n.eval(&px) < 0.0 && n.sampson_distance(&px) > margin {
                    out.push(px);
                }
            }
        }
        out
    }

    /// Frobenius distance between unit-normalized matrices, minimized over
    /// the sign gauge.
    pub fn distance_up_to_scale(&self, other: &Conic) -> f64 {
        let a = self.matrix().normalize();
        let b = other.matrix().normalize();
        (a - b).norm().min((a + b).norm())
    }
}

/// Adjugate (transpose of the cofactor matrix) of a 3×3 matrix.
pub fn adjugate(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| {
        m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)]
    };
    Matrix3::new(
        c(1, 2, 1, 2),
        -c(0, 2, 1, 2),
        c(0, 1, 1, 2),
        -c(1, 2, 0, 2),
        c(0, 2, 0, 2),
        -c(0, 1, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 0, 1),
        c(0, 1, 0, 1),
    )
}

/// Algebraic least-squares conic through `points`.
///
/// The points are moved to their centroid and scaled to RMS distance √2
/// before the fit; the minimizer of `Σ (x̂ᵀ C x̂)²` over unit-norm
/// coefficient vectors in that frame is mapped back to pixels.
pub fn fit_conic(points: &[Vector2<f64>]) -> Result<Conic, GeomError> {
    if points.len() < 6 {
        return Err(GeomError::TooFewPoints {
            needed: 6,
            got: points.len(),
        });
    }
    let t = hartley_normalization(points).ok_or(GeomError::DegenerateConic)?;
    let mut design = DMatrix::<f64>::zeros(points.len(), 6);
    for (i, p) in points.iter().enumerate() {
        let q = t * Vector3::new(p.x, p.y, 1.0);
        let (x, y) = (q.x, q.y);
        design
            .row_mut(i)
            .copy_from_slice(&[x * x, x * y, y * y, x, y, 1.0]);
    }
    let svd = design.svd(false, true);
    let v_t = svd.v_t.ok_or(GeomError::DegenerateConic)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = |i: usize| svd.singular_values[order[i]];
    let last = order.len() - 1;
    if sv(last - 1) - sv(last) <= 1e-12 * sv(0) {
        return Err(GeomError::DegenerateConic);
    }
    let h = v_t.row(order[last]);
    let (a, b, c, d, e, f) = (h[0], h[1], h[2], h[3], h[4], h[5]);
    let normalized = Matrix3::new(
        a,
        b / 2.0,
        d / 2.0,
        b / 2.0,
        c,
        e / 2.0,
        d / 2.0,
        e / 2.0,
        f,
    );
    let pixel = t.transpose() * normalized * t;
    Ok(Conic::from_matrix(&pixel).normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn on_ellipse(a: f64, b: f64, cx: f64, cy: f64, n: usize) -> Vec<Vector2<f64>> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                Vector2::new(cx + a * t.cos(), cy + b * t.sin())
            })
            .collect()
    }

    #[test]
    fn unit_circle_fit() {
        let c = fit_conic(&on_ellipse(1.0, 1.0, 0.0, 0.0, 64)).unwrap();
        let expect = Conic::from_matrix(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0)));
        assert!(c.distance_up_to_scale(&expect) < 1e-12);
        assert!(c.is_real_ellipse());
    }

    #[test]
    fn axis_aligned_ellipse_fit() {
        let c = fit_conic(&on_ellipse(2.0, 1.0, 0.0, 0.0, 64)).unwrap();
        let expect = Conic::from_matrix(&Matrix3::from_diagonal(&Vector3::new(0.25, 1.0, -1.0)));
        assert!(c.distance_up_to_scale(&expect) < 1e-12);
    }

    #[test]
    fn pixel_scale_fit_has_tiny_residual() {
        let pts = on_ellipse(412.0, 380.0, 1700.0, 1330.0, 200);
        let c = fit_conic(&pts).unwrap();
        for p in &pts {
            assert!(c.sampson_distance(p) < 1e-9);
        }
    }

    #[test]
    fn too_few_points() {
        let pts = on_ellipse(1.0, 1.0, 0.0, 0.0, 5);
        assert_eq!(
            fit_conic(&pts),
            Err(GeomError::TooFewPoints { needed: 6, got: 5 })
        );
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<_> = (0..20)
            .map(|i| Vector2::new(i as f64, 2.0 * i as f64 + 1.0))
            .collect();
        assert_eq!(fit_conic(&pts), Err(GeomError::DegenerateConic));
    }

    #[test]
    fn adjugate_examples() {
        assert_eq!(adjugate(&Matrix3::identity()), Matrix3::identity());
        let d = Matrix3::from_diagonal(&Vector3::new(2.0, 3.0, 4.0));
        assert_eq!(
            adjugate(&d),
            Matrix3::from_diagonal(&Vector3::new(12.0, 8.0, 6.0))
        );
    }

    #[test]
    fn center_and_bounding_box() {
        let c = fit_conic(&on_ellipse(4.0, 2.0, 10.0, -3.0, 64)).unwrap();
        assert_relative_eq!(c.center().unwrap(), Vector2::new(10.0, -3.0), epsilon = 1e-9);
        let (lo, hi) = c.bounding_box().unwrap();
        assert_relative_eq!(lo, Vector2::new(6.0, -5.0), epsilon = 1e-9);
        assert_relative_eq!(hi, Vector2::new(14.0, -1.0), epsilon = 1e-9);
    }

    #[test]
    fn interior_grid_respects_margin() {
        let c = fit_conic(&on_ellipse(50.0, 30.0, 100.0, 100.0, 64)).unwrap();
        let grid = c.interior_grid(4, 2.0);
        assert!(!grid.is_empty());
        for p in &grid {
            assert!(c.contains(p));
            assert!(c.sampson_distance(p) > 2.0);
            assert_eq!(p.x % 4.0, 0.0);
        }
    }

    #[test]
    fn json_is_normalized_six_entries() {
        let c = Conic::from_matrix(&Matrix3::from_diagonal(&Vector3::new(-2.0, -2.0, 2.0)));
        let json = serde_json::to_string(&c).unwrap();
        let back: [f64; 6] = serde_json::from_str(&json).unwrap();
        assert!(back[0] > 0.0);
        let norm = Conic::try_from(back).unwrap().matrix().norm();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-15);
    }
}
