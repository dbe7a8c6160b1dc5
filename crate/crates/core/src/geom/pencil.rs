use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::conic::adjugate;
use super::{Conic, GeomError, HomLine2, HomPoint2, Intrinsics};

/// The pole-polar pair `(l, v)` obtained from the eigenvectors of `C₂C₁*`.
///
/// For the true camera, `l ∝ ωv` with `ω = K⁻ᵀK⁻¹`. `frame` holds the
/// bootstrap intrinsics used to pick the eigenvector; residuals are
/// measured in that frame (pixels mapped through `frame⁻¹`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPair {
    pub line: HomLine2,
    pub point: HomPoint2,
    pub frame: Intrinsics,
}

impl ConstraintPair {
    /// `‖l̂ × unit(ωv)‖` for the candidate `k`, see [`pole_polar_residual`].
    pub fn residual(&self, k: &Intrinsics) -> f64 {
        pole_polar_residual(&self.line, &self.point, k, &self.frame)
    }

    /// The residual as a 3-vector, `l̂ × unit(ωv)`, for least-squares use.
    pub fn residual_vector(&self, k: &Intrinsics) -> Vector3<f64> {
        residual_vector(&self.line, &self.point, k, &self.frame)
    }
}

fn residual_vector(
    line: &HomLine2,
    point: &HomPoint2,
    k: &Intrinsics,
    frame: &Intrinsics,
) -> Vector3<f64> {
    let k0t = frame.matrix().transpose();
    let l = (k0t * line.vector()).normalize();
    let wv = (k0t * (k.iac() * point.vector())).normalize();
    l.cross(&wv)
}

/// Sine of the angle between `l` and `ωv`, both taken as lines in the
/// normalized image frame of `frame`.
///
/// Invariant to the scale and sign of `l`, `v` and `ω`; zero exactly when
/// `l ∝ ωv`.
pub fn pole_polar_residual(
    line: &HomLine2,
    point: &HomPoint2,
    k: &Intrinsics,
    frame: &Intrinsics,
) -> f64 {
    residual_vector(line, point, k, frame).norm()
}

/// Extracts the vanishing line `l` and vanishing point `v` from two sphere
/// contours.
///
/// All three eigenvectors of `C₂C₁*` are computed; each real candidate is
/// paired with the cross product of the remaining two (real and imaginary
/// parts stand in for a complex-conjugate pair), and the candidate whose
/// pair best satisfies `l ∝ ω₀v` under `bootstrap` is returned.
pub fn constraint_pair(
    c1: &Conic,
    c2: &Conic,
    bootstrap: &Intrinsics,
) -> Result<ConstraintPair, GeomError> {
    let k0 = bootstrap.matrix();
    // Conics in the bootstrap-normalized frame x' = K₀⁻¹x.
    let to_frame = |c: &Conic| {
        let m = k0.transpose() * c.matrix() * k0;
        m / m.norm()
    };
    let m1 = to_frame(c1);
    let m2 = to_frame(c2);
    let a = m2 * adjugate(&m1);
    let a = a / a.norm();
    let scalar = Matrix3::identity() * (a.trace() / 3.0);
    if (a - scalar).norm() < 1e-10 {
        return Err(GeomError::CoincidentConics);
    }

    let eigen = eigenpairs(&a);
    let scale = eigen.iter().map(|(l, _)| l.norm()).fold(0.0, f64::max);
    let is_real = |l: &Complex<f64>| l.im.abs() <= 1e-10 * scale;
    let real: Vec<usize> = (0..3).filter(|&i| is_real(&eigen[i].0)).collect();

    let re = |v: &Vector3<Complex<f64>>| v.map(|c| c.re);
    let im = |v: &Vector3<Complex<f64>>| v.map(|c| c.im);
    let mut candidates: Vec<(Vector3<f64>, Vector3<f64>)> = Vec::new();
    match real.len() {
        3 => {
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                let v = re(&eigen[j].1).cross(&re(&eigen[k].1));
                candidates.push((re(&eigen[i].1), v));
            }
        }
        1 => {
            let i = real[0];
            let j = (i + 1) % 3;
            let pair = &eigen[j].1;
            candidates.push((re(&eigen[i].1), re(pair).cross(&im(pair))));
        }
        _ => return Err(GeomError::NonRealSelection),
    }

    // In the bootstrap frame ω₀ = I, so the residual is just ∠(l', v').
    let score = |(l, v): &(Vector3<f64>, Vector3<f64>)| {
        let (ln, vn) = (l.norm(), v.norm());
        if ln == 0.0 || vn == 0.0 || !ln.is_finite() || !vn.is_finite() {
            f64::INFINITY
        } else {
            (l / ln).cross(&(v / vn)).norm()
        }
    };
    let best = candidates
        .iter()
        .map(|c| (score(c), c))
        .filter(|(s, _)| s.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| *c)
        .ok_or(GeomError::NonRealSelection)?;

    // Back to pixels: lines map by K₀⁻ᵀ, points by K₀.
    let k0_inv_t = bootstrap.inverse_matrix().transpose();
    let line = (k0_inv_t * best.0).normalize();
    let point = (k0 * best.1).normalize();
    Ok(ConstraintPair {
        line: HomPoint2::new(line)?,
        point: HomPoint2::new(point)?,
        frame: *bootstrap,
    })
}

/// Eigenvalues and right eigenvectors of a real 3×3 matrix.
fn eigenpairs(a: &Matrix3<f64>) -> [(Complex<f64>, Vector3<Complex<f64>>); 3] {
    let values = a.complex_eigenvalues();
    let ac = a.map(|x| Complex::new(x, 0.0));
    std::array::from_fn(|i| {
        let lambda = values[i];
        let b = ac - Matrix3::identity().map(|x: f64| Complex::new(x, 0.0)) * lambda;
        let rows = [
            b.row(0).transpose(),
            b.row(1).transpose(),
            b.row(2).transpose(),
        ];
        // The eigenvector is orthogonal (bilinearly) to every row of A - λI.
        let crosses = [
            rows[0].cross(&rows[1]),
            rows[0].cross(&rows[2]),
            rows[1].cross(&rows[2]),
        ];
        let best = crosses
            .into_iter()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or_default();
        let n = best.norm();
        let v = if n > 0.0 {
            best.map(|c| c / n)
        } else {
            Vector3::zeros()
        };
        // Fix the complex phase so the largest component is real.
        let lead = v
            .iter()
            .copied()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or(Complex::new(1.0, 0.0));
        let phase = if lead.norm() > 0.0 {
            lead.conj() / lead.norm()
        } else {
            Complex::new(1.0, 0.0)
        };
        (lambda, v.map(|c| c * phase))
    })
}
