//! Camera intrinsics from the inter-sphere consistency of a shared
//! projector matrix.
//!
//! For a candidate camera `K`, each sphere's center follows from its
//! contour conic and known radius, every decoded camera pixel lifts onto
//! its sphere, and one DLT over both spheres fits the projector matrix.
//! Only the true `K` makes the two spheres agree on a single projector, so
//! the summed reprojection error is minimized over the five intrinsics,
//! with the pole-polar relation `l ∝ ωv` added as a soft penalty.

use std::cmp::Ordering;
use std::fmt;

use log::{debug, info};
use nalgebra::{DMatrix, DVector, Matrix5, Vector2, Vector3, Vector5};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::dlt::{estimate_projection, Decomposition, DltError, ProjMatrix};
use crate::geom::{constraint_pair, Conic, ConstraintPair, GeomError, Intrinsics};
use crate::sim::SceneTruth;
use crate::sphere::{lift_pixel_clamped, sphere_center_with_gap, SphereError, SpherePose};

/// Objective value assigned to candidates for which a sphere cannot be
/// recovered or a pixel cannot be lifted.
pub const INFEASIBLE_BARRIER: f64 = 1e12;
/// Minimum number of correspondences per sphere.
pub const MIN_CORRESPONDENCES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IscError {
    #[error("two sphere observations required, got {0}")]
    NotTwoSpheres(usize),
    #[error("sphere {sphere}: {got} correspondences, need at least {MIN_CORRESPONDENCES}")]
    TooFewCorrespondences { sphere: usize, got: usize },
    #[error("sphere {sphere}: {cam} camera pixels but {proj} projector pixels")]
    LengthMismatch {
        sphere: usize,
        cam: usize,
        proj: usize,
    },
    #[error("sphere {sphere}: radius must be positive, got {radius}")]
    InvalidRadius { sphere: usize, radius: f64 },
    #[error("invalid option `{0}`")]
    InvalidOption(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("candidate intrinsics are infeasible: {0}")]
    InfeasibleCandidate(String),
    #[error("focal scan found no feasible starting point")]
    NoFeasibleStart,
    #[error("final projector matrix: {0}")]
    Projector(#[from] DltError),
}

impl IscError {
    /// True for errors caused by the input geometry (wrong sphere count,
    /// coincident or degenerate conics, too little data).
    pub fn is_degenerate_input(&self) -> bool {
        matches!(
            self,
            IscError::NotTwoSpheres(_)
                | IscError::TooFewCorrespondences { .. }
                | IscError::LengthMismatch { .. }
                | IscError::InvalidRadius { .. }
                | IscError::Geometry(_)
        )
    }
}

/// One sphere as seen by the rig: its contour conic, known radius and
/// decoded camera-to-projector pixel pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereObservation {
    pub conic: Conic,
    pub radius: f64,
    pub camera_px: Vec<Vector2<f64>>,
    pub projector_px: Vec<Vector2<f64>>,
}

impl SphereObservation {
    pub fn len(&self) -> usize {
        self.camera_px.len()
    }

    pub fn is_empty(&self) -> bool {
        self.camera_px.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IscOptions {
    /// Constraint weight; `None` selects `1e4·(N₁+N₂)`, `Some(0.0)`
    /// disables the constraint.
    pub mu: Option<f64>,
    pub max_iters: usize,
    /// Focal scan range as multiples of the camera width.
    pub f_scan_range: [f64; 2],
    pub f_scan_samples: usize,
    /// Relative objective decrease below which a step counts as stalled.
    pub ftol: f64,
    /// Relative parameter step below which a step counts as stalled.
    pub xtol: f64,
    /// Central-difference step in width-normalized parameters.
    pub fd_step: f64,
}

impl Default for IscOptions {
    fn default() -> Self {
        Self {
            mu: None,
            max_iters: 200,
            f_scan_range: [0.3, 5.0],
            f_scan_samples: 40,
            ftol: 1e-10,
            xtol: 1e-8,
            fd_step: 1e-5,
        }
    }
}

impl IscOptions {
    fn validate(&self) -> Result<(), IscError> {
        if let Some(mu) = self.mu {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(IscError::InvalidOption("mu"));
            }
        }
        let [lo, hi] = self.f_scan_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(IscError::InvalidOption("f_scan_range"));
        }
        if self.f_scan_samples < 2 {
            return Err(IscError::InvalidOption("f_scan_samples"));
        }
        if !(self.ftol >= 0.0 && self.xtol >= 0.0) {
            return Err(IscError::InvalidOption("tolerances"));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 1.0) {
            return Err(IscError::InvalidOption("fd_step"));
        }
        Ok(())
    }
}

/// A validated two-sphere problem with its constraint pair.
///
/// Observations are stored in a canonical order (by conic center) so the
/// result does not depend on the order they were supplied in.
#[derive(Debug, Clone)]
pub struct IscProblem {
    obs: [SphereObservation; 2],
    /// `order[i]` is the input index of canonical observation `i`.
    order: [usize; 2],
    cam_w: usize,
    cam_h: usize,
    mu: f64,
    constraint: Option<ConstraintPair>,
    bootstrap: Intrinsics,
    options: IscOptions,
}

/// Everything computed for one candidate `K`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub projector: ProjMatrix,
    pub spheres: [SpherePose; 2],
    /// Sum of reprojection error norms per canonical sphere.
    pub reprojection_sums: [f64; 2],
    /// `‖l̂ × unit(ωv)‖`, or `None` when the constraint is off.
    pub constraint: Option<f64>,
    /// Reprojection residual components, then `√μ·(l̂ × unit(ωv))`.
    pub residuals: Vec<f64>,
    pub mu: f64,
}

impl Evaluation {
    /// Unsquared reprojection sum plus `μ·c²`.
    pub fn value(&self) -> f64 {
        let c = self.constraint.unwrap_or(0.0);
        self.reprojection_sums.iter().sum::<f64>() + self.mu * c * c
    }

    /// Squared residual norm, the quantity actually minimized.
    pub fn cost(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

impl IscProblem {
    /// Validates the observations, finds a starting focal length by a
    /// coarse scan and extracts the constraint pair in that frame.
    pub fn new(
        observations: Vec<SphereObservation>,
        image_size: (usize, usize),
        options: IscOptions,
    ) -> Result<Self, IscError> {
        options.validate()?;
        if observations.len() != 2 {
            return Err(IscError::NotTwoSpheres(observations.len()));
        }
        for (sphere, o) in observations.iter().enumerate() {
            if o.camera_px.len() != o.projector_px.len() {
                return Err(IscError::LengthMismatch {
                    sphere,
                    cam: o.camera_px.len(),
                    proj: o.projector_px.len(),
                });
            }
            if o.len() < MIN_CORRESPONDENCES {
                return Err(IscError::TooFewCorrespondences { sphere, got: o.len() });
            }
            if !(o.radius > 0.0 && o.radius.is_finite()) {
                return Err(IscError::InvalidRadius {
                    sphere,
                    radius: o.radius,
                });
            }
        }
        if observations[0].conic.distance_up_to_scale(&observations[1].conic) < 1e-12 {
            return Err(GeomError::CoincidentConics.into());
        }
        let key = |o: &SphereObservation| o.conic.center().map(|c| [c.x, c.y]).unwrap_or([f64::NAN; 2]);
        let (k0, k1) = (key(&observations[0]), key(&observations[1]));
        let swap = match k0[0].total_cmp(&k1[0]).then(k0[1].total_cmp(&k1[1])) {
            Ordering::Greater => true,
            Ordering::Equal => {
                // Fall back to the coefficient vectors for a strict order.
                let (a, b) = (observations[0].conic.coefficients(), observations[1].conic.coefficients());
                a.iter().zip(&b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()) == Some(Ordering::Greater)
            }
            Ordering::Less => false,
        };
        let mut observations = observations;
        let order = if swap {
            observations.swap(0, 1);
            [1, 0]
        } else {
            [0, 1]
        };
        let [a, b]: [SphereObservation; 2] = observations.try_into().expect("length checked");
        let n_total = (a.len() + b.len()) as f64;
        let mu = options.mu.unwrap_or(1e4 * n_total);

        let mut problem = Self {
            obs: [a, b],
            order,
            cam_w: image_size.0,
            cam_h: image_size.1,
            mu,
            constraint: None,
            bootstrap: Intrinsics {
                fx: image_size.0 as f64,
                fy: image_size.0 as f64,
                skew: 0.0,
                u0: image_size.0 as f64 / 2.0,
                v0: image_size.1 as f64 / 2.0,
            },
            options,
        };
        problem.bootstrap = problem.focal_scan()?;
        if mu > 0.0 {
            problem.constraint = Some(constraint_pair(
                &problem.obs[0].conic,
                &problem.obs[1].conic,
                &problem.bootstrap,
            )?);
        }
        Ok(problem)
    }

    pub fn observations(&self) -> &[SphereObservation; 2] {
        &self.obs
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn constraint(&self) -> Option<&ConstraintPair> {
        self.constraint.as_ref()
    }

    /// Starting intrinsics chosen by the focal scan.
    pub fn bootstrap(&self) -> Intrinsics {
        self.bootstrap
    }

    pub fn image_size(&self) -> (usize, usize) {
        (self.cam_w, self.cam_h)
    }

    /// Log-spaced scan of a shared focal length with the principal point
    /// at the image center and zero skew; the constraint is not used here.
    fn focal_scan(&self) -> Result<Intrinsics, IscError> {
        let w = self.cam_w as f64;
        let [lo, hi] = self.options.f_scan_range;
        let n = self.options.f_scan_samples;
        let candidates: Vec<Intrinsics> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                let f = w * lo * (hi / lo).powf(t);
                Intrinsics {
                    fx: f,
                    fy: f,
                    skew: 0.0,
                    u0: w / 2.0,
                    v0: self.cam_h as f64 / 2.0,
                }
            })
            .collect();
        let costs: Vec<f64> = candidates
            .par_iter()
            .map(|k| self.evaluate_inner(k, false).map_or(f64::INFINITY, |e| e.cost()))
            .collect();
        let best = costs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .ok_or(IscError::NoFeasibleStart)?;
        debug!("focal scan: f0 = {:.3} px (cost {:.3e})", candidates[best].fx, costs[best]);
        Ok(candidates[best])
    }

    /// Evaluates the full objective at `k`.
    pub fn evaluate(&self, k: &Intrinsics) -> Result<Evaluation, IscError> {
        self.evaluate_inner(k, true)
    }

    fn evaluate_inner(&self, k: &Intrinsics, with_constraint: bool) -> Result<Evaluation, IscError> {
        let infeasible = |e: &dyn fmt::Display| IscError::InfeasibleCandidate(e.to_string());
        if !k.is_valid() {
            return Err(IscError::InfeasibleCandidate("invalid intrinsics".into()));
        }
        let mut spheres = [SpherePose {
            center: Vector3::zeros(),
            radius: 1.0,
        }; 2];
        let mut points = Vec::with_capacity(self.obs[0].len() + self.obs[1].len());
        let mut pixels = Vec::with_capacity(points.capacity());
        for (s, o) in self.obs.iter().enumerate() {
            spheres[s] = sphere_center_with_gap(&o.conic, k, o.radius, f64::INFINITY)
                .map_err(|e| infeasible(&e))?;
            for (xc, xp) in o.camera_px.iter().zip(&o.projector_px) {
                let (x, _) = lift_pixel_clamped(xc, k, &spheres[s]).map_err(|e: SphereError| infeasible(&e))?;
                points.push(x);
                pixels.push(*xp);
            }
        }
        let projector = estimate_projection(&points, &pixels).map_err(|e| infeasible(&e))?;

        let mut residuals = Vec::with_capacity(2 * points.len() + 3);
        let mut sums = [0.0; 2];
        let n0 = self.obs[0].len();
        for (i, (x, xp)) in points.iter().zip(&pixels).enumerate() {
            let p = projector
                .project(x)
                .ok_or_else(|| infeasible(&DltError::PointAtInfinity(i)))?;
            let d = xp - p;
            residuals.push(d.x);
            residuals.push(d.y);
            sums[usize::from(i >= n0)] += d.norm();
        }
        let mut constraint = None;
        if with_constraint {
            if let Some(pair) = &self.constraint {
                let v = pair.residual_vector(k);
                let w = self.mu.sqrt();
                residuals.extend([w * v.x, w * v.y, w * v.z]);
                constraint = Some(v.norm());
            }
        }
        Ok(Evaluation {
            projector,
            spheres,
            reprojection_sums: sums,
            constraint,
            residuals,
            mu: if with_constraint { self.mu } else { 0.0 },
        })
    }

    fn scale(&self) -> f64 {
        self.cam_w as f64
    }

    fn scaled(&self, k: &Intrinsics) -> Vector5<f64> {
        Vector5::from(k.params()) / self.scale()
    }

    fn unscale(&self, p: &Vector5<f64>) -> Intrinsics {
        let q = p * self.scale();
        Intrinsics {
            fx: q[0],
            fy: q[1],
            skew: q[2],
            u0: q[3],
            v0: q[4],
        }
    }

    fn residuals_at(&self, p: &Vector5<f64>) -> Option<Vec<f64>> {
        self.evaluate(&self.unscale(p)).ok().map(|e| e.residuals)
    }

    /// Central-difference Jacobian; falls back to a one-sided difference
    /// when one side is infeasible.
    fn jacobian(&self, p: &Vector5<f64>, r0: &[f64]) -> DMatrix<f64> {
        let h = self.options.fd_step;
        let columns: Vec<Vec<f64>> = (0..10)
            .into_par_iter()
            .map(|j| {
                let mut q = *p;
                q[j / 2] += if j % 2 == 0 { h } else { -h };
                self.residuals_at(&q).unwrap_or_default()
            })
            .collect();
        let m = r0.len();
        let mut jac = DMatrix::zeros(m, 5);
        for i in 0..5 {
            let (plus, minus) = (&columns[2 * i], &columns[2 * i + 1]);
            let (ok_p, ok_m) = (plus.len() == m, minus.len() == m);
            for row in 0..m {
                jac[(row, i)] = match (ok_p, ok_m) {
                    (true, true) => (plus[row] - minus[row]) / (2.0 * h),
                    (true, false) => (plus[row] - r0[row]) / h,
                    (false, true) => (r0[row] - minus[row]) / h,
                    (false, false) => 0.0,
                };
            }
        }
        jac
    }
}

/// Value and projector matrix at `k`, failing with
/// [`IscError::InfeasibleCandidate`] when a sphere or pixel cannot be
/// resolved under `k`.
pub fn isc_objective(k: &Intrinsics, problem: &IscProblem) -> Result<(f64, ProjMatrix), IscError> {
    let e = problem.evaluate(k)?;
    Ok((e.value(), e.projector))
}

/// Like [`isc_objective`] but maps infeasible candidates to
/// [`INFEASIBLE_BARRIER`].
pub fn isc_objective_or_barrier(k: &Intrinsics, problem: &IscProblem) -> f64 {
    isc_objective(k, problem).map_or(INFEASIBLE_BARRIER, |(v, _)| v)
}

/// The constraint residual, either measured or switched off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintResidual {
    Value(f64),
    Unchecked,
}

impl Serialize for ConstraintResidual {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ConstraintResidual::Value(v) => s.serialize_f64(*v),
            ConstraintResidual::Unchecked => s.serialize_str("unchecked"),
        }
    }
}

impl<'de> Deserialize<'de> for ConstraintResidual {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Value(f64),
            Flag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Value(v) => Ok(ConstraintResidual::Value(v)),
            Raw::Flag(s) if s == "unchecked" => Ok(ConstraintResidual::Unchecked),
            Raw::Flag(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"unchecked\", got {s:?}"
            ))),
        }
    }
}

/// Calibration output. Per-sphere fields follow the input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibResult {
    #[serde(rename = "K_C")]
    pub camera: Intrinsics,
    #[serde(rename = "M_P")]
    pub projector_matrix: ProjMatrix,
    pub projector: Decomposition,
    /// Reprojection error sum (unsquared) plus the weighted constraint.
    pub objective: f64,
    pub constraint_residual: ConstraintResidual,
    pub mu: f64,
    /// Mean reprojection error per sphere, pixels.
    pub sphere_residual_px: Vec<f64>,
    pub correspondences: Vec<usize>,
    pub spheres: Vec<SpherePose>,
    pub initial_camera: Intrinsics,
    pub iterations: usize,
    pub converged: bool,
    /// Squared-residual cost at the start and after every accepted step.
    pub cost_history: Vec<f64>,
}

/// Levenberg-Marquardt over `(fx, fy, skew, u0, v0)` starting from the
/// problem's scan result. Only steps that lower the squared residual are
/// accepted. Hitting `max_iters` returns the best point with
/// `converged = false`.
pub fn calibrate(problem: &IscProblem) -> Result<CalibResult, IscError> {
    let opts = &problem.options;
    let mut p = problem.scaled(&problem.bootstrap);
    let mut eval = problem.evaluate(&problem.bootstrap).map_err(|_| IscError::NoFeasibleStart)?;
    let mut cost = eval.cost();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut history = vec![cost];
    info!("start: {:?}, cost {:.6e}", problem.bootstrap, cost);

    while iterations < opts.max_iters {
        iterations += 1;
        let jac = problem.jacobian(&p, &eval.residuals);
        let r = DVector::from_column_slice(&eval.residuals);
        let jtj: Matrix5<f64> = (jac.transpose() * &jac).fixed_view::<5, 5>(0, 0).into_owned();
        let g: Vector5<f64> = (jac.transpose() * r).fixed_rows::<5>(0).into_owned();
        let mut accepted = None;
        while lambda < 1e16 {
            let mut a = jtj;
            for i in 0..5 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            if let Some(step) = a.cholesky().map(|c| -c.solve(&g)) {
                let q = p + step;
                if let Ok(e) = problem.evaluate(&problem.unscale(&q)) {
                    let c = e.cost();
                    if c < cost {
                        accepted = Some((q, step, e, c));
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        let Some((q, step, e, c)) = accepted else {
            // No damping level yields a decrease: a zero step.
            converged = true;
            break;
        };
        let decrease = (cost - c) / cost.max(f64::MIN_POSITIVE);
        let small_step = step.norm() < opts.xtol * p.norm();
        p = q;
        eval = e;
        cost = c;
        history.push(cost);
        lambda = (lambda / 10.0).max(1e-12);
        debug!("iter {iterations}: cost {cost:.6e}, step {:.3e}, lambda {lambda:.1e}", step.norm());
        if decrease < opts.ftol && small_step {
            converged = true;
            break;
        }
    }
    let camera = problem.unscale(&p);
    info!("done after {iterations} iterations (converged: {converged}): {camera:?}");
    result_from(problem, camera, &eval, iterations, converged, history)
}

fn result_from(
    problem: &IscProblem,
    camera: Intrinsics,
    eval: &Evaluation,
    iterations: usize,
    converged: bool,
    cost_history: Vec<f64>,
) -> Result<CalibResult, IscError> {
    let projector = eval.projector.decompose()?;
    let mut sphere_residual_px = vec![0.0; 2];
    let mut correspondences = vec![0; 2];
    let mut spheres = vec![eval.spheres[0]; 2];
    for (i, &input) in problem.order.iter().enumerate() {
        let n = problem.obs[i].len();
        sphere_residual_px[input] = eval.reprojection_sums[i] / n as f64;
        correspondences[input] = n;
        spheres[input] = eval.spheres[i];
    }
    Ok(CalibResult {
        camera,
        projector_matrix: eval.projector,
        projector,
        objective: eval.value(),
        constraint_residual: eval
            .constraint
            .map_or(ConstraintResidual::Unchecked, ConstraintResidual::Value),
        mu: problem.mu,
        sphere_residual_px,
        correspondences,
        spheres,
        initial_camera: problem.bootstrap,
        iterations,
        converged,
        cost_history,
    })
}

/// One line of the error table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub device: String,
    pub parameter: String,
    pub truth: f64,
    pub estimate: f64,
    /// Relative error in percent for intrinsics and translation, degrees
    /// for rotation.
    pub error: f64,
    pub unit: String,
}

/// Camera and projector intrinsics (10 rows), rotation and translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn row(&self, device: &str, parameter: &str) -> Option<&ErrorRow> {
        self.rows
            .iter()
            .find(|r| r.device == device && r.parameter == parameter)
    }
}

impl fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:<12} {:>14} {:>14} {:>12}",
            "device", "parameter", "truth", "estimate", "error"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10} {:<12} {:>14.4} {:>14.4} {:>10.4} {}",
                r.device, r.parameter, r.truth, r.estimate, r.error, r.unit
            )?;
        }
        Ok(())
    }
}

fn relative_percent(est: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        if est == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * (est - truth) / truth
    }
}

/// Relative errors `100·(est − true)/true` of all intrinsics, the angle of
/// `R_est·R_trueᵀ` in degrees, and `100·‖T_est − T_true‖/‖T_true‖`.
pub fn evaluate_against_truth(result: &CalibResult, truth: &SceneTruth) -> ErrorReport {
    let names = ["fx", "fy", "skew", "u0", "v0"];
    let mut rows = Vec::with_capacity(12);
    for (device, est, tru) in [
        ("camera", result.camera, truth.camera),
        ("projector", result.projector.k, truth.projector.k),
    ] {
        for ((name, e), t) in names.iter().zip(est.params()).zip(tru.params()) {
            rows.push(ErrorRow {
                device: device.into(),
                parameter: (*name).into(),
                truth: t,
                estimate: e,
                error: relative_percent(e, t),
                unit: "%".into(),
            });
        }
    }
    let delta = result.projector.rotation * truth.projector.rotation.transpose();
    let cos = ((delta.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    rows.push(ErrorRow {
        device: "pose".into(),
        parameter: "rotation".into(),
        truth: 0.0,
        estimate: cos.acos().to_degrees(),
        error: cos.acos().to_degrees(),
        unit: "deg".into(),
    });
    let t_true = truth.projector.translation;
    let t_est = result.projector.translation;
    rows.push(ErrorRow {
        device: "pose".into(),
        parameter: "translation".into(),
        truth: t_true.norm(),
        estimate: t_est.norm(),
        error: 100.0 * (t_est - t_true).norm() / t_true.norm(),
        unit: "%".into(),
    });
    ErrorReport { rows }
}
