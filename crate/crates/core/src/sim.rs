//! Synthetic camera-projector scenes with known ground truth.
//!
//! A scene is two (or more) spheres seen by a pinhole camera and lit by a
//! pinhole projector. Rendering produces, per sphere, contour points on
//! the exact silhouette, phase-shifted fringe stacks as the camera would
//! record them inside a region of interest, and the hidden exact
//! correspondences used as test oracles.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlt::{axis_angle, rows3, Correspondence, DltError, ProjMatrix};
use crate::geom::{Conic, GeomError, Intrinsics};
use crate::phase::{
    fringe_intensity, FringeConfig, Orientation, PhaseError, DEFAULT_FREQS,
    DEFAULT_MODULATION_THRESHOLD,
};
use crate::raster::Image;
use crate::sphere::{SphereError, SpherePose};

/// Name of the noise generator, recorded in every manifest.
pub const NOISE_GENERATOR: &str = "ChaCha8Rng seed_from_u64(seed); stream = y*camera_width + x \
     for pixel noise, 2^63 + sphere index for contour noise; Normal(0, sigma) from rand_distr";

/// Pixels of padding around each sphere's silhouette bounding box.
pub const ROI_MARGIN_PX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("sphere {index}: {source}")]
    Sphere { index: usize, source: SphereError },
    #[error("sphere {index} is not fully inside the {device} view")]
    SphereOutOfView { index: usize, device: &'static str },
    #[error("spheres {0} and {1} overlap in the camera image")]
    SpheresOverlapInImage(usize, usize),
    #[error("spheres {0} and {1} intersect")]
    SpheresIntersect(usize, usize),
    #[error("sphere center is behind the camera")]
    BehindCamera,
    #[error(transparent)]
    Projector(#[from] DltError),
}

impl SimError {
    /// True for errors caused by scene geometry rather than malformed input.
    pub fn is_geometric(&self) -> bool {
        !matches!(self, SimError::InvalidConfig { .. })
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> SimError {
    SimError::InvalidConfig {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub resolution_px: [usize; 2],
    pub intrinsics_px: Intrinsics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    pub axis: [f64; 3],
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorConfig {
    pub resolution_px: [usize; 2],
    pub intrinsics_px: Intrinsics,
    /// Camera-to-projector rotation.
    pub rotation: RotationConfig,
    /// Camera-to-projector translation, length units.
    pub translation_lu: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    pub center_lu: [f64; 3],
    pub radius_lu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeSettings {
    pub n_steps: usize,
    pub freqs: Vec<u32>,
    pub modulation_threshold: f64,
}

impl Default for FringeSettings {
    fn default() -> Self {
        Self {
            n_steps: 4,
            freqs: DEFAULT_FREQS.to_vec(),
            modulation_threshold: DEFAULT_MODULATION_THRESHOLD,
        }
    }
}

impl FringeSettings {
    pub fn config(&self, proj_w: usize, proj_h: usize, orientation: Orientation) -> FringeConfig {
        FringeConfig {
            n_steps: self.n_steps,
            freqs: self.freqs.clone(),
            proj_w,
            proj_h,
            orientation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub contour_sigma_px: f64,
    pub intensity_sigma: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            contour_sigma_px: 0.0,
            intensity_sigma: 0.0,
            seed: 42,
        }
    }
}

/// User-facing scene description; every physical quantity names its unit
/// in the key (`_px` pixels, `_lu` length units, `_deg` degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub camera: CameraConfig,
    pub projector: ProjectorConfig,
    pub spheres: Vec<SphereConfig>,
    #[serde(default)]
    pub fringe: FringeSettings,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_contour_points")]
    pub contour_points: usize,
}

fn default_contour_points() -> usize {
    400
}

/// The projector part of the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorTruth {
    #[serde(rename = "K")]
    pub k: Intrinsics,
    #[serde(rename = "R", with = "rows3")]
    pub rotation: Matrix3<f64>,
    #[serde(rename = "T")]
    pub translation: Vector3<f64>,
    #[serde(rename = "M")]
    pub matrix: ProjMatrix,
}

impl ProjectorTruth {
    /// Camera-frame position of the projector's optical center.
    pub fn center(&self) -> Vector3<f64> {
        -self.rotation.transpose() * self.translation
    }
}

/// Fully resolved scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub camera: Intrinsics,
    pub cam_w: usize,
    pub cam_h: usize,
    pub projector: ProjectorTruth,
    pub proj_w: usize,
    pub proj_h: usize,
    pub spheres: Vec<SpherePose>,
    pub fringe: FringeSettings,
    pub noise: NoiseConfig,
    pub contour_points: usize,
}

impl SceneTruth {
    /// Validates `cfg` and resolves it into a scene. Geometric problems
    /// (spheres behind the camera, out of view, overlapping) are reported
    /// as such; malformed values as [`SimError::InvalidConfig`].
    pub fn from_config(cfg: &SceneConfig) -> Result<Self, SimError> {
        let [cam_w, cam_h] = cfg.camera.resolution_px;
        let [proj_w, proj_h] = cfg.projector.resolution_px;
        if cam_w == 0 || cam_h == 0 {
            return Err(invalid("camera.resolution_px", "must be non-zero"));
        }
        if proj_w == 0 || proj_h == 0 {
            return Err(invalid("projector.resolution_px", "must be non-zero"));
        }
        let camera = check_intrinsics(&cfg.camera.intrinsics_px, "camera.intrinsics_px")?;
        let kp = check_intrinsics(&cfg.projector.intrinsics_px, "projector.intrinsics_px")?;
        let axis = Vector3::from(cfg.projector.rotation.axis);
        if !axis.norm().is_normal() || !cfg.projector.rotation.angle_deg.is_finite() {
            return Err(invalid("projector.rotation", "axis must be non-zero and angle finite"));
        }
        let rotation = axis_angle(&axis, cfg.projector.rotation.angle_deg.to_radians());
        let translation = Vector3::from(cfg.projector.translation_lu);
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(invalid("projector.translation_lu", "must be finite"));
        }
        let matrix = ProjMatrix::compose(&kp, &rotation, &translation)?;
        if cfg.spheres.is_empty() {
            return Err(invalid("spheres", "at least one sphere is required"));
        }
        if cfg.contour_points < 6 {
            return Err(invalid("contour_points", "at least 6 points are required"));
        }
        let f = &cfg.fringe;
        FringeConfig::new(f.n_steps, f.freqs.clone(), proj_w, proj_h, Orientation::Vertical)
            .map_err(|e: PhaseError| invalid("fringe", e.to_string()))?;
        if !(f.modulation_threshold >= 0.0 && f.modulation_threshold.is_finite()) {
            return Err(invalid("fringe.modulation_threshold", "must be non-negative"));
        }
        let n = &cfg.noise;
        if !(n.contour_sigma_px >= 0.0 && n.contour_sigma_px.is_finite()) {
            return Err(invalid("noise.contour_sigma_px", "must be non-negative"));
        }
        if !(n.intensity_sigma >= 0.0 && n.intensity_sigma.is_finite()) {
            return Err(invalid("noise.intensity_sigma", "must be non-negative"));
        }
        let mut spheres = Vec::with_capacity(cfg.spheres.len());
        for (index, s) in cfg.spheres.iter().enumerate() {
            let center = Vector3::from(s.center_lu);
            if center.iter().any(|v| !v.is_finite()) || !s.radius_lu.is_finite() {
                return Err(invalid(&format!("spheres[{index}]"), "values must be finite"));
            }
            if s.radius_lu.is_nan() || s.radius_lu <= 0.0 {
                return Err(invalid(&format!("spheres[{index}].radius_lu"), "must be positive"));
            }
            spheres.push(
                SpherePose::new(center, s.radius_lu)
                    .map_err(|source| SimError::Sphere { index, source })?,
            );
        }
        let truth = Self {
            camera,
            cam_w,
            cam_h,
            projector: ProjectorTruth {
                k: kp,
                rotation,
                translation,
                matrix,
            },
            proj_w,
            proj_h,
            spheres,
            fringe: cfg.fringe.clone(),
            noise: cfg.noise,
            contour_points: cfg.contour_points,
        };
        truth.check_geometry()?;
        Ok(truth)
    }

    fn check_geometry(&self) -> Result<(), SimError> {
        let inside = |c: &Conic, w: usize, h: usize| {
            c.bounding_box().is_some_and(|(lo, hi)| {
                lo.x >= 1.0 && lo.y >= 1.0 && hi.x <= w as f64 - 2.0 && hi.y <= h as f64 - 2.0
            })
        };
        for (index, s) in self.spheres.iter().enumerate() {
            let cam = project_sphere_to_conic(s, &self.camera)
                .map_err(|source| SimError::Sphere { index, source })?;
            if !inside(&cam, self.cam_w, self.cam_h) {
                return Err(SimError::SphereOutOfView {
                    index,
                    device: "camera",
                });
            }
            let in_proj = self.projector.rotation * s.center + self.projector.translation;
            let proj_pose = SpherePose::new(in_proj, s.radius).map_err(|_| {
                SimError::SphereOutOfView {
                    index,
                    device: "projector",
                }
            })?;
            let proj = project_sphere_to_conic(&proj_pose, &self.projector.k)
                .map_err(|source| SimError::Sphere { index, source })?;
            if !inside(&proj, self.proj_w, self.proj_h) {
                return Err(SimError::SphereOutOfView {
                    index,
                    device: "projector",
                });
            }
        }
        for i in 0..self.spheres.len() {
            for j in i + 1..self.spheres.len() {
                let (a, b) = (&self.spheres[i], &self.spheres[j]);
                if (a.center - b.center).norm() <= a.radius + b.radius {
                    return Err(SimError::SpheresIntersect(i, j));
                }
                let angle = a.center.angle(&b.center);
                if angle <= a.half_angle() + b.half_angle() {
                    return Err(SimError::SpheresOverlapInImage(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn fringe_config(&self, orientation: Orientation) -> FringeConfig {
        self.fringe.config(self.proj_w, self.proj_h, orientation)
    }

    /// Nearest sphere hit by the camera ray through `px`.
    fn trace(&self, px: &Vector2<f64>) -> Option<(usize, Vector3<f64>)> {
        let d = self.camera.back_project(px).normalize();
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in self.spheres.iter().enumerate() {
            let c = s.center;
            let b = d.dot(&c);
            let c0 = c.norm_squared() - s.radius * s.radius;
            let disc = b * b - c0;
            if disc <= 0.0 || b <= 0.0 {
                continue;
            }
            let t = c0 / (b + disc.sqrt());
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((i, t));
            }
        }
        best.map(|(i, t)| (i, d * t))
    }

    /// Whether a surface point of sphere `i` faces the projector.
    fn is_lit(&self, i: usize, p: &Vector3<f64>) -> bool {
        let normal = p - self.spheres[i].center;
        normal.dot(&(self.projector.center() - p)) > 0.0
    }
}

fn check_intrinsics(k: &Intrinsics, field: &str) -> Result<Intrinsics, SimError> {
    Intrinsics::new(k.fx, k.fy, k.skew, k.u0, k.v0).map_err(|e: GeomError| invalid(field, e.to_string()))
}

/// Shipped configurations. Camera and projector intrinsics and resolutions
/// are the plane-based reference values of the two rigs; the projector
/// sits one length unit to the right of the camera, rotated 15° about the
/// y axis, and the spheres sit at depths 4 and 6 with a radius chosen so a
/// sphere at depth 5 spans 15% of the image diagonal.
pub fn preset(name: &str) -> Option<SceneConfig> {
    let (cam_res, cam_k) = match name.to_ascii_lowercase().as_str() {
        "cppa" => (
            [3384, 2704],
            Intrinsics {
                fx: 3277.5,
                fy: 3277.8,
                skew: -18.6,
                u0: 1699.4,
                v0: 1330.1,
            },
        ),
        "cppb" => (
            [1920, 1200],
            Intrinsics {
                fx: 1791.1,
                fy: 1789.2,
                skew: -1.4,
                u0: 944.9,
                v0: 561.4,
            },
        ),
        _ => return None,
    };
    let projector_k = Intrinsics {
        fx: 1202.7,
        fy: 1199.0,
        skew: -8.2,
        u0: 390.7,
        v0: 222.8,
    };
    let angle_deg: f64 = 15.0;
    let baseline = 1.0;
    // Projector center at (baseline, 0, 0): T = -R·c.
    let r = axis_angle(&Vector3::y(), angle_deg.to_radians());
    let t = -r * Vector3::new(baseline, 0.0, 0.0);
    let diag = ((cam_res[0] * cam_res[0] + cam_res[1] * cam_res[1]) as f64).sqrt();
    let radius = 0.15 * diag * 5.0 / (2.0 * cam_k.fx);
    Some(SceneConfig {
        camera: CameraConfig {
            resolution_px: cam_res,
            intrinsics_px: cam_k,
        },
        projector: ProjectorConfig {
            resolution_px: [854, 480],
            intrinsics_px: projector_k,
            rotation: RotationConfig {
                axis: [0.0, 1.0, 0.0],
                angle_deg,
            },
            translation_lu: [t.x, t.y, t.z],
        },
        spheres: vec![
            SphereConfig {
                center_lu: [-0.6, 0.0, 4.0],
                radius_lu: radius,
            },
            SphereConfig {
                center_lu: [0.7, 0.1, 6.0],
                radius_lu: radius,
            },
        ],
        fringe: FringeSettings::default(),
        noise: NoiseConfig::default(),
        contour_points: default_contour_points(),
    })
}

pub const PRESETS: [&str; 2] = ["cppA", "cppB"];

/// Exact silhouette conic `K⁻ᵀ(X_S X_Sᵀ − (‖X_S‖² − r²)I)K⁻¹`, normalized
/// so that the interior is negative.
pub fn project_sphere_to_conic(pose: &SpherePose, k: &Intrinsics) -> Result<Conic, SphereError> {
    let c = pose.center;
    if c.z <= pose.radius {
        return Err(SphereError::BehindCamera {
            depth: c.z,
            radius: pose.radius,
        });
    }
    let m = c * c.transpose() - Matrix3::identity() * (c.norm_squared() - pose.radius * pose.radius);
    let ki = k.inverse_matrix();
    Ok(Conic::from_matrix(&(-(ki.transpose() * m * ki))).normalized())
}

/// Points where camera rays graze the sphere, i.e. the contact circle.
pub fn contour_points(pose: &SpherePose, k: &Intrinsics, n: usize) -> Vec<Vector2<f64>> {
    let c = pose.center;
    let d2 = c.norm_squared();
    let r2 = pose.radius * pose.radius;
    let axis = c.normalize();
    let circle_center = c * (1.0 - r2 / d2);
    let circle_radius = (r2 * (d2 - r2) / d2).sqrt();
    let helper = if axis.y.abs() < 0.9 {
        Vector3::y()
    } else {
        Vector3::x()
    };
    let a = axis.cross(&helper).normalize();
    let b = axis.cross(&a);
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let p = circle_center + circle_radius * (a * t.cos() + b * t.sin());
            k.project(&p)
        })
        .collect()
}

/// Axis-aligned pixel window inside the camera image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Roi {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && y >= self.y0 && x < self.x0 + self.width && y < self.y0 + self.height
    }

    fn around(conic: &Conic, cam_w: usize, cam_h: usize) -> Option<Self> {
        let (lo, hi) = conic.bounding_box()?;
        let x0 = (lo.x - ROI_MARGIN_PX).floor().max(0.0) as usize;
        let y0 = (lo.y - ROI_MARGIN_PX).floor().max(0.0) as usize;
        let x1 = ((hi.x + ROI_MARGIN_PX).ceil() as usize).min(cam_w - 1);
        let y1 = ((hi.y + ROI_MARGIN_PX).ceil() as usize).min(cam_h - 1);
        Some(Self {
            x0,
            y0,
            width: x1 - x0 + 1,
            height: y1 - y0 + 1,
        })
    }
}

/// Everything the camera records for one sphere, plus the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereCapture {
    pub contour: Vec<Vector2<f64>>,
    pub roi: Roi,
    /// Vertical-fringe stack, frequency-major then step.
    pub vertical: Vec<Image>,
    pub horizontal: Vec<Image>,
    /// Exact correspondences for every lit ROI pixel on this sphere,
    /// row-major.
    pub oracle: Vec<Correspondence>,
}

/// A rendered scene: truth plus per-sphere captures.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    pub truth: SceneTruth,
    pub captures: Vec<SphereCapture>,
}

/// Renders contours, fringe stacks and oracle correspondences.
///
/// Fringe intensities are the analytic pattern evaluated at the exact
/// projector coordinate of each pixel's surface point; unlit and
/// background pixels are black. Noise draws come from per-pixel streams,
/// so the result does not depend on evaluation order.
pub fn render_scene(truth: &SceneTruth) -> Result<SceneBundle, SimError> {
    truth.check_geometry()?;
    let cfg_v = truth.fringe_config(Orientation::Vertical);
    let n_images = cfg_v.stack_len();
    let contour_noise = (truth.noise.contour_sigma_px > 0.0)
        .then(|| Normal::new(0.0, truth.noise.contour_sigma_px).expect("validated sigma"));
    let pixel_noise = (truth.noise.intensity_sigma > 0.0)
        .then(|| Normal::new(0.0, truth.noise.intensity_sigma).expect("validated sigma"));

    let mut captures = Vec::with_capacity(truth.spheres.len());
    for (index, pose) in truth.spheres.iter().enumerate() {
        let conic = project_sphere_to_conic(pose, &truth.camera)
            .map_err(|source| SimError::Sphere { index, source })?;
        let mut contour = contour_points(pose, &truth.camera, truth.contour_points);
        if let Some(normal) = &contour_noise {
            let mut rng = ChaCha8Rng::seed_from_u64(truth.noise.seed);
            rng.set_stream((1u64 << 63) + index as u64);
            let m = conic.matrix();
            for p in &mut contour {
                let g = (m * Vector3::new(p.x, p.y, 1.0)).xy().normalize();
                *p += g * normal.sample(&mut rng);
            }
        }
        let roi = Roi::around(&conic, truth.cam_w, truth.cam_h).ok_or(SimError::SphereOutOfView {
            index,
            device: "camera",
        })?;

        // Per pixel: 2·n_images samples (vertical then horizontal) and an
        // optional oracle entry.
        let pixels: Vec<(Vec<f32>, Option<Correspondence>)> = (0..roi.width * roi.height)
            .into_par_iter()
            .map(|i| {
                let (x, y) = (roi.x0 + i % roi.width, roi.y0 + i / roi.width);
                render_pixel(truth, index, x, y, n_images, pixel_noise.as_ref())
            })
            .collect();

        let mut vertical: Vec<Image> = (0..n_images).map(|_| Image::new(roi.width, roi.height)).collect();
        let mut horizontal = vertical.clone();
        let mut oracle = Vec::new();
        for (i, (samples, corr)) in pixels.into_iter().enumerate() {
            for k in 0..n_images {
                vertical[k].data[i] = samples[k];
                horizontal[k].data[i] = samples[n_images + k];
            }
            oracle.extend(corr);
        }
        captures.push(SphereCapture {
            contour,
            roi,
            vertical,
            horizontal,
            oracle,
        });
    }
    Ok(SceneBundle {
        truth: truth.clone(),
        captures,
    })
}

fn render_pixel(
    truth: &SceneTruth,
    sphere: usize,
    x: usize,
    y: usize,
    n_images: usize,
    noise: Option<&Normal<f64>>,
) -> (Vec<f32>, Option<Correspondence>) {
    let px = Vector2::new(x as f64, y as f64);
    let mut values = vec![0.0f64; 2 * n_images];
    let mut oracle = None;
    if let Some((hit, point)) = truth.trace(&px) {
        if truth.is_lit(hit, &point) {
            if let Some(xp) = truth.projector.matrix.project(&point) {
                let n = truth.fringe.n_steps;
                let (pw, ph) = (truth.proj_w as f64, truth.proj_h as f64);
                for (level, &f) in truth.fringe.freqs.iter().enumerate() {
                    for k in 0..n {
                        let j = level * n + k;
                        values[j] = fringe_intensity(f as f64, k, n, xp.x, pw);
                        values[n_images + j] = fringe_intensity(f as f64, k, n, xp.y, ph);
                    }
                }
                if hit == sphere {
                    oracle = Some(Correspondence {
                        camera_px: px,
                        projector_px: xp,
                        point,
                    });
                }
            }
        }
    }
    if let Some(normal) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(truth.noise.seed);
        rng.set_stream((y * truth.cam_w + x) as u64);
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }
    (values.into_iter().map(|v| v as f32).collect(), oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::fit_conic;
    use crate::sphere::sphere_center_from_conic;
    use approx::assert_relative_eq;

    #[test]
    fn axial_sphere_images_to_circle() {
        let k = Intrinsics::new(1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let pose = SpherePose::new(Vector3::new(0.0, 0.0, 5.0), 1.0).unwrap();
        let c = project_sphere_to_conic(&pose, &k).unwrap();
        let expect = Conic::from_matrix(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0 / 24.0)));
        assert!(c.distance_up_to_scale(&expect) < 1e-14);
        assert!(c.is_real_ellipse());
    }

    #[test]
    fn axial_sphere_centers_on_principal_point() {
        let k = Intrinsics::new(1000.0, 1100.0, 0.0, 500.0, 300.0).unwrap();
        let pose = SpherePose::new(Vector3::new(0.0, 0.0, 7.0), 1.0).unwrap();
        let c = project_sphere_to_conic(&pose, &k).unwrap();
        assert_relative_eq!(c.center().unwrap(), Vector2::new(500.0, 300.0), epsilon = 1e-9);
    }

    #[test]
    fn contour_points_lie_on_conic() {
        let k = Intrinsics::new(3277.5, 3277.8, -18.6, 1699.4, 1330.1).unwrap();
        let pose = SpherePose::new(Vector3::new(-0.6, 0.1, 4.0), 0.5).unwrap();
        let c = project_sphere_to_conic(&pose, &k).unwrap();
        for p in contour_points(&pose, &k, 64) {
            assert!(c.sampson_distance(&p) < 1e-9);
        }
        let fitted = fit_conic(&contour_points(&pose, &k, 64)).unwrap();
        assert!(fitted.distance_up_to_scale(&c) < 1e-8);
    }

    #[test]
    fn intrinsics_round_trip_through_conic() {
        let k = Intrinsics::new(1000.0, 1000.0, 0.0, 500.0, 300.0).unwrap();
        let pose = SpherePose::new(Vector3::new(0.0, 0.0, 5.0), 1.0).unwrap();
        let c = project_sphere_to_conic(&pose, &k).unwrap();
        let back = sphere_center_from_conic(&c, &k, 1.0).unwrap();
        assert_relative_eq!(back.center, pose.center, epsilon = 1e-9);
    }

    #[test]
    fn presets_resolve() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            let truth = SceneTruth::from_config(&cfg).unwrap();
            assert_eq!(truth.spheres.len(), 2);
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn depth_below_radius_is_geometric() {
        let mut cfg = preset("cppB").unwrap();
        cfg.spheres[0].center_lu[2] = 0.2;
        let err = SceneTruth::from_config(&cfg).unwrap_err();
        assert!(err.is_geometric(), "{err}");
    }

    #[test]
    fn out_of_view_and_overlap() {
        let mut cfg = preset("cppB").unwrap();
        cfg.spheres[0].center_lu = [-3.0, 0.0, 4.0];
        assert!(matches!(
            SceneTruth::from_config(&cfg),
            Err(SimError::SphereOutOfView { .. })
        ));
        let mut cfg = preset("cppB").unwrap();
        cfg.spheres[1].center_lu = [-0.35, 0.0, 6.0];
        assert!(matches!(
            SceneTruth::from_config(&cfg),
            Err(SimError::SpheresOverlapInImage(0, 1))
        ));
    }

    #[test]
    fn bad_values_are_config_errors() {
        let mut cfg = preset("cppB").unwrap();
        cfg.fringe.n_steps = 2;
        let err = SceneTruth::from_config(&cfg).unwrap_err();
        assert!(!err.is_geometric());
        let mut cfg = preset("cppB").unwrap();
        cfg.camera.intrinsics_px.fx = -1.0;
        assert!(!SceneTruth::from_config(&cfg).unwrap_err().is_geometric());
    }
}
