//! Point clouds from decoded correspondences by midpoint triangulation.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlt::ProjMatrix;
use crate::geom::Intrinsics;
use crate::pipeline::DecodedSphere;
use crate::sphere::SpherePose;

/// Rays meeting at a smaller angle than this (radians) are rejected.
pub const MIN_RAY_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("camera and projector rays are nearly parallel (sin = {0:.3e})")]
    NearParallelRays(f64),
    #[error("projector matrix has a singular left block")]
    SingularProjector,
}

/// Midpoint of the common perpendicular between the camera ray through
/// `xc` and the projector ray through `xp`.
pub fn triangulate(
    xc: &Vector2<f64>,
    xp: &Vector2<f64>,
    kc: &Intrinsics,
    mp: &ProjMatrix,
) -> Result<Vector3<f64>, ReconstructError> {
    let b_inv = mp
        .left_block()
        .try_inverse()
        .ok_or(ReconstructError::SingularProjector)?;
    let origin = mp.center();
    let a = kc.back_project(xc).normalize();
    let b = (b_inv * Vector3::new(xp.x, xp.y, 1.0)).normalize();
    triangulate_rays(&a, &origin, &b)
}

fn triangulate_rays(
    a: &Vector3<f64>,
    origin: &Vector3<f64>,
    b: &Vector3<f64>,
) -> Result<Vector3<f64>, ReconstructError> {
    let ab = a.dot(b);
    let sin2 = 1.0 - ab * ab;
    if sin2 < MIN_RAY_ANGLE * MIN_RAY_ANGLE {
        return Err(ReconstructError::NearParallelRays(sin2.max(0.0).sqrt()));
    }
    let (ac, bc) = (a.dot(origin), b.dot(origin));
    let t = (ab * ac - bc) / sin2;
    let s = ac + t * ab;
    Ok((a * s + origin + b * t) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub position: Vector3<f64>,
    /// Distance to the nearest true sphere surface, when known.
    pub surface_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudStats {
    pub points: usize,
    /// Valid pixels that could not be triangulated.
    pub skipped: usize,
    pub surface_rmse: Option<f64>,
    /// RMSE divided by the mean true radius.
    pub surface_rmse_over_radius: Option<f64>,
    pub max_surface_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
    pub stats: CloudStats,
}

/// Triangulates every valid pixel on `stride` inside each sphere's contour.
/// With `truth`, each point carries its distance to the nearest true
/// sphere surface and the stats report the RMSE.
pub fn reconstruct_cloud(
    spheres: &[DecodedSphere],
    kc: &Intrinsics,
    mp: &ProjMatrix,
    stride: u32,
    truth: Option<&[SpherePose]>,
) -> PointCloud {
    let mut pairs = Vec::new();
    for s in spheres {
        pairs.extend(s.correspondences(stride, 0.0));
    }
    let results: Vec<Option<CloudPoint>> = pairs
        .par_iter()
        .map(|(xc, xp)| {
            let position = triangulate(xc, xp, kc, mp).ok()?;
            let surface_error = truth.and_then(|t| {
                t.iter()
                    .map(|s| s.surface_distance(&position).abs())
                    .min_by(f64::total_cmp)
            });
            Some(CloudPoint {
                position,
                surface_error,
            })
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let points: Vec<CloudPoint> = results.into_iter().flatten().collect();
    let errors: Vec<f64> = points.iter().filter_map(|p| p.surface_error).collect();
    let (rmse, max) = if errors.is_empty() {
        (None, None)
    } else {
        let ms = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
        (Some(ms.sqrt()), errors.iter().copied().reduce(f64::max))
    };
    let mean_radius = truth
        .filter(|t| !t.is_empty())
        .map(|t| t.iter().map(|s| s.radius).sum::<f64>() / t.len() as f64);
    let stats = CloudStats {
        points: points.len(),
        skipped,
        surface_rmse: rmse,
        surface_rmse_over_radius: rmse.zip(mean_radius).map(|(e, r)| e / r),
        max_surface_error: max,
    };
    PointCloud { points, stats }
}

impl PointCloud {
    /// ASCII PLY with `x y z` and, when every point has one, a
    /// `surface_error` property.
    pub fn to_ply(&self) -> String {
        let with_error = !self.points.is_empty() && self.points.iter().all(|p| p.surface_error.is_some());
        let mut out = String::new();
        out.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(out, "element vertex {}", self.points.len());
        out.push_str("property double x\nproperty double y\nproperty double z\n");
        if with_error {
            out.push_str("property double surface_error\n");
        }
        out.push_str("end_header\n");
        for p in &self.points {
            let v = p.position;
            let _ = write!(out, "{} {} {}", v.x, v.y, v.z);
            if with_error {
                let _ = write!(out, " {}", p.surface_error.unwrap_or(0.0));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_ply(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_ply())
    }
}
