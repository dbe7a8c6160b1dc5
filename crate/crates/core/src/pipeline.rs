//! From captured images to calibration input: contour conic fitting,
//! fringe decoding and camera-to-projector correspondence assembly.

use nalgebra::Vector2;
use thiserror::Error;

use crate::geom::{fit_conic, Conic, GeomError};
use crate::isc::SphereObservation;
use crate::phase::{decode_ladder, phase_to_proj_coord, Orientation, PhaseError, PhaseMap};
use crate::sim::{FringeSettings, Roi, SphereCapture};

/// Sampling target per sphere when choosing a stride automatically.
pub const DEFAULT_TARGET_CORRESPONDENCES: usize = 2500;
/// Pixels closer than this to the fitted contour are not used.
pub const CONTOUR_MARGIN_PX: f64 = 3.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sphere {sphere}: contour fit failed: {source}")]
    Contour { sphere: usize, source: GeomError },
    #[error("sphere {sphere}: contour is not a real ellipse")]
    NotAnEllipse { sphere: usize },
    #[error("sphere {sphere}: {source}")]
    Phase { sphere: usize, source: PhaseError },
}

/// Decoded phase maps of one sphere's region of interest.
#[derive(Debug, Clone)]
pub struct DecodedSphere {
    pub conic: Conic,
    pub roi: Roi,
    pub vertical: PhaseMap,
    pub horizontal: PhaseMap,
    top_freq: f64,
    proj_w: f64,
    proj_h: f64,
}

impl DecodedSphere {
    /// Decoded projector coordinate at a camera pixel (full-image
    /// coordinates), or `None` if it is outside the ROI or masked.
    pub fn projector_px(&self, x: usize, y: usize) -> Option<Vector2<f64>> {
        if !self.roi.contains(x, y) {
            return None;
        }
        let (rx, ry) = (x - self.roi.x0, y - self.roi.y0);
        let pv = self.vertical.at(rx, ry)?;
        let ph = self.horizontal.at(rx, ry)?;
        let u = phase_to_proj_coord(pv, self.top_freq, self.proj_w).ok()?;
        let v = phase_to_proj_coord(ph, self.top_freq, self.proj_h).ok()?;
        Some(Vector2::new(u, v))
    }

    /// All valid pixels inside the contour (with margin), row-major.
    pub fn correspondences(&self, stride: u32, margin: f64) -> Vec<(Vector2<f64>, Vector2<f64>)> {
        self.conic
            .interior_grid(stride, margin)
            .into_iter()
            .filter_map(|xc| {
                let (x, y) = (xc.x as usize, xc.y as usize);
                self.projector_px(x, y).map(|xp| (xc, xp))
            })
            .collect()
    }
}

/// Fits the contour conic and decodes both fringe stacks of one sphere.
pub fn decode_capture(
    sphere: usize,
    capture: &SphereCapture,
    fringe: &FringeSettings,
    proj_size: (usize, usize),
) -> Result<DecodedSphere, PipelineError> {
    let conic = fit_conic(&capture.contour).map_err(|source| PipelineError::Contour { sphere, source })?;
    if !conic.is_real_ellipse() {
        return Err(PipelineError::NotAnEllipse { sphere });
    }
    let phase_err = |source| PipelineError::Phase { sphere, source };
    let cfg_v = fringe.config(proj_size.0, proj_size.1, Orientation::Vertical);
    let cfg_h = fringe.config(proj_size.0, proj_size.1, Orientation::Horizontal);
    let vertical =
        decode_ladder(&capture.vertical, &cfg_v, fringe.modulation_threshold).map_err(phase_err)?;
    let horizontal =
        decode_ladder(&capture.horizontal, &cfg_h, fringe.modulation_threshold).map_err(phase_err)?;
    Ok(DecodedSphere {
        conic,
        roi: capture.roi,
        vertical,
        horizontal,
        top_freq: cfg_v.top_freq() as f64,
        proj_w: proj_size.0 as f64,
        proj_h: proj_size.1 as f64,
    })
}

/// Grid stride giving roughly `target` samples inside the conic.
pub fn auto_stride(conic: &Conic, target: usize) -> u32 {
    let Some((lo, hi)) = conic.bounding_box() else {
        return 1;
    };
    let area = std::f64::consts::FRAC_PI_4 * (hi.x - lo.x) * (hi.y - lo.y);
    (area / target.max(1) as f64).sqrt().ceil().max(1.0) as u32
}

/// Calibration input for one decoded sphere.
pub fn observation(decoded: &DecodedSphere, radius: f64, stride: u32) -> SphereObservation {
    let (camera_px, projector_px) = decoded
        .correspondences(stride, CONTOUR_MARGIN_PX)
        .into_iter()
        .unzip();
    SphereObservation {
        conic: decoded.conic,
        radius,
        camera_px,
        projector_px,
    }
}
