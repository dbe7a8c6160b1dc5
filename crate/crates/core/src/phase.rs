//! N-step phase-shifting codec: fringe rendering, wrapped-phase decoding,
//! temporal unwrapping over a frequency ladder and the phase → projector
//! pixel mapping.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{write_mask_pgm, Image, RasterError};

/// Largest ratio between consecutive ladder frequencies.
pub const MAX_FREQ_RATIO: f64 = 8.0;
pub const DEFAULT_FREQS: [u32; 3] = [1, 8, 64];
pub const DEFAULT_MODULATION_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("phase shifting needs at least 3 steps, got {0}")]
    TooFewSteps(usize),
    #[error("frequency ladder {0:?} must be non-empty, positive and strictly increasing")]
    BadLadder(Vec<u32>),
    #[error("frequency ratio {0} exceeds the unwrap bound {MAX_FREQ_RATIO}")]
    RatioTooLarge(f64),
    #[error("projector resolution must be non-zero")]
    EmptyProjector,
    #[error("expected {expected} images, got {got}")]
    StackLength { expected: usize, got: usize },
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("phase {phase} outside [0, {max}]")]
    OutOfRange { phase: f64, max: f64 },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Fringes vary along projector x; decodes the column.
    Vertical,
    /// Fringes vary along projector y; decodes the row.
    Horizontal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeConfig {
    pub n_steps: usize,
    /// Fringe counts across the full coded axis, low to high.
    pub freqs: Vec<u32>,
    pub proj_w: usize,
    pub proj_h: usize,
    pub orientation: Orientation,
}

impl FringeConfig {
    pub fn new(
        n_steps: usize,
        freqs: Vec<u32>,
        proj_w: usize,
        proj_h: usize,
        orientation: Orientation,
    ) -> Result<Self, PhaseError> {
        let cfg = Self {
            n_steps,
            freqs,
            proj_w,
            proj_h,
            orientation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PhaseError> {
        if self.n_steps < 3 {
            return Err(PhaseError::TooFewSteps(self.n_steps));
        }
        if self.proj_w == 0 || self.proj_h == 0 {
            return Err(PhaseError::EmptyProjector);
        }
        let f = &self.freqs;
        if f.is_empty() || f[0] == 0 || f.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PhaseError::BadLadder(f.clone()));
        }
        for w in f.windows(2) {
            let ratio = w[1] as f64 / w[0] as f64;
            if ratio > MAX_FREQ_RATIO {
                return Err(PhaseError::RatioTooLarge(ratio));
            }
        }
        Ok(())
    }

    /// Resolution along the coded axis.
    pub fn axis_len(&self) -> usize {
        match self.orientation {
            Orientation::Vertical => self.proj_w,
            Orientation::Horizontal => self.proj_h,
        }
    }

    pub fn top_freq(&self) -> u32 {
        *self.freqs.last().expect("validated ladder is non-empty")
    }

    /// Number of images: one per (frequency, step), frequency-major.
    pub fn stack_len(&self) -> usize {
        self.freqs.len() * self.n_steps
    }
}

/// `0.5 + 0.5·cos(2πf·u/W − 2πk/N)` at the continuous coordinate `u`.
#[inline]
pub fn fringe_intensity(freq: f64, step: usize, n_steps: usize, u: f64, axis_len: f64) -> f64 {
    0.5 + 0.5 * (TAU * freq * u / axis_len - TAU * step as f64 / n_steps as f64).cos()
}

/// Projector pattern images, frequency-major then step.
pub fn render_patterns(cfg: &FringeConfig) -> Vec<Image> {
    let axis = cfg.axis_len() as f64;
    let mut out = Vec::with_capacity(cfg.stack_len());
    for &f in &cfg.freqs {
        for k in 0..cfg.n_steps {
            out.push(Image::from_fn(cfg.proj_w, cfg.proj_h, |x, y| {
                let u = match cfg.orientation {
                    Orientation::Vertical => x,
                    Orientation::Horizontal => y,
                };
                fringe_intensity(f as f64, k, cfg.n_steps, u as f64, axis) as f32
            }));
        }
    }
    out
}

/// Wrapped phase in `[0, 2π)` and modulation `B` of one pixel's samples.
pub fn decode_pixel(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let (mut s, mut c) = (0.0, 0.0);
    for (k, &v) in samples.iter().enumerate() {
        let (sk, ck) = (TAU * k as f64 / n as f64).sin_cos();
        s += v * sk;
        c += v * ck;
    }
    let phase = s.atan2(c).rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative angles.
    let phase = if phase >= TAU { 0.0 } else { phase };
    (phase, 2.0 / n as f64 * s.hypot(c))
}

/// Per-pixel wrapped phase and modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedPhase {
    pub width: usize,
    pub height: usize,
    pub phase: Vec<f64>,
    pub modulation: Vec<f64>,
}

pub fn decode_wrapped(stack: &[Image]) -> Result<WrappedPhase, PhaseError> {
    if stack.len() < 3 {
        return Err(PhaseError::TooFewSteps(stack.len()));
    }
    let (w, h) = (stack[0].width, stack[0].height);
    for img in stack {
        if img.width != w || img.height != h {
            return Err(PhaseError::DimensionMismatch(w, h, img.width, img.height));
        }
    }
    let n = stack.len();
    let trig: Vec<(f64, f64)> = (0..n).map(|k| (TAU * k as f64 / n as f64).sin_cos()).collect();
    let (phase, modulation): (Vec<f64>, Vec<f64>) = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (mut s, mut c) = (0.0, 0.0);
            for (img, (sk, ck)) in stack.iter().zip(&trig) {
                let v = img.data[i] as f64;
                s += v * sk;
                c += v * ck;
            }
            let p = s.atan2(c).rem_euclid(TAU);
            (if p >= TAU { 0.0 } else { p }, 2.0 / n as f64 * s.hypot(c))
        })
        .unzip();
    Ok(WrappedPhase {
        width: w,
        height: h,
        phase,
        modulation,
    })
}

/// Unwrapped phase with validity mask.
///
/// `modulation` is the smallest modulation seen across the ladder levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub width: usize,
    pub height: usize,
    pub phase: Vec<f64>,
    pub modulation: Vec<f64>,
    pub mask: Vec<bool>,
}

impl PhaseMap {
    /// The first ladder level taken as absolute phase.
    pub fn from_absolute(w: &WrappedPhase, threshold: f64) -> Self {
        Self {
            width: w.width,
            height: w.height,
            phase: w.phase.clone(),
            modulation: w.modulation.clone(),
            mask: w.modulation.iter().map(|&b| b >= threshold).collect(),
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.phase[i])
    }

    /// Writes `<stem>.f32` (+ sidecar) and `<stem>_mask.pgm`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(), PhaseError> {
        let img = Image {
            width: self.width,
            height: self.height,
            data: self.phase.iter().map(|&p| p as f32).collect(),
        };
        img.write_f32(&dir.join(format!("{stem}.f32")))?;
        write_mask_pgm(&dir.join(format!("{stem}_mask.pgm")), self.width, &self.mask)?;
        Ok(())
    }
}

/// One temporal-unwrapping step: `k = round((ratio·φ_lo − φ_hi)/2π)`,
/// returning `φ_hi + 2πk`.
#[inline]
pub fn unwrap_pixel(abs_low: f64, wrapped_high: f64, ratio: f64) -> f64 {
    let order = ((ratio * abs_low - wrapped_high) / TAU).round();
    wrapped_high + TAU * order
}

/// Unwraps `high` (at `ratio` times the frequency of `low`) against the
/// absolute phase `low`.
pub fn unwrap_temporal(
    low: &PhaseMap,
    high: &WrappedPhase,
    ratio: f64,
    threshold: f64,
) -> Result<PhaseMap, PhaseError> {
    if low.width != high.width || low.height != high.height {
        return Err(PhaseError::DimensionMismatch(
            low.width,
            low.height,
            high.width,
            high.height,
        ));
    }
    if ratio > MAX_FREQ_RATIO {
        return Err(PhaseError::RatioTooLarge(ratio));
    }
    let n = low.phase.len();
    let mut phase = Vec::with_capacity(n);
    let mut modulation = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for i in 0..n {
        phase.push(unwrap_pixel(low.phase[i], high.phase[i], ratio));
        let b = low.modulation[i].min(high.modulation[i]);
        modulation.push(b);
        mask.push(low.mask[i] && b >= threshold);
    }
    Ok(PhaseMap {
        width: low.width,
        height: low.height,
        phase,
        modulation,
        mask,
    })
}

/// Full decode of one orientation: wrapped phases per ladder level, then
/// chained temporal unwrapping. Pixels whose result leaves
/// `[0, 2π·f_max]` are masked.
pub fn decode_ladder(
    stack: &[Image],
    cfg: &FringeConfig,
    threshold: f64,
) -> Result<PhaseMap, PhaseError> {
    cfg.validate()?;
    if stack.len() != cfg.stack_len() {
        return Err(PhaseError::StackLength {
            expected: cfg.stack_len(),
            got: stack.len(),
        });
    }
    let n = cfg.n_steps;
    let mut map: Option<PhaseMap> = None;
    for (level, &f) in cfg.freqs.iter().enumerate() {
        let wrapped = decode_wrapped(&stack[level * n..(level + 1) * n])?;
        map = Some(match map {
            None => PhaseMap::from_absolute(&wrapped, threshold),
            Some(low) => {
                let ratio = f as f64 / cfg.freqs[level - 1] as f64;
                unwrap_temporal(&low, &wrapped, ratio, threshold)?
            }
        });
    }
    let mut map = map.expect("ladder is non-empty");
    let max = TAU * cfg.top_freq() as f64;
    for (m, p) in map.mask.iter_mut().zip(&map.phase) {
        if !(0.0..=max).contains(p) {
            *m = false;
        }
    }
    Ok(map)
}

/// Projector pixel coordinate `W·φ/(2πf)` of an absolute phase.
pub fn phase_to_proj_coord(phase: f64, freq: f64, axis_len: f64) -> Result<f64, PhaseError> {
    let max = TAU * freq;
    let slack = 1e-12 * max;
    if !(phase >= -slack && phase <= max + slack) {
        return Err(PhaseError::OutOfRange { phase, max });
    }
    Ok(axis_len * phase / (2.0 * PI * freq))
}
