//! On-disk scene bundles.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/contours/sphere<i>.csv          x,y
//! <dir>/fringe/sphere<i>/roi.json
//! <dir>/fringe/sphere<i>/<v|h>_f<freq>_k<step>.f32 (+ .json sidecar)
//! <dir>/oracle/sphere<i>.csv            x_c,y_c,x_p,y_p,X,Y,Z
//! ```
//!
//! The `oracle/` directory holds hidden ground truth and is only read for
//! evaluation.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlt::Correspondence;
use crate::phase::Orientation;
use crate::raster::{Image, RasterError};
use crate::sim::{NoiseConfig, Roi, SceneBundle, SceneConfig, SceneTruth, SphereCapture, NOISE_GENERATOR};

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT: &str = "isc-bundle/1";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> BundleError {
    BundleError::Malformed {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub noise_generator: String,
    pub seed: u64,
    pub noise: NoiseConfig,
    /// The resolved configuration the bundle was rendered from.
    pub config: SceneConfig,
    pub truth: SceneTruth,
    pub rois: Vec<Roi>,
}

impl Manifest {
    pub fn sphere_count(&self) -> usize {
        self.rois.len()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.config.spheres.iter().map(|s| s.radius_lu).collect()
    }

    pub fn camera_size(&self) -> (usize, usize) {
        let [w, h] = self.config.camera.resolution_px;
        (w, h)
    }

    pub fn projector_size(&self) -> (usize, usize) {
        let [w, h] = self.config.projector.resolution_px;
        (w, h)
    }

    pub fn read(path: &Path) -> Result<Self, BundleError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))?;
        if m.format != FORMAT {
            return Err(malformed(path, format!("unsupported format {:?}", m.format)));
        }
        if m.rois.len() != m.config.spheres.len() {
            return Err(malformed(path, "roi count does not match sphere count"));
        }
        Ok(m)
    }
}

fn stack_name(orientation: Orientation, freq: u32, step: usize) -> String {
    let o = match orientation {
        Orientation::Vertical => 'v',
        Orientation::Horizontal => 'h',
    };
    format!("{o}_f{freq}_k{step}.f32")
}

fn create_dir(path: &Path) -> Result<(), BundleError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), BundleError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Writes `bundle` under `dir`, echoing `config` in the manifest.
pub fn write_bundle(dir: &Path, config: &SceneConfig, bundle: &SceneBundle) -> Result<(), BundleError> {
    let truth = &bundle.truth;
    let manifest = Manifest {
        format: FORMAT.into(),
        noise_generator: NOISE_GENERATOR.into(),
        seed: truth.noise.seed,
        noise: truth.noise,
        config: config.clone(),
        truth: truth.clone(),
        rois: bundle.captures.iter().map(|c| c.roi).collect(),
    };
    create_dir(dir)?;
    for sub in ["contours", "fringe", "oracle"] {
        create_dir(&dir.join(sub))?;
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&dir.join(MANIFEST), &(json + "\n"))?;

    for (i, cap) in bundle.captures.iter().enumerate() {
        let mut csv = String::from("x,y\n");
        for p in &cap.contour {
            let _ = writeln!(csv, "{},{}", p.x, p.y);
        }
        write_text(&dir.join("contours").join(format!("sphere{i}.csv")), &csv)?;

        let fdir = dir.join("fringe").join(format!("sphere{i}"));
        create_dir(&fdir)?;
        let roi = serde_json::to_string_pretty(&cap.roi).expect("roi serializes");
        write_text(&fdir.join("roi.json"), &(roi + "\n"))?;
        let n = truth.fringe.n_steps;
        for (orientation, stack) in [
            (Orientation::Vertical, &cap.vertical),
            (Orientation::Horizontal, &cap.horizontal),
        ] {
            for (level, &f) in truth.fringe.freqs.iter().enumerate() {
                for k in 0..n {
                    stack[level * n + k].write_f32(&fdir.join(stack_name(orientation, f, k)))?;
                }
            }
        }

        let mut csv = String::from("x_c,y_c,x_p,y_p,X,Y,Z\n");
        for c in &cap.oracle {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                c.camera_px.x, c.camera_px.y, c.projector_px.x, c.projector_px.y, c.point.x, c.point.y, c.point.z
            );
        }
        write_text(&dir.join("oracle").join(format!("sphere{i}.csv")), &csv)?;
    }
    Ok(())
}

/// A bundle read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub manifest: Manifest,
    /// Captures in sphere order; `oracle` is empty when the bundle has no
    /// oracle directory.
    pub captures: Vec<SphereCapture>,
    pub has_oracle: bool,
}

fn read_csv(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>, BundleError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| malformed(path, format!("line {}: {e}", n + 1)))?;
        if row.len() != columns {
            return Err(malformed(
                path,
                format!("line {}: expected {columns} fields, found {}", n + 1, row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads contour points (`x,y` with a header line).
pub fn read_contour(path: &Path) -> Result<Vec<Vector2<f64>>, BundleError> {
    Ok(read_csv(path, 2)?
        .into_iter()
        .map(|r| Vector2::new(r[0], r[1]))
        .collect())
}

pub fn read_oracle(path: &Path) -> Result<Vec<Correspondence>, BundleError> {
    Ok(read_csv(path, 7)?
        .into_iter()
        .map(|r| Correspondence {
            camera_px: Vector2::new(r[0], r[1]),
            projector_px: Vector2::new(r[2], r[3]),
            point: Vector3::new(r[4], r[5], r[6]),
        })
        .collect())
}

/// Reads the manifest, contours and fringe stacks, plus the oracle when
/// present. Sphere count comes from the contour files on disk.
pub fn read_bundle(dir: &Path) -> Result<LoadedBundle, BundleError> {
    let manifest = Manifest::read(&dir.join(MANIFEST))?;
    let has_oracle = dir.join("oracle").is_dir();
    let fringe = &manifest.config.fringe;
    let mut captures = Vec::new();
    for i in 0.. {
        let contour_path = dir.join("contours").join(format!("sphere{i}.csv"));
        if !contour_path.exists() {
            break;
        }
        let contour = read_contour(&contour_path)?;
        let fdir = dir.join("fringe").join(format!("sphere{i}"));
        let roi_path = fdir.join("roi.json");
        let roi_text = fs::read_to_string(&roi_path).map_err(io_err(&roi_path))?;
        let roi: Roi = serde_json::from_str(&roi_text).map_err(|e| malformed(&roi_path, e.to_string()))?;
        let mut stacks = [Vec::new(), Vec::new()];
        for (s, orientation) in [Orientation::Vertical, Orientation::Horizontal].into_iter().enumerate() {
            for &f in &fringe.freqs {
                for k in 0..fringe.n_steps {
                    let img = Image::read_f32(&fdir.join(stack_name(orientation, f, k)))?;
                    if img.width != roi.width || img.height != roi.height {
                        return Err(malformed(&fdir, "fringe image size differs from roi"));
                    }
                    stacks[s].push(img);
                }
            }
        }
        let [vertical, horizontal] = stacks;
        let oracle_path = dir.join("oracle").join(format!("sphere{i}.csv"));
        let oracle = if has_oracle && oracle_path.exists() {
            read_oracle(&oracle_path)?
        } else {
            Vec::new()
        };
        captures.push(SphereCapture {
            contour,
            roi,
            vertical,
            horizontal,
            oracle,
        });
    }
    Ok(LoadedBundle {
        manifest,
        captures,
        has_oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_field_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, "x,y\n1,2\n3.5,-4e-3\n").unwrap();
        let pts = read_contour(&p).unwrap();
        assert_eq!(pts, vec![Vector2::new(1.0, 2.0), Vector2::new(3.5, -4e-3)]);
        fs::write(&p, "x,y\n1,2,3\n").unwrap();
        assert!(matches!(read_contour(&p), Err(BundleError::Malformed { .. })));
    }

    #[test]
    fn float_text_round_trips() {
        let v = 0.1f64 + 0.2;
        assert_eq!(format!("{v}").parse::<f64>().unwrap(), v);
    }
}
