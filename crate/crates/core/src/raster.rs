//! Grayscale float images and their on-disk forms (PGM, raw float32 with a
//! JSON sidecar).

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed image {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RasterError + '_ {
    move |source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> RasterError {
    RasterError::Malformed {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Row-major single-channel image with `f32` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Sidecar {
    width: usize,
    height: usize,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Image) -> Result<(), RasterError> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(RasterError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ))
        }
    }

    /// Writes little-endian float32 samples to `path` and `{width, height}`
    /// to `path` with a `.json` extension appended.
    pub fn write_f32(&self, path: &Path) -> Result<(), RasterError> {
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, bytes).map_err(io_err(path))?;
        let sidecar = sidecar_path(path);
        let json = serde_json::to_string(&Sidecar {
            width: self.width,
            height: self.height,
        })
        .expect("sidecar serializes");
        fs::write(&sidecar, json).map_err(io_err(&sidecar))
    }

    pub fn read_f32(path: &Path) -> Result<Self, RasterError> {
        let sidecar = sidecar_path(path);
        let text = fs::read_to_string(&sidecar).map_err(io_err(&sidecar))?;
        let meta: Sidecar =
            serde_json::from_str(&text).map_err(|e| malformed(&sidecar, e.to_string()))?;
        let bytes = fs::read(path).map_err(io_err(path))?;
        if bytes.len() != meta.width * meta.height * 4 {
            return Err(malformed(
                path,
                format!(
                    "expected {} bytes for {}x{}, found {}",
                    meta.width * meta.height * 4,
                    meta.width,
                    meta.height,
                    bytes.len()
                ),
            ));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            width: meta.width,
            height: meta.height,
            data,
        })
    }

    /// Binary PGM. Samples in `[0, 1]` are quantized to `maxval` (255 or
    /// 65535); out-of-range values are clamped.
    pub fn write_pgm(&self, path: &Path, maxval: u16) -> Result<(), RasterError> {
        let mut out = Vec::new();
        write!(out, "P5\n{} {}\n{}\n", self.width, self.height, maxval).map_err(io_err(path))?;
        let scale = maxval as f32;
        for v in &self.data {
            let q = (v.clamp(0.0, 1.0) * scale).round() as u16;
            if maxval < 256 {
                out.push(q as u8);
            } else {
                out.extend_from_slice(&q.to_be_bytes());
            }
        }
        fs::write(path, out).map_err(io_err(path))
    }

    /// Reads a binary (P5) PGM, scaling samples to `[0, 1]`.
    pub fn read_pgm(path: &Path) -> Result<Self, RasterError> {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let mut reader = BufReader::new(file);
        let mut header = Vec::new();
        while header.len() < 4 {
            let mut line = String::new();
            if reader.read_line(&mut line).map_err(io_err(path))? == 0 {
                return Err(malformed(path, "truncated header"));
            }
            let line = line.split('#').next().unwrap_or("");
            header.extend(line.split_whitespace().map(str::to_owned));
        }
        if header[0] != "P5" {
            return Err(malformed(path, format!("unsupported magic {}", header[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| malformed(path, format!("bad header field {s}")))
        };
        let (width, height, maxval) = (parse(&header[1])?, parse(&header[2])?, parse(&header[3])?);
        if maxval == 0 || maxval > 65535 {
            return Err(malformed(path, "maxval out of range"));
        }
        let bytes_per = if maxval < 256 { 1 } else { 2 };
        let mut raw = vec![0u8; width * height * bytes_per];
        reader.read_exact(&mut raw).map_err(io_err(path))?;
        let scale = maxval as f32;
        let data = if bytes_per == 1 {
            raw.iter().map(|&b| b as f32 / scale).collect()
        } else {
            raw.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f32 / scale)
                .collect()
        };
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes a boolean mask as an 8-bit PGM (255 = set).
pub fn write_mask_pgm(path: &Path, width: usize, mask: &[bool]) -> Result<(), RasterError> {
    let height = mask.len().checked_div(width).unwrap_or(0);
    let img = Image {
        width,
        height,
        data: mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
    };
    img.write_pgm(path, 255)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(7, 3, |x, y| (x as f32 * 0.1 + y as f32).sin());
        let p = dir.path().join("a.f32");
        img.write_f32(&p).unwrap();
        assert_eq!(Image::read_f32(&p).unwrap(), img);
    }

    #[test]
    fn pgm_16bit_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(5, 4, |x, y| ((x + 5 * y) as f32) / 19.0);
        let p = dir.path().join("a.pgm");
        img.write_pgm(&p, 65535).unwrap();
        let back = Image::read_pgm(&p).unwrap();
        for (a, b) in img.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 1e-4);
        }
        img.write_pgm(&p, 255).unwrap();
        let back = Image::read_pgm(&p).unwrap();
        for (a, b) in img.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 2.5e-3);
        }
    }

    #[test]
    fn truncated_f32_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::new(4, 4);
        let p = dir.path().join("a.f32");
        img.write_f32(&p).unwrap();
        fs::write(&p, [0u8; 10]).unwrap();
        assert!(matches!(
            Image::read_f32(&p),
            Err(RasterError::Malformed { .. })
        ));
    }
}
