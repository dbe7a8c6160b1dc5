use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use isc_core::bundle::{read_bundle, write_bundle, LoadedBundle, Manifest};
use isc_core::isc::{calibrate as run_calibration, evaluate_against_truth, CalibResult, ErrorReport, IscError};
use isc_core::pipeline::{
    auto_stride, decode_capture, observation, DecodedSphere, PipelineError, DEFAULT_TARGET_CORRESPONDENCES,
};
use isc_core::reconstruct::reconstruct_cloud;
use isc_core::sim::{preset, render_scene, SceneConfig, SceneTruth, SimError, PRESETS};
use isc_core::{IscOptions, IscProblem};

use crate::{CalibrateArgs, EvaluateArgs, ReconstructArgs, SimulateArgs};

pub const THREADS_ENV: &str = "ISC_CALIB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Code {
    Input = 2,
    Infeasible = 3,
    Calibration = 4,
    Degenerate = 5,
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub error: anyhow::Error,
}

type Outcome = Result<(), Failure>;

trait OrFail<T> {
    fn or_fail(self, code: Code) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn or_fail(self, code: Code) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn fail(code: Code, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

/// Caps the global rayon pool from `ISC_CALIB_THREADS`.
pub fn init_threads() {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                warn!("could not size thread pool: {e}");
            }
        }
        _ => warn!("ignoring {THREADS_ENV}={value:?}: expected a positive integer"),
    }
}

/// Contents of `calib.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibFile {
    pub calibration: CalibResult,
    pub options: IscOptions,
    pub strides: Vec<u32>,
    pub error_report: Option<ErrorReport>,
}

fn sim_code(e: &SimError) -> Code {
    if e.is_geometric() {
        Code::Infeasible
    } else {
        Code::Input
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {what} {}", path.display()))
        .or_fail(Code::Input)?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid {what} {}", path.display()))
        .or_fail(Code::Input)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .or_fail(Code::Input)
}

pub fn simulate(args: SimulateArgs, quiet: bool) -> Outcome {
    let mut config: SceneConfig = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name).ok_or_else(|| {
            fail(
                Code::Input,
                anyhow!("unknown preset {name:?}; available: {}", PRESETS.join(", ")),
            )
        })?,
        (None, Some(path)) => read_json(path, "scene config")?,
        (None, None) => return Err(fail(Code::Input, anyhow!("either --preset or --config is required"))),
    };
    if let Some(seed) = args.seed {
        config.noise.seed = seed;
    }
    if let Some(s) = args.noise_contour {
        config.noise.contour_sigma_px = s;
    }
    if let Some(s) = args.noise_intensity {
        config.noise.intensity_sigma = s;
    }
    let truth = SceneTruth::from_config(&config).map_err(|e| fail(sim_code(&e), e.into()))?;
    let bundle = render_scene(&truth).map_err(|e| fail(sim_code(&e), e.into()))?;
    write_bundle(&args.out, &config, &bundle).or_fail(Code::Input)?;
    info!("wrote bundle to {}", args.out.display());
    if !quiet {
        let k = truth.camera;
        println!(
            "bundle {}: {} spheres, camera fx={} fy={} skew={} u0={} v0={}, seed {}",
            args.out.display(),
            truth.spheres.len(),
            k.fx,
            k.fy,
            k.skew,
            k.u0,
            k.v0,
            truth.noise.seed
        );
    }
    Ok(())
}

fn pipeline_code(e: &PipelineError) -> Code {
    match e {
        PipelineError::Contour { .. } | PipelineError::NotAnEllipse { .. } => Code::Degenerate,
        PipelineError::Phase { .. } => Code::Input,
    }
}

fn decode_all(bundle: &LoadedBundle) -> Result<Vec<DecodedSphere>, Failure> {
    let m = &bundle.manifest;
    bundle
        .captures
        .iter()
        .enumerate()
        .map(|(i, c)| {
            decode_capture(i, c, &m.config.fringe, m.projector_size()).map_err(|e| fail(pipeline_code(&e), e.into()))
        })
        .collect()
}

fn isc_code(e: &IscError) -> Code {
    match e {
        e if e.is_degenerate_input() => Code::Degenerate,
        IscError::InvalidOption(_) => Code::Input,
        _ => Code::Calibration,
    }
}

pub fn calibrate(args: CalibrateArgs, quiet: bool) -> Outcome {
    let bundle = read_bundle(&args.bundle).or_fail(Code::Input)?;
    if bundle.captures.len() != 2 {
        let e = IscError::NotTwoSpheres(bundle.captures.len());
        return Err(fail(Code::Degenerate, e.into()));
    }
    let mut options: IscOptions = match &args.config {
        Some(path) => read_json(path, "calibration options")?,
        None => IscOptions::default(),
    };
    if let Some(mu) = args.mu {
        options.mu = Some(mu);
    }
    if let Some(n) = args.max_iters {
        options.max_iters = n;
    }
    let decoded = decode_all(&bundle)?;
    let radii = bundle.manifest.radii();
    let strides: Vec<u32> = decoded
        .iter()
        .map(|d| args.stride.unwrap_or_else(|| auto_stride(&d.conic, DEFAULT_TARGET_CORRESPONDENCES)))
        .collect();
    let observations = decoded
        .iter()
        .zip(&radii)
        .zip(&strides)
        .map(|((d, &r), &s)| observation(d, r, s))
        .collect();
    let problem = IscProblem::new(observations, bundle.manifest.camera_size(), options.clone())
        .map_err(|e| fail(isc_code(&e), e.into()))?;
    let result = run_calibration(&problem).map_err(|e| fail(isc_code(&e), e.into()))?;
    if !result.converged {
        warn!("stopped after {} iterations without converging", result.iterations);
    }
    let error_report = bundle
        .has_oracle
        .then(|| evaluate_against_truth(&result, &bundle.manifest.truth));
    let out = args.out.unwrap_or_else(|| args.bundle.join("calib.json"));
    let file = CalibFile {
        calibration: result,
        options,
        strides,
        error_report,
    };
    write_json(&out, &file)?;
    info!("wrote {}", out.display());
    if !quiet {
        print_calibration(&file);
    }
    Ok(())
}

fn print_calibration(file: &CalibFile) {
    let r = &file.calibration;
    let k = r.camera;
    println!(
        "camera    fx={:.4} fy={:.4} skew={:.4} u0={:.4} v0={:.4}",
        k.fx, k.fy, k.skew, k.u0, k.v0
    );
    let p = r.projector.k;
    println!(
        "projector fx={:.4} fy={:.4} skew={:.4} u0={:.4} v0={:.4}",
        p.fx, p.fy, p.skew, p.u0, p.v0
    );
    let constraint = match r.constraint_residual {
        isc_core::isc::ConstraintResidual::Value(c) => format!("{c:.3e}"),
        isc_core::isc::ConstraintResidual::Unchecked => "unchecked".into(),
    };
    println!(
        "objective {:.6e}, constraint residual {constraint}, {} iterations, converged: {}",
        r.objective, r.iterations, r.converged
    );
    if let Some(report) = &file.error_report {
        print!("{report}");
    }
}

pub fn reconstruct(args: ReconstructArgs, quiet: bool) -> Outcome {
    let bundle = read_bundle(&args.bundle).or_fail(Code::Input)?;
    let (kc, mp, source) = if args.use_truth {
        let t = &bundle.manifest.truth;
        (t.camera, t.projector.matrix, "truth")
    } else {
        let path = args.calib.as_ref().expect("clap requires --calib");
        let file: CalibFile = read_json(path, "calibration")?;
        (file.calibration.camera, file.calibration.projector_matrix, "calibration")
    };
    let decoded = decode_all(&bundle)?;
    let truth = bundle.has_oracle.then_some(bundle.manifest.truth.spheres.as_slice());
    let cloud = reconstruct_cloud(&decoded, &kc, &mp, args.stride.max(1), truth);
    let out = args.out.unwrap_or_else(|| args.bundle.join("cloud.ply"));
    cloud
        .write_ply(&out)
        .with_context(|| format!("writing {}", out.display()))
        .or_fail(Code::Input)?;
    let stats_path: PathBuf = out.with_file_name("stats.json");
    #[derive(Serialize)]
    struct Stats<'a> {
        source: &'a str,
        #[serde(flatten)]
        stats: &'a isc_core::reconstruct::CloudStats,
    }
    write_json(
        &stats_path,
        &Stats {
            source,
            stats: &cloud.stats,
        },
    )?;
    if !quiet {
        let s = &cloud.stats;
        print!("{} points ({} skipped)", s.points, s.skipped);
        if let (Some(rmse), Some(rel)) = (s.surface_rmse, s.surface_rmse_over_radius) {
            print!(", surface RMSE {rmse:.3e} ({:.4}% of radius)", 100.0 * rel);
        }
        println!();
    }
    Ok(())
}

pub fn evaluate(args: EvaluateArgs, quiet: bool) -> Outcome {
    let file: CalibFile = read_json(&args.calib, "calibration")?;
    let manifest = Manifest::read(&args.manifest).or_fail(Code::Input)?;
    let report = evaluate_against_truth(&file.calibration, &manifest.truth);
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    if !quiet {
        print!("{report}");
    }
    Ok(())
}
