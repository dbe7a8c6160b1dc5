//! `isc-calib`: simulate sphere scenes, calibrate a camera-projector pair
//! from them, reconstruct point clouds and compare against ground truth.
//!
//! Exit codes: 0 success, 2 input or config error, 3 infeasible scene,
//! 4 calibration failure, 5 degenerate geometry.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "isc-calib", version, about = "Camera-projector calibration from two spheres")]
struct Cli {
    /// Print nothing on stdout and only errors on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic scene bundle.
    Simulate(SimulateArgs),
    /// Calibrate from a bundle and write calib.json.
    Calibrate(CalibrateArgs),
    /// Triangulate a point cloud from a bundle and a calibration.
    Reconstruct(ReconstructArgs),
    /// Compare a calibration with a bundle's ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Shipped scene: cppA or cppB.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Scene configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Contour noise standard deviation, pixels.
    #[arg(long)]
    noise_contour: Option<f64>,
    /// Fringe intensity noise standard deviation.
    #[arg(long)]
    noise_intensity: Option<f64>,
    /// Bundle directory to create.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Bundle directory.
    bundle: PathBuf,
    /// Output file [default: <bundle>/calib.json].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Constraint weight; 0 disables the constraint.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Options file (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Correspondence grid stride in pixels [default: automatic].
    #[arg(long)]
    stride: Option<u32>,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// Bundle directory.
    bundle: PathBuf,
    /// Calibration file written by `calibrate`.
    #[arg(long, required_unless_present = "use_truth")]
    calib: Option<PathBuf>,
    /// Use the bundle's ground-truth calibration instead.
    #[arg(long, conflicts_with = "calib")]
    use_truth: bool,
    /// Output PLY [default: <bundle>/cloud.ply]; stats.json goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    stride: u32,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Calibration file written by `calibrate`.
    calib: PathBuf,
    /// Bundle manifest holding the ground truth.
    manifest: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    commands::init_threads();

    let outcome = match cli.command {
        Command::Simulate(a) => commands::simulate(a, cli.quiet),
        Command::Calibrate(a) => commands::calibrate(a, cli.quiet),
        Command::Reconstruct(a) => commands::reconstruct(a, cli.quiet),
        Command::Evaluate(a) => commands::evaluate(a, cli.quiet),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code as u8)
        }
    }
}
