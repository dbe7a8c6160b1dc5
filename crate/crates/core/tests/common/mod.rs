#![allow(dead_code)]

use isc_core::isc::{
    calibrate, evaluate_against_truth, CalibResult, ErrorReport, IscOptions, IscProblem, SphereObservation,
};
use isc_core::pipeline::{auto_stride, decode_capture, observation, DecodedSphere, DEFAULT_TARGET_CORRESPONDENCES};
use isc_core::sim::{preset, project_sphere_to_conic, render_scene, SceneBundle, SceneConfig, SceneTruth};
use isc_core::sphere::lift_pixel_to_sphere;
use rand::Rng;

pub fn scene(name: &str, seed: u64, contour_sigma: f64, intensity_sigma: f64) -> SceneConfig {
    let mut cfg = preset(name).expect("known preset");
    cfg.noise.seed = seed;
    cfg.noise.contour_sigma_px = contour_sigma;
    cfg.noise.intensity_sigma = intensity_sigma;
    cfg
}

pub fn render(cfg: &SceneConfig) -> SceneBundle {
    let truth = SceneTruth::from_config(cfg).expect("valid scene");
    render_scene(&truth).expect("renders")
}

pub fn decode(bundle: &SceneBundle) -> Vec<DecodedSphere> {
    let t = &bundle.truth;
    bundle
        .captures
        .iter()
        .enumerate()
        .map(|(i, c)| decode_capture(i, c, &t.fringe, (t.proj_w, t.proj_h)).expect("decodes"))
        .collect()
}

pub struct Run {
    pub bundle: SceneBundle,
    pub decoded: Vec<DecodedSphere>,
    pub result: CalibResult,
    pub report: ErrorReport,
}

pub fn run(cfg: &SceneConfig, options: IscOptions) -> Run {
    let bundle = render(cfg);
    let decoded = decode(&bundle);
    let obs = decoded
        .iter()
        .zip(&bundle.truth.spheres)
        .map(|(d, s)| observation(d, s.radius, auto_stride(&d.conic, DEFAULT_TARGET_CORRESPONDENCES)))
        .collect();
    let problem =
        IscProblem::new(obs, (bundle.truth.cam_w, bundle.truth.cam_h), options).expect("problem");
    let result = calibrate(&problem).expect("calibrates");
    let report = evaluate_against_truth(&result, &bundle.truth);
    Run {
        bundle,
        decoded,
        result,
        report,
    }
}

/// Exact observations computed straight from the truth: grid pixels inside
/// each silhouette are lifted with the true camera and projected with the
/// true projector matrix. No rendering or decoding involved.
pub fn exact_observations(truth: &SceneTruth, stride: u32) -> Vec<SphereObservation> {
    let c_p = -truth.projector.rotation.transpose() * truth.projector.translation;
    truth
        .spheres
        .iter()
        .map(|s| {
            let conic = project_sphere_to_conic(s, &truth.camera).unwrap();
            let mut camera_px = Vec::new();
            let mut projector_px = Vec::new();
            for px in conic.interior_grid(stride, 3.0) {
                let x = lift_pixel_to_sphere(&px, &truth.camera, s).unwrap();
                if (x - s.center).dot(&(c_p - x)) <= 0.0 {
                    continue;
                }
                camera_px.push(px);
                projector_px.push(truth.projector.matrix.project(&x).unwrap());
            }
            SphereObservation {
                conic,
                radius: s.radius,
                camera_px,
                projector_px,
            }
        })
        .collect()
}

/// A valid scene from `base` with randomly placed spheres.
pub fn random_scene(base: &str, rng: &mut impl Rng) -> SceneTruth {
    loop {
        let mut cfg = preset(base).unwrap();
        cfg.spheres[0].center_lu = [
            rng.random_range(-0.9..-0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(3.5..5.0),
        ];
        cfg.spheres[1].center_lu = [
            rng.random_range(0.3..0.9),
            rng.random_range(-0.3..0.3),
            rng.random_range(5.0..7.0),
        ];
        if let Ok(t) = SceneTruth::from_config(&cfg) {
            return t;
        }
    }
}
