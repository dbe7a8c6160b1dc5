mod common;

use isc_core::geom::GeomError;
use isc_core::isc::{
    calibrate, evaluate_against_truth, isc_objective, isc_objective_or_barrier, ConstraintResidual,
    IscError, IscOptions, IscProblem, INFEASIBLE_BARRIER,
};
use isc_core::pipeline::auto_stride;
use isc_core::sim::{preset, SceneTruth};
use isc_core::Intrinsics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn truth(name: &str) -> SceneTruth {
    SceneTruth::from_config(&preset(name).unwrap()).unwrap()
}

fn problem(t: &SceneTruth, target: usize, options: IscOptions) -> IscProblem {
    let stride = auto_stride(
        &isc_core::sim::project_sphere_to_conic(&t.spheres[0], &t.camera).unwrap(),
        target,
    );
    let obs = common::exact_observations(t, stride);
    IscProblem::new(obs, (t.cam_w, t.cam_h), options).unwrap()
}

fn with_params(k: &Intrinsics, f: impl Fn(&mut [f64; 5])) -> Intrinsics {
    let mut p = k.params();
    f(&mut p);
    Intrinsics::from_params(p).unwrap()
}

#[test]
fn objective_vanishes_at_truth() {
    for name in ["cppA", "cppB"] {
        let t = truth(name);
        let p = problem(&t, 2500, IscOptions::default());
        let (value, m) = isc_objective(&t.camera, &p).unwrap();
        assert!(value < 1e-6, "{name}: value {value:e}");
        let c = p.constraint().unwrap().residual(&t.camera);
        assert!(c < 1e-12, "{name}: constraint {c:e}");
        assert!(m.distance_up_to_scale(&t.projector.matrix) < 1e-9);
    }
}

#[test]
fn gradient_is_flat_at_truth() {
    let t = truth("cppB");
    let p = problem(&t, 1500, IscOptions::default());
    let k = t.camera;
    let f0 = isc_objective(&k, &p).unwrap().0;
    let (mut grad, mut curv) = (0.0, 0.0);
    for i in 0..5 {
        // Relative step, with skew scaled by fx since it may be near zero.
        let h = 1e-4 * if i == 2 { k.fx } else { k.params()[i].abs() };
        let fp = isc_objective(&with_params(&k, |q| q[i] += h), &p).unwrap().0;
        let fm = isc_objective(&with_params(&k, |q| q[i] -= h), &p).unwrap().0;
        grad += ((fp - fm) / 2.0).powi(2);
        curv += (fp + fm - 2.0 * f0).powi(2);
    }
    assert!(grad.sqrt() < 1e-3 * curv.sqrt(), "grad {grad:e} curvature {curv:e}");
}

#[test]
fn inflated_focal_is_worse_on_random_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..50 {
        let t = common::random_scene(if i % 2 == 0 { "cppB" } else { "cppA" }, &mut rng);
        let p = problem(&t, 300, IscOptions::default());
        let at_truth = isc_objective_or_barrier(&t.camera, &p);
        let inflated = isc_objective_or_barrier(&with_params(&t.camera, |q| q[0] *= 1.1), &p);
        assert!(inflated > at_truth, "scene {i}: {inflated} <= {at_truth}");
    }
}

#[test]
fn infeasible_candidate_maps_to_barrier() {
    let t = truth("cppB");
    let p = problem(&t, 300, IscOptions::default());
    // A focal length this short makes the recovered spheres sit closer
    // than their radius.
    let bad = Intrinsics::new(1.0, 1.0, 0.0, t.camera.u0, t.camera.v0).unwrap();
    assert!(matches!(
        isc_objective(&bad, &p),
        Err(IscError::InfeasibleCandidate(_))
    ));
    assert_eq!(isc_objective_or_barrier(&bad, &p), INFEASIBLE_BARRIER);
}

#[test]
fn coincident_observations_fail_before_search() {
    let t = truth("cppB");
    let obs = common::exact_observations(&t, 8);
    let twice = vec![obs[0].clone(), obs[0].clone()];
    let err = IscProblem::new(twice, (t.cam_w, t.cam_h), IscOptions::default()).unwrap_err();
    assert_eq!(err, IscError::Geometry(GeomError::CoincidentConics));
}

#[test]
fn swapping_spheres_gives_identical_result() {
    let t = truth("cppB");
    let obs = common::exact_observations(&t, 12);
    let size = (t.cam_w, t.cam_h);
    let a = calibrate(&IscProblem::new(obs.clone(), size, IscOptions::default()).unwrap()).unwrap();
    let swapped = vec![obs[1].clone(), obs[0].clone()];
    let b = calibrate(&IscProblem::new(swapped, size, IscOptions::default()).unwrap()).unwrap();
    assert_eq!(a.camera, b.camera);
    assert_eq!(a.sphere_residual_px[0], b.sphere_residual_px[1]);
    assert_eq!(a.correspondences, vec![obs[0].len(), obs[1].len()]);
}

#[test]
fn calibration_is_deterministic_and_monotone() {
    let t = truth("cppB");
    let p = problem(&t, 1000, IscOptions::default());
    let a = calibrate(&p).unwrap();
    let b = calibrate(&p).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.converged);
    assert!(a.cost_history.windows(2).all(|w| w[1] <= w[0]), "{:?}", a.cost_history);
    assert!(a.cost_history.len() <= a.iterations + 1);
}

#[test]
fn iteration_cap_returns_best_so_far() {
    let t = truth("cppB");
    let opts = IscOptions {
        max_iters: 1,
        ..IscOptions::default()
    };
    let p = problem(&t, 500, opts);
    let r = calibrate(&p).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 1);
    assert!(r.cost_history[1] < r.cost_history[0]);
}

#[test]
fn zero_weight_marks_constraint_unchecked() {
    let t = truth("cppB");
    let p = problem(
        &t,
        800,
        IscOptions {
            mu: Some(0.0),
            ..IscOptions::default()
        },
    );
    assert!(p.constraint().is_none());
    let r = calibrate(&p).unwrap();
    assert_eq!(r.constraint_residual, ConstraintResidual::Unchecked);
    let rel = (r.camera.fx - t.camera.fx).abs() / t.camera.fx;
    assert!(rel < 1e-3, "fx relative error {rel:e}");
}

#[test]
fn error_report_definitions() {
    let t = truth("cppB");
    let p = problem(&t, 500, IscOptions::default());
    let mut r = calibrate(&p).unwrap();
    r.camera = t.camera;
    r.projector = t.projector.matrix.decompose().unwrap();
    r.projector.k = t.projector.k;
    r.projector.rotation = t.projector.rotation;
    r.projector.translation = t.projector.translation;
    let report = evaluate_against_truth(&r, &t);
    assert_eq!(report.rows.len(), 12);
    assert!(report.rows.iter().all(|row| row.error == 0.0), "{report}");

    r.camera.fx = 1.075 * t.camera.fx;
    let report = evaluate_against_truth(&r, &t);
    let fx = report.row("camera", "fx").unwrap();
    assert!((fx.error - 7.5).abs() < 1e-9);
}
