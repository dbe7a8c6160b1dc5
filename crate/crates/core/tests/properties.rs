use std::f64::consts::{PI, TAU};

use isc_core::dlt::{axis_angle, ProjMatrix};
use isc_core::geom::{adjugate, constraint_pair, fit_conic, pole_polar_residual, HomPoint2};
use isc_core::phase::{decode_pixel, fringe_intensity, unwrap_pixel};
use isc_core::reconstruct::triangulate;
use isc_core::sim::{contour_points, project_sphere_to_conic};
use isc_core::sphere::{lift_pixel_to_sphere, sphere_center_from_conic};
use isc_core::{Intrinsics, SpherePose};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn intrinsics() -> impl Strategy<Value = Intrinsics> {
    (500.0..4000.0f64, 0.9..1.1f64, -20.0..20.0f64, 200.0..2000.0f64, 200.0..1500.0f64)
        .prop_map(|(f, aspect, skew, u0, v0)| Intrinsics::new(f, f * aspect, skew, u0, v0).unwrap())
}

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64, -0.6..0.6f64)
        .prop_map(|(x, y, z, angle)| axis_angle(&Vector3::new(x, y, z), angle))
}

/// A sphere in front of the camera, `depth / r` in `[3, 100]`, inside a
/// ±0.3 rad cone around the optical axis.
fn sphere() -> impl Strategy<Value = SpherePose> {
    (0.05..2.0f64, 3.0..100.0f64, -0.3..0.3f64, -0.3..0.3f64).prop_map(|(r, ratio, ax, ay)| {
        let dir = Vector3::new(ax.tan(), ay.tan(), 1.0).normalize();
        SpherePose::new(dir * (r * ratio), r).unwrap()
    })
}

fn matrix3() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform9(-10.0..10.0f64).prop_map(|a| Matrix3::from_row_slice(&a))
}

proptest! {
    #[test]
    fn adjugate_identities(m in matrix3()) {
        let det = m.determinant();
        let scale = m.norm().powi(3).max(1.0);
        prop_assert!((adjugate(&m) * m - Matrix3::identity() * det).norm() < 1e-12 * scale);
        let twice = adjugate(&adjugate(&m));
        prop_assert!((twice - m * det).norm() < 1e-12 * scale * m.norm());
    }

    #[test]
    fn sphere_round_trip(k in intrinsics(), s in sphere()) {
        let c = project_sphere_to_conic(&s, &k).unwrap();
        let back = sphere_center_from_conic(&c, &k, s.radius).unwrap();
        prop_assert!((back.center - s.center).norm() < 1e-9 * s.center.norm());
    }

    #[test]
    fn contour_points_fit_exactly(k in intrinsics(), s in sphere()) {
        let c = project_sphere_to_conic(&s, &k).unwrap();
        let fitted = fit_conic(&contour_points(&s, &k, 64)).unwrap();
        prop_assert!(fitted.distance_up_to_scale(&c) < 1e-6);
    }

    #[test]
    fn lifted_pixels_reproject(k in intrinsics(), s in sphere(), u in -0.9..0.9f64, v in -0.9..0.9f64) {
        // A pixel inside the silhouette, parameterized over its bounding box.
        let c = project_sphere_to_conic(&s, &k).unwrap();
        let (lo, hi) = c.bounding_box().unwrap();
        let mid = (lo + hi) / 2.0;
        let px = mid + (hi - lo).component_mul(&nalgebra::Vector2::new(u, v)) / 2.0;
        prop_assume!(c.contains(&px));
        let x = lift_pixel_to_sphere(&px, &k, &s).unwrap();
        prop_assert!(s.surface_distance(&x).abs() < 1e-9 * s.center.norm());
        prop_assert!((k.project(&x) - px).norm() < 1e-6);
    }

    #[test]
    fn decode_ignores_gain_and_offset(
        phase in 0.0..TAU,
        gain in 0.1..10.0f64,
        offset in -5.0..5.0f64,
        n in 3usize..10,
    ) {
        let samples: Vec<f64> = (0..n)
            .map(|k| offset + gain * (phase - TAU * k as f64 / n as f64).cos())
            .collect();
        let (got, modulation) = decode_pixel(&samples);
        let diff = (got - phase).rem_euclid(TAU);
        prop_assert!(diff.min(TAU - diff) < 1e-9);
        prop_assert!((modulation - gain).abs() < 1e-9 * gain);
    }

    #[test]
    fn pattern_decodes_to_coordinate(u in 0.0..854.0f64, n in 3usize..9, freq in 1u32..65) {
        let samples: Vec<f64> = (0..n)
            .map(|k| fringe_intensity(freq as f64, k, n, u, 854.0))
            .collect();
        let (phase, b) = decode_pixel(&samples);
        let expect = (TAU * freq as f64 * u / 854.0).rem_euclid(TAU);
        let diff = (phase - expect).rem_euclid(TAU);
        prop_assert!(diff.min(TAU - diff) < 1e-9);
        prop_assert!((b - 0.5).abs() < 1e-9);
    }

    #[test]
    fn unwrap_recovers_order(low in 0.0..TAU, err in -0.45..0.45f64, ratio in 2u32..9) {
        let ratio = ratio as f64;
        // Phase error below π/ratio in the low level is always resolved.
        let truth = ratio * low + err * PI;
        let got = unwrap_pixel(low, truth.rem_euclid(TAU), ratio);
        prop_assert!((got - truth).abs() < 1e-9);
    }

    #[test]
    fn compose_decompose_identity(
        k in intrinsics(),
        r in rotation(),
        t in prop::array::uniform3(-2.0..2.0f64),
    ) {
        let t = Vector3::from(t);
        let m = ProjMatrix::compose(&k, &r, &t).unwrap();
        let d = m.decompose().unwrap();
        for (a, b) in d.k.params().iter().zip(k.params()) {
            prop_assert!((a - b).abs() < 1e-9 * k.fx);
        }
        prop_assert!((d.rotation - r).norm() < 1e-12 * 1e3);
        prop_assert!((d.translation - t).norm() < 1e-9 * t.norm().max(1.0));
        prop_assert!((d.rotation.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constraint_residual_ignores_scale_and_sign(
        k in intrinsics(),
        s1 in sphere(),
        s2 in sphere(),
        a in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64],
        b in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64],
    ) {
        prop_assume!((s1.center - s2.center).norm() > s1.radius + s2.radius);
        let c1 = project_sphere_to_conic(&s1, &k).unwrap();
        let c2 = project_sphere_to_conic(&s2, &k).unwrap();
        prop_assume!(c1.distance_up_to_scale(&c2) > 1e-6);
        let Ok(pair) = constraint_pair(&c1, &c2, &k) else {
            return Ok(());
        };
        let base = pair.residual(&k);
        prop_assert!(base < 1e-9, "residual at the true camera {}", base);
        let other = Intrinsics::new(k.fx * 1.2, k.fy, k.skew + 3.0, k.u0 - 40.0, k.v0 + 25.0).unwrap();
        let l = HomPoint2::new(pair.line.vector() * a).unwrap();
        let v = HomPoint2::new(pair.point.vector() * b).unwrap();
        let expect = pair.residual(&other);
        let got = pole_polar_residual(&l, &v, &other, &pair.frame);
        prop_assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn triangulation_recovers_point(
        k in intrinsics(),
        kp in intrinsics(),
        r in rotation(),
        p in prop::array::uniform3(-1.0..1.0f64),
        depth in 2.0..10.0f64,
    ) {
        let x = Vector3::new(p[0], p[1], depth);
        let t = -r * Vector3::new(1.0, 0.2, 0.0);
        let m = ProjMatrix::compose(&kp, &r, &t).unwrap();
        prop_assume!((r * x + t).z > 0.1);
        let got = triangulate(&k.project(&x), &m.project(&x).unwrap(), &k, &m).unwrap();
        prop_assert!((got - x).norm() < 1e-8 * x.norm());
    }

    #[test]
    fn homogeneous_equality_is_up_to_scale(
        v in prop::array::uniform3(-10.0..10.0f64),
        s in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64],
    ) {
        let v = Vector3::from(v);
        prop_assume!(v.norm() > 1e-6);
        prop_assert_eq!(HomPoint2::new(v).unwrap(), HomPoint2::new(v * s).unwrap());
    }
}
