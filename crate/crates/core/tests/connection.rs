mod common;

use std::sync::Arc;

use affine_atlas::connection::{compatibility_defect, riemann, ConstantMetric};
use affine_atlas::{
    check_locally_metric, convex_combine, flat_connection, levi_civita, metric_interpolate,
    ChartId, Differentiation, GeometryError, MetricField,
};
use common::{levi_civita_of, manifold};
use nalgebra::DMatrix;

const FD: Differentiation = Differentiation::FiniteDifference { step: 1e-5 };

#[test]
fn flat_connections_vanish_on_affine_builtins() {
    for name in ["flat_torus_2d", "hopf_torus_2d", "hopf_manifold(2)"] {
        let m = manifold(name);
        let conn = flat_connection(&m).unwrap();
        for (c, x) in m.atlas.sample_points(50, 1) {
            assert_eq!(conn.gamma(c, &x).unwrap().max_abs(), 0.0, "{name}");
        }
        assert!(conn.is_symmetric());
    }
    assert!(matches!(
        flat_connection(&manifold("round_sphere_2d")),
        Err(GeometryError::NonAffineChart(_))
    ));
}

#[test]
fn sphere_christoffels_match_closed_form_and_difference_oracle() {
    let m = manifold("round_sphere_2d");
    let g = m.metric().unwrap();
    let analytic = levi_civita(g, Differentiation::Analytic).unwrap();
    let fd = levi_civita(g, FD).unwrap();
    for (c, x) in m.atlas.sample_points(40, 2) {
        let t = x[0];
        let a = analytic.gamma(c, &x).unwrap();
        assert!((a.get(0, 1, 1) + t.sin() * t.cos()).abs() < 1e-12);
        assert!((a.get(1, 0, 1) - t.cos() / t.sin()).abs() < 1e-12);
        assert!((a.get(1, 1, 0) - t.cos() / t.sin()).abs() < 1e-12);
        assert_eq!(a.get(0, 0, 0), 0.0);
        let b = fd.gamma(c, &x).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-5 * a.max_abs().max(1.0));
        assert_eq!(a.torsion_defect(), 0.0);
        assert_eq!(b.torsion_defect(), 0.0);
    }
}

#[test]
fn constant_metric_gives_zero_connection() {
    let m = manifold("flat_torus_2d");
    let conn = levi_civita_of(m.metric().unwrap());
    for (c, x) in m.atlas.sample_points(20, 3) {
        assert_eq!(conn.gamma(c, &x).unwrap().max_abs(), 0.0);
    }
}

#[test]
fn levi_civita_is_compatible_on_builtins() {
    for name in [
        "round_sphere_2d",
        "flat_torus_2d",
        "hopf_torus_2d",
        "hopf_manifold(3)",
    ] {
        let m = manifold(name);
        for g in [m.metric().unwrap(), m.companion_metric.as_ref().unwrap()] {
            let analytic = check_locally_metric(
                &levi_civita(g, Differentiation::Analytic).unwrap(),
                g,
                200,
                4,
            )
            .unwrap();
            assert!(
                analytic.max_defect <= 1e-8,
                "{name}/{}: {}",
                g.id(),
                analytic.max_defect
            );
            let fd = check_locally_metric(&levi_civita(g, FD).unwrap(), g, 200, 4).unwrap();
            assert!(
                fd.max_defect <= 1e-5,
                "{name}/{}: {}",
                g.id(),
                fd.max_defect
            );
        }
    }
}

#[test]
fn flat_torus_connection_preserves_euclidean_metric() {
    let m = manifold("flat_torus_2d");
    let report = check_locally_metric(
        &flat_connection(&m).unwrap(),
        &m.local_euclidean_metric(),
        100,
        5,
    )
    .unwrap();
    assert_eq!(report.max_defect, 0.0);
}

#[test]
fn hopf_flat_connection_is_not_globally_metric() {
    let m = manifold("hopf_torus_2d");
    let flat = flat_connection(&m).unwrap();
    // a deck-invariant global metric on the quotient
    let g = m.metric().unwrap();
    let report = check_locally_metric(&flat, g, 200, 6).unwrap();
    assert!(report.max_defect > 0.1, "{}", report.max_defect);
}

#[test]
fn analytic_derivatives_match_differences() {
    for name in ["round_sphere_2d", "flat_torus_2d", "hopf_torus_2d"] {
        let m = manifold(name);
        let g = m.companion_metric.as_ref().unwrap();
        let conn = levi_civita(g, Differentiation::Analytic).unwrap();
        for (c, x) in m.atlas.sample_points(30, 7) {
            let exact = conn
                .gamma_derivatives(c, &x, Differentiation::Analytic)
                .unwrap();
            let approx = conn.gamma_derivatives(c, &x, FD).unwrap();
            for (a, b) in exact.iter().zip(&approx) {
                assert!(
                    a.max_abs_diff(b) <= 1e-5 * a.max_abs().max(1.0),
                    "{name}: {}",
                    a.max_abs_diff(b)
                );
            }
        }
    }
}

#[test]
fn convex_combination_endpoints_and_eq10_scaling() {
    let m = manifold("flat_torus_2d");
    let flat = flat_connection(&m).unwrap();
    let d = levi_civita_of(m.companion_metric.as_ref().unwrap());
    let c0 = convex_combine(&flat, &d, 0.0).unwrap();
    let c1 = convex_combine(&flat, &d, 1.0).unwrap();
    let half = convex_combine(&flat, &d, 0.5).unwrap();
    for (c, x) in m.atlas.sample_points(50, 8) {
        let gd = d.gamma(c, &x).unwrap();
        assert!(c0.gamma(c, &x).unwrap().max_abs() <= 1e-14);
        assert!(c1.gamma(c, &x).unwrap().max_abs_diff(&gd) <= 1e-14);
        assert!(half.gamma(c, &x).unwrap().max_abs_diff(&gd.scaled(0.5)) <= 1e-14);
    }
    assert!(matches!(
        convex_combine(&flat, &d, 1.5),
        Err(GeometryError::ParameterOutOfRange(_))
    ));
    let other = manifold("flat_torus_2d");
    assert!(matches!(
        convex_combine(&flat, &flat_connection(&other).unwrap(), 0.5),
        Err(GeometryError::MismatchedAtlas)
    ));
}

#[test]
fn metric_interpolation_examples() {
    let m = manifold("flat_torus_2d");
    let two = MetricField::uniform(
        "two",
        m.atlas.clone(),
        Arc::new(ConstantMetric(DMatrix::identity(2, 2) * 2.0)),
    )
    .unwrap();
    let one = m.metric().unwrap();
    let mid = metric_interpolate(&two, one, 0.5).unwrap();
    assert_eq!(
        mid.value(ChartId(0), &[1.0, 2.0]),
        DMatrix::identity(2, 2) * 1.5
    );
    let at0 = metric_interpolate(&two, one, 0.0).unwrap();
    assert_eq!(
        at0.value(ChartId(0), &[1.0, 2.0]),
        one.value(ChartId(0), &[1.0, 2.0])
    );

    let sphere = manifold("round_sphere_2d");
    let g = sphere.metric().unwrap();
    let h = sphere.companion_metric.as_ref().unwrap();
    let floor = g.min_eigenvalue(1000, 9).min(h.min_eigenvalue(1000, 9));
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let gt = metric_interpolate(g, h, t).unwrap();
        assert!(gt.min_eigenvalue(1000, 9) >= floor - 1e-15, "t={t}");
        for (c, x) in sphere.atlas.sample_points(20, 10) {
            let expect = g.value(c, &x) * t + h.value(c, &x) * (1.0 - t);
            assert!((gt.value(c, &x) - expect).abs().max() <= 1e-14);
        }
    }
}

#[test]
fn interpolated_endpoint_reproduces_levi_civita() {
    let sphere = manifold("round_sphere_2d");
    let g = sphere.metric().unwrap();
    let h = sphere.companion_metric.as_ref().unwrap();
    let direct = levi_civita_of(g);
    let via = levi_civita_of(&metric_interpolate(g, h, 1.0).unwrap());
    for (c, x) in sphere.atlas.sample_points(50, 11) {
        assert!(
            direct
                .gamma(c, &x)
                .unwrap()
                .max_abs_diff(&via.gamma(c, &x).unwrap())
                <= 1e-12
        );
    }
}

#[test]
fn levi_civita_of_interpolation_is_not_the_convex_combination() {
    let sphere = manifold("round_sphere_2d");
    let g = sphere.metric().unwrap();
    let h = sphere.companion_metric.as_ref().unwrap();
    let t = 0.5;
    let of_mix = levi_civita_of(&metric_interpolate(g, h, t).unwrap());
    let mix_of = convex_combine(&levi_civita_of(h), &levi_civita_of(g), t).unwrap();
    let worst = sphere
        .atlas
        .sample_points(200, 12)
        .iter()
        .map(|(c, x)| {
            of_mix
                .gamma(*c, x)
                .unwrap()
                .max_abs_diff(&mix_of.gamma(*c, x).unwrap())
        })
        .fold(0.0_f64, f64::max);
    assert!(worst > 1e-3, "{worst}");
}

#[test]
fn curvature_tensor_of_sphere() {
    let sphere = manifold("round_sphere_2d");
    let conn = levi_civita_of(sphere.metric().unwrap());
    for (c, x) in sphere.atlas.sample_points(30, 13) {
        let r = riemann(&conn, c, &x, conn.preferred_differentiation()).unwrap();
        let s2 = x[0].sin().powi(2);
        assert!((r.get(0, 1, 0, 1) - s2).abs() < 1e-10);
        assert!((r.get(1, 0, 0, 1) + 1.0).abs() < 1e-10);
        assert!(r.bianchi_defect() < 1e-12);
    }
    let torus = manifold("flat_torus_2d");
    let flat = flat_connection(&torus).unwrap();
    let r = riemann(&flat, ChartId(0), &[1.0, 1.0], Differentiation::Analytic).unwrap();
    assert_eq!(r.max_abs(), 0.0);
    let defect = compatibility_defect(
        &flat,
        &torus.local_euclidean_metric(),
        ChartId(0),
        &[1.0, 1.0],
        Differentiation::Analytic,
    );
    assert_eq!(defect.unwrap(), 0.0);
}
