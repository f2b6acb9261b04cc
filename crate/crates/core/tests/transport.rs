mod common;

use std::f64::consts::{FRAC_PI_2, TAU};

use affine_atlas::transport::{
    build_parallel_frame, bump_circle, geodesic_integrate, holonomy, holonomy_map_experiment,
    hopf_core_loop, latitude_loop, parallel_transport, rectangle, transport_pair, Curve,
    FrameOptions, GeodesicOptions, GeodesicStatus, OdeTolerance, Segment,
};
use affine_atlas::{convex_combine, flat_connection, ChartId, GeometryError};
use common::{chart, levi_civita_of, manifold, sphere_arc, torus_loops};
use nalgebra::DMatrix;

fn wrapped_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[test]
fn flat_transport_is_trivial() {
    let m = manifold("flat_torus_2d");
    let conn = flat_connection(&m).unwrap();
    let curve = Curve::open(Segment::line(ChartId(0), vec![0.5, 0.5], vec![5.0, 4.0]));
    let v = parallel_transport(&conn, &curve, &[0.3, -1.2], &OdeTolerance::default()).unwrap();
    assert_eq!(v, vec![0.3, -1.2]);
}

#[test]
fn latitude_holonomy_matches_closed_form() {
    let m = manifold("round_sphere_2d");
    let g = m.metric().unwrap();
    let conn = levi_civita_of(g);
    let tol = OdeTolerance::from(1e-9);
    for theta0 in [0.4, 1.0, FRAC_PI_2, 2.2] {
        let h = holonomy(&conn, &latitude_loop(&m.atlas, theta0).unwrap(), &tol).unwrap();
        let expected = TAU * (1.0 - f64::cos(theta0));
        let got = h.rotation_angle(g).unwrap();
        // the sense of rotation depends on the loop orientation
        let gap = wrapped_gap(got, expected).min(wrapped_gap(-got, expected));
        assert!(gap <= 1e-6, "theta0={theta0}: {got} vs {expected}");
        assert!(h.orthogonality_defect(g) <= 1e-8);
        assert!(h.is_invertible());
    }
}

#[test]
fn holonomy_of_concatenation_is_the_product() {
    let m = manifold("round_sphere_2d");
    let conn = levi_civita_of(m.metric().unwrap());
    let c = chart(&m, "spherical");
    let base = [1.2, 2.0];
    let a = bump_circle(c, &base, (0, 1), 0.3, 0.2, 3, 0.4);
    let b = rectangle(c, &base, (1, 0), 0.5, 0.4);
    let tol = OdeTolerance::default();
    let ha = holonomy(&conn, &a, &tol).unwrap().matrix;
    let hb = holonomy(&conn, &b, &tol).unwrap().matrix;
    let hab = holonomy(&conn, &a.then(&b).unwrap(), &tol).unwrap().matrix;
    assert!((&hab - &hb * &ha).abs().max() <= 1e-8);
    assert!(ha.norm() > 0.0 && (&ha - DMatrix::identity(2, 2)).norm() > 1e-3);
}

#[test]
fn hopf_core_loop_holonomy_is_scalar() {
    let m = manifold("hopf_torus_2d");
    let conn = flat_connection(&m).unwrap();
    let deck = m.deck.as_ref().unwrap();
    let tol = OdeTolerance::default();
    let out = holonomy(&conn, &hopf_core_loop(&m.atlas, deck, false).unwrap(), &tol).unwrap();
    let back = holonomy(&conn, &hopf_core_loop(&m.atlas, deck, true).unwrap(), &tol).unwrap();
    let id = DMatrix::<f64>::identity(2, 2);
    assert!((&out.matrix - &id * (-TAU).exp()).abs().max() <= 1e-12);
    assert!((&back.matrix - &id * TAU.exp()).abs().max() <= 1e-12 * TAU.exp());
}

#[test]
fn open_curves_are_not_loops() {
    let m = manifold("flat_torus_2d");
    let conn = flat_connection(&m).unwrap();
    let open = Curve::open(Segment::line(ChartId(0), vec![1.0, 1.0], vec![2.0, 1.0]));
    assert!(matches!(
        holonomy(&conn, &open, &OdeTolerance::default()),
        Err(GeometryError::NotClosed(_))
    ));
}

#[test]
fn transport_pair_examples() {
    let m = manifold("flat_torus_2d");
    let d = levi_civita_of(m.companion_metric.as_ref().unwrap());
    let flat = flat_connection(&m).unwrap();
    let loop_ = bump_circle(ChartId(0), &[3.0, 3.0], (0, 1), 0.8, 0.3, 2, 0.0);
    let tol = OdeTolerance::default();
    let a = [0.4, -0.9];
    let (v, w) = transport_pair(&loop_, &d, 1.0, &a, &tol).unwrap();
    assert!(v.iter().zip(&w).all(|(p, q)| (p - q).abs() <= 1e-10));
    let (v0, _) = transport_pair(&loop_, &d, 0.0, &a, &tol).unwrap();
    assert_eq!(v0, a.to_vec());
    for t in [0.0, 0.3, 1.0] {
        let (v, w) = transport_pair(&loop_, &flat, t, &a, &tol).unwrap();
        assert_eq!((v.clone(), w), (a.to_vec(), a.to_vec()));
    }
    let open = Curve::open(Segment::line(ChartId(0), vec![1.0, 1.0], vec![2.0, 1.0]));
    assert!(matches!(
        transport_pair(&open, &d, 0.5, &a, &tol),
        Err(GeometryError::NotClosed(_))
    ));
    let sphere = manifold("round_sphere_2d");
    let sd = levi_civita_of(sphere.metric().unwrap());
    let sloop = bump_circle(ChartId(0), &[1.0, 1.0], (0, 1), 0.2, 0.0, 1, 0.0);
    assert!(matches!(
        transport_pair(&sloop, &sd, 0.5, &a, &tol),
        Err(GeometryError::NonAffineChart(_))
    ));
}

#[test]
fn scaled_connection_at_zero_is_identity_transport() {
    let m = manifold("flat_torus_2d");
    let d = levi_civita_of(m.companion_metric.as_ref().unwrap());
    let flat = flat_connection(&m).unwrap();
    let zero = convex_combine(&flat, &d, 0.0).unwrap();
    let curve = Curve::open(Segment::line(ChartId(0), vec![0.5, 0.7], vec![4.0, 5.0]));
    let v = parallel_transport(&zero, &curve, &[1.0, 2.0], &OdeTolerance::default()).unwrap();
    assert_eq!(v, vec![1.0, 2.0]);
}

#[test]
fn holonomy_map_examples() {
    let (torus, loops) = torus_loops(12, 3);
    let flat = flat_connection(&torus).unwrap();
    let d = levi_civita_of(torus.companion_metric.as_ref().unwrap());
    let tol = OdeTolerance::default();

    let trivial = holonomy_map_experiment(&flat, &flat, 0.5, &loops, &tol, 1e-6).unwrap();
    assert_eq!(
        trivial.well_defined.pairs,
        loops.len() * (loops.len() - 1) / 2
    );
    assert!(trivial.well_defined.max_defect <= 1e-12);

    let at_one = holonomy_map_experiment(&flat, &d, 1.0, &loops, &tol, 1e-6).unwrap();
    assert!(at_one.well_defined.max_defect <= 1e-6);
    for (a, b) in at_one.holonomy_t.iter().zip(&at_one.holonomy_d) {
        assert_eq!(a, b);
    }
    let mid = holonomy_map_experiment(&flat, &d, 0.5, &loops, &tol, 1e-6).unwrap();
    assert!(
        mid.homomorphism_defect <= 1e-7,
        "{}",
        mid.homomorphism_defect
    );

    let shifted = bump_circle(ChartId(0), &[2.0, 2.0], (0, 1), 0.5, 0.0, 1, 0.0);
    let mut mixed = loops.clone();
    mixed.push(shifted);
    assert!(matches!(
        holonomy_map_experiment(&flat, &d, 0.5, &mixed, &tol, 1e-6),
        Err(GeometryError::LoopsNotCoBased)
    ));
}

#[test]
fn holonomy_is_parametrization_independent() {
    let m = manifold("round_sphere_2d");
    let conn = levi_civita_of(m.metric().unwrap());
    let loop_ = bump_circle(ChartId(0), &[1.0, 3.0], (0, 1), 0.4, 0.25, 2, 0.3);
    let slow = loop_.reparametrized(|u| u * u, |u| 2.0 * u);
    let tol = OdeTolerance::default();
    let a = holonomy(&conn, &loop_, &tol).unwrap().matrix;
    let b = holonomy(&conn, &slow, &tol).unwrap().matrix;
    assert!((a - b).abs().max() <= 1e-8);
}

#[test]
fn flat_torus_geodesics_reach_long_horizons() {
    let m = manifold("flat_torus_2d");
    let conn = flat_connection(&m).unwrap();
    let options = GeodesicOptions {
        tol: OdeTolerance::default().with_max_step(2.0),
        sample_stride: 10_000,
        ..GeodesicOptions::default()
    };
    let rec = geodesic_integrate(
        &conn,
        (ChartId(0), &[0.2, 5.0]),
        &[1.0, 2f64.sqrt()],
        1e6,
        &options,
    )
    .unwrap();
    assert_eq!(rec.status, GeodesicStatus::CompletedHorizon);
    let last = rec.final_sample();
    assert_eq!(last.s, 1e6);
    assert!(wrapped_gap(last.x[0], 0.2 + 1e6) <= 1e-8);
    assert!(wrapped_gap(last.x[1], 5.0 + 1e6 * 2f64.sqrt()) <= 1e-8);
    assert!(rec.transitions_applied > 100_000);
}

#[test]
fn hopf_inward_geodesics_escape_at_initial_radius() {
    let m = manifold("hopf_torus_2d");
    let conn = flat_connection(&m).unwrap();
    for (x0, speed) in [
        ([1.0_f64, 0.0], 1.0_f64),
        ([0.0, 2.0], 0.5),
        ([-150.0, 200.0], 5.0),
    ] {
        let r: f64 = (x0[0] * x0[0] + x0[1] * x0[1]).sqrt();
        let v = [-x0[0] / r * speed, -x0[1] / r * speed];
        let rec = geodesic_integrate(
            &conn,
            (ChartId(0), &x0),
            &v,
            1e3,
            &GeodesicOptions::default(),
        )
        .unwrap();
        let GeodesicStatus::Escaped { s_star } = rec.status else {
            panic!("{x0:?}: {:?}", rec.status)
        };
        let expected = r / speed;
        assert!(
            (s_star - expected).abs() <= 1e-6 * expected,
            "{x0:?}: {s_star} vs {expected}"
        );
    }
    // outward radial geodesics never escape
    let rec = geodesic_integrate(
        &conn,
        (ChartId(0), &[1.5, 0.0]),
        &[1.0, 0.0],
        50.0,
        &GeodesicOptions::default(),
    )
    .unwrap();
    assert_eq!(rec.status, GeodesicStatus::CompletedHorizon);
}

#[test]
fn equator_geodesic_closes() {
    let m = manifold("round_sphere_2d");
    let conn = levi_civita_of(m.metric().unwrap());
    let rec = geodesic_integrate(
        &conn,
        (ChartId(0), &[FRAC_PI_2, 0.0]),
        &[0.0, 1.0],
        TAU,
        &GeodesicOptions::default(),
    )
    .unwrap();
    assert_eq!(rec.status, GeodesicStatus::CompletedHorizon);
    let last = rec.final_sample();
    assert!((last.x[0] - FRAC_PI_2).abs() <= 1e-6);
    assert!(wrapped_gap(last.x[1], 0.0) <= 1e-6);
    assert!(rec.max_residual <= 1e-8);
}

#[test]
fn geodesic_input_errors() {
    let m = manifold("flat_torus_2d");
    let conn = flat_connection(&m).unwrap();
    let o = GeodesicOptions::default();
    assert!(matches!(
        geodesic_integrate(&conn, (ChartId(0), &[1.0, 1.0]), &[1.0, 0.0], 0.0, &o),
        Err(GeometryError::NonPositiveHorizon)
    ));
    assert!(matches!(
        geodesic_integrate(&conn, (ChartId(0), &[9.0, 1.0]), &[1.0, 0.0], 1.0, &o),
        Err(GeometryError::InvalidStart)
    ));
}

#[test]
fn frame_certificates() {
    let (torus, loops) = torus_loops(20, 5);
    let conn = flat_connection(&torus).unwrap();
    let id = DMatrix::<f64>::identity(2, 2);
    let report = build_parallel_frame(
        &conn,
        (ChartId(0), &[3.0, 3.0]),
        &id,
        &loops,
        &FrameOptions::default(),
    )
    .unwrap();
    assert!(
        report.certified && report.path_independence_defect <= 1e-10 && report.tree_defect <= 1e-10
    );

    let hopf = manifold("hopf_torus_2d");
    let hconn = flat_connection(&hopf).unwrap();
    let core = hopf_core_loop(&hopf.atlas, hopf.deck.as_ref().unwrap(), false).unwrap();
    let report = build_parallel_frame(
        &hconn,
        (ChartId(0), &[1.0, 0.0]),
        &id,
        &[core],
        &FrameOptions::default(),
    )
    .unwrap();
    let expected = ((1.0 - (-TAU).exp()).powi(2) * 2.0).sqrt();
    assert!((report.path_independence_defect - expected).abs() <= 1e-9);
    assert!(!report.certified);

    assert!(matches!(
        build_parallel_frame(
            &conn,
            (ChartId(0), &[3.0, 3.0]),
            &DMatrix::zeros(2, 2),
            &[],
            &FrameOptions::default()
        ),
        Err(GeometryError::SingularFrame)
    ));
    let sphere = manifold("round_sphere_2d");
    let sconn = levi_civita_of(sphere.metric().unwrap());
    assert!(matches!(
        build_parallel_frame(
            &sconn,
            (ChartId(0), &[1.0, 1.0]),
            &id,
            &[],
            &FrameOptions::default()
        ),
        Err(GeometryError::NotFlat(_))
    ));
}

#[test]
fn curves_are_consistent() {
    let m = manifold("round_sphere_2d");
    let c = chart(&m, "spherical");
    let arc = sphere_arc(c, [0.8, 1.0], [2.0, 4.0], 0.1);
    assert!(arc.velocity_defect(64) <= 1e-6);
    let lat = latitude_loop(&m.atlas, 1.0).unwrap();
    assert!(lat.junction_defect(&m.atlas).unwrap() <= 1e-10);
    assert!(lat.velocity_defect(64) <= 1e-6);
    let hopf = manifold("hopf_torus_2d");
    let core = hopf_core_loop(&hopf.atlas, hopf.deck.as_ref().unwrap(), false).unwrap();
    assert!(core.junction_defect(&hopf.atlas).unwrap() <= 1e-10);
    for l in torus_loops(10, 9).1 {
        assert!(l.velocity_defect(64) <= 1e-6);
    }
}
