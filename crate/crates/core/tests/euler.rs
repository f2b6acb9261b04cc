mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use affine_atlas::connection::RoundSphereMetric;
use affine_atlas::euler::{
    curvature_forms, euler_characteristic_experiment, euler_form_at, euler_integral, gram_schmidt,
    integrate_form, orthonormal_frame, pfaffian, pfaffian_scalar, write_euler_samples,
    CurvatureMatrix, Form, Normalization,
};
use affine_atlas::{flat_connection, ChartId, GeometryError, MetricField};
use common::{chart, levi_civita_of, manifold};
use nalgebra::DMatrix;

#[test]
fn orthonormal_frame_examples() {
    let torus = manifold("flat_torus_2d");
    let f = orthonormal_frame(torus.metric().unwrap(), ChartId(0), &[1.0, 2.0]).unwrap();
    assert_eq!(f.matrix, DMatrix::identity(2, 2));
    assert!(f.positive);

    let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]));
    let f = gram_schmidt(&g, &[0, 1]).unwrap();
    assert!(
        (f - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 1.0 / 3.0])))
            .abs()
            .max()
            < 1e-15
    );

    let sphere = manifold("round_sphere_2d");
    let g = sphere.metric().unwrap();
    let x = [FRAC_PI_2, 0.7];
    let f = orthonormal_frame(g, chart(&sphere, "spherical"), &x).unwrap();
    assert!((&f.matrix - DMatrix::identity(2, 2)).abs().max() < 1e-15);
    assert!(f.orthonormality_defect(&g.value(ChartId(0), &x)) < 1e-12);
}

#[test]
fn sphere_euler_density_is_curvature_times_area() {
    let m = manifold("round_sphere_2d");
    let g = m.metric().unwrap();
    let conn = levi_civita_of(g);
    let c = chart(&m, "spherical");
    for (_, x) in m.atlas.sample_points(100, 31) {
        let e = euler_form_at(&conn, g, c, &x, Normalization::ChernGaussBonnet).unwrap();
        // K = 1 and sqrt(det g) = sin θ
        assert!((e.value - x[0].sin() / TAU).abs() <= 1e-6);
        let raw = euler_form_at(&conn, g, c, &x, Normalization::Raw).unwrap();
        assert!((raw.value - x[0].sin()).abs() <= 1e-6);
    }
}

#[test]
fn sphere_integral_is_radius_invariant() {
    let m = manifold("round_sphere_2d");
    for radius in [1.0, 2.0] {
        let g = MetricField::uniform(
            "round_r",
            m.atlas.clone(),
            Arc::new(RoundSphereMetric { radius }),
        )
        .unwrap();
        let conn = levi_civita_of(&g);
        let x = [1.1, 0.4];
        let om =
            curvature_forms(&conn, &g, ChartId(0), &x, conn.preferred_differentiation()).unwrap();
        // K = 1/r² against the area density r² sin θ
        assert!((om.component(0, 1, 0, 1) - x[0].sin()).abs() <= 1e-8);
        let chi = euler_integral(
            &m,
            &conn,
            &g,
            Some(&[400, 200]),
            Normalization::ChernGaussBonnet,
        )
        .unwrap();
        assert!((chi - 2.0).abs() <= 1e-3, "r={radius}: {chi}");
    }
}

fn block_matrix(alpha: &[(usize, usize, f64)], beta: &[(usize, usize, f64)]) -> CurvatureMatrix {
    let n = 4;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let omega = pairs
        .iter()
        .map(|&p| {
            let mut m = DMatrix::zeros(n, n);
            for &(i, j, c) in alpha {
                if (i, j) == p {
                    m[(0, 1)] = c;
                    m[(1, 0)] = -c;
                }
            }
            for &(i, j, c) in beta {
                if (i, j) == p {
                    m[(2, 3)] = c;
                    m[(3, 2)] = -c;
                }
            }
            m
        })
        .collect();
    CurvatureMatrix {
        n,
        pairs,
        omega,
        frame: DMatrix::identity(n, n),
    }
}

fn as_form(n: usize, terms: &[(usize, usize, f64)]) -> Form {
    terms.iter().fold(Form::zero(n), |acc, &(i, j, c)| {
        &acc + &Form::two_form(n, i, j, c)
    })
}

#[test]
fn block_pfaffian_is_the_wedge_of_blocks() {
    let alpha = [(0, 1, 1.5), (0, 2, -0.4), (1, 3, 2.0)];
    let beta = [(2, 3, 0.7), (1, 3, 0.9), (0, 2, 0.5)];
    let pf = pfaffian(&block_matrix(&alpha, &beta)).unwrap();
    // (α∧β)_0123 = a01 b23 − a02 b13 + a03 b12 + a12 b03 − a13 b02 + a23 b01
    let by_hand = 1.5 * 0.7 - (-0.4) * 0.9 - 2.0 * 0.5;
    assert!((pf.top() - by_hand).abs() <= 1e-14, "{}", pf.top());
    let expected = as_form(4, &alpha).wedge(&as_form(4, &beta));
    assert!((&pf - &expected).max_abs() <= 1e-14);
    assert!(pfaffian(&block_matrix(&[], &[])).unwrap().max_abs() == 0.0);
    let n2 = CurvatureMatrix {
        n: 2,
        pairs: vec![(0, 1)],
        omega: vec![DMatrix::from_row_slice(2, 2, &[0.0, 3.25, -3.25, 0.0])],
        frame: DMatrix::identity(2, 2),
    };
    assert_eq!(pfaffian(&n2).unwrap().top(), 3.25);
}

#[test]
fn pfaffian_rejections() {
    assert!(matches!(
        pfaffian_scalar(&DMatrix::zeros(3, 3)),
        Err(GeometryError::OddDimension(3))
    ));
    let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    assert!(matches!(
        pfaffian_scalar(&m),
        Err(GeometryError::SkewnessViolation(_))
    ));
}

#[test]
fn flat_torus_form_and_constant_density() {
    let m = manifold("flat_torus_2d");
    let conn = flat_connection(&m).unwrap();
    let g = m.local_euclidean_metric();
    for (c, x) in m.atlas.sample_points(50, 32) {
        assert!(
            euler_form_at(&conn, &g, c, &x, Normalization::ChernGaussBonnet)
                .unwrap()
                .value
                .abs()
                <= 1e-12
        );
    }
    let chi = euler_integral(&m, &conn, &g, None, Normalization::ChernGaussBonnet).unwrap();
    assert!(chi.abs() <= 1e-12);
    let area = integrate_form(&m, |_, _| Ok(1.0), None).unwrap();
    assert!((area - 4.0 * PI * PI).abs() <= 1e-6);
}

#[test]
fn sphere_quadrature_converges_under_refinement() {
    let m = manifold("round_sphere_2d");
    let g = m.metric().unwrap();
    let conn = levi_civita_of(g);
    let errors: Vec<f64> = [[20, 10], [40, 20], [80, 40]]
        .iter()
        .map(|grid| {
            (euler_integral(&m, &conn, g, Some(grid), Normalization::ChernGaussBonnet).unwrap()
                - 2.0)
                .abs()
        })
        .collect();
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
    // second order: each halving divides the error by about four
    assert!(
        errors[0] / errors[1] > 3.5 && errors[1] / errors[2] > 3.5,
        "{errors:?}"
    );
}

#[test]
fn torus_bump_density_matches_conformal_formula() {
    let m = manifold("flat_torus_2d");
    let h = m.companion_metric.as_ref().unwrap();
    let conn = levi_civita_of(h);
    let a = 0.3;
    for (c, x) in m.atlas.sample_points(100, 33) {
        let (sx, cx, sy, cy) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
        let f = 1.0 + a * sx * sy;
        let (fx, fy, lap) = (a * cx * sy, a * sx * cy, -2.0 * a * sx * sy);
        // h = e^{2u} δ with u = ½ ln f has K dA = −Δu dx∧dy
        let lap_u = 0.5 * (lap / f - (fx * fx + fy * fy) / (f * f));
        let e = euler_form_at(&conn, h, c, &x, Normalization::ChernGaussBonnet).unwrap();
        assert!((e.value + lap_u / TAU).abs() <= 1e-8, "{x:?}");
    }
    let chi = euler_integral(&m, &conn, h, None, Normalization::ChernGaussBonnet).unwrap();
    assert!(chi.abs() <= 1e-6, "{chi}");
}

#[test]
fn four_dimensional_hopf_integrates_to_zero() {
    let m = manifold("hopf_manifold(3)");
    let h = m.companion_metric.as_ref().unwrap();
    let conn = levi_civita_of(h);
    let chi = euler_integral(
        &m,
        &conn,
        h,
        Some(&[16, 8, 32, 8]),
        Normalization::ChernGaussBonnet,
    )
    .unwrap();
    assert!(chi.abs() <= 1e-3, "{chi}");
}

#[test]
fn odd_dimensions_are_rejected() {
    let m = manifold("hopf_manifold(2)");
    let g = m.metric().unwrap();
    let conn = levi_civita_of(g);
    assert!(matches!(
        euler_form_at(&conn, g, ChartId(0), &[1.5, 0.0, 0.0], Normalization::Raw),
        Err(GeometryError::OddDimension(3))
    ));
    assert!(matches!(
        euler_integral(&m, &conn, g, None, Normalization::Raw),
        Err(GeometryError::OddDimension(3))
    ));
    assert!(matches!(
        euler_characteristic_experiment(&m, g, g, &[0.5], None),
        Err(GeometryError::OddDimension(3))
    ));
}

#[test]
fn deformation_table_shape() {
    let m = manifold("flat_torus_2d");
    let table = euler_characteristic_experiment(
        &m,
        m.metric().unwrap(),
        m.companion_metric.as_ref().unwrap(),
        &[0.0, 0.5, 1.0],
        Some(&[60, 60]),
    )
    .unwrap();
    assert_eq!(table.integrals.len(), 3);
    assert_eq!(table.grid, vec![vec![60, 60]]);
    assert!(table.integrals.iter().all(|v| v.abs() <= 1e-6));
    let json = serde_json::to_value(&table).unwrap();
    for key in [
        "manifold",
        "t_grid",
        "integrals",
        "max_deviation",
        "grid",
        "tolerances",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn euler_samples_export_as_csv() {
    let m = manifold("round_sphere_2d");
    let g = m.metric().unwrap();
    let conn = levi_civita_of(g);
    let points = vec![
        (ChartId(0), vec![0.5, 1.0]),
        (ChartId(0), vec![FRAC_PI_2, 2.0]),
    ];
    let mut buf = Vec::new();
    write_euler_samples(&conn, g, &points, Normalization::ChernGaussBonnet, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(
        reader.headers().unwrap(),
        vec!["chart", "x0", "x1", "euler"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let v: f64 = rows[1][3].parse().unwrap();
    assert!((v - 1.0 / TAU).abs() <= 1e-6);
}
