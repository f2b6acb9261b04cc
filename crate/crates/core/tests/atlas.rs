mod common;

use std::f64::consts::{PI, TAU};

use affine_atlas::atlas::{catalog_entries, CatalogKey, CoordinateKind, ManifestSpec};
use affine_atlas::{
    builtin_manifold, hopf_covering_point, transition, BuiltinParams, ChartId, GeometryError,
};
use common::manifold;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn flat_torus_has_one_periodic_affine_chart() {
    let m = manifold("flat_torus_2d");
    assert_eq!(m.atlas.charts().len(), 1);
    let chart = &m.atlas.charts()[0];
    assert_eq!(chart.kind, CoordinateKind::Affine);
    assert!(chart
        .domain
        .intervals
        .iter()
        .all(|iv| iv.periodic && iv.lo == 0.0 && iv.hi == TAU));
    assert!(m.atlas.is_affine() && m.flat_affine);
}

#[test]
fn hopf_torus_annulus_and_generator() {
    let m = manifold("hopf_torus_2d");
    let deck = m.deck.as_ref().unwrap();
    let (inner, outer) = deck.fundamental_annulus();
    assert_eq!(inner, 1.0);
    assert!((outer - TAU.exp()).abs() <= 1e-12 * outer);
    assert_eq!(
        deck.generator(&[0.3, -0.2]),
        vec![0.3 * TAU.exp(), -0.2 * TAU.exp()]
    );
    assert_eq!(m.atlas.puncture(), Some(&[0.0, 0.0][..]));
}

#[test]
fn sphere_metric_matches_embedding_gram_matrix() {
    let m = manifold("round_sphere_2d");
    let g = m.metric().unwrap();
    let embed = |t: f64, p: f64| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
    let h = 1e-6;
    for (t, p) in [(0.4, 0.1), (1.2, 3.0), (2.7, 5.5)] {
        let dt: Vec<f64> = (0..3)
            .map(|i| (embed(t + h, p)[i] - embed(t - h, p)[i]) / (2.0 * h))
            .collect();
        let dp: Vec<f64> = (0..3)
            .map(|i| (embed(t, p + h)[i] - embed(t, p - h)[i]) / (2.0 * h))
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let gram = [dot(&dt, &dt), dot(&dt, &dp), dot(&dp, &dp)];
        let got = g.value(ChartId(0), &[t, p]);
        assert!((got[(0, 0)] - gram[0]).abs() < 1e-8);
        assert!((got[(0, 1)] - gram[1]).abs() < 1e-8);
        assert!((got[(1, 1)] - gram[2]).abs() < 1e-8);
    }
}

#[test]
fn builtin_errors() {
    assert!(matches!(
        builtin_manifold("klein_bottle", &BuiltinParams::default()),
        Err(GeometryError::UnknownManifold(_))
    ));
    assert!(matches!(
        builtin_manifold("hopf_manifold(0)", &BuiltinParams::default()),
        Err(GeometryError::InvalidDimension(0))
    ));
    let bad_deck = BuiltinParams {
        deck_scalar: Some(1.0),
        ..BuiltinParams::default()
    };
    assert!(builtin_manifold("hopf_torus_2d", &bad_deck).is_err());
    assert!("hopf_manifold(3)".parse::<CatalogKey>().is_ok());
}

#[test]
fn transitions_examples() {
    let torus = manifold("flat_torus_2d");
    let (_, wrap) = torus.atlas.transition_by_name("wrap_0_down").unwrap();
    let y = transition(&[TAU + 0.1, 1.0], wrap).unwrap();
    assert!((y[0] - 0.1).abs() < 1e-12 && y[1] == 1.0);

    let hopf = manifold("hopf_torus_2d");
    let (_, out) = hopf.atlas.transition_by_name("deck_out").unwrap();
    let x = [TAU.exp() * 1.5 * 0.6, TAU.exp() * 1.5 * 0.8];
    let y = transition(&x, out).unwrap();
    let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
    assert!((r - 1.5).abs() < 1e-12);
    let (_, back) = hopf.atlas.transition_by_name("deck_in").unwrap();
    // the inverse map itself, outside the overlap on which the atlas applies it
    let z = back.forward(&y);
    assert!((z[0] - x[0]).abs() < 1e-12 * TAU.exp() && (z[1] - x[1]).abs() < 1e-12 * TAU.exp());

    let (_, id) = hopf.atlas.transition_by_name("identity").unwrap();
    assert_eq!(transition(&[1.3, 0.2], id).unwrap(), vec![1.3, 0.2]);
    assert!(matches!(
        transition(&[1.3, 0.2], out),
        Err(GeometryError::OutsideOverlap(_))
    ));
}

#[test]
fn covering_point_examples_and_equivariance() {
    let (u, a) = hopf_covering_point(&[1.0, 0.0]).unwrap();
    assert_eq!((u, a), (vec![1.0, 0.0], 0.0));
    let (u, a) = hopf_covering_point(&[TAU.exp(), 0.0]).unwrap();
    assert!((u[0] - 1.0).abs() < 1e-15 && a.min(TAU - a) < 1e-12);
    let (u, a) = hopf_covering_point(&[0.0, PI.exp()]).unwrap();
    assert!(u[0].abs() < 1e-15 && (u[1] - 1.0).abs() < 1e-15 && (a - PI).abs() < 1e-12);
    assert!(hopf_covering_point(&[0.0, 0.0]).is_err());

    let deck = manifold("hopf_torus_2d").deck.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-5.0..5.0)).collect();
        if x.iter().all(|v| v.abs() < 1e-6) {
            continue;
        }
        let (u0, a0) = hopf_covering_point(&x).unwrap();
        let (u1, a1) = hopf_covering_point(&deck.generator(&x)).unwrap();
        let da = (a0 - a1).abs();
        assert!(da.min(TAU - da) < 1e-10);
        assert!(u0.iter().zip(&u1).all(|(p, q)| (p - q).abs() < 1e-10));
    }
}

#[test]
fn cocycle_and_constant_jacobians() {
    for name in [
        "flat_torus_2d",
        "hopf_torus_2d",
        "hopf_manifold(2)",
        "round_sphere_2d",
    ] {
        let m = manifold(name);
        let (worst, checked) = m.atlas.cocycle_defect(100, 1);
        assert!(checked > 0, "{name}");
        assert!(worst <= 1e-10 * TAU.exp(), "{name}: {worst}");
        let (fd, constant) = m.atlas.jacobian_defects(1000, 2);
        assert!(fd <= 1e-6, "{name}: {fd}");
        if m.atlas.is_affine() {
            assert!(constant <= 1e-12, "{name}: {constant}");
        }
    }
}

#[test]
fn covers_integrate_known_volumes() {
    for name in [
        "flat_torus_2d",
        "round_sphere_2d",
        "hopf_torus_2d",
        "hopf_manifold(2)",
        "hopf_manifold(3)",
    ] {
        let m = manifold(name);
        let vol = m.volume().unwrap();
        let known = m.known_volume.unwrap();
        assert!(
            (vol - known).abs() <= 1e-4 * known.max(1.0),
            "{name}: {vol} vs {known}"
        );
        let (sum_defect, min_weight) = m.cover().unwrap().partition_defect(&m.atlas, 500, 4);
        assert!(min_weight >= 0.0 && sum_defect <= 1e-10, "{name}");
    }
    let ones = manifold("flat_torus_2d")
        .cover()
        .unwrap()
        .integrate(&manifold("flat_torus_2d").atlas, |_, _| Ok(1.0))
        .unwrap();
    assert!((ones - 4.0 * PI * PI).abs() < 1e-6);
}

#[test]
fn deck_scalar_is_configurable() {
    let m = builtin_manifold(
        "hopf_torus_2d",
        &BuiltinParams {
            deck_scalar: Some(3.0),
            ..BuiltinParams::default()
        },
    )
    .unwrap();
    assert_eq!(m.deck.as_ref().unwrap().fundamental_annulus(), (1.0, 3.0));
    let vol = m.volume().unwrap();
    assert!((vol - 3f64.ln() * TAU).abs() < 1e-4);
}

#[test]
fn catalog_lists_odd_hopf_as_euler_disabled() {
    let entries = catalog_entries(&[2, 3]);
    let odd = entries
        .iter()
        .find(|e| e.key == "hopf_manifold(2)")
        .unwrap();
    assert_eq!(odd.dimension, 3);
    assert!(!odd.euler_ops);
    assert!(odd.note.contains("odd total dimension: Euler ops disabled"));
    let even = entries
        .iter()
        .find(|e| e.key == "hopf_manifold(3)")
        .unwrap();
    assert!(even.euler_ops);
}

#[test]
fn json_manifest_round_trips() {
    let json = r#"{
        "name": "square_torus",
        "coordinates": ["x", "y"],
        "charts": [{"name": "main", "intervals": [
            {"lo": 0, "hi": 1, "periodic": true}, {"lo": 0, "hi": 1, "periodic": true}], "kind": "affine"}],
        "transitions": [],
        "metric": {"main": [["1", "0"], ["0", "1"]]},
        "flat_affine": true,
        "cover": [{"chart": "main", "grid": [10, 10]}],
        "volume": 1.0,
        "euler_characteristic": 0
    }"#;
    let spec = ManifestSpec::from_json(json).unwrap();
    let m = spec.build().unwrap();
    assert!((m.volume().unwrap() - 1.0).abs() < 1e-12);
    let again = ManifestSpec::from_json(&spec.to_json()).unwrap();
    assert_eq!(again, spec);
}
