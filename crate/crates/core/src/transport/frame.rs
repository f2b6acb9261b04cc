use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::curve::{Curve, Segment};
use super::geodesic::{geodesic_integrate, GeodesicOptions};
use super::ode::OdeTolerance;
use super::parallel::{holonomy, transport_frame};
use crate::atlas::{ChartId, Domain};
use crate::connection::{riemann, ChristoffelField};
use crate::error::{GeometryError, Result};
use crate::tensor::derivative_weights;

/// Settings for [`build_parallel_frame`].
#[derive(Clone, Debug)]
pub struct FrameOptions {
    pub tol: OdeTolerance,
    /// Sample points reached from the base by the spanning tree.
    pub tree_points: usize,
    pub seed: u64,
    /// Largest curvature component tolerated at the flatness check.
    pub flatness_threshold: f64,
    /// Initial velocity and horizon of the geodesic on which `a_k(s)` is tracked.
    pub geodesic: Option<(Vec<f64>, f64)>,
    /// Number of geodesic samples at which the frame is evaluated.
    pub coefficient_samples: usize,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            tol: OdeTolerance::default(),
            tree_points: 16,
            seed: 0,
            flatness_threshold: 1e-6,
            geodesic: None,
            coefficient_samples: 40,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameReport {
    pub max_curvature: f64,
    pub tree_points: usize,
    /// Largest mismatch between the frame carried along a tree edge and along a
    /// triangle through a second tree point.
    pub tree_defect: f64,
    /// `max ‖H(loop) − Id‖` over the probe loops.
    pub path_independence_defect: f64,
    pub probe_defects: Vec<f64>,
    /// `max |a_k'(s)|` along the sampled geodesic, if one was requested.
    pub coefficient_drift: Option<f64>,
    /// The frame globalizes: both defects are at most 1e-6.
    pub certified: bool,
}

/// Path in one chart from `a` to `b`: a straight line in a box, and for shells the curve
/// with geometrically interpolated radius and linearly interpolated direction.
pub fn chart_path(chart: ChartId, domain: &Domain, a: &[f64], b: &[f64]) -> Option<Segment> {
    let Some(_) = domain.shell else {
        return Some(Segment::line(chart, a.to_vec(), b.to_vec()));
    };
    let ra = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ua: Vec<f64> = a.iter().map(|v| v / ra).collect();
    let ub: Vec<f64> = b.iter().map(|v| v / rb).collect();
    // reject nearly antipodal directions, where the interpolated direction degenerates
    let cos: f64 = ua.iter().zip(&ub).map(|(p, q)| p * q).sum();
    if cos < -0.5 {
        return None;
    }
    let log_ratio = (rb / ra).ln();
    let (ua2, ub2) = (ua.clone(), ub.clone());
    let dir = move |s: f64, ua: &[f64], ub: &[f64]| -> (Vec<f64>, f64) {
        let w: Vec<f64> = ua
            .iter()
            .zip(ub)
            .map(|(p, q)| (1.0 - s) * p + s * q)
            .collect();
        let len = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        (w, len)
    };
    Some(Segment::new(
        chart,
        0.0,
        1.0,
        move |s| {
            let r = ra * (log_ratio * s).exp();
            let (w, len) = dir(s, &ua, &ub);
            w.iter().map(|v| r * v / len).collect()
        },
        move |s| {
            let r = ra * (log_ratio * s).exp();
            let dr = r * log_ratio;
            let (w, len) = dir(s, &ua2, &ub2);
            let dw: Vec<f64> = ua2.iter().zip(&ub2).map(|(p, q)| q - p).collect();
            let nrm: Vec<f64> = w.iter().map(|v| v / len).collect();
            let along: f64 = nrm.iter().zip(&dw).map(|(p, q)| p * q).sum();
            nrm.iter()
                .zip(&dw)
                .map(|(nv, dv)| dr * nv + r * (dv - nv * along) / len)
                .collect()
        },
    ))
}

fn frame_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

/// Carries `frame0` from `base` over a seeded star tree and around the probe loops, and
/// measures how far the result is from a global parallel frame.
pub fn build_parallel_frame(
    conn: &ChristoffelField,
    base: (ChartId, &[f64]),
    frame0: &DMatrix<f64>,
    probe_loops: &[Curve],
    options: &FrameOptions,
) -> Result<FrameReport> {
    let atlas = conn.atlas();
    let n = atlas.dim();
    let (chart, p0) = base;
    if frame0.nrows() != n || frame0.ncols() != n || frame0.determinant().abs() <= 1e-12 {
        return Err(GeometryError::SingularFrame);
    }
    let domain = &atlas.chart(chart).domain;
    if !domain.contains(p0) {
        return Err(GeometryError::InvalidStart);
    }

    let diff = conn.preferred_differentiation();
    let mut max_curvature = 0.0_f64;
    for (c, x) in atlas.sample_points(32, options.seed) {
        max_curvature = max_curvature.max(riemann(conn, c, &x, diff)?.max_abs());
    }
    if max_curvature > options.flatness_threshold {
        return Err(GeometryError::NotFlat(max_curvature));
    }

    // star tree from the base
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut tree: Vec<(Vec<f64>, DMatrix<f64>)> = Vec::new();
    let mut attempts = 0;
    while tree.len() < options.tree_points && attempts < 100 * options.tree_points.max(1) {
        attempts += 1;
        let q = domain.sample(&mut rng, 0.05);
        let Some(seg) = chart_path(chart, domain, p0, &q) else {
            continue;
        };
        let edge = Curve::open(seg);
        if edge.check_in_atlas(atlas, 64).is_err() {
            continue;
        }
        let frame = transport_frame(conn, &edge, frame0, &options.tol)?;
        tree.push((q, frame));
    }

    // triangles: base → q_i → q_j against base → q_j
    let mut tree_defect = 0.0_f64;
    for i in 0..tree.len() {
        let j = (i + 1) % tree.len();
        if i == j {
            continue;
        }
        let Some(seg) = chart_path(chart, domain, &tree[i].0, &tree[j].0) else {
            continue;
        };
        let edge = Curve::open(seg);
        if edge.check_in_atlas(atlas, 64).is_err() {
            continue;
        }
        let carried = transport_frame(conn, &edge, &tree[i].1, &options.tol)?;
        tree_defect = tree_defect.max(frame_distance(&carried, &tree[j].1));
    }

    let probe_defects = probe_loops
        .iter()
        .map(|l| Ok(holonomy(conn, l, &options.tol)?.identity_defect()))
        .collect::<Result<Vec<_>>>()?;
    let path_independence_defect = probe_defects.iter().fold(0.0_f64, |m, v| m.max(*v));

    let coefficient_drift = match &options.geodesic {
        Some((velocity, horizon)) => Some(coefficient_drift(
            conn,
            (chart, p0),
            frame0,
            velocity,
            *horizon,
            options,
        )?),
        None => None,
    };

    Ok(FrameReport {
        max_curvature,
        tree_points: tree.len(),
        tree_defect,
        path_independence_defect,
        probe_defects,
        coefficient_drift,
        certified: tree_defect <= 1e-6 && path_independence_defect <= 1e-6,
    })
}

/// Along a geodesic from the base, writes `c'(s) = Σ a_k(s) E_k(c(s))` with `E` obtained
/// by transporting `frame0` from the base, and returns `max |a_k'(s)|`.
fn coefficient_drift(
    conn: &ChristoffelField,
    base: (ChartId, &[f64]),
    frame0: &DMatrix<f64>,
    velocity: &[f64],
    horizon: f64,
    options: &FrameOptions,
) -> Result<f64> {
    let atlas = conn.atlas();
    let (chart, p0) = base;
    let domain = &atlas.chart(chart).domain;
    let record = geodesic_integrate(
        conn,
        base,
        velocity,
        horizon,
        &GeodesicOptions {
            tol: options.tol,
            ..GeodesicOptions::default()
        },
    )?;
    // evenly spaced samples that stay in the base chart
    let want = options.coefficient_samples.max(5);
    let step = (record.samples.len() / want).max(1);
    let picked: Vec<_> = record
        .samples
        .iter()
        .step_by(step)
        .filter(|smp| smp.chart == chart.0)
        .collect();
    let mut coeffs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(picked.len());
    for smp in picked {
        let Some(seg) = chart_path(chart, domain, p0, &smp.x) else {
            continue;
        };
        let edge = Curve::open(seg);
        if edge.check_in_atlas(atlas, 64).is_err() {
            continue;
        }
        let e = transport_frame(conn, &edge, frame0, &options.tol)?;
        let a = e
            .lu()
            .solve(&DVector::from_column_slice(&smp.v))
            .ok_or(GeometryError::SingularFrame)?;
        coeffs.push((smp.s, a));
    }
    let mut drift = 0.0_f64;
    for w in coeffs.windows(5) {
        let nodes: Vec<f64> = w.iter().map(|(s, _)| *s).collect();
        if nodes.windows(2).any(|p| p[1] <= p[0]) {
            continue;
        }
        let weights = derivative_weights(nodes[2], &nodes);
        for k in 0..frame0.ncols() {
            let d: f64 = weights.iter().zip(w).map(|(c, (_, a))| c * a[k]).sum();
            drift = drift.max(d.abs());
        }
    }
    Ok(drift)
}
