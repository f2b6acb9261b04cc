//! Closed curves used by the holonomy experiments.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::curve::{in_closure, Curve, Junction, Segment};
use crate::atlas::{Atlas, ChartId, DeckGroup};
use crate::error::{GeometryError, Result};

/// A circle deformed by `r(s) = radius (1 + amplitude sin(lobes · 2πs + phase))`, lying in
/// the plane of `axes` and translated so that it starts and ends at `base`.
pub fn bump_circle(
    chart: ChartId,
    base: &[f64],
    axes: (usize, usize),
    radius: f64,
    amplitude: f64,
    lobes: u32,
    phase: f64,
) -> Curve {
    let k = lobes as f64;
    let r = move |s: f64| radius * (1.0 + amplitude * (k * TAU * s + phase).sin());
    let dr = move |s: f64| radius * amplitude * k * TAU * (k * TAU * s + phase).cos();
    // shift so that c(0) = base
    let mut center = base.to_vec();
    center[axes.0] -= r(0.0);
    let c2 = center.clone();
    let (a, b) = axes;
    let seg = Segment::new(
        chart,
        0.0,
        1.0,
        move |s| {
            let mut x = center.clone();
            let (sn, cs) = (TAU * s).sin_cos();
            x[a] += r(s) * cs;
            x[b] += r(s) * sn;
            x
        },
        move |s| {
            let mut v = vec![0.0; c2.len()];
            let (sn, cs) = (TAU * s).sin_cos();
            v[a] = dr(s) * cs - r(s) * TAU * sn;
            v[b] = dr(s) * sn + r(s) * TAU * cs;
            v
        },
    );
    Curve {
        segments: vec![seg],
        closed: true,
    }
}

/// Axis-aligned rectangle `base → base + w e_a → base + w e_a + h e_b → base + h e_b → base`.
pub fn rectangle(chart: ChartId, base: &[f64], axes: (usize, usize), w: f64, h: f64) -> Curve {
    let mut corners = vec![base.to_vec(); 4];
    corners[1][axes.0] += w;
    corners[2][axes.0] += w;
    corners[2][axes.1] += h;
    corners[3][axes.1] += h;
    let segments = (0..4)
        .map(|i| Segment::line(chart, corners[i].clone(), corners[(i + 1) % 4].clone()))
        .collect();
    Curve {
        segments,
        closed: true,
    }
}

/// Latitude circle `θ = θ₀`, `φ ∈ [0, 2π]`, on the spherical chart.
pub fn latitude_loop(atlas: &Atlas, theta0: f64) -> Result<Curve> {
    let chart = atlas
        .chart_by_name("spherical")
        .ok_or_else(|| GeometryError::InvalidParameter("atlas has no spherical chart".into()))?
        .id;
    if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
        return Err(GeometryError::InvalidParameter(format!(
            "latitude θ₀ = {theta0} must lie in (0, π)"
        )));
    }
    let seg = Segment::new(
        chart,
        0.0,
        TAU,
        move |s| vec![theta0, s],
        |_| vec![0.0, 1.0],
    );
    Curve::closed(vec![seg])
}

/// The loop of the Hopf quotient that runs once around the `S¹` factor: the ray from
/// `|x| = 1` out to `|x| = λ` along the first axis, closed by the deck transition.
/// With `inward` the loop is run backwards and closes through the inverse transition.
pub fn hopf_core_loop(atlas: &Atlas, deck: &DeckGroup, inward: bool) -> Result<Curve> {
    let (idx, _) = atlas.transition_by_name("deck_out").ok_or_else(|| {
        GeometryError::InvalidParameter("atlas has no deck_out transition".into())
    })?;
    let n = deck.ambient_dim();
    let (inner, outer) = deck.fundamental_annulus();
    let seg = Segment::new(
        ChartId(0),
        0.0,
        1.0,
        move |s| {
            let mut x = vec![0.0; n];
            x[0] = inner + s * (outer - inner);
            x
        },
        move |_| {
            let mut v = vec![0.0; n];
            v[0] = outer - inner;
            v
        },
    )
    .with_junction(Junction::Transition(idx));
    let forward = Curve::closed(vec![seg])?;
    if inward {
        forward.reversed(atlas)
    } else {
        Ok(forward)
    }
}

/// Seeded contractible loops based at `base`, alternating bump circles and rectangles,
/// each kept inside the closure of the chart domain.
pub fn seeded_loops(
    atlas: &Atlas,
    chart: ChartId,
    base: &[f64],
    count: usize,
    max_size: f64,
    seed: u64,
) -> Result<Vec<Curve>> {
    let n = atlas.dim();
    if n < 2 {
        return Err(GeometryError::InvalidDimension(n));
    }
    let domain = &atlas.chart(chart).domain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(GeometryError::InvalidParameter(
                "could not fit loops inside the chart".into(),
            ));
        }
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let size = rng.gen_range(0.1..1.0) * max_size;
        let curve = if out.len() % 2 == 0 {
            let amplitude = rng.gen_range(0.0..0.3);
            let lobes = rng.gen_range(1..5);
            let phase = rng.gen_range(0.0..TAU);
            bump_circle(chart, base, (a, b), size, amplitude, lobes, phase)
        } else {
            let w = size * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let h = rng.gen_range(0.1..1.0) * max_size * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            rectangle(chart, base, (a, b), w, h)
        };
        let inside = curve.segments.iter().all(|seg| {
            (0..=64).all(|k| {
                let s = seg.s0 + (seg.s1 - seg.s0) * k as f64 / 64.0;
                in_closure(domain, &(seg.path)(s), 0.0)
                    && domain.boundary_distance(&(seg.path)(s)) > 0.0
            })
        });
        if inside {
            out.push(curve);
        }
    }
    Ok(out)
}
