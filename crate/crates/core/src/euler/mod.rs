//! Orthonormal frames, connection and curvature forms, the Pfaffian Euler form and its
//! integral over a quadrature cover.

mod curvature;
mod forms;
mod frame;
mod pfaffian;

pub use curvature::{
    cartan_curvature, connection_forms, curvature_forms, ConnectionForms, CurvatureMatrix,
    COMPATIBILITY_THRESHOLD, FRAME_FD_STEP,
};
pub use forms::Form;
pub use frame::{gram_schmidt, orthonormal_frame, orthonormal_frame_ordered, OrthonormalFrame};
pub use pfaffian::{pfaffian, pfaffian_scalar, SKEW_TOLERANCE};

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::atlas::{ChartId, ChartedManifold, QuadratureCover};
use crate::connection::{
    levi_civita, metric_interpolate, ChristoffelField, Differentiation, MetricField,
};
use crate::error::{GeometryError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `Pf(Ω)` as it stands.
    Raw,
    /// `Pf(Ω) / (2π)^{n/2}`, whose integral is the Euler characteristic.
    #[default]
    ChernGaussBonnet,
}

impl Normalization {
    pub fn factor(self, n: usize) -> f64 {
        match self {
            Normalization::Raw => 1.0,
            Normalization::ChernGaussBonnet => TAU.powi(-((n / 2) as i32)),
        }
    }
}

/// Coefficient of the Euler form on `dx^1 ∧ … ∧ dx^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EulerFormValue {
    pub value: f64,
    pub normalization: Normalization,
}

/// Euler form of `conn` at a point, computed in the positive orthonormal frame of `metric`.
pub fn euler_form_at(
    conn: &ChristoffelField,
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
    normalization: Normalization,
) -> Result<EulerFormValue> {
    let n = conn.dim();
    if n % 2 == 1 {
        return Err(GeometryError::OddDimension(n));
    }
    let omega = curvature_forms(conn, metric, chart, x, conn.preferred_differentiation())?;
    let raw = pfaffian(&omega)?.top();
    Ok(EulerFormValue {
        value: raw * normalization.factor(n),
        normalization,
    })
}

/// As [`euler_form_at`], in the frame obtained from Gram–Schmidt on the coordinate vectors
/// taken in `order`.
pub fn euler_form_in_frame(
    conn: &ChristoffelField,
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
    order: &[usize],
    normalization: Normalization,
) -> Result<EulerFormValue> {
    let n = conn.dim();
    if n % 2 == 1 {
        return Err(GeometryError::OddDimension(n));
    }
    // reuse the compatibility gate of curvature_forms
    curvature_forms(conn, metric, chart, x, conn.preferred_differentiation())?;
    let frame = orthonormal_frame_ordered(metric, chart, x, order)?;
    let omega =
        curvature::curvature_in_frame(conn, chart, x, conn.preferred_differentiation(), &frame)?;
    Ok(EulerFormValue {
        value: pfaffian(&omega)?.top() * normalization.factor(n),
        normalization,
    })
}

/// Integral of a top-degree density over `cover`.
pub fn integrate_form<F>(
    manifold: &ChartedManifold,
    form: F,
    cover: Option<&QuadratureCover>,
) -> Result<f64>
where
    F: Fn(ChartId, &[f64]) -> Result<f64> + Sync,
{
    let n = manifold.dim();
    if n % 2 == 1 {
        return Err(GeometryError::OddDimension(n));
    }
    let cover = match cover {
        Some(c) => c,
        None => manifold.cover()?,
    };
    cover.integrate(&manifold.atlas, form)
}

/// `∫ 𝓔(conn)` over the manifold's cover, optionally regridded.
pub fn euler_integral(
    manifold: &ChartedManifold,
    conn: &ChristoffelField,
    metric: &MetricField,
    grid: Option<&[usize]>,
    normalization: Normalization,
) -> Result<f64> {
    let regridded = grid
        .map(|g| manifold.cover().map(|c| c.with_grid(g)))
        .transpose()?;
    integrate_form(
        manifold,
        |chart, x| Ok(euler_form_at(conn, metric, chart, x, normalization)?.value),
        regridded.as_ref().or(manifold.cover.as_ref()),
    )
}

/// Writes `chart, x.., value` rows of the Euler form at the given points.
pub fn write_euler_samples<W: Write>(
    conn: &ChristoffelField,
    metric: &MetricField,
    points: &[(ChartId, Vec<f64>)],
    normalization: Normalization,
    out: W,
) -> Result<()> {
    let n = conn.dim();
    let export = |e: csv::Error| GeometryError::Manifest(format!("export failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["chart".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.push("euler".into());
    w.write_record(&header).map_err(export)?;
    for (chart, x) in points {
        let v = euler_form_at(conn, metric, *chart, x, normalization)?.value;
        let mut row = vec![chart.0.to_string()];
        row.extend(x.iter().map(|c| format!("{c:e}")));
        row.push(format!("{v:e}"));
        w.write_record(&row).map_err(export)?;
    }
    w.flush()
        .map_err(|e| GeometryError::Manifest(format!("export failed: {e}")))
}

/// Thresholds applied while building the deformation table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EulerTolerances {
    pub compatibility: f64,
    pub skewness: f64,
}

/// `∫ 𝓔(D(t))` along the metric interpolation `g(t) = t g + (1 − t) h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EulerTable {
    pub manifold: String,
    pub t_grid: Vec<f64>,
    pub integrals: Vec<f64>,
    /// `max − min` of the integrals.
    pub max_deviation: f64,
    pub grid: Vec<Vec<usize>>,
    pub tolerances: EulerTolerances,
}

/// For each `t`, integrates the normalised Euler form of the Levi-Civita connection of
/// `t g + (1 − t) h`.
pub fn euler_characteristic_experiment(
    manifold: &ChartedManifold,
    g: &MetricField,
    h: &MetricField,
    t_grid: &[f64],
    grid: Option<&[usize]>,
) -> Result<EulerTable> {
    let n = manifold.dim();
    if n % 2 == 1 {
        return Err(GeometryError::OddDimension(n));
    }
    let cover = match grid {
        Some(gr) => manifold.cover()?.with_grid(gr),
        None => manifold.cover()?.clone(),
    };
    let mut integrals = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let gt = metric_interpolate(g, h, t)?;
        let conn = levi_civita(&gt, Differentiation::preferred_for(&gt))?;
        integrals.push(integrate_form(
            manifold,
            |chart, x| {
                Ok(euler_form_at(&conn, &gt, chart, x, Normalization::ChernGaussBonnet)?.value)
            },
            Some(&cover),
        )?);
    }
    let max_deviation = match integrals.iter().copied().reduce(f64::max) {
        Some(hi) => hi - integrals.iter().copied().fold(f64::INFINITY, f64::min),
        None => 0.0,
    };
    Ok(EulerTable {
        manifold: manifold.name.clone(),
        t_grid: t_grid.to_vec(),
        integrals,
        max_deviation,
        grid: cover.pieces.iter().map(|p| p.grid.clone()).collect(),
        tolerances: EulerTolerances {
            compatibility: COMPATIBILITY_THRESHOLD,
            skewness: SKEW_TOLERANCE,
        },
    })
}
