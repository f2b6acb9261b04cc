use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::curve::{in_closure, Curve};
use super::ode::{integrate, OdeTolerance};
use crate::atlas::{Atlas, ChartId};
use crate::connection::{ChristoffelField, MetricField};
use crate::error::{GeometryError, Result};
use crate::tensor::Christoffel;

const DOMAIN_SAMPLES: usize = 64;

/// Chart-coordinate step cap turned into a parameter step cap for velocity `v`.
fn parameter_cap(max_step: f64, v: &[f64]) -> f64 {
    let speed = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if speed > 0.0 {
        max_step / speed
    } else {
        f64::INFINITY
    }
}

/// Integrates `dW/ds = −A(s) W` with `A^k_j = scale · Γ^k_ij c'^i` along the curve, where
/// `W` is an `n × m` block stored column-major. Junction jacobians are applied between
/// segments and, for closed curves, once more at the end.
fn transport_block<G>(
    atlas: &Atlas,
    gamma: G,
    curve: &Curve,
    w0: DMatrix<f64>,
    tol: &OdeTolerance,
) -> Result<DMatrix<f64>>
where
    G: Fn(ChartId, &[f64]) -> Result<Christoffel>,
{
    tol.validate()?;
    let n = atlas.dim();
    if w0.nrows() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: w0.nrows(),
        });
    }
    curve.check_in_atlas(atlas, DOMAIN_SAMPLES)?;
    let m = w0.ncols();
    let mut w = w0;
    for (idx, seg) in curve.segments.iter().enumerate() {
        let rhs = |s: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
            let x = (seg.path)(s);
            let v = (seg.velocity)(s);
            let a = gamma(seg.chart, &x)?.along(&v);
            for col in 0..m {
                for k in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += a[(k, j)] * y[col * n + j];
                    }
                    out[col * n + k] = -acc;
                }
            }
            Ok(())
        };
        let cap = |s: f64| parameter_cap(tol.max_step, &(seg.velocity)(s));
        let y = integrate(&rhs, seg.s0, seg.s1, w.as_slice().to_vec(), tol, cap)?;
        w = DMatrix::from_vec(n, m, y);
        if let Some(j) = curve.resolve_junction(atlas, idx)? {
            w = j.jacobian * w;
        }
    }
    Ok(w)
}

/// Parallel transport of `v0` along `curve`, solving `dw^k/ds = −Γ^k_ij (dc^i/ds) w^j`.
pub fn parallel_transport(
    conn: &ChristoffelField,
    curve: &Curve,
    v0: &[f64],
    tol: &OdeTolerance,
) -> Result<Vec<f64>> {
    let w0 = DMatrix::from_column_slice(v0.len(), 1, v0);
    let w = transport_block(conn.atlas(), |c, x| conn.gamma(c, x), curve, w0, tol)?;
    Ok(w.column(0).iter().copied().collect())
}

/// Parallel transport of every column of `frame`.
pub fn transport_frame(
    conn: &ChristoffelField,
    curve: &Curve,
    frame: &DMatrix<f64>,
    tol: &OdeTolerance,
) -> Result<DMatrix<f64>> {
    transport_block(
        conn.atlas(),
        |c, x| conn.gamma(c, x),
        curve,
        frame.clone(),
        tol,
    )
}

/// The parallel-transport map of a closed loop, in the base chart's coordinate frame.
#[derive(Clone, Debug)]
pub struct HolonomyElement {
    pub matrix: DMatrix<f64>,
    pub base: (ChartId, Vec<f64>),
    pub loop_curve: Curve,
}

impl HolonomyElement {
    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn is_invertible(&self) -> bool {
        self.det().abs() > 1e-10
    }

    /// Frobenius norm of `H − Id`.
    pub fn identity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        (&self.matrix - DMatrix::<f64>::identity(n, n)).norm()
    }

    /// `max |Hᵀ g H − g|` with `g` evaluated at the base point.
    pub fn orthogonality_defect(&self, metric: &MetricField) -> f64 {
        let g = metric.value(self.base.0, &self.base.1);
        (self.matrix.transpose() * &g * &self.matrix - g)
            .abs()
            .max()
    }

    /// Rotation angle in `(−π, π]` of a 2×2 holonomy read in a `g`-orthonormal frame.
    pub fn rotation_angle(&self, metric: &MetricField) -> Result<f64> {
        if self.matrix.nrows() != 2 {
            return Err(GeometryError::DimensionMismatch {
                expected: 2,
                got: self.matrix.nrows(),
            });
        }
        let f = crate::euler::gram_schmidt(&metric.value(self.base.0, &self.base.1), &[0, 1])?;
        let finv = f
            .clone()
            .try_inverse()
            .ok_or(GeometryError::SingularFrame)?;
        let r = finv * &self.matrix * f;
        Ok(r[(1, 0)].atan2(r[(0, 0)]))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.matrix)
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn require_closed(atlas: &Atlas, curve: &Curve) -> Result<()> {
    if !curve.closed {
        let gap = curve.closure_gap(atlas)?;
        return Err(GeometryError::NotClosed(gap));
    }
    match curve.junction_defect(atlas) {
        Ok(_) => Ok(()),
        Err(GeometryError::JunctionMismatch(d, _)) => Err(GeometryError::NotClosed(d)),
        Err(e) => Err(e),
    }
}

/// Holonomy of a closed loop: the transports of the coordinate basis vectors.
pub fn holonomy(
    conn: &ChristoffelField,
    loop_curve: &Curve,
    tol: &OdeTolerance,
) -> Result<HolonomyElement> {
    require_closed(conn.atlas(), loop_curve)?;
    let n = conn.dim();
    let matrix = transport_frame(conn, loop_curve, &DMatrix::identity(n, n), tol)?;
    Ok(HolonomyElement {
        matrix,
        base: loop_curve.start(),
        loop_curve: loop_curve.clone(),
    })
}

/// `(v(1), w(1))`: the transports of `a` around `gamma` for `t·Γ_D` and for `Γ_D`, inside a
/// single affine chart where the flat connection has vanishing coefficients.
pub fn transport_pair(
    gamma: &Curve,
    conn_d: &ChristoffelField,
    t: f64,
    a: &[f64],
    tol: &OdeTolerance,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::ParameterOutOfRange(t));
    }
    let atlas = conn_d.atlas();
    let (c0, start) = gamma.start();
    let (c1, end) = gamma.end();
    let gap = if c0 == c1 {
        start
            .iter()
            .zip(&end)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    } else {
        f64::INFINITY
    };
    let scale = start.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if !gamma.closed || gap > 1e-10 * scale {
        return Err(GeometryError::NotClosed(gap));
    }
    if !atlas.chart(c0).is_affine() {
        return Err(GeometryError::NonAffineChart(atlas.chart(c0).name.clone()));
    }
    for seg in &gamma.segments {
        if seg.chart != c0 {
            return Err(GeometryError::LeavesChart(format!(
                "segment in chart {}",
                seg.chart.0
            )));
        }
        let domain = &atlas.chart(c0).domain;
        for k in 0..=DOMAIN_SAMPLES {
            let s = seg.s0 + (seg.s1 - seg.s0) * k as f64 / DOMAIN_SAMPLES as f64;
            let x = (seg.path)(s);
            if !in_closure(domain, &x, 0.0) {
                return Err(GeometryError::LeavesChart(format!("at s = {s}")));
            }
        }
    }
    // inside one chart the closing junction is the identity
    let mut open = gamma.clone();
    open.closed = false;
    let a0 = DMatrix::from_column_slice(a.len(), 1, a);
    let v = transport_block(
        atlas,
        |c, x| Ok(conn_d.gamma(c, x)?.scaled(t)),
        &open,
        a0.clone(),
        tol,
    )?;
    let w = transport_block(atlas, |c, x| conn_d.gamma(c, x), &open, a0, tol)?;
    Ok((
        v.column(0).iter().copied().collect(),
        w.column(0).iter().copied().collect(),
    ))
}

/// `g(u, v)` at a point.
pub fn metric_pairing(
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> f64 {
    let g = metric.value(chart, x);
    (DVector::from_column_slice(u).transpose() * g * DVector::from_column_slice(v))[(0, 0)]
}

#[derive(Clone, Debug, Serialize)]
pub struct HolonomySummary {
    pub matrix: Vec<Vec<f64>>,
    pub det: f64,
    pub identity_defect: f64,
}

impl From<&HolonomyElement> for HolonomySummary {
    fn from(h: &HolonomyElement) -> Self {
        Self {
            matrix: h.rows(),
            det: h.det(),
            identity_defect: h.identity_defect(),
        }
    }
}
