use nalgebra::DMatrix;

use super::forms::Form;
use super::frame::{orthonormal_frame, OrthonormalFrame};
use crate::atlas::ChartId;
use crate::connection::{
    compatibility_defect, riemann, ChristoffelField, ConnectionProvenance, Differentiation,
    MetricField,
};
use crate::error::{GeometryError, Result};
use crate::tensor::skew_defect;

/// Largest `|∇g|` accepted when the connection is not tagged as the metric's Levi-Civita.
pub const COMPATIBILITY_THRESHOLD: f64 = 1e-6;

/// Frame-difference step for [`connection_forms`]; balances the fourth-order truncation
/// error against roundoff for frames with `1/sin θ` growth.
pub const FRAME_FD_STEP: f64 = 2e-4;

/// The skew matrix `θ_ab` of connection 1-forms, stored by direction:
/// `theta[m][(a, b)] = θ_ab(∂_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionForms {
    pub theta: Vec<DMatrix<f64>>,
}

impl ConnectionForms {
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `θ_ab` as a 1-form.
    pub fn form(&self, a: usize, b: usize) -> Form {
        Form::one_form(&self.theta.iter().map(|t| t[(a, b)]).collect::<Vec<_>>())
    }

    pub fn skew_defect(&self) -> f64 {
        self.theta.iter().map(skew_defect).fold(0.0, f64::max)
    }
}

/// The skew matrix `Ω_ab` of curvature 2-forms, stored over the coordinate bivectors:
/// `omega[p][(a, b)] = Ω_ab(∂_i, ∂_j)` for the `p`-th pair `(i, j)`, `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureMatrix {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    pub omega: Vec<DMatrix<f64>>,
    /// The orthonormal frame the matrix is expressed in.
    pub frame: DMatrix<f64>,
}

fn coordinate_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

impl CurvatureMatrix {
    /// `Ω_ab` as a 2-form.
    pub fn form(&self, a: usize, b: usize) -> Form {
        let mut f = Form::zero(self.n);
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            f = &f + &Form::two_form(self.n, i, j, self.omega[p][(a, b)]);
        }
        f
    }

    /// `Ω_ab(∂_i, ∂_j)` for any ordered pair.
    pub fn component(&self, a: usize, b: usize, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (lo, hi, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let p = self
            .pairs
            .iter()
            .position(|&q| q == (lo, hi))
            .expect("pair present");
        sign * self.omega[p][(a, b)]
    }

    pub fn skew_defect(&self) -> f64 {
        self.omega.iter().map(skew_defect).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CurvatureMatrix) -> f64 {
        self.omega
            .iter()
            .zip(&other.omega)
            .map(|(a, b)| (a - b).abs().max())
            .fold(0.0, f64::max)
    }

    /// First Bianchi identity in the frame: `max |R_abcd + R_acdb + R_adbc|` where
    /// `R_abcd = Ω_ab(e_c, e_d)`.
    pub fn bianchi_defect(&self) -> f64 {
        let n = self.n;
        let f = &self.frame;
        let mut r = vec![0.0; n * n * n * n];
        let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut v = 0.0;
                        for i in 0..n {
                            for j in 0..n {
                                v += self.component(a, b, i, j) * f[(i, c)] * f[(j, d)];
                            }
                        }
                        r[idx(a, b, c, d)] = v;
                    }
                }
            }
        }
        let mut worst = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let s = r[idx(a, b, c, d)] + r[idx(a, c, d, b)] + r[idx(a, d, b, c)];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

fn ensure_compatible(
    conn: &ChristoffelField,
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
) -> Result<()> {
    if let ConnectionProvenance::LeviCivita { metric: id } = conn.provenance() {
        if id == metric.id() {
            return Ok(());
        }
    }
    let defect = compatibility_defect(
        conn,
        metric,
        chart,
        x,
        Differentiation::preferred_for(metric),
    )?;
    if defect > COMPATIBILITY_THRESHOLD {
        return Err(GeometryError::IncompatibleConnection(defect));
    }
    Ok(())
}

/// Fourth-order central difference of a matrix-valued function along axis `m`.
fn matrix_derivative<F>(f: F, x: &[f64], m: usize, step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let mut probe = x.to_vec();
    let mut at = |offset: f64| {
        probe[m] = x[m] + offset;
        f(&probe)
    };
    let (p2, p1, m1, m2) = (at(2.0 * step)?, at(step)?, at(-step)?, at(-2.0 * step)?);
    Ok((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * step))
}

/// `θ(∂_m) = F⁻¹ (∂_m F + Γ_m F)` with `(Γ_m)^k_j = Γ^k_mj`, differentiating the frame by
/// fourth-order central differences of step `step`.
pub fn connection_forms(
    conn: &ChristoffelField,
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
    step: f64,
) -> Result<ConnectionForms> {
    let n = conn.dim();
    let frame = orthonormal_frame(metric, chart, x)?.matrix;
    let finv = frame
        .clone()
        .try_inverse()
        .ok_or(GeometryError::SingularFrame)?;
    let gamma = conn.gamma(chart, x)?;
    let mut theta = Vec::with_capacity(n);
    for m in 0..n {
        let df = matrix_derivative(
            |p| Ok(orthonormal_frame(metric, chart, p)?.matrix),
            x,
            m,
            step,
        )?;
        let gm = DMatrix::from_fn(n, n, |k, j| gamma.get(k, m, j));
        theta.push(&finv * (df + gm * &frame));
    }
    Ok(ConnectionForms { theta })
}

/// Curvature 2-forms in the positive orthonormal frame, from the coordinate Riemann
/// tensor: `Ω_ab(∂_i, ∂_j) = (F⁻¹ R_ij F)_ab` with `(R_ij)^l_k = R^l_kij`.
pub fn curvature_forms(
    conn: &ChristoffelField,
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
    diff: Differentiation,
) -> Result<CurvatureMatrix> {
    ensure_compatible(conn, metric, chart, x)?;
    let frame = orthonormal_frame(metric, chart, x)?;
    curvature_in_frame(conn, chart, x, diff, &frame)
}

pub(crate) fn curvature_in_frame(
    conn: &ChristoffelField,
    chart: ChartId,
    x: &[f64],
    diff: Differentiation,
    frame: &OrthonormalFrame,
) -> Result<CurvatureMatrix> {
    let n = conn.dim();
    let r = riemann(conn, chart, x, diff)?;
    let f = &frame.matrix;
    let finv = f
        .clone()
        .try_inverse()
        .ok_or(GeometryError::SingularFrame)?;
    let pairs = coordinate_pairs(n);
    let omega = pairs
        .iter()
        .map(|&(i, j)| {
            let rij = DMatrix::from_fn(n, n, |l, k| r.get(l, k, i, j));
            &finv * rij * f
        })
        .collect::<Vec<_>>();
    if omega.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
        return Err(GeometryError::NonFinite("curvature forms"));
    }
    Ok(CurvatureMatrix {
        n,
        pairs,
        omega,
        frame: f.clone(),
    })
}

/// Cartan's second structure equation evaluated numerically:
/// `Ω(∂_i, ∂_j) = ∂_i θ(∂_j) − ∂_j θ(∂_i) + [θ(∂_i), θ(∂_j)]`, with connection forms from
/// frame differences of step `inner` and their derivatives from differences of step `outer`,
/// both fourth-order central.
pub fn cartan_curvature(
    conn: &ChristoffelField,
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
    inner: f64,
    outer: f64,
) -> Result<CurvatureMatrix> {
    let n = conn.dim();
    let at = connection_forms(conn, metric, chart, x, inner)?;
    // dtheta[i][j] = ∂_i θ(∂_j)
    let mut dtheta: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(n);
    let mut probe = x.to_vec();
    for i in 0..n {
        let mut at_offset = |offset: f64| {
            probe[i] = x[i] + offset;
            connection_forms(conn, metric, chart, &probe, inner).map(|c| c.theta)
        };
        let (p2, p1, m1, m2) = (
            at_offset(2.0 * outer)?,
            at_offset(outer)?,
            at_offset(-outer)?,
            at_offset(-2.0 * outer)?,
        );
        probe[i] = x[i];
        dtheta.push(
            (0..n)
                .map(|j| (8.0 * (&p1[j] - &m1[j]) - (&p2[j] - &m2[j])) / (12.0 * outer))
                .collect(),
        );
    }
    let pairs = coordinate_pairs(n);
    let omega = pairs
        .iter()
        .map(|&(i, j)| {
            let (ti, tj) = (&at.theta[i], &at.theta[j]);
            &dtheta[i][j] - &dtheta[j][i] + ti * tj - tj * ti
        })
        .collect();
    Ok(CurvatureMatrix {
        n,
        pairs,
        omega,
        frame: orthonormal_frame(metric, chart, x)?.matrix,
    })
}
