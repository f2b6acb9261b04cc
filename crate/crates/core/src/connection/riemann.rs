use super::{ChristoffelField, Differentiation};
use crate::atlas::ChartId;
use crate::error::{GeometryError, Result};

/// Coordinate curvature `R^l_{kij}`, defined by `R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct RiemannTensor {
    n: usize,
    data: Vec<f64>,
}

impl RiemannTensor {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        self.data[((l * self.n + k) * self.n + i) * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |R^l_{kij} + R^l_{ijk} + R^l_{jki}|`.
    pub fn bianchi_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let s = self.get(l, k, i, j) + self.get(l, i, j, k) + self.get(l, j, k, i);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// `R^l_{kij} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}`.
pub fn riemann(
    conn: &ChristoffelField,
    chart: ChartId,
    x: &[f64],
    diff: Differentiation,
) -> Result<RiemannTensor> {
    let n = conn.dim();
    let g = conn.gamma(chart, x)?;
    let dg = conn.gamma_derivatives(chart, x, diff)?;
    let mut data = vec![0.0; n * n * n * n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dg[i].get(l, j, k) - dg[j].get(l, i, k);
                    for m in 0..n {
                        v += g.get(l, i, m) * g.get(m, j, k) - g.get(l, j, m) * g.get(m, i, k);
                    }
                    data[((l * n + k) * n + i) * n + j] = v;
                }
            }
        }
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite("curvature"));
    }
    Ok(RiemannTensor { n, data })
}
