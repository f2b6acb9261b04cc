//! Small dense tensors and numerical differentiation helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};

/// Christoffel coefficients `Γ^k_ij` at a single point, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.n + i) * self.n + j
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[self.index(k, i, j)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        let idx = self.index(k, i, j);
        self.data[idx] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n * n);
        Self { n, data }
    }

    /// `Σ_ij Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, ui) in u.iter().enumerate() {
                let row = &self.data[(k * n + i) * n..(k * n + i + 1) * n];
                let inner: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                acc += ui * inner;
            }
            *o = acc;
        }
        out
    }

    /// The matrix `A^k_j = Σ_i Γ^k_ij u^i`, so that transport reads `w' = -A w`.
    pub fn along(&self, u: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, j| {
            (0..n).map(|i| self.get(k, i, j) * u[i]).sum::<f64>()
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `a·self + b·other`, evaluated entrywise.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    /// `max |Γ^k_ij - Γ^k_ji|`.
    pub fn torsion_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Central finite difference of a vector-valued map along every coordinate axis.
/// Entry `m` of the result is `∂_m f(x)`.
pub fn central_gradient<F>(f: F, x: &[f64], step: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for m in 0..x.len() {
        probe[m] = x[m] + step;
        let plus = f(&probe)?;
        probe[m] = x[m] - step;
        let minus = f(&probe)?;
        probe[m] = x[m];
        out.push(
            plus.iter()
                .zip(&minus)
                .map(|(p, q)| (p - q) / (2.0 * step))
                .collect(),
        );
    }
    Ok(out)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn skew_defect(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m + m.transpose()))
}

/// Spectral condition number and smallest eigenvalue of a symmetric matrix.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    (cond, min)
}

/// Solves `g x = b` for a symmetric positive definite `g`.
pub fn spd_solve(g: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| GeometryError::NotPositiveDefinite(symmetric_spectrum(g).1))?;
    Ok(chol.solve(b))
}

pub fn to_dvector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Weights of the derivative of the Lagrange interpolant through `nodes`, evaluated at `at`
/// (Fornberg's recursion, first derivative only).
pub fn derivative_weights(at: f64, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![[0.0_f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - at;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - at;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// Weights `(wf, wd)` with `p''(at) = Σ wf_i f_i + Σ wd_i f'_i` for the Hermite interpolant
/// `p` matching values and first derivatives at `nodes`. `None` if the nodes coincide.
pub fn hermite_second_derivative_weights(at: f64, nodes: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = nodes.len();
    let deg = 2 * m;
    let half = nodes.iter().map(|t| (t - at).abs()).fold(0.0_f64, f64::max);
    if half == 0.0 {
        return None;
    }
    // monomials in τ = (t − at)/half, rows: values then derivatives
    let mut a = DMatrix::zeros(deg, deg);
    for (i, t) in nodes.iter().enumerate() {
        let tau = (t - at) / half;
        for j in 0..deg {
            a[(i, j)] = tau.powi(j as i32);
            a[(m + i, j)] = if j == 0 {
                0.0
            } else {
                j as f64 * tau.powi(j as i32 - 1)
            };
        }
    }
    // p''(at) = 2 c_2 / half², so the weights solve aᵀ z = e_2
    let mut e = DVector::zeros(deg);
    e[2] = 2.0 / (half * half);
    let z = a.transpose().lu().solve(&e)?;
    let wf = z.rows(0, m).iter().copied().collect();
    // derivative data enters as half · f'
    let wd = z.rows(m, m).iter().map(|w| w * half).collect();
    Some((wf, wd))
}
