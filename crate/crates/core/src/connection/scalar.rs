//! Smooth positive scalar functions with analytic first and second derivatives, used as
//! conformal factors.

use nalgebra::{DMatrix, DVector};

pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> DVector<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// `1 + amplitude · Π_i sin(ω x_i)`.
#[derive(Clone, Copy, Debug)]
pub struct SineProductBump {
    pub amplitude: f64,
    pub frequency: f64,
}

impl SineProductBump {
    pub fn new(amplitude: f64) -> Self {
        Self {
            amplitude,
            frequency: 1.0,
        }
    }
}

impl ScalarField for SineProductBump {
    fn value(&self, x: &[f64]) -> f64 {
        let w = self.frequency;
        1.0 + self.amplitude * x.iter().map(|v| (w * v).sin()).product::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let w = self.frequency;
        DVector::from_fn(x.len(), |i, _| {
            self.amplitude
                * w
                * x.iter()
                    .enumerate()
                    .map(|(j, v)| if i == j { (w * v).cos() } else { (w * v).sin() })
                    .product::<f64>()
        })
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let w = self.frequency;
        DMatrix::from_fn(n, n, |i, j| {
            self.amplitude
                * w
                * w
                * x.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let a = w * v;
                        if i == j && k == i {
                            -a.sin()
                        } else if k == i || k == j {
                            a.cos()
                        } else {
                            a.sin()
                        }
                    })
                    .product::<f64>()
        })
    }
}

/// A function of the radius only, `F(|x|)`.
#[derive(Clone, Copy, Debug)]
pub enum RadialProfile {
    /// `r^{-2}`: the metric `|x|^{-2} δ` is invariant under scalings.
    InverseSquare,
    /// `r^{-2} (1 + amplitude · sin(2π log r / log λ))`, still scaling invariant.
    LogPeriodicBump { amplitude: f64, log_period: f64 },
}

impl RadialProfile {
    /// `(F, F', F'')` at radius `r`.
    fn jet(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            RadialProfile::InverseSquare => (r.powi(-2), -2.0 * r.powi(-3), 6.0 * r.powi(-4)),
            RadialProfile::LogPeriodicBump {
                amplitude,
                log_period,
            } => {
                let k = std::f64::consts::TAU / log_period;
                let q = k * r.ln();
                // b(r) = 1 + a sin(k ln r)
                let b = 1.0 + amplitude * q.sin();
                let b1 = amplitude * k * q.cos() / r;
                let b2 = -amplitude * k * (k * q.sin() + q.cos()) / (r * r);
                let (p, p1, p2) = (r.powi(-2), -2.0 * r.powi(-3), 6.0 * r.powi(-4));
                (p * b, p1 * b + p * b1, p2 * b + 2.0 * p1 * b1 + p * b2)
            }
        }
    }
}

impl ScalarField for RadialProfile {
    fn value(&self, x: &[f64]) -> f64 {
        self.jet(radius(x)).0
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let r = radius(x);
        let (_, f1, _) = self.jet(r);
        DVector::from_fn(x.len(), |i, _| f1 * x[i] / r)
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let r = radius(x);
        let (_, f1, f2) = self.jet(r);
        let n = x.len();
        DMatrix::from_fn(n, n, |i, j| {
            let xx = x[i] * x[j] / (r * r);
            let delta = if i == j { 1.0 } else { 0.0 };
            f2 * xx + f1 / r * (delta - xx)
        })
    }
}

/// `1 + amplitude · exp(-|p(θ,φ) - center|² / width²)` on the unit sphere in spherical
/// coordinates `(θ, φ)`, where `p` is the standard embedding into ℝ³.
#[derive(Clone, Copy, Debug)]
pub struct SphereBump {
    pub center: [f64; 3],
    pub amplitude: f64,
    pub width: f64,
}

type Partials = [[f64; 3]; 2];

impl SphereBump {
    /// Point, first and second partials of the embedding.
    fn embedding(x: &[f64]) -> ([f64; 3], Partials, [Partials; 2]) {
        let (st, ct) = x[0].sin_cos();
        let (sp, cp) = x[1].sin_cos();
        let p = [st * cp, st * sp, ct];
        let d = [[ct * cp, ct * sp, -st], [-st * sp, st * cp, 0.0]];
        let dd = [
            [[-st * cp, -st * sp, -ct], [-ct * sp, ct * cp, 0.0]],
            [[-ct * sp, ct * cp, 0.0], [-st * cp, -st * sp, 0.0]],
        ];
        (p, d, dd)
    }

    /// Value, ambient gradient and ambient hessian of the bump at `p`.
    fn ambient(&self, p: &[f64; 3]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let w2 = self.width * self.width;
        let diff = [
            p[0] - self.center[0],
            p[1] - self.center[1],
            p[2] - self.center[2],
        ];
        let dist2: f64 = diff.iter().map(|v| v * v).sum();
        let e = self.amplitude * (-dist2 / w2).exp();
        let grad = diff.map(|d| -2.0 * d / w2 * e);
        let mut hess = [[0.0; 3]; 3];
        for (i, row) in hess.iter_mut().enumerate() {
            for (j, h) in row.iter_mut().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                *h = e * (4.0 * diff[i] * diff[j] / (w2 * w2) - 2.0 * delta / w2);
            }
        }
        (1.0 + e, grad, hess)
    }
}

impl ScalarField for SphereBump {
    fn value(&self, x: &[f64]) -> f64 {
        let (p, _, _) = Self::embedding(x);
        self.ambient(&p).0
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let (p, d, _) = Self::embedding(x);
        let (_, g, _) = self.ambient(&p);
        DVector::from_fn(2, |i, _| (0..3).map(|a| g[a] * d[i][a]).sum())
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let (p, d, dd) = Self::embedding(x);
        let (_, g, h) = self.ambient(&p);
        DMatrix::from_fn(2, 2, |i, j| {
            let mut acc = 0.0;
            for a in 0..3 {
                acc += g[a] * dd[i][j][a];
                for b in 0..3 {
                    acc += d[i][a] * h[a][b] * d[j][b];
                }
            }
            acc
        })
    }
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference oracle for gradient and hessian.
    fn check(field: &dyn ScalarField, x: &[f64]) {
        let n = x.len();
        let h = 1e-5;
        let g = field.gradient(x);
        let hs = field.hessian(x);
        for i in 0..n {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            let fd = (field.value(&p) - field.value(&m)) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() < 1e-7 * (1.0 + g[i].abs()),
                "grad {i}: {fd} vs {}",
                g[i]
            );
            let gp = field.gradient(&p);
            let gm = field.gradient(&m);
            for j in 0..n {
                let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                assert!(
                    (fd2 - hs[(i, j)]).abs() < 1e-6 * (1.0 + hs[(i, j)].abs()),
                    "hess {i}{j}: {fd2} vs {}",
                    hs[(i, j)]
                );
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        check(&SineProductBump::new(0.3), &[0.4, 2.1]);
        check(
            &SineProductBump {
                amplitude: 0.3,
                frequency: 2.0,
            },
            &[0.4, 2.1, -1.0],
        );
        check(&RadialProfile::InverseSquare, &[1.3, -0.7]);
        check(
            &RadialProfile::LogPeriodicBump {
                amplitude: 0.2,
                log_period: 2.0,
            },
            &[1.3, -0.7, 0.2],
        );
        check(
            &SphereBump {
                center: [0.0, 0.6, 0.8],
                amplitude: 0.5,
                width: 0.7,
            },
            &[1.1, 2.3],
        );
    }
}
