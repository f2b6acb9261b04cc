//! Adaptive RK4 with step doubling.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

pub const MIN_STEP: f64 = 1e-12;

/// Error control for the transport and geodesic integrators.
///
/// A step of length `h` is accepted when every component of the local error estimate
/// satisfies `|δ_i| ≤ h (abs + rel |y_i|)`, so the tolerance is an error per unit
/// parameter, floored at a few ulps of `y_i`. `max_step` bounds the chart-coordinate displacement of a single step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeTolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        Self {
            rel: 1e-9,
            abs: 1e-12,
            max_step: 1e-2,
        }
    }
}

impl From<f64> for OdeTolerance {
    fn from(rel: f64) -> Self {
        Self {
            rel,
            abs: rel * 1e-3,
            ..Self::default()
        }
    }
}

impl OdeTolerance {
    pub fn with_max_step(self, max_step: f64) -> Self {
        Self { max_step, ..self }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.rel) && ok(self.max_step) && self.abs.is_finite() && self.abs >= 0.0 {
            Ok(())
        } else {
            Err(GeometryError::InvalidParameter(format!(
                "bad tolerance {self:?}"
            )))
        }
    }
}

/// Right-hand side `dy/ds = f(s, y)`, written into the output slice.
pub(crate) trait Rhs {
    fn eval(&self, s: f64, y: &[f64], out: &mut [f64]) -> Result<()>;
}

impl<F> Rhs for F
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn eval(&self, s: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        self(s, y, out)
    }
}

pub(crate) fn rk4_step(f: &impl Rhs, s: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f.eval(s, y, &mut k1)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f.eval(s + 0.5 * h, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f.eval(s + 0.5 * h, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f.eval(s + h, &tmp, &mut k4)?;
    let out: Vec<f64> = (0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite("integrator state"));
    }
    Ok(out)
}

/// One full step against two half steps. Returns the Richardson-extrapolated state and
/// the error ratio (≤ 1 means the step is acceptable).
pub(crate) fn doubled_step(
    f: &impl Rhs,
    s: f64,
    y: &[f64],
    h: f64,
    tol: &OdeTolerance,
) -> Result<(Vec<f64>, f64)> {
    let full = rk4_step(f, s, y, h)?;
    let half = rk4_step(f, s, y, 0.5 * h)?;
    let half = rk4_step(f, s + 0.5 * h, &half, 0.5 * h)?;
    let mut ratio = 0.0_f64;
    let out: Vec<f64> = half
        .iter()
        .zip(&full)
        .map(|(a, b)| {
            let delta = (a - b) / 15.0;
            // differences at the level of roundoff in the state are not truncation error
            let scale = (h.abs() * (tol.abs + tol.rel * a.abs())).max(4.0 * f64::EPSILON * a.abs());
            let r = if scale > 0.0 {
                delta.abs() / scale
            } else if delta == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            ratio = ratio.max(r);
            a + delta
        })
        .collect();
    Ok((out, ratio))
}

/// Step-size update for an error ratio, with the usual safety factor and clamps.
pub(crate) fn next_step(h: f64, ratio: f64) -> f64 {
    let factor = if ratio == 0.0 {
        4.0
    } else {
        (0.9 * ratio.powf(-0.25)).clamp(0.2, 4.0)
    };
    h * factor
}

/// Integrates from `s0` to `s1` (either direction), where `cap(s)` bounds the step.
pub(crate) fn integrate(
    f: &impl Rhs,
    s0: f64,
    s1: f64,
    y0: Vec<f64>,
    tol: &OdeTolerance,
    cap: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let span = s1 - s0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut s = s0;
    let mut y = y0;
    let mut h = cap(s).min(span.abs());
    loop {
        let remaining = (s1 - s) * dir;
        if remaining <= 0.0 {
            return Ok(y);
        }
        let limit = cap(s).min(remaining);
        h = h.min(limit);
        let last = h >= remaining;
        let (next, ratio) = doubled_step(f, s, &y, dir * h, tol)?;
        if ratio <= 1.0 {
            s = if last { s1 } else { s + dir * h };
            y = next;
            h = next_step(h, ratio);
        } else {
            h = next_step(h, ratio).min(0.5 * h);
            if h < MIN_STEP {
                return Err(GeometryError::StepUnderflow(s));
            }
        }
    }
}
