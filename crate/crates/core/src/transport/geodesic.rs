use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ode::{doubled_step, next_step, OdeTolerance, MIN_STEP};
use crate::atlas::{Atlas, ChartId, TransitionRule};
use crate::connection::ChristoffelField;
use crate::error::{GeometryError, Result};
use crate::tensor::hermite_second_derivative_weights;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicOptions {
    pub tol: OdeTolerance,
    /// Distance to a non-glued boundary below which an exit counts as an escape.
    pub boundary_epsilon: f64,
    /// Keep every `sample_stride`-th accepted step (the first and last are always kept).
    pub sample_stride: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            tol: OdeTolerance::default(),
            boundary_epsilon: 1e-9,
            sample_stride: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeodesicStatus {
    CompletedHorizon,
    /// The trajectory left the manifold at a finite parameter; `s_star` estimates where.
    Escaped {
        s_star: f64,
    },
    StepUnderflow {
        s: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub s: f64,
    pub chart: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicRecord {
    pub samples: Vec<GeodesicSample>,
    pub status: GeodesicStatus,
    /// Largest a-posteriori residual `|c'' + Γ(c', c')|` above the rounding floor, with
    /// `c''` from a Hermite interpolant through five accepted samples.
    pub max_residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub transitions_applied: usize,
}

impl GeodesicRecord {
    pub fn final_sample(&self) -> &GeodesicSample {
        self.samples
            .last()
            .expect("records hold at least the start")
    }
}

/// Composite of inverse transitions: chart coordinates back to the start chart's
/// developing image.
#[derive(Clone, Debug)]
struct Developed {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Developed {
    fn point(&self, x: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(x) + &self.b
    }

    fn vector(&self, v: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(v)
    }
}

struct Geodesic<'a> {
    conn: &'a ChristoffelField,
    chart: ChartId,
}

impl Geodesic<'_> {
    fn rhs(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = y.len() / 2;
        let (x, v) = y.split_at(n);
        let acc = self.conn.gamma(self.chart, x)?.contract(v, v);
        out[..n].copy_from_slice(v);
        for k in 0..n {
            out[n + k] = -acc[k];
        }
        Ok(())
    }

    fn step(&self, s: f64, y: &[f64], h: f64, tol: &OdeTolerance) -> Result<(Vec<f64>, f64)> {
        let f = |_s: f64, y: &[f64], out: &mut [f64]| self.rhs(y, out);
        doubled_step(&f, s, y, h, tol)
    }
}

fn compensated_add(sum: &mut f64, carry: &mut f64, x: f64) {
    let y = x - *carry;
    let t = *sum + y;
    *carry = (t - *sum) - y;
    *sum = t;
}

fn speed(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Integrates `c''^k + Γ^k_ij c'^i c'^j = 0` from `start` with initial velocity
/// `velocity` up to parameter `horizon`, crossing chart boundaries through the atlas.
pub fn geodesic_integrate(
    conn: &ChristoffelField,
    start: (ChartId, &[f64]),
    velocity: &[f64],
    horizon: f64,
    options: &GeodesicOptions,
) -> Result<GeodesicRecord> {
    let atlas: &Atlas = conn.atlas();
    let n = atlas.dim();
    let tol = options.tol;
    tol.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(GeometryError::NonPositiveHorizon);
    }
    let (chart0, x0) = start;
    if chart0.0 >= atlas.charts().len() || x0.len() != n || !atlas.chart(chart0).domain.contains(x0)
    {
        return Err(GeometryError::InvalidStart);
    }
    if velocity.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: velocity.len(),
        });
    }
    let stride = options.sample_stride.max(1);

    let mut state = Geodesic {
        conn,
        chart: chart0,
    };
    let mut y: Vec<f64> = x0.iter().chain(velocity).copied().collect();
    let mut s = 0.0;
    // compensation for the running parameter sum over long horizons
    let mut carry = 0.0;
    let mut developed = Some(Developed {
        a: DMatrix::identity(n, n),
        b: DVector::zeros(n),
    });
    let mut samples = vec![GeodesicSample {
        s,
        chart: chart0.0,
        x: x0.to_vec(),
        v: velocity.to_vec(),
    }];
    // (step since the previous entry, x, v); increments keep node spacings exact at large s
    let mut window: VecDeque<(f64, Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(5);
    window.push_back((0.0, x0.to_vec(), velocity.to_vec()));
    let mut max_residual = 0.0_f64;
    let (mut accepted, mut rejected, mut transitions) = (0usize, 0usize, 0usize);
    let mut h = tol.max_step / speed(velocity).max(f64::MIN_POSITIVE);

    let status = loop {
        let remaining = horizon - s;
        if remaining <= 0.0 {
            break GeodesicStatus::CompletedHorizon;
        }
        let cap = tol.max_step / speed(&y[n..]).max(f64::MIN_POSITIVE);
        h = h.min(cap).min(remaining);
        if h < MIN_STEP && h < remaining {
            break underflow_status(atlas, &state, &y, s, developed.as_ref(), options);
        }
        let (next, ratio) = state.step(s, &y, h, &tol)?;
        if ratio > 1.0 {
            rejected += 1;
            h = next_step(h, ratio).min(0.5 * h);
            continue;
        }
        let domain = &atlas.chart(state.chart).domain;
        let taken;
        if domain.contains(&next[..n]) {
            taken = h;
            if h >= remaining {
                s = horizon;
            } else {
                compensated_add(&mut s, &mut carry, h);
            }
            y = next;
            accepted += 1;
            h = next_step(h, ratio);
        } else {
            // bisect the step down to the boundary
            let (mut lo, mut hi) = (0.0, h);
            let mut inside = y.clone();
            let mut outside = next;
            for _ in 0..200 {
                if hi - lo <= MIN_STEP.max(1e-15 * s.abs()) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let (ym, _) = state.step(s, &y, mid, &tol)?;
                if domain.contains(&ym[..n]) {
                    lo = mid;
                    inside = ym;
                } else {
                    hi = mid;
                    outside = ym;
                }
            }
            match atlas.locate(state.chart, &outside[..n]) {
                Some(loc) => {
                    let v = &loc.jacobian * DVector::from_column_slice(&outside[n..]);
                    for &t in &loc.applied {
                        developed = match (developed.take(), &atlas.transitions()[t].rule) {
                            (Some(d), TransitionRule::Affine(m)) => {
                                m.inverse().map(|inv| Developed {
                                    b: &d.a * &inv.offset + &d.b,
                                    a: &d.a * &inv.matrix,
                                })
                            }
                            _ => None,
                        };
                    }
                    transitions += loc.applied.len();
                    state.chart = loc.chart;
                    y = loc.point.iter().chain(v.iter()).copied().collect();
                    compensated_add(&mut s, &mut carry, hi);
                    taken = hi;
                    accepted += 1;
                    window.clear();
                }
                None => {
                    let d = domain.boundary_distance(&inside[..n]);
                    y = inside;
                    compensated_add(&mut s, &mut carry, lo);
                    break if d.abs() <= options.boundary_epsilon {
                        GeodesicStatus::Escaped { s_star: s }
                    } else {
                        GeodesicStatus::StepUnderflow { s }
                    };
                }
            }
        }

        let (x, v) = y.split_at(n);
        if window.len() == 5 {
            window.pop_front();
        }
        window.push_back((taken, x.to_vec(), v.to_vec()));
        if window.len() == 5 {
            max_residual = max_residual.max(residual(&state, &window)?);
        }
        if accepted % stride == 0 {
            samples.push(GeodesicSample {
                s,
                chart: state.chart.0,
                x: x.to_vec(),
                v: v.to_vec(),
            });
        }
    };

    let last = samples.last().expect("start sample");
    if last.s != s {
        samples.push(GeodesicSample {
            s,
            chart: state.chart.0,
            x: y[..n].to_vec(),
            v: y[n..].to_vec(),
        });
    }
    Ok(GeodesicRecord {
        samples,
        status,
        max_residual,
        accepted_steps: accepted,
        rejected_steps: rejected,
        transitions_applied: transitions,
    })
}

/// Status when the step size collapses. With a puncture in the developed image, the
/// straight-line distance to it over the developed speed estimates the remaining
/// parameter; it counts as an escape when that remainder is negligible.
fn underflow_status(
    atlas: &Atlas,
    state: &Geodesic<'_>,
    y: &[f64],
    s: f64,
    developed: Option<&Developed>,
    options: &GeodesicOptions,
) -> GeodesicStatus {
    let n = atlas.dim();
    if let (Some(p), Some(d)) = (atlas.puncture(), developed) {
        let gap = d.point(&y[..n]) - DVector::from_column_slice(p);
        let speed = d.vector(&y[n..]).norm();
        if speed > 0.0 {
            let remaining = gap.norm() / speed;
            if remaining <= 1e-6 * s.abs().max(1.0) {
                return GeodesicStatus::Escaped {
                    s_star: s + remaining,
                };
            }
        }
    }
    if atlas
        .chart(state.chart)
        .domain
        .boundary_distance(&y[..n])
        .abs()
        <= options.boundary_epsilon
    {
        return GeodesicStatus::Escaped { s_star: s };
    }
    GeodesicStatus::StepUnderflow { s }
}

/// `max_k |c''^k + Γ^k_ij c'^i c'^j|` at the middle of a five-sample window, with `c''`
/// from the Hermite interpolant of the sampled positions and velocities, less the
/// rounding floor of that stencil.
fn residual(state: &Geodesic<'_>, window: &VecDeque<(f64, Vec<f64>, Vec<f64>)>) -> Result<f64> {
    let gaps: Vec<f64> = window.iter().skip(1).map(|w| w.0).collect();
    let nodes: Vec<f64> = std::iter::once(0.0)
        .chain(gaps.iter().scan(0.0, |t, g| {
            *t += g;
            Some(*t)
        }))
        .collect();
    let widest = gaps.iter().copied().fold(0.0_f64, f64::max);
    // near-coincident nodes (a short final step, a step-size collapse) make the
    // interpolant ill-conditioned; such windows are not evaluated
    if gaps.iter().any(|&g| g <= 0.05 * widest) {
        return Ok(0.0);
    }
    let Some((wx, wv)) = hermite_second_derivative_weights(nodes[2], &nodes) else {
        return Ok(0.0);
    };
    let (_, x, v) = &window[2];
    let acc = state.conn.gamma(state.chart, x)?.contract(v, v);
    let mut worst = 0.0_f64;
    for k in 0..v.len() {
        // positions relative to the middle sample keep the sums well scaled
        let cdd: f64 = window
            .iter()
            .enumerate()
            .map(|(i, e)| wx[i] * (e.1[k] - x[k]) + wv[i] * e.2[k])
            .sum();
        // what rounding the stored samples alone could produce is not a residual
        let noise: f64 = window
            .iter()
            .enumerate()
            .map(|(i, e)| wx[i].abs() * e.1[k].abs().max(x[k].abs()) + wv[i].abs() * e.2[k].abs())
            .sum::<f64>()
            + acc[k].abs();
        worst = worst.max((cdd + acc[k]).abs() - 16.0 * f64::EPSILON * noise);
    }
    Ok(worst)
}
