use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::atlas::{Atlas, ChartId};
use crate::error::{GeometryError, Result};

pub type PathFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Maximum endpoint mismatch tolerated at a junction, relative to `max(1, |x|)`.
pub const JUNCTION_TOLERANCE: f64 = 1e-10;

/// How the end of one segment is glued to the start of the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Junction {
    /// Pick the registered transition that carries the end point onto the next start.
    Auto,
    /// Use the transition with this index.
    Transition(usize),
}

/// A piece of curve inside one chart: `c(s)` and `c'(s)` for `s ∈ [s0, s1]`.
#[derive(Clone)]
pub struct Segment {
    pub chart: ChartId,
    pub s0: f64,
    pub s1: f64,
    pub path: PathFn,
    pub velocity: PathFn,
    /// Gluing to the following segment (or to the first one, for the last segment of a
    /// closed curve).
    pub junction: Junction,
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Segment")
            .field("chart", &self.chart)
            .field("s0", &self.s0)
            .field("s1", &self.s1)
            .field("start", &(self.path)(self.s0))
            .field("end", &(self.path)(self.s1))
            .finish()
    }
}

impl Segment {
    pub fn new(
        chart: ChartId,
        s0: f64,
        s1: f64,
        path: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        velocity: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            chart,
            s0,
            s1,
            path: Arc::new(path),
            velocity: Arc::new(velocity),
            junction: Junction::Auto,
        }
    }

    /// Straight line from `a` to `b` over `s ∈ [0, 1]`.
    pub fn line(chart: ChartId, a: Vec<f64>, b: Vec<f64>) -> Self {
        let d: Vec<f64> = b.iter().zip(&a).map(|(q, p)| q - p).collect();
        let d2 = d.clone();
        Self::new(
            chart,
            0.0,
            1.0,
            move |s| a.iter().zip(&d).map(|(p, v)| p + s * v).collect(),
            move |_| d2.clone(),
        )
    }

    pub fn with_junction(mut self, junction: Junction) -> Self {
        self.junction = junction;
        self
    }

    pub fn start(&self) -> Vec<f64> {
        (self.path)(self.s0)
    }

    pub fn end(&self) -> Vec<f64> {
        (self.path)(self.s1)
    }
}

/// A piecewise smooth curve through an atlas.
#[derive(Clone, Debug)]
pub struct Curve {
    pub segments: Vec<Segment>,
    pub closed: bool,
}

/// A junction resolved against an atlas: the jacobian of the transition to apply at the
/// end point.
#[derive(Clone, Debug)]
pub(crate) struct ResolvedJunction {
    pub jacobian: DMatrix<f64>,
    pub mismatch: f64,
}

impl Curve {
    pub fn new(segments: Vec<Segment>, closed: bool) -> Result<Self> {
        if segments.is_empty() {
            return Err(GeometryError::InvalidParameter(
                "a curve needs at least one segment".into(),
            ));
        }
        if segments
            .iter()
            .any(|s| !(s.s0.is_finite() && s.s1.is_finite()) || s.s0 == s.s1)
        {
            return Err(GeometryError::InvalidParameter(
                "segment parameter interval is empty".into(),
            ));
        }
        Ok(Self { segments, closed })
    }

    pub fn open(segment: Segment) -> Self {
        Self {
            segments: vec![segment],
            closed: false,
        }
    }

    pub fn closed(segments: Vec<Segment>) -> Result<Self> {
        Self::new(segments, true)
    }

    pub fn start(&self) -> (ChartId, Vec<f64>) {
        let s = &self.segments[0];
        (s.chart, s.start())
    }

    pub fn end(&self) -> (ChartId, Vec<f64>) {
        let s = self.segments.last().expect("nonempty");
        (s.chart, s.end())
    }

    /// The same curve run backwards. Explicit junction transitions are replaced by their
    /// registered inverses.
    pub fn reversed(&self, atlas: &Atlas) -> Result<Self> {
        let k = self.segments.len();
        let mut out = Vec::with_capacity(k);
        for idx in (0..k).rev() {
            let seg = &self.segments[idx];
            // the junction after reversed segment `idx` is the one that used to precede it
            let before = if idx > 0 {
                Some(&self.segments[idx - 1])
            } else if self.closed {
                self.segments.last()
            } else {
                None
            };
            let junction = match before.map(|b| b.junction) {
                Some(Junction::Transition(t)) => {
                    Junction::Transition(atlas.transitions()[t].inverse.ok_or_else(|| {
                        GeometryError::InvalidParameter(format!("transition {t} has no inverse"))
                    })?)
                }
                _ => Junction::Auto,
            };
            let (s0, s1) = (seg.s0, seg.s1);
            let path = seg.path.clone();
            let vel = seg.velocity.clone();
            out.push(Segment {
                chart: seg.chart,
                s0,
                s1,
                path: Arc::new(move |s| path(s0 + s1 - s)),
                velocity: Arc::new(move |s| vel(s0 + s1 - s).into_iter().map(|v| -v).collect()),
                junction,
            });
        }
        Self::new(out, self.closed)
    }

    /// Reparametrizes every segment by `s = s0 + (s1 − s0) φ(u)`, `u ∈ [0, 1]`, where
    /// `φ` is an increasing bijection of `[0, 1]` with derivative `dphi`.
    pub fn reparametrized(
        &self,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dphi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let phi: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(phi);
        let dphi: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(dphi);
        let segments = self
            .segments
            .iter()
            .map(|seg| {
                let (s0, w) = (seg.s0, seg.s1 - seg.s0);
                let (path, vel) = (seg.path.clone(), seg.velocity.clone());
                let (p1, p2, d2) = (phi.clone(), phi.clone(), dphi.clone());
                Segment {
                    chart: seg.chart,
                    s0: 0.0,
                    s1: 1.0,
                    path: Arc::new(move |u| path(s0 + w * p1(u))),
                    velocity: Arc::new(move |u| {
                        let scale = w * d2(u);
                        vel(s0 + w * p2(u)).into_iter().map(|v| v * scale).collect()
                    }),
                    junction: seg.junction,
                }
            })
            .collect();
        Self {
            segments,
            closed: self.closed,
        }
    }

    /// Runs `self` and then `other`. Both must be closed loops with the same base point,
    /// or `self` must be open and end where `other` starts.
    pub fn then(&self, other: &Curve) -> Result<Self> {
        let mut segments = self.segments.clone();
        if let Some(last) = segments.last_mut() {
            if !self.closed {
                last.junction = Junction::Auto;
            }
        }
        segments.extend(other.segments.iter().cloned());
        Self::new(segments, self.closed && other.closed)
    }

    /// Resolves the junction after segment `idx` (wrapping to the first segment for
    /// closed curves). Returns `None` for the end of an open curve.
    pub(crate) fn resolve_junction(
        &self,
        atlas: &Atlas,
        idx: usize,
    ) -> Result<Option<ResolvedJunction>> {
        let seg = &self.segments[idx];
        let next = if idx + 1 < self.segments.len() {
            &self.segments[idx + 1]
        } else if self.closed {
            &self.segments[0]
        } else {
            return Ok(None);
        };
        let p = seg.end();
        let q = next.start();
        let scale = q.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let n = atlas.dim();
        let dist = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
        };

        let pick = match seg.junction {
            Junction::Transition(t) => {
                let tm = atlas
                    .transitions()
                    .get(t)
                    .ok_or_else(|| GeometryError::InvalidParameter(format!("no transition {t}")))?;
                if tm.from != seg.chart || tm.to != next.chart {
                    return Err(GeometryError::JunctionMismatch(f64::INFINITY, idx));
                }
                Some((Some(t), dist(&tm.forward(&p), &q)))
            }
            Junction::Auto => {
                let mut best: Option<(Option<usize>, f64)> = None;
                if seg.chart == next.chart {
                    best = Some((None, dist(&p, &q)));
                }
                for (t, tm) in atlas.transitions().iter().enumerate() {
                    if tm.from != seg.chart || tm.to != next.chart || tm.is_identity() {
                        continue;
                    }
                    let d = dist(&tm.forward(&p), &q);
                    if best.is_none_or(|(_, b)| d < b) {
                        best = Some((Some(t), d));
                    }
                }
                best
            }
        };
        let (transition, mismatch) =
            pick.ok_or(GeometryError::JunctionMismatch(f64::INFINITY, idx))?;
        if mismatch.is_nan() || mismatch > JUNCTION_TOLERANCE * scale {
            return Err(GeometryError::JunctionMismatch(mismatch, idx));
        }
        let jacobian = match transition {
            Some(t) => atlas.transitions()[t].jacobian(&p),
            None => DMatrix::identity(n, n),
        };
        Ok(Some(ResolvedJunction { jacobian, mismatch }))
    }

    /// Largest junction mismatch over all junctions.
    pub fn junction_defect(&self, atlas: &Atlas) -> Result<f64> {
        let mut worst = 0.0_f64;
        for idx in 0..self.segments.len() {
            if let Some(j) = self.resolve_junction(atlas, idx)? {
                worst = worst.max(j.mismatch);
            }
        }
        Ok(worst)
    }

    /// Largest relative mismatch between each velocity evaluator and central differences
    /// of the path, over `samples` interior points per segment.
    pub fn velocity_defect(&self, samples: usize) -> f64 {
        let mut worst = 0.0_f64;
        for seg in &self.segments {
            let w = seg.s1 - seg.s0;
            let h = 1e-6 * w.abs();
            for k in 0..samples {
                let s = seg.s0 + w * (k as f64 + 0.5) / samples as f64;
                let fd: Vec<f64> = (seg.path)(s + h)
                    .iter()
                    .zip((seg.path)(s - h))
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                let v = (seg.velocity)(s);
                let scale = v.iter().fold(1e-300_f64, |m, x| m.max(x.abs()));
                let d = fd
                    .iter()
                    .zip(&v)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                worst = worst.max(d / scale);
            }
        }
        worst
    }

    /// Checks that every segment stays in the closure of its chart domain; returns the
    /// first offending parameter value.
    pub(crate) fn check_in_atlas(&self, atlas: &Atlas, samples: usize) -> Result<()> {
        for seg in &self.segments {
            let domain = &atlas.chart(seg.chart).domain;
            for k in 0..=samples {
                let s = seg.s0 + (seg.s1 - seg.s0) * k as f64 / samples as f64;
                let x = (seg.path)(s);
                if x.len() != atlas.dim() {
                    return Err(GeometryError::DimensionMismatch {
                        expected: atlas.dim(),
                        got: x.len(),
                    });
                }
                let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                if !in_closure(domain, &x, 1e-9 * scale) {
                    return Err(GeometryError::CurveExitsAtlas(s));
                }
            }
        }
        Ok(())
    }

    /// How far the curve is from returning to its start: the worst junction mismatch for
    /// closed curves, the end-to-start distance for open ones.
    pub fn closure_gap(&self, atlas: &Atlas) -> Result<f64> {
        if !self.closed {
            let (c0, a) = self.start();
            let (c1, b) = self.end();
            if c0 != c1 {
                return Ok(f64::INFINITY);
            }
            return Ok(a
                .iter()
                .zip(&b)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())));
        }
        self.junction_defect(atlas)
    }
}

/// Point lies in the closure of the domain, up to `eps`.
pub(crate) fn in_closure(domain: &crate::atlas::Domain, x: &[f64], eps: f64) -> bool {
    if x.len() != domain.dim() {
        return false;
    }
    let boxed = domain
        .intervals
        .iter()
        .zip(x)
        .all(|(iv, v)| *v >= iv.lo - eps && *v <= iv.hi + eps);
    let shell = match domain.shell {
        Some((inner, outer)) => {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            r >= inner - eps && r <= outer + eps
        }
        None => true,
    };
    boxed && shell
}
