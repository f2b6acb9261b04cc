//! Manifolds as explicit chart atlases: charts, transition maps, quadrature covers,
//! the Hopf deck group and the built-in catalog.

mod catalog;
mod chart;
mod cover;
mod deck;
mod manifest;
mod manifold;
mod transition;

pub use catalog::{builtin_manifold, catalog_entries, BuiltinParams, CatalogEntry, CatalogKey};
pub use chart::{Chart, ChartId, CoordinateKind, Domain, Interval};
pub use cover::{pairwise_sum, CoverPiece, PieceMap, QuadratureCover, WeightFn};
pub use deck::{hopf_covering_point, DeckGroup};
pub use manifest::{
    christoffel_expressions, metric_expressions, ChartSpec, ChristoffelEntrySpec, CoverPieceSpec,
    IntervalSpec, ManifestSpec, TransitionSpec,
};
pub use manifold::ChartedManifold;
pub use transition::{transition, AffineMap, CoordinateMap, Region, TransitionMap, TransitionRule};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeometryError, Result};

const MAX_HOPS: usize = 32;

/// Charts plus the transition maps between them.
#[derive(Clone, Debug)]
pub struct Atlas {
    dim: usize,
    charts: Vec<Chart>,
    transitions: Vec<TransitionMap>,
    puncture: Option<Vec<f64>>,
}

/// A point re-expressed in the chart whose domain contains it.
#[derive(Clone, Debug)]
pub struct Located {
    pub chart: ChartId,
    pub point: Vec<f64>,
    /// Product of the jacobians of the applied transitions.
    pub jacobian: DMatrix<f64>,
    pub applied: Vec<usize>,
}

impl Atlas {
    pub fn new(charts: Vec<Chart>, transitions: Vec<TransitionMap>) -> Result<Self> {
        let dim = charts
            .first()
            .map(Chart::dim)
            .ok_or(GeometryError::InvalidDimension(0))?;
        for (i, c) in charts.iter().enumerate() {
            if c.id != ChartId(i) {
                return Err(GeometryError::Manifest(format!(
                    "chart `{}` has id {} but sits at position {i}",
                    c.name, c.id.0
                )));
            }
            if c.dim() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        for t in &transitions {
            if t.from.0 >= charts.len() || t.to.0 >= charts.len() {
                return Err(GeometryError::Manifest(format!(
                    "transition `{}` references a missing chart",
                    t.name
                )));
            }
            if let TransitionRule::Affine(a) = &t.rule {
                if a.matrix.nrows() != dim || a.matrix.ncols() != dim || a.offset.len() != dim {
                    return Err(GeometryError::Manifest(format!(
                        "transition `{}` has the wrong shape",
                        t.name
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            charts,
            transitions,
            puncture: None,
        })
    }

    /// Marks a point of the developed cover (the image under composed transitions) that
    /// does not belong to the manifold, such as the origin under the Hopf shell.
    pub fn with_puncture(mut self, point: Vec<f64>) -> Self {
        self.puncture = Some(point);
        self
    }

    pub fn puncture(&self) -> Option<&[f64]> {
        self.puncture.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, id: ChartId) -> &Chart {
        &self.charts[id.0]
    }

    pub fn chart_by_name(&self, name: &str) -> Option<&Chart> {
        self.charts.iter().find(|c| c.name == name)
    }

    pub fn transitions(&self) -> &[TransitionMap] {
        &self.transitions
    }

    pub fn transition_by_name(&self, name: &str) -> Option<(usize, &TransitionMap)> {
        self.transitions
            .iter()
            .enumerate()
            .find(|(_, t)| t.name == name)
    }

    /// All charts are affine and every transition is an affine map.
    pub fn is_affine(&self) -> bool {
        self.charts.iter().all(Chart::is_affine)
            && self
                .transitions
                .iter()
                .all(|t| matches!(t.rule, TransitionRule::Affine(_)))
    }

    /// Follows transitions from `chart` until the point lands inside a chart domain.
    pub fn locate(&self, chart: ChartId, x: &[f64]) -> Option<Located> {
        let mut current = chart;
        let mut point = x.to_vec();
        let mut jacobian = DMatrix::identity(self.dim, self.dim);
        let mut applied = Vec::new();
        for _ in 0..MAX_HOPS {
            if self.charts[current.0].domain.contains(&point) {
                return Some(Located {
                    chart: current,
                    point,
                    jacobian,
                    applied,
                });
            }
            let (idx, t) =
                self.transitions.iter().enumerate().find(|(_, t)| {
                    t.from == current && !t.is_identity() && t.overlap_test(&point)
                })?;
            jacobian = t.jacobian(&point) * jacobian;
            point = t.forward(&point);
            current = t.to;
            applied.push(idx);
        }
        None
    }

    /// Seeded interior sample points spread over all charts.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<(ChartId, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let chart = &self.charts[i % self.charts.len()];
                (chart.id, chart.domain.sample(&mut rng, 0.02))
            })
            .collect()
    }

    fn sample_overlap(&self, t: &TransitionMap, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let domain = &self.charts[t.from.0].domain;
        for _ in 0..20_000 {
            let x = sample_extended(domain, rng);
            if t.overlap_test(&x) {
                return Some(x);
            }
        }
        None
    }

    /// Largest relative mismatch between each registered jacobian and central finite
    /// differences of its forward map, and the largest pointwise variation of the jacobian
    /// over the overlap for affine transitions.
    pub fn jacobian_defects(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fd_worst = 0.0_f64;
        let mut const_worst = 0.0_f64;
        for t in &self.transitions {
            let mut reference: Option<DMatrix<f64>> = None;
            for _ in 0..samples {
                let Some(x) = self.sample_overlap(t, &mut rng) else {
                    break;
                };
                let jac = t.jacobian(&x);
                let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                let step = 1e-6 * scale;
                let mut fd = DMatrix::zeros(self.dim, self.dim);
                let mut probe = x.clone();
                for m in 0..self.dim {
                    probe[m] = x[m] + step;
                    let plus = t.forward(&probe);
                    probe[m] = x[m] - step;
                    let minus = t.forward(&probe);
                    probe[m] = x[m];
                    for r in 0..self.dim {
                        fd[(r, m)] = (plus[r] - minus[r]) / (2.0 * step);
                    }
                }
                let rel = (&fd - &jac).abs().max() / jac.abs().max().max(1.0);
                fd_worst = fd_worst.max(rel);
                if matches!(t.rule, TransitionRule::Affine(_)) {
                    match &reference {
                        Some(r) => const_worst = const_worst.max((r - &jac).abs().max()),
                        None => reference = Some(jac),
                    }
                }
            }
        }
        (fd_worst, const_worst)
    }

    /// Checks `t_bc ∘ t_ab = t_ac` on sampled points for every registered triple of
    /// transitions whose overlaps chain together and whose images land in the target domain. Returns the worst defect and the
    /// number of points checked.
    pub fn cocycle_defect(&self, samples_per_triple: usize, seed: u64) -> (f64, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        let mut checked = 0;
        for ab in &self.transitions {
            for bc in self.transitions.iter().filter(|t| t.from == ab.to) {
                for ac in self
                    .transitions
                    .iter()
                    .filter(|t| t.from == ab.from && t.to == bc.to)
                {
                    let mut hits = 0;
                    for _ in 0..samples_per_triple * 50 {
                        if hits == samples_per_triple {
                            break;
                        }
                        let Some(x) = self.sample_overlap(ab, &mut rng) else {
                            break;
                        };
                        if !ac.overlap_test(&x) {
                            continue;
                        }
                        let y = ab.forward(&x);
                        if !bc.overlap_test(&y) {
                            continue;
                        }
                        let via = bc.forward(&y);
                        let direct = ac.forward(&x);
                        // a chart is injective only on its own domain
                        let target = &self.charts[bc.to.0].domain;
                        if !target.contains(&via) || !target.contains(&direct) {
                            continue;
                        }
                        let d = via
                            .iter()
                            .zip(&direct)
                            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                        worst = worst.max(d);
                        hits += 1;
                        checked += 1;
                    }
                }
            }
        }
        (worst, checked)
    }
}

/// Samples a neighbourhood of the domain that also reaches just past its faces, so that
/// overlap regions sitting outside the nominal domain get hit.
fn sample_extended(domain: &Domain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if let Some((inner, outer)) = domain.shell {
        let n = domain.dim();
        loop {
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = chart::norm(&dir);
            if !(1e-3..=1.0).contains(&len) {
                continue;
            }
            let r = rng.gen_range((inner / 4.0).ln()..(outer * 4.0).ln()).exp();
            return dir.iter().map(|d| d / len * r).collect();
        }
    }
    domain
        .intervals
        .iter()
        .map(|iv| {
            let pad = 0.25 * iv.width();
            rng.gen_range(iv.lo - pad..iv.hi + pad)
        })
        .collect()
}
