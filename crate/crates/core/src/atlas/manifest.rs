//! JSON manifests describing custom manifolds.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    AffineMap, Atlas, Chart, ChartId, ChartedManifold, CoordinateKind, CoverPiece, Domain,
    Interval, PieceMap, QuadratureCover, Region, TransitionMap,
};
use crate::connection::{
    ChristoffelField, ConnectionProvenance, ConnectionSource, ExprConnection, ExprMetric,
    MetricField, MetricProvenance, MetricSource,
};
use crate::error::{GeometryError, Result};
use crate::expr::Expr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub name: String,
    pub intervals: Vec<IntervalSpec>,
    #[serde(default = "default_kind")]
    pub kind: CoordinateKind,
    /// Optional radial restriction `inner ≤ |x| < outer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell: Option<(f64, f64)>,
}

fn default_kind() -> CoordinateKind {
    CoordinateKind::General
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub name: String,
    pub from: String,
    pub to: String,
    /// Row-major square matrix.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    #[serde(default = "default_region")]
    pub overlap: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<String>,
}

fn default_region() -> Region {
    Region::Everywhere
}

/// One Christoffel coefficient `Γ^k_ij` as an expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChristoffelEntrySpec {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub expr: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverPieceSpec {
    pub chart: String,
    #[serde(default = "default_weight")]
    pub weight: String,
    pub grid: Vec<usize>,
    #[serde(default = "default_orientation")]
    pub orientation: i8,
}

fn default_weight() -> String {
    "1".into()
}

fn default_orientation() -> i8 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSpec {
    pub name: String,
    /// Coordinate names used by every expression.
    pub coordinates: Vec<String>,
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    /// Metric entries per chart name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<BTreeMap<String, Vec<Vec<String>>>>,
    /// Christoffel entries per chart name; unlisted coefficients are zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub christoffel: Option<BTreeMap<String, Vec<ChristoffelEntrySpec>>>,
    #[serde(default)]
    pub flat_affine: bool,
    #[serde(default)]
    pub cover: Vec<CoverPieceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_characteristic: Option<i64>,
}

impl ManifestSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GeometryError::Manifest(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    fn chart_index(&self, name: &str) -> Result<usize> {
        self.charts
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| GeometryError::Manifest(format!("unknown chart `{name}`")))
    }

    pub fn build(&self) -> Result<ChartedManifold> {
        let n = self.coordinates.len();
        if n == 0 {
            return Err(GeometryError::InvalidDimension(0));
        }
        let charts = self
            .charts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if c.intervals.len() != n {
                    return Err(GeometryError::DimensionMismatch {
                        expected: n,
                        got: c.intervals.len(),
                    });
                }
                let intervals = c
                    .intervals
                    .iter()
                    .map(|iv| {
                        if iv.periodic {
                            Interval::periodic(iv.lo, iv.hi)
                        } else {
                            Interval::open(iv.lo, iv.hi)
                        }
                    })
                    .collect();
                Chart::new(
                    ChartId(i),
                    c.name.clone(),
                    Domain {
                        intervals,
                        shell: c.shell,
                    },
                    c.kind,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let mut transitions = Vec::with_capacity(self.transitions.len());
        for t in &self.transitions {
            if t.matrix.len() != n || t.matrix.iter().any(|r| r.len() != n) || t.offset.len() != n {
                return Err(GeometryError::Manifest(format!(
                    "transition `{}` must have an {n}x{n} matrix and an offset of length {n}",
                    t.name
                )));
            }
            let matrix = DMatrix::from_fn(n, n, |r, c| t.matrix[r][c]);
            let inverse = match &t.inverse {
                Some(name) => Some(
                    self.transitions
                        .iter()
                        .position(|o| &o.name == name)
                        .ok_or_else(|| {
                            GeometryError::Manifest(format!("unknown inverse `{name}`"))
                        })?,
                ),
                None => None,
            };
            transitions.push(TransitionMap {
                inverse,
                ..TransitionMap::affine(
                    t.name.clone(),
                    ChartId(self.chart_index(&t.from)?),
                    ChartId(self.chart_index(&t.to)?),
                    AffineMap {
                        matrix,
                        offset: DVector::from_vec(t.offset.clone()),
                    },
                    t.overlap.clone(),
                )
            });
        }
        let atlas = Arc::new(Atlas::new(charts, transitions)?);
        if self.flat_affine && !atlas.is_affine() {
            return Err(GeometryError::NonAffineChart(
                "manifest declares flat_affine but has general charts".into(),
            ));
        }

        let mut manifold = ChartedManifold::new(self.name.clone(), atlas.clone());
        manifold.flat_affine = self.flat_affine;
        manifold.known_volume = self.volume;
        manifold.euler_characteristic = self.euler_characteristic;

        if let Some(metric) = &self.metric {
            let sources = self
                .charts
                .iter()
                .map(|c| {
                    let entries = metric.get(&c.name).ok_or_else(|| {
                        GeometryError::Manifest(format!("no metric for chart `{}`", c.name))
                    })?;
                    Ok(Arc::new(ExprMetric::parse(entries, &self.coordinates)?)
                        as Arc<dyn MetricSource>)
                })
                .collect::<Result<Vec<_>>>()?;
            manifold.metric = Some(MetricField::new(
                format!("{}:metric", self.name),
                atlas.clone(),
                sources,
                MetricProvenance::Manifest,
            )?);
        }

        if let Some(christoffel) = &self.christoffel {
            let mut symmetric = true;
            let sources = self
                .charts
                .iter()
                .map(|c| {
                    let entries = christoffel.get(&c.name).map(Vec::as_slice).unwrap_or(&[]);
                    let src = ExprConnection::parse(entries, &self.coordinates)?;
                    symmetric &= entries_symmetric(entries);
                    Ok(Arc::new(src) as Arc<dyn ConnectionSource>)
                })
                .collect::<Result<Vec<_>>>()?;
            manifold.connection = Some(ChristoffelField::new(
                format!("{}:connection", self.name),
                atlas.clone(),
                sources,
                symmetric,
                ConnectionProvenance::Custom,
            )?);
        }

        if !self.cover.is_empty() {
            let pieces = self
                .cover
                .iter()
                .map(|p| {
                    let chart = ChartId(self.chart_index(&p.chart)?);
                    if p.grid.len() != n || p.grid.iter().any(|&g| g < 2) {
                        return Err(GeometryError::Manifest(format!(
                            "cover piece on `{}` needs {n} grid sizes of at least 2",
                            p.chart
                        )));
                    }
                    if p.orientation != 1 && p.orientation != -1 {
                        return Err(GeometryError::Manifest(
                            "orientation must be +1 or -1".into(),
                        ));
                    }
                    let weight = Expr::parse(&p.weight, &self.coordinates)?;
                    Ok(CoverPiece {
                        chart,
                        weight: Arc::new(move |x: &[f64]| weight.eval(x)),
                        grid: p.grid.clone(),
                        map: PieceMap::Identity,
                        orientation: p.orientation,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            manifold.cover = Some(QuadratureCover::new(pieces));
        }
        Ok(manifold)
    }
}

/// Every listed `Γ^k_ij` has a textually identical `Γ^k_ji` (or sits on the diagonal).
fn entries_symmetric(entries: &[ChristoffelEntrySpec]) -> bool {
    let canon = |e: &ChristoffelEntrySpec| (e.k, e.i.min(e.j), e.i.max(e.j));
    let mut seen: BTreeMap<(usize, usize, usize), Vec<&ChristoffelEntrySpec>> = BTreeMap::new();
    for e in entries {
        seen.entry(canon(e)).or_default().push(e);
    }
    seen.values().all(|group| {
        let e = group[0];
        if e.i == e.j {
            return group.len() == 1;
        }
        group.len() == 2 && group[0].expr.trim() == group[1].expr.trim() && group[0].i != group[1].i
    })
}

/// Expression entries of a manifest-built metric, keyed by chart name.
pub fn metric_expressions(metric: &MetricField) -> Option<BTreeMap<String, Vec<Vec<String>>>> {
    metric
        .atlas()
        .charts()
        .iter()
        .map(|c| Some((c.name.clone(), metric.source(c.id).expressions()?)))
        .collect()
}

/// Expression entries of a manifest-built connection, keyed by chart name.
pub fn christoffel_expressions(
    conn: &ChristoffelField,
) -> Option<BTreeMap<String, Vec<ChristoffelEntrySpec>>> {
    conn.atlas()
        .charts()
        .iter()
        .map(|c| Some((c.name.clone(), conn.source(c.id).expressions()?)))
        .collect()
}
