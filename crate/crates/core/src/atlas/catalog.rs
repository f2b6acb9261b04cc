use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    AffineMap, Atlas, Chart, ChartId, ChartedManifold, CoordinateKind, CoverPiece, DeckGroup,
    Domain, Interval, PieceMap, QuadratureCover, Region, TransitionMap,
};
use crate::connection::{
    ConformalMetric, ConstantMetric, MetricField, MetricSource, RadialProfile, RoundSphereMetric,
    SineProductBump, SphereBump,
};
use crate::error::{GeometryError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalogKey {
    FlatTorus2d,
    RoundSphere2d,
    HopfTorus2d,
    /// `Sⁿ × S¹` as a quotient of `ℝ^{n+1} \ {0}`.
    HopfManifold(usize),
}

impl FromStr for CatalogKey {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "flat_torus_2d" => return Ok(CatalogKey::FlatTorus2d),
            "round_sphere_2d" => return Ok(CatalogKey::RoundSphere2d),
            "hopf_torus_2d" => return Ok(CatalogKey::HopfTorus2d),
            _ => {}
        }
        if let Some(arg) = s
            .strip_prefix("hopf_manifold(")
            .and_then(|rest| rest.strip_suffix(')'))
        {
            let n: i64 = arg
                .trim()
                .parse()
                .map_err(|_| GeometryError::UnknownManifold(s.to_string()))?;
            if n <= 0 {
                return Err(GeometryError::InvalidDimension(n.max(0) as usize));
            }
            return Ok(CatalogKey::HopfManifold(n as usize));
        }
        Err(GeometryError::UnknownManifold(s.to_string()))
    }
}

impl fmt::Display for CatalogKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogKey::FlatTorus2d => f.write_str("flat_torus_2d"),
            CatalogKey::RoundSphere2d => f.write_str("round_sphere_2d"),
            CatalogKey::HopfTorus2d => f.write_str("hopf_torus_2d"),
            CatalogKey::HopfManifold(n) => write!(f, "hopf_manifold({n})"),
        }
    }
}

/// Size settings for catalog entries; unset fields take the defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuiltinParams {
    /// `n` for `hopf_manifold` when the key carries no argument.
    pub dimension: Option<usize>,
    /// Torus side length (default 2π).
    pub side: Option<f64>,
    /// Sphere radius (default 1).
    pub radius: Option<f64>,
    /// Hopf deck scalar λ (default e^{2π}).
    pub deck_scalar: Option<f64>,
}

/// Builds a catalog manifold by key.
pub fn builtin_manifold(name: &str, params: &BuiltinParams) -> Result<ChartedManifold> {
    let key = match name.trim() {
        "hopf_manifold" => {
            let n = params.dimension.unwrap_or(1);
            if n == 0 {
                return Err(GeometryError::InvalidDimension(0));
            }
            CatalogKey::HopfManifold(n)
        }
        other => other.parse()?,
    };
    match key {
        CatalogKey::FlatTorus2d => flat_torus(params.side.unwrap_or(TAU)),
        CatalogKey::RoundSphere2d => round_sphere(params.radius.unwrap_or(1.0)),
        CatalogKey::HopfTorus2d => hopf(1, params.deck_scalar, "hopf_torus_2d".into()),
        CatalogKey::HopfManifold(n) => hopf(n, params.deck_scalar, key.to_string()),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(GeometryError::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Translations by ±period along each periodic axis, registered as inverse pairs,
/// followed by the identity transition of the chart.
fn periodic_transitions(chart: &Chart) -> Vec<TransitionMap> {
    let n = chart.dim();
    let mut out = Vec::new();
    for (axis, iv) in chart.domain.intervals.iter().enumerate() {
        if !iv.periodic {
            continue;
        }
        let mut shift = vec![0.0; n];
        shift[axis] = -iv.width();
        let down = TransitionMap {
            inverse: Some(out.len() + 1),
            ..TransitionMap::affine(
                format!("wrap_{axis}_down"),
                chart.id,
                chart.id,
                AffineMap::translation(shift.clone()),
                Region::AxisAtLeast { axis, bound: iv.hi },
            )
        };
        shift[axis] = iv.width();
        let up = TransitionMap {
            inverse: Some(out.len()),
            ..TransitionMap::affine(
                format!("wrap_{axis}_up"),
                chart.id,
                chart.id,
                AffineMap::translation(shift),
                Region::AxisBelow { axis, bound: iv.lo },
            )
        };
        out.push(down);
        out.push(up);
    }
    let idx = out.len();
    out.push(TransitionMap {
        inverse: Some(idx),
        ..TransitionMap::affine(
            "identity",
            chart.id,
            chart.id,
            AffineMap::identity(n),
            Region::Everywhere,
        )
    });
    out
}

fn flat_torus(side: f64) -> Result<ChartedManifold> {
    let side = positive("side", side)?;
    let chart = Chart::new(
        ChartId(0),
        "torus",
        Domain::boxed(vec![Interval::periodic(0.0, side); 2]),
        CoordinateKind::Affine,
    )?;
    let transitions = periodic_transitions(&chart);
    let atlas = Arc::new(Atlas::new(vec![chart], transitions)?);
    let flat: Arc<dyn MetricSource> = Arc::new(ConstantMetric(DMatrix::identity(2, 2)));
    let bumpy: Arc<dyn MetricSource> = Arc::new(ConformalMetric {
        factor: Arc::new(SineProductBump {
            amplitude: 0.3,
            frequency: TAU / side,
        }),
        base: flat.clone(),
    });
    let mut m = ChartedManifold::new("flat_torus_2d", atlas.clone());
    m.cover = Some(QuadratureCover::new(vec![CoverPiece::unit(
        ChartId(0),
        vec![200, 200],
    )]));
    m.flat_affine = true;
    m.metric = Some(MetricField::uniform("euclidean", atlas.clone(), flat)?);
    m.companion_metric = Some(MetricField::uniform("sine_bump", atlas, bumpy)?);
    m.known_volume = Some(side * side);
    m.euler_characteristic = Some(0);
    Ok(m)
}

fn round_sphere(radius: f64) -> Result<ChartedManifold> {
    let radius = positive("radius", radius)?;
    // the poles are left out of the chart; they have measure zero
    let chart = Chart::new(
        ChartId(0),
        "spherical",
        Domain::boxed(vec![Interval::open(0.0, PI), Interval::periodic(0.0, TAU)]),
        CoordinateKind::General,
    )?;
    let transitions = periodic_transitions(&chart);
    let atlas = Arc::new(Atlas::new(vec![chart], transitions)?);
    let round: Arc<dyn MetricSource> = Arc::new(RoundSphereMetric { radius });
    let bumped: Arc<dyn MetricSource> = Arc::new(ConformalMetric {
        factor: Arc::new(SphereBump {
            center: [0.0, 0.6, 0.8],
            amplitude: 0.5,
            width: 0.7,
        }),
        base: round.clone(),
    });
    let mut m = ChartedManifold::new("round_sphere_2d", atlas.clone());
    m.cover = Some(QuadratureCover::new(vec![CoverPiece::unit(
        ChartId(0),
        vec![400, 200],
    )]));
    m.metric = Some(MetricField::uniform("round", atlas.clone(), round)?);
    m.companion_metric = Some(MetricField::uniform("round_bump", atlas, bumped)?);
    m.known_volume = Some(4.0 * PI * radius * radius);
    m.euler_characteristic = Some(2);
    Ok(m)
}

/// Area of the unit sphere `S^{m-1}` in `ℝ^m`.
fn unit_sphere_area(m: usize) -> f64 {
    // |S^{m-1}| = 2 π^{m/2} / Γ(m/2), via the recursion |S^{k+1}| = 2π |S^{k-1}| / k
    match m {
        1 => 2.0,
        2 => TAU,
        _ => TAU * unit_sphere_area(m - 2) / (m as f64 - 2.0),
    }
}

fn hopf(n: usize, deck_scalar: Option<f64>, name: String) -> Result<ChartedManifold> {
    if n == 0 {
        return Err(GeometryError::InvalidDimension(0));
    }
    let m = n + 1;
    let deck = match deck_scalar {
        Some(l) => DeckGroup::new(l, m)?,
        None => DeckGroup::standard(m),
    };
    let (inner, outer) = deck.fundamental_annulus();
    let chart = Chart::new(
        ChartId(0),
        "shell",
        Domain {
            intervals: vec![Interval::open(-outer, outer); m],
            shell: Some((inner, outer)),
        },
        CoordinateKind::Affine,
    )?;
    let lambda = deck.scalar();
    let transitions = vec![
        TransitionMap {
            inverse: Some(1),
            ..TransitionMap::affine(
                "deck_out",
                ChartId(0),
                ChartId(0),
                AffineMap::scaling(m, 1.0 / lambda),
                Region::RadiusAtLeast(outer),
            )
        },
        TransitionMap {
            inverse: Some(0),
            ..TransitionMap::affine(
                "deck_in",
                ChartId(0),
                ChartId(0),
                AffineMap::scaling(m, lambda),
                Region::RadiusBelow(inner),
            )
        },
        TransitionMap {
            inverse: Some(2),
            ..TransitionMap::affine(
                "identity",
                ChartId(0),
                ChartId(0),
                AffineMap::identity(m),
                Region::Everywhere,
            )
        },
    ];
    let atlas = Arc::new(Atlas::new(vec![chart], transitions)?.with_puncture(vec![0.0; m]));
    let euclid: Arc<dyn MetricSource> = Arc::new(ConstantMetric(DMatrix::identity(m, m)));
    let cylinder: Arc<dyn MetricSource> = Arc::new(ConformalMetric {
        factor: Arc::new(RadialProfile::InverseSquare),
        base: euclid.clone(),
    });
    let bumped: Arc<dyn MetricSource> = Arc::new(ConformalMetric {
        factor: Arc::new(RadialProfile::LogPeriodicBump {
            amplitude: 0.3,
            log_period: lambda.ln(),
        }),
        base: euclid,
    });
    let base = match m {
        2 => 200,
        3 => 48,
        _ => 24,
    };
    // polar axis k carries sin^(m−1−k) in the volume element; the midpoint rule is exact
    // for even powers but only second order for odd ones, so those axes are refined
    let grid: Vec<usize> = (0..m)
        .map(|k| {
            let odd_power = k >= 1 && k + 1 < m && (m - 1 - k) % 2 == 1;
            if odd_power {
                4 * base
            } else {
                base
            }
        })
        .collect();
    let mut manifold = ChartedManifold::new(name, atlas.clone());
    manifold.cover = Some(QuadratureCover::new(vec![CoverPiece {
        map: PieceMap::LogSpherical { inner, outer },
        ..CoverPiece::unit(ChartId(0), grid)
    }]));
    manifold.flat_affine = true;
    manifold.metric = Some(MetricField::uniform(
        "scale_invariant",
        atlas.clone(),
        cylinder,
    )?);
    manifold.companion_metric = Some(MetricField::uniform("scale_invariant_bump", atlas, bumped)?);
    manifold.deck = Some(deck);
    manifold.known_volume = Some(lambda.ln() * unit_sphere_area(m));
    manifold.euler_characteristic = Some(0);
    Ok(manifold)
}

/// One row of the catalog listing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub key: String,
    pub dimension: usize,
    pub affine: bool,
    pub metric: bool,
    pub euler_ops: bool,
    pub note: String,
}

/// Catalog rows sorted by key. `hopf_dims` lists the `n` of the `hopf_manifold(n)` rows.
pub fn catalog_entries(hopf_dims: &[usize]) -> Vec<CatalogEntry> {
    let mut out = vec![
        CatalogEntry {
            key: "flat_torus_2d".into(),
            dimension: 2,
            affine: true,
            metric: true,
            euler_ops: true,
            note: "single periodic chart [0,2π)²".into(),
        },
        CatalogEntry {
            key: "round_sphere_2d".into(),
            dimension: 2,
            affine: false,
            metric: true,
            euler_ops: true,
            note: "spherical chart (θ,φ), poles excluded".into(),
        },
        CatalogEntry {
            key: "hopf_torus_2d".into(),
            dimension: 2,
            affine: true,
            metric: true,
            euler_ops: true,
            note: "shell 1 ≤ |x| < e^{2π} in ℝ² with deck rescaling".into(),
        },
    ];
    for &n in hopf_dims {
        let dim = n + 1;
        let even = dim % 2 == 0;
        out.push(CatalogEntry {
            key: format!("hopf_manifold({n})"),
            dimension: dim,
            affine: true,
            metric: true,
            euler_ops: even,
            note: if even {
                format!("S^{n} × S^1 as a shell in ℝ^{dim}")
            } else {
                format!("odd total dimension: Euler ops disabled ({n}+1 = {dim})")
            },
        });
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys() {
        assert_eq!(
            "flat_torus_2d".parse::<CatalogKey>().unwrap(),
            CatalogKey::FlatTorus2d
        );
        assert_eq!(
            "hopf_manifold(3)".parse::<CatalogKey>().unwrap(),
            CatalogKey::HopfManifold(3)
        );
        assert_eq!(
            "hopf_manifold(0)".parse::<CatalogKey>(),
            Err(GeometryError::InvalidDimension(0))
        );
        assert!(matches!(
            "klein_bottle".parse::<CatalogKey>(),
            Err(GeometryError::UnknownManifold(_))
        ));
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = BuiltinParams {
            deck_scalar: Some(1.0),
            ..Default::default()
        };
        assert_eq!(
            builtin_manifold("hopf_torus_2d", &p).unwrap_err(),
            GeometryError::InvalidDeckScalar(1.0)
        );
        let p = BuiltinParams {
            dimension: Some(0),
            ..Default::default()
        };
        assert_eq!(
            builtin_manifold("hopf_manifold", &p).unwrap_err(),
            GeometryError::InvalidDimension(0)
        );
        let p = BuiltinParams {
            radius: Some(-1.0),
            ..Default::default()
        };
        assert!(builtin_manifold("round_sphere_2d", &p).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn catalog_is_sorted_and_flags_odd_hopf() {
        let rows = catalog_entries(&[2, 3]);
        let keys: Vec<_> = rows.iter().map(|r| r.key.as_str()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let odd = rows.iter().find(|r| r.key == "hopf_manifold(2)").unwrap();
        assert!(!odd.euler_ops);
        assert!(odd.note.contains("odd total dimension"));
        assert!(rows.iter().any(|r| r.key == "round_sphere_2d"));
    }
}
