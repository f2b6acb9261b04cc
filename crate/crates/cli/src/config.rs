use std::fmt;
use std::path::{Path, PathBuf};

use affine_atlas::atlas::ManifestSpec;
use affine_atlas::{builtin_manifold, BuiltinParams, ChartedManifold};
use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    GaussBonnet,
    Deformation,
    Holonomy,
    GeodesicProbe,
    FrameBuild,
    HolonomyMap,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.to_possible_value().expect("no skipped variants");
        f.write_str(name.get_name())
    }
}

/// Which metric of the manifold an experiment uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MetricChoice {
    Primary,
    Companion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ConnectionChoice {
    /// Levi-Civita connection of the chosen metric.
    LeviCivita,
    /// Zero Christoffel symbols in the affine charts, against the local Euclidean metric.
    Flat,
    /// Christoffel symbols given in a custom manifest.
    Manifest,
}

/// An experiment request. Every field except the kind and manifold may be omitted; the
/// report records the values actually used.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub experiment: Option<ExperimentKind>,
    pub manifold: Option<String>,
    pub dimension: Option<usize>,
    pub deck_scalar: Option<f64>,
    pub grid: Option<Vec<usize>>,
    pub tol: Option<f64>,
    pub ode_tol: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub expect: Option<f64>,
    pub metric: Option<MetricChoice>,
    pub connection: Option<ConnectionChoice>,
    pub loops: Option<usize>,
    pub loop_size: Option<f64>,
    pub base: Option<Vec<f64>>,
    pub start: Option<Vec<f64>>,
    pub velocity: Option<Vec<f64>>,
    pub theta: Option<f64>,
    pub samples: Option<usize>,
    pub csv: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $(if $top.$field.is_some() { $base.$field = $top.$field; })*
    };
}

impl ExperimentManifest {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading experiment manifest {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing experiment manifest {}", path.display()))
    }

    /// Fields set in `top` replace those of `self`.
    pub fn overlay(mut self, top: ExperimentManifest) -> Self {
        overlay!(
            self,
            top,
            experiment,
            manifold,
            dimension,
            deck_scalar,
            grid,
            tol,
            ode_tol,
            t_grid,
            t,
            seed,
            horizon,
            expect,
            metric,
            connection,
            loops,
            loop_size,
            base,
            start,
            velocity,
            theta,
            samples,
            csv,
            out
        );
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(x) if !(x.is_finite() && x > 0.0) => bail!("{name} must be positive, got {x}"),
                _ => Ok(()),
            }
        };
        positive("tol", self.tol)?;
        positive("ode_tol", self.ode_tol)?;
        positive("horizon", self.horizon)?;
        positive("loop_size", self.loop_size)?;
        positive("deck_scalar", self.deck_scalar)?;
        if let Some(grid) = &self.grid {
            if grid.is_empty() || grid.iter().any(|&g| g < 2) {
                bail!("grid needs at least 2 cells per axis, got {grid:?}");
            }
        }
        let unit = |name: &str, t: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&t) {
                bail!("{name} values must lie in [0, 1], got {t}");
            }
            Ok(())
        };
        if let Some(ts) = &self.t_grid {
            if ts.is_empty() {
                bail!("t_grid is empty");
            }
            ts.iter().try_for_each(|&t| unit("t_grid", t))?;
        }
        if let Some(t) = self.t {
            unit("t", t)?;
        }
        if self.loops == Some(0) {
            bail!("loops must be at least 1");
        }
        if self.experiment.is_none() {
            bail!("no experiment given");
        }
        if self.manifold.is_none() {
            bail!("no manifold given");
        }
        if self.out.is_none() {
            bail!("no output path given");
        }
        Ok(())
    }
}

/// A catalog key, or a path to a JSON manifold manifest.
pub fn load_manifold(spec: &str, manifest: &ExperimentManifest) -> Result<ChartedManifold> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "json") || path.is_file() {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifold {}", path.display()))?;
        let spec = ManifestSpec::from_json(&text)
            .with_context(|| format!("parsing manifold {}", path.display()))?;
        return Ok(spec.build()?);
    }
    let params = BuiltinParams {
        dimension: manifest.dimension,
        deck_scalar: manifest.deck_scalar,
        ..BuiltinParams::default()
    };
    Ok(builtin_manifold(spec, &params)?)
}
