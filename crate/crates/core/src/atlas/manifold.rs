use std::sync::Arc;

use super::{Atlas, DeckGroup, QuadratureCover};
use crate::connection::{ChristoffelField, MetricField};
use crate::error::{GeometryError, Result};

/// A manifold given by an atlas together with the structures carried on it.
#[derive(Clone, Debug)]
pub struct ChartedManifold {
    pub name: String,
    pub atlas: Arc<Atlas>,
    pub cover: Option<QuadratureCover>,
    /// The atlas is an affine atlas, so the flat connection `Γ ≡ 0` is globally defined.
    pub flat_affine: bool,
    /// A global Riemannian metric.
    pub metric: Option<MetricField>,
    /// A second global metric used as the other endpoint in deformation studies.
    pub companion_metric: Option<MetricField>,
    /// A connection supplied explicitly (manifest-defined manifolds).
    pub connection: Option<ChristoffelField>,
    pub deck: Option<DeckGroup>,
    pub known_volume: Option<f64>,
    pub euler_characteristic: Option<i64>,
}

impl ChartedManifold {
    pub fn new(name: impl Into<String>, atlas: Arc<Atlas>) -> Self {
        Self {
            name: name.into(),
            atlas,
            cover: None,
            flat_affine: false,
            metric: None,
            companion_metric: None,
            connection: None,
            deck: None,
            known_volume: None,
            euler_characteristic: None,
        }
    }

    pub fn atlas(&self) -> &Arc<Atlas> {
        &self.atlas
    }

    pub fn dim(&self) -> usize {
        self.atlas.dim()
    }

    pub fn cover(&self) -> Result<&QuadratureCover> {
        self.cover.as_ref().ok_or(GeometryError::MissingCover)
    }

    pub fn metric(&self) -> Result<&MetricField> {
        self.metric
            .as_ref()
            .ok_or(GeometryError::MissingStructure("global metric"))
    }

    /// `δ_ij` in every chart: the local metric that the flat connection preserves.
    pub fn local_euclidean_metric(&self) -> MetricField {
        MetricField::euclidean(self.atlas.clone())
    }

    /// Riemannian volume `∫ √det g` over the quadrature cover.
    pub fn volume(&self) -> Result<f64> {
        let metric = self.metric()?;
        self.cover()?.integrate(&self.atlas, |chart, x| {
            let det = metric.value(chart, x).determinant();
            Ok(det.max(0.0).sqrt())
        })
    }
}
