//! Shared fixtures for the kernel benchmarks.

use affine_atlas::transport::{latitude_loop, Curve};
use affine_atlas::{
    builtin_manifold, flat_connection, levi_civita, BuiltinParams, ChartedManifold,
    ChristoffelField, Differentiation,
};
use nalgebra::DMatrix;

pub struct Fixture {
    pub manifold: ChartedManifold,
    pub levi_civita: ChristoffelField,
}

impl Fixture {
    pub fn new(key: &str) -> Self {
        let manifold = builtin_manifold(key, &BuiltinParams::default()).expect("catalog key");
        let g = manifold.metric().expect("metric");
        let levi_civita = levi_civita(g, Differentiation::preferred_for(g)).expect("levi-civita");
        Self {
            manifold,
            levi_civita,
        }
    }

    pub fn flat(&self) -> ChristoffelField {
        flat_connection(&self.manifold).expect("affine manifold")
    }

    pub fn latitude(&self, theta: f64) -> Curve {
        latitude_loop(&self.manifold.atlas, theta).expect("spherical chart")
    }
}

/// A fixed, well-conditioned skew matrix of even size `n`.
pub fn skew_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let v = ((i * 7 + j * 3) % 11) as f64 / 11.0 + 0.1;
        match i.cmp(&j) {
            std::cmp::Ordering::Less => v,
            std::cmp::Ordering::Greater => -(((j * 7 + i * 3) % 11) as f64 / 11.0 + 0.1),
            std::cmp::Ordering::Equal => 0.0,
        }
    })
}
