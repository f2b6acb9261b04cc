//! Affine chart atlases, flat and metric connections, parallel transport and the
//! Gauss–Bonnet integral of the Euler form.
//!
//! The crate is organised bottom-up:
//!
//! - [`atlas`]: charts, transitions, quadrature covers and the built-in catalog.
//! - [`connection`]: Christoffel fields, metrics, Levi-Civita and convex combinations.
//! - [`transport`]: parallel transport, holonomy and geodesics across charts.
//! - [`euler`]: frames, curvature forms, the Pfaffian and Euler-form quadrature.

pub mod atlas;
pub mod connection;
pub mod error;
pub mod euler;
pub mod expr;
pub mod tensor;
pub mod transport;

pub use atlas::{
    builtin_manifold, hopf_covering_point, transition, Atlas, BuiltinParams, Chart, ChartId,
    ChartedManifold, DeckGroup, ManifestSpec, QuadratureCover, TransitionMap,
};
pub use connection::{
    check_locally_metric, convex_combine, flat_connection, levi_civita, metric_interpolate,
    ChristoffelField, Differentiation, MetricField,
};
pub use error::{GeometryError, Result};
pub use tensor::Christoffel;
