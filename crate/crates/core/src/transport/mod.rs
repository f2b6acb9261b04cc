//! Parallel transport, holonomy and geodesics across the charts of an atlas.

mod curve;
mod export;
mod frame;
mod geodesic;
mod holonomy_map;
mod loops;
mod ode;
mod parallel;

pub use curve::{Curve, Junction, PathFn, Segment, JUNCTION_TOLERANCE};
pub use export::{write_trajectory_csv, GeodesicSummary};
pub use frame::{build_parallel_frame, chart_path, FrameOptions, FrameReport};
pub use geodesic::{
    geodesic_integrate, GeodesicOptions, GeodesicRecord, GeodesicSample, GeodesicStatus,
};
pub use holonomy_map::{holonomy_map_experiment, HolonomyMapReport, PairEvidence};
pub use loops::{bump_circle, hopf_core_loop, latitude_loop, rectangle, seeded_loops};
pub use ode::{OdeTolerance, MIN_STEP};
pub use parallel::{
    holonomy, metric_pairing, parallel_transport, transport_frame, transport_pair, HolonomyElement,
    HolonomySummary,
};
