use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unknown manifold `{0}`")]
    UnknownManifold(String),
    #[error("invalid dimension {0}: must be positive")]
    InvalidDimension(usize),
    #[error("deck scalar {0} must be greater than 1")]
    InvalidDeckScalar(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point lies outside the overlap of transition `{0}`")]
    OutsideOverlap(String),
    #[error("the zero vector has no image under the covering map")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("chart `{0}` is not an affine chart")]
    NonAffineChart(String),
    #[error("metric is singular at the evaluation point (condition number {0:e})")]
    SingularMetric(f64),
    #[error("metric is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("fields live on different atlases")]
    MismatchedAtlas,
    #[error("parameter t = {0} lies outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("curve is not closed (gap {0:e})")]
    NotClosed(f64),
    #[error("curve leaves chart `{0}`")]
    LeavesChart(String),
    #[error("curve exits the atlas at parameter {0}")]
    CurveExitsAtlas(f64),
    #[error("step size underflow at parameter {0}")]
    StepUnderflow(f64),
    #[error("segment junction mismatch of {0:e} at segment {1}")]
    JunctionMismatch(f64, usize),
    #[error("operation requires even dimension, got {0}")]
    OddDimension(usize),
    #[error("matrix is not skew-symmetric (defect {0:e})")]
    SkewnessViolation(f64),
    #[error("connection is not compatible with the metric (defect {0:e})")]
    IncompatibleConnection(f64),
    #[error("connection is not flat (curvature defect {0:e})")]
    NotFlat(f64),
    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),
    #[error("analytic derivatives are unavailable for this field")]
    NoAnalyticDerivative,
    #[error("manifold has no quadrature cover")]
    MissingCover,
    #[error("manifold has no {0}")]
    MissingStructure(&'static str),
    #[error("frame is singular")]
    SingularFrame,
    #[error("loops are not based at the same point")]
    LoopsNotCoBased,
    #[error("invalid start point")]
    InvalidStart,
    #[error("horizon must be positive")]
    NonPositiveHorizon,
    #[error("expression error: {0}")]
    Expression(String),
    #[error("manifest error: {0}")]
    Manifest(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
