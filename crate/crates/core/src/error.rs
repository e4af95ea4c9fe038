use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KsError {
    #[error("dimension {0} out of range (supported: 1 or 2)")]
    DimensionOutOfRange(usize),
    #[error("axis {axis}: length {length} must be positive")]
    NonPositiveLength { axis: usize, length: f64 },
    #[error("axis {axis}: {cells} cells given, at least 4 required")]
    TooFewCells { axis: usize, cells: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("boundary face {face} on axis {axis} is nonzero")]
    BoundaryFaceNonzero { axis: usize, face: usize },
    #[error("norm exponent {0} must satisfy q >= 1")]
    InvalidNormExponent(f64),
    #[error("parameter {name} = {value} out of range: {reason}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("drift is singular: p < 2 with epsilon = 0 and a vanishing gradient at face {face} (axis {axis})")]
    SingularDrift { axis: usize, face: usize },
    #[error("density materially negative: {value} at cell {cell}")]
    NegativeDensity { cell: usize, value: f64 },
    #[error("time step {dt} violates the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    #[error("trajectory has no rows")]
    EmptyTrajectory,
    #[error("at least {required} points required, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("fit data must be positive: point {index} = ({m}, {gap})")]
    NonPositivePoint { index: usize, m: f64, gap: f64 },
    #[error("degenerate fit: all masses are equal")]
    DegenerateFit,
    #[error("q = {q} outside the admissible range for theta = {theta}, n = {n}")]
    InadmissibleExponent { q: f64, theta: f64, n: usize },
    #[error("test function unsupported: {0}")]
    UnsupportedTestFunction(String),
    #[error("source samples do not cover [0, {t}]: {reason}")]
    InsufficientCoverage { t: f64, reason: String },
    #[error("runs are not comparable: {0}")]
    MismatchedRuns(String),
    #[error("t1 = {t1} must lie before the end of the run ({t_end})")]
    TransientOutOfRange { t1: f64, t_end: f64 },
}

pub type Result<T, E = KsError> = std::result::Result<T, E>;
