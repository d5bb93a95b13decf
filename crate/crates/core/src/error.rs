use thiserror::Error;

/// Errors shared by all library modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("mode index {0} is not valid for this generator family")]
    InvalidModeIndex(i64),

    #[error("window size must be at least 1, got {0}")]
    EmptyWindow(usize),

    #[error("beta profile must be strictly increasing (violated at position {0})")]
    BetaNotIncreasing(usize),

    #[error("beta profile table has {have} entries but the window needs {need}")]
    BetaTableTooShort { have: usize, need: usize },

    #[error("synthetic family is invalid: {0}")]
    InvalidSynthetic(String),

    #[error("index windows differ: [{0}, {1}] vs [{2}, {3}]")]
    WindowMismatch(i64, i64, i64, i64),

    #[error("truncation size {n} exceeds the materialized window extent {max}")]
    TruncationOutOfWindow { n: usize, max: usize },

    #[error("perturbation is not a bounded operator: sup |q_k| is infinite")]
    PerturbationUnbounded,

    #[error("{0} is not a perfect square")]
    NotAPerfectSquare(u64),

    #[error("probe point must satisfy Re z > 0, got Re z = {0}")]
    ProbeNotInRightHalfPlane(f64),

    #[error("e^-{0} underflows to zero; the witness probe would leave the right half-plane")]
    ProbeUnderflow(u64),

    #[error("input signal is invalid: {0}")]
    InvalidSignal(String),

    #[error("time grid must be nonempty")]
    EmptyTimeGrid,

    #[error("probe grid must be nonempty")]
    EmptyProbeGrid,

    #[error("quadrature failed to reach tolerance {tol:e}: error indicator {indicator:e} after {panels} panels")]
    QuadratureTolerance {
        tol: f64,
        indicator: f64,
        panels: u32,
    },

    #[error("vector length {got} does not match system dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("z is within {dist:e} of diagonal eigenvalue index {index}; the diagonal resolvent is singular there")]
    DiagonalSpectrum { index: i64, dist: f64 },

    #[error("z is numerically an eigenvalue of the feedback operator (|1 - b*(D-z)^-1 b| = {denom_abs:e})")]
    NumericalEigenvalue { denom_abs: f64 },

    #[error("resolvent residual {residual:e} exceeds {bound:e}")]
    ResolventResidual { residual: f64, bound: f64 },

    #[error("dimension {n} exceeds the dense-materialization limit {limit}")]
    DenseLimitExceeded { n: usize, limit: usize },

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("evolution step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("eigenvalue iteration did not converge")]
    EigenvalueFailure,
}

pub type Result<T> = std::result::Result<T, CoreError>;
