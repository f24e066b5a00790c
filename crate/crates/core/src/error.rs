use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed input or configuration.
    Input,
    /// A numerical procedure failed to converge or to resolve its answer.
    Numerical,
    /// An internal consistency check (an identity that must hold exactly) failed.
    Invariant,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("loop dips below the nonvanishing threshold: min |l| = {min:.3e} <= {threshold:.3e}")]
    LoopVanishes { min: f64, threshold: f64 },

    #[error("winding increment {value} is not within {tolerance:.1e} of an integer")]
    NonIntegerWinding { value: f64, tolerance: f64 },

    #[error("frame is not maximal totally real: smallest singular value {sigma_min:.3e} at theta = {theta:.6}")]
    NotTotallyReal { sigma_min: f64, theta: f64 },

    #[error("frame is not single-valued on the circle: |B(0) - B(2pi)| = {gap:.3e}")]
    NotSingleValued { gap: f64 },

    #[error("clutching loop violates G conj(G) = I: defect {defect:.3e} > {tolerance:.1e}")]
    InvalidGLoop { defect: f64, tolerance: f64 },

    #[error("rank decision ambiguous: normalized singular value {sigma:.3e} inside the guard band around tau = {tau:.1e}")]
    RankAmbiguous { sigma: f64, tau: f64 },

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("inconsistent index data: {0}")]
    InconsistentIndices(String),

    #[error("logarithm branch tracking failed: argument jump {jump:.3} between adjacent samples")]
    BranchTracking { jump: f64 },

    #[error("quadrature grid too coarse: tail {tail:.3e} exceeds {tolerance:.1e} ({direction})")]
    GridTooCoarse { tail: f64, tolerance: f64, direction: &'static str },

    #[error("point {re} + {im}i lies outside the closed unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("vectors are not orthonormal: defect {defect:.3e}")]
    NonOrthonormal { defect: f64 },

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e}, tolerance {tolerance:.1e})")]
    NotConverged { iterations: usize, residual: f64, tolerance: f64 },

    #[error("rank anomaly in linearization: expected kernel dimension {expected}, found {found}")]
    RankAnomaly { expected: usize, found: usize },

    #[error("projective chart degenerate: {0}")]
    ChartDegenerate(String),

    #[error("straightening map not invertible: {0}")]
    StraighteningFailed(String),

    #[error("empty incidence family: no grid disk passes within {threshold:.3e} of the base point")]
    EmptyFamily { threshold: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            NonFinite(_) | ShapeMismatch(_) | InvalidInput(_) | NotSingleValued { .. }
            | OutsideDisk { .. } | NonOrthonormal { .. } | Parse(_) => ErrorCategory::Input,
            NotTotallyReal { .. } | InvalidGLoop { .. } | LoopVanishes { .. } => ErrorCategory::Input,
            InconsistentIndices(_) | Invariant(_) => ErrorCategory::Invariant,
            _ => ErrorCategory::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
