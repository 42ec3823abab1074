use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can surface. Variant names double as the
/// diagnostic tokens printed by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step {dt:.3e} too large (bound {bound:.3e})")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("schema error: {0}")]
    SchemaError(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Hamiltonian is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitianHamiltonian { deviation: f64 },

    #[error("steady state is not unique ({zero_modes} modes with vanishing eigenvalue)")]
    DegenerateSteadyState { zero_modes: usize },

    #[error("leading eigenvalue not separated from the rest of the spectrum (separation {separation:.3e}, required {required:.3e})")]
    GapCollapse { separation: f64, required: f64 },

    #[error("overlap magnitude {magnitude:.3e} underflowed")]
    OverlapUnderflow { magnitude: f64 },

    #[error("model has no jump operators")]
    NoJumpOperators,

    #[error("homodyne detection supports exactly one monitored channel, model has {channels}")]
    MultiChannelUnsupported { channels: usize },

    #[error("quadrature grid too coarse: doubling changed the result by {change:.3e} (relative)")]
    GridTooCoarse { change: f64 },

    #[error("too many steps for exhaustive enumeration: {steps} (max {max})")]
    TooManySteps { steps: usize, max: usize },

    #[error("oracle disagreement: {0}")]
    OracleMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable variant name, used on the command line's standard error.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::SchemaError(_) => "SchemaError",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NonHermitianHamiltonian { .. } => "NonHermitianHamiltonian",
            Error::DegenerateSteadyState { .. } => "DegenerateSteadyState",
            Error::GapCollapse { .. } => "GapCollapse",
            Error::OverlapUnderflow { .. } => "OverlapUnderflow",
            Error::NoJumpOperators => "NoJumpOperators",
            Error::MultiChannelUnsupported { .. } => "MultiChannelUnsupported",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::TooManySteps { .. } => "TooManySteps",
            Error::OracleMismatch(_) => "OracleMismatch",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }

    /// Errors that stem from the input document rather than the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::SchemaError(_)
                | Error::DimensionMismatch(_)
                | Error::NonHermitianHamiltonian { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
