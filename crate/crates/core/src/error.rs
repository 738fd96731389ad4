use alloc::string::String;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("weight {0} is not strictly positive and finite")]
    NonPositiveWeight(f64),
    #[error("axis has norm {0}, expected a unit vector")]
    NonUnitAxis(f64),
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix is not Hermitian (max |M - M^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("design is empty")]
    EmptyDesign,
    #[error(
        "design `{label}` is not a 1-design (weight residual {weight_residual:e}, vector residual {vector_residual:e})"
    )]
    NotOneDesign {
        label: String,
        weight_residual: f64,
        vector_residual: f64,
    },
    #[error("design axes leave the declared plane (max out-of-plane component {0:e})")]
    OutOfPlane(f64),
    #[error("wrong design shape: {0}")]
    DesignShape(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("state vector is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("probability {0:e} is negative beyond rounding slack")]
    NegativeProbability(f64),
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("no shots recorded")]
    ZeroShots,
    #[error("invalid setting structure: {0}")]
    InvalidStructure(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("channel efficiency {0} outside (0, 1]")]
    InvalidEfficiency(f64),
    #[error("channel {0} recorded zero counts during calibration")]
    ZeroChannelCounts(usize),
    #[error("missing efficiency ratio for {party} channel {channel}")]
    MissingRatio { party: char, channel: usize },
    #[error("counts have already been efficiency-corrected")]
    AlreadyCorrected,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of a numerical routine rather than invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = core::result::Result<T, Error>;
