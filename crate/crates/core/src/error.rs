use thiserror::Error;

pub type Result<T> = std::result::Result<T, TempoError>;

#[derive(Debug, Error)]
pub enum TempoError {
    #[error("SVD failed to converge for a {rows}x{cols} matrix")]
    SvdFailure { rows: usize, cols: usize },

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("shape mismatch at site {site}: {detail}")]
    ContractShape { site: usize, detail: String },

    #[error("invalid tensor shape: {0}")]
    InvalidShape(String),

    #[error("weight vector length {got} does not match leg dimension {expected} at site {site}")]
    WeightLength { site: usize, expected: usize, got: usize },

    #[error("quadrature did not converge: estimated error {error:.3e} exceeds tolerance {tolerance:.3e}")]
    Quadrature { error: f64, tolerance: f64 },

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported environment dimension D={0}; expected 1, 2 or 3")]
    UnsupportedDimension(u32),

    #[error("influence table covers lags up to {available}, but lag {requested} was requested")]
    LagOutOfRange { requested: usize, available: usize },

    #[error("class reduction inconsistent: members of one class differ by {0:.3e} at lag {1}")]
    ClassInconsistency(f64, usize),

    #[error("numerical blowup at step {step} (lambda_c = {lambda_c:e}): magnitude {magnitude:.3e}")]
    Blowup { step: usize, lambda_c: f64, magnitude: f64 },

    #[error("dense augmented tensor would hold {required} elements, above the limit of {limit}")]
    DenseLimit { required: usize, limit: usize },

    #[error("fit window invalid: {0}")]
    FitWindow(String),

    #[error("least-squares design is rank deficient: {0}")]
    RankDeficient(String),

    #[error("no zero crossing of the decay rate in the supplied range")]
    NoZeroCrossing,

    #[error("spectral density table: {0}")]
    SpectralTable(String),
}
