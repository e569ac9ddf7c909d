use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// `Domain` and `NotFactorizable` are recoverable: they flag inputs on the
/// Zariski-closed bad locus of a map or of the factorization, and the
/// verification harness counts them as rejections rather than failures.
/// Everything else indicates a misuse of the API or a genuine pathology.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix")]
    Singular,

    #[error("zero denominator")]
    ZeroDenominator,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid element: {0}")]
    InvalidElement(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("sampling exhausted after {0} rejections")]
    SamplingExhausted(u32),

    #[error("rejection rate above 50% in suite {suite}: {defined} defined points in {attempts} attempts (suggests a wrong bad-locus predicate)")]
    RejectionOverflow { suite: String, attempts: u32, defined: u32 },

    #[error("not factorizable: {0}")]
    NotFactorizable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("theta is not unipotent: {0}")]
    ThetaNotUnipotent(String),

    #[error("unsupported type: {0}")]
    UnsupportedType(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for the error classes the verification harness treats as a
    /// rejected sample point instead of an identity failure.
    pub fn is_rejection(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::NotFactorizable(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
