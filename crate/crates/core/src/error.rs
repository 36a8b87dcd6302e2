use thiserror::Error;

/// Every failure the library can report. Variants name the violated
/// invariant so callers (and the CLI's error JSON) can branch on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("initial vector is not a probability vector: {0}")]
    NonStochasticAlpha(String),
    #[error("matrix is not a sub-generator: {0}")]
    NotSubGenerator(String),
    #[error("chain is not transient: {0}")]
    NotTransient(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("resolvent is singular at s = {re} + {im}i")]
    SingularResolvent { re: f64, im: f64 },
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("bad mixture weights: {0}")]
    BadWeights(String),
    #[error("bad rate or shape: {0}")]
    BadRate(String),

    #[error("net-profit condition violated: lambda * mean = {claims_rate} >= premium = {premium}")]
    NetProfitViolated { claims_rate: f64, premium: f64 },
    #[error(
        "eigenvector matrix is ill-conditioned (estimate {0:e}); use the matrix-exponential route"
    )]
    IllConditioned(f64),
    #[error("spectral data incomplete: {0}")]
    IncompleteSpectralData(String),
    #[error("Lundberg root residual too large: |residual| = {residual:e} at kappa = {re} + {im}i")]
    RootResidualTooLarge { re: f64, im: f64, residual: f64 },

    #[error("share must lie strictly inside (0, 1), got {0}")]
    DegenerateShare(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("u1 > u2: the lines never cross and the problem is one-dimensional")]
    RegimeOneDimensional,
    #[error("at least 100 paths are required, got {0}")]
    BadSampleSize(usize),
    #[error("claim law is not a single exponential phase")]
    NotExponential,
    #[error("infinite-horizon estimate did not stabilise by horizon {0}")]
    HorizonNotConverged(f64),
    #[error("intensity is negative at t = {0}")]
    NegativeIntensity(f64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("empty data")]
    EmptyData,
    #[error("probability integral transform hit 0 or 1; A2 is infinite")]
    DegenerateU,
    #[error("optimizer failed: {0}")]
    OptimizerFailed(String),
    #[error("mixture component {0} lost all weight and was pruned")]
    EmptyComponent(usize),
    #[error("ill-posed fit: {0}")]
    IllPosed(String),
    #[error("unknown strategy '{name}' (known: {known})")]
    UnknownStrategy { name: String, known: String },

    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonStochasticAlpha(_) => "NonStochasticAlpha",
            Error::NotSubGenerator(_) => "NotSubGenerator",
            Error::NotTransient(_) => "NotTransient",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NegativeArgument(_) => "NegativeArgument",
            Error::SingularResolvent { .. } => "SingularResolvent",
            Error::NonFinite(_) => "NonFinite",
            Error::BadWeights(_) => "BadWeights",
            Error::BadRate(_) => "BadRate",
            Error::NetProfitViolated { .. } => "NetProfitViolated",
            Error::IllConditioned(_) => "IllConditioned",
            Error::IncompleteSpectralData(_) => "IncompleteSpectralData",
            Error::RootResidualTooLarge { .. } => "RootResidualTooLarge",
            Error::DegenerateShare(_) => "DegenerateShare",
            Error::InvalidModel(_) => "InvalidModel",
            Error::RegimeOneDimensional => "RegimeOneDimensional",
            Error::BadSampleSize(_) => "BadSampleSize",
            Error::NotExponential => "NotExponential",
            Error::HorizonNotConverged(_) => "HorizonNotConverged",
            Error::NegativeIntensity(_) => "NegativeIntensity",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InsufficientData(_) => "InsufficientData",
            Error::EmptyData => "EmptyData",
            Error::DegenerateU => "DegenerateU",
            Error::OptimizerFailed(_) => "OptimizerFailed",
            Error::EmptyComponent(_) => "EmptyComponent",
            Error::IllPosed(_) => "IllPosed",
            Error::UnknownStrategy { .. } => "UnknownStrategy",
            Error::Io(_) => "Io",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
