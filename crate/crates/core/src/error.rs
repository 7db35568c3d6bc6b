use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input space: {0}")]
    InvalidSpace(String),

    #[error("empty design: at least {required} point(s) required, got {got}")]
    EmptyDesign { required: usize, got: usize },

    #[error("subset of size {requested} requested from a design of {available} points")]
    SubsetTooLarge { requested: usize, available: usize },

    #[error("level {level} out of range (hierarchy has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular design matrix ({rows}x{cols}, condition number {condition:.3e})")]
    SingularDesign {
        rows: usize,
        cols: usize,
        condition: f64,
    },

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("mismatched input spaces")]
    MismatchedSpaces,

    #[error("quadrature order {order} too low, at least {required} needed")]
    QuadratureOrder { order: usize, required: usize },

    #[error("galerkin tensor covers degree {covered} but degree {needed} was requested")]
    MissingTensorEntry { covered: usize, needed: usize },

    #[error("non-finite derivative estimate in coordinate {0}")]
    NonFiniteDerivative(usize),

    #[error("insufficient samples: {required} needed, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("singular control covariance; controls {dropped:?} are affine in the others")]
    SingularControls { dropped: Vec<usize> },

    #[error("budget {budget} is below the initial round cost {initial}")]
    BudgetTooSmall { budget: f64, initial: f64 },

    #[error("unknown method tag `{0}`")]
    UnknownMethod(String),

    #[error("missing surrogate: {0}")]
    MissingSurrogate(String),

    #[error("surrogate fit failed for {target}: {source}")]
    Fit {
        target: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpace(_) => "invalid_space",
            Error::EmptyDesign { .. } => "empty_design",
            Error::SubsetTooLarge { .. } => "subset_too_large",
            Error::LevelOutOfRange { .. } => "level_out_of_range",
            Error::InvalidConfig(_) => "invalid_config",
            Error::SingularDesign { .. } => "singular_design",
            Error::ZeroVariance(_) => "zero_variance",
            Error::MismatchedSpaces => "mismatched_spaces",
            Error::QuadratureOrder { .. } => "quadrature_order",
            Error::MissingTensorEntry { .. } => "missing_tensor_entry",
            Error::NonFiniteDerivative(_) => "non_finite_derivative",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::SingularControls { .. } => "singular_controls",
            Error::BudgetTooSmall { .. } => "budget_too_small",
            Error::UnknownMethod(_) => "unknown_method",
            Error::MissingSurrogate(_) => "missing_surrogate",
            Error::Fit { .. } => "fit_failed",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
