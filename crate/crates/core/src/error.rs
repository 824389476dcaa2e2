use thiserror::Error;

/// Errors raised by distributions, kernels, tuning and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    ParameterDomain(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("unknown name: {0}")]
    Lookup(String),

    #[error("shrinkage did not converge after {iterations} candidates; final bounds {bounds}")]
    NonConvergence { iterations: usize, bounds: String },

    #[error("initial state is not usable: {0}")]
    Initialization(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("importance ratio is not finite at grid node {node} (psi = {psi})")]
    UnboundedRatio { node: usize, psi: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("curvature at mode is not negative: {0}")]
    Curvature(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("kernel failed at iteration {iteration}: {source}")]
    Kernel {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
