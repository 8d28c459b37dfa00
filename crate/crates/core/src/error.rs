use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid combinatorial or index argument (slate size, rank, item id).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent catalog, user model, agent or experiment settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// Marginal quantity requested for a pair with zero recommendation frequency.
    #[error("undefined marginal at state {state}, item {item}: item frequency is zero")]
    UndefinedMarginal { state: usize, item: usize },

    /// The brute-force oracle refuses instances with too many state-slate pairs.
    #[error("instance too large for exact solution: {pairs} state-slate pairs exceed the limit of {limit}")]
    Capacity { pairs: u128, limit: u128 },

    #[error("solver did not converge after {iterations} iterations (last delta {delta:e})")]
    NotConverged { iterations: usize, delta: f64 },

    #[error("linear system is singular")]
    Singular,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable short name used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::UndefinedMarginal { .. } => "undefined_marginal",
            Error::Capacity { .. } => "capacity",
            Error::NotConverged { .. } => "not_converged",
            Error::Singular => "singular",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
