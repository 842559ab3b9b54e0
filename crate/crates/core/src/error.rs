use thiserror::Error;

/// Errors surfaced by model construction, numerics, simulation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },

    #[error("singular or ill-conditioned system (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("network topology error: {0}")]
    Topology(String),

    #[error("zero-mode reduction error: {0}")]
    Reduction(String),

    #[error("certificate infeasible: {0}")]
    Infeasible(String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("integrator step error: {message} (suggested step {suggested:.3e})")]
    Step { message: String, suggested: f64 },

    #[error("initial condition rejected: {0}")]
    BadInit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used by the CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Domain(_) => "domain",
            Error::NotHurwitz { .. } => "not_hurwitz",
            Error::Singular { .. } => "singular",
            Error::Topology(_) => "topology",
            Error::Reduction(_) => "reduction",
            Error::Infeasible(_) => "infeasible",
            Error::Config { .. } => "config",
            Error::Step { .. } => "step",
            Error::BadInit(_) => "bad_init",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
