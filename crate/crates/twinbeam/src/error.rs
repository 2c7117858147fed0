use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine failed to converge or produced garbage.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A quantity is undefined for the given state (e.g. Mandel Q at zero
    /// detected intensity, fringe count of a dark interferogram).
    #[error("undefined quantity: {0}")]
    Undefined(String),

    /// Least-squares fit failed to converge or the data is degenerate.
    #[error("fit did not converge: {0}")]
    FitNonConvergence(String),

    /// Deconvolution asked to remove more width than was measured.
    #[error("inconsistent widths: measured {measured} < subtracted {subtracted} in quadrature")]
    InconsistentWidths { measured: f64, subtracted: f64 },

    /// Mode identification found two candidates too close to call.
    #[error("ambiguous mode projection: ell={best} and ell={second} overlap within {ratio:.3}")]
    AmbiguousProjection { best: i32, second: i32, ratio: f64 },

    /// Fock-space truncation leaked too much population.
    #[error("truncation leakage {leakage:.3e} exceeds {threshold:.1e}; increase n_max")]
    Truncation { leakage: f64, threshold: f64 },

    /// Configuration parsing or validation failure, with the offending key.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit status: 2 for validation problems, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config { .. } => 2,
            _ => 3,
        }
    }
}
