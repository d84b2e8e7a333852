use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user-supplied parameter or configuration.
    #[error("validation: {0}")]
    Validation(String),

    /// Malformed row in an external eigenvalue table.
    #[error("eigenvalue table line {line}: {message}")]
    ExternalTable { line: usize, message: String },

    /// Eigenfunction evaluation requested for a descriptor without an
    /// analytic formula.
    #[error("eigenfunction evaluation unsupported for {0}")]
    UnsupportedEvaluation(String),

    /// The dispersion root finder failed to converge.
    #[error("dispersion solver failed on bracket [{lo}, {hi}]: {message}")]
    Solver { lo: f64, hi: f64, message: String },

    /// A guarded internal invariant was violated.
    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    /// Time stepping blew up (CFL violation tripwire).
    #[error("instability detected at t = {t}: {message}")]
    Instability { t: f64, message: String },

    /// Quantity requested outside its admissible domain.
    #[error("domain: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code contract: 2 for validation-type errors, 1 for
    /// runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::ExternalTable { .. }
            | Error::UnsupportedEvaluation(_)
            | Error::Domain(_) => 2,
            _ => 1,
        }
    }
}
