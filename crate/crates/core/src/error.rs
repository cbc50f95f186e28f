use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A quantity is undefined for the given input (zero vector, bad norm order, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// `A·Aᴴ` failed to factor or its condition number exceeds the limit.
    #[error("ill-conditioned system: condition number {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },

    /// The per-tone Gram matrix `H_w·H_wᴴ` of a used tone is singular.
    #[error("singular channel Gram matrix at tone {tone} (condition number {cond:.3e})")]
    SingularTone { tone: usize, cond: f64 },

    /// An iterate left the constraint set beyond the configured tolerance.
    #[error("iterate {iteration} infeasible: relative residual {residual:.3e} > {tol:.1e}")]
    Infeasible {
        iteration: usize,
        residual: f64,
        tol: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. } | Error::SingularTone { .. } | Error::Infeasible { .. }
        )
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
