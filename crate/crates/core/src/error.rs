//! Error types shared across the crate.
//!
//! Every failure carries a coarse category so command-line callers can map it
//! to a stable exit code: configuration problems, misuse of an operation,
//! numerical failures (blow-up, incompatible boundary data, step-size limits),
//! and I/O.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent. Names the field.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// An operation was called with arguments it cannot accept
    /// (mismatched grids, unsupported order, malformed inputs).
    #[error("usage error: {0}")]
    Usage(String),

    /// A numerical procedure failed to meet its contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Neumann data and right-hand side of an elliptic problem are not
    /// solvable together beyond quadrature error.
    #[error(
        "incompatible boundary data for {subproblem}: relative defect {defect:.3e} \
         exceeds threshold {threshold:.1e}"
    )]
    Incompatible {
        subproblem: String,
        defect: f64,
        threshold: f64,
    },

    /// The state stopped being finite during time integration.
    #[error("solution blew up at t = {t:.6}, step {step}")]
    BlowUp { t: f64, step: usize },

    /// The requested time step exceeds the advective/diffusive stability bound.
    #[error("time step {dt:.3e} exceeds stability bound {bound:.3e}")]
    StepSize { dt: f64, bound: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, used for exit codes and structured
    /// error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Usage(_) => "usage",
            Error::Numerical(_)
            | Error::Incompatible { .. }
            | Error::BlowUp { .. }
            | Error::StepSize { .. } => "numerical",
            Error::Io(_) | Error::Serde(_) => "io",
        }
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Error {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
