use thiserror::Error;

/// Errors produced anywhere in the simulator.
///
/// The variants map onto the CLI exit codes: validation and domain problems
/// are the caller's fault (2), range/numerical/metric/fit problems come out
/// of the numerics (3), and parse/I/O problems come from files (4).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the physically meaningful domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid or interpolation range that does not cover what is needed.
    #[error("range error: {0}")]
    Range(String),

    /// An iteration or transform that failed to meet its tolerance.
    #[error("numerical error: {message}")]
    Numerical {
        message: String,
        last_iterate: Option<f64>,
    },

    /// A pulse or lineshape metric that is undefined for the given data.
    #[error("metric error: {0}")]
    Metric(String),

    /// A least-squares fit that cannot be carried out.
    #[error("fit error: {0}")]
    Fit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Every offending field of a scenario configuration.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
            last_iterate: None,
        }
    }

    /// Prefix the message with `ctx`, keeping the variant (and exit code).
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Range(m) => Error::Range(format!("{ctx}: {m}")),
            Error::Numerical { message, last_iterate } => Error::Numerical {
                message: format!("{ctx}: {message}"),
                last_iterate,
            },
            Error::Metric(m) => Error::Metric(format!("{ctx}: {m}")),
            Error::Fit(m) => Error::Fit(format!("{ctx}: {m}")),
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{ctx}: {message}"),
            },
            Error::Validation(list) => {
                Error::Validation(list.into_iter().map(|m| format!("{ctx}: {m}")).collect())
            }
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{ctx}: {e}"))),
        }
    }

    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) => 2,
            Error::Range(_) | Error::Numerical { .. } | Error::Metric(_) | Error::Fit(_) => 3,
            Error::Parse { .. } | Error::Io(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
