use thiserror::Error;

/// Errors raised by the inference routines and the CLI front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Both numerator and denominator likelihoods vanish, so the ratio is 0/0.
    #[error("degenerate statistic: {0}")]
    DegenerateStatistic(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("fit failed at sieve level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::Csv { .. } => true,
            Error::Level { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Validates a test level strictly inside (0, 1).
pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}
