use thiserror::Error;

/// Error type shared by every module in the crate.
///
/// The variants map onto the process exit codes used by the CLI:
/// configuration and domain problems exit with 2, numeric failures and
/// internal-consistency failures with 3. A check that *runs* but reports
/// violations is not an error; the CLI turns such reports into exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Two routes that must agree (for example a closed-form identity versus a
    /// direct difference) disagreed beyond tolerance. This signals a bug in the
    /// implementation or in a test harness, never a property of the input.
    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Process exit code for the CLI front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Json(_) => 2,
            Error::Numeric(_) | Error::Internal(_) | Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
