use std::process::ExitCode;

use curvkit::GeomError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid job: {0}")]
    Validation(String),
    #[error("computation failed in {context}: {source}")]
    Computation {
        context: &'static str,
        #[source]
        source: GeomError,
    },
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("{0} verification checks failed")]
    Verification(usize),
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 1,
            CliError::Computation { .. } | CliError::Verification(_) | CliError::Output { .. } => 2,
            CliError::NonConvergence(_) => 3,
        })
    }

    /// Sorts a library error by what the user can do about it.
    pub fn from_geom(context: &'static str, e: GeomError) -> Self {
        match e {
            GeomError::InvalidInput(_) | GeomError::Expr(_) | GeomError::OutOfChart { .. } => {
                CliError::Validation(format!("{context}: {e}"))
            }
            GeomError::ConnectionFailure { .. } => CliError::NonConvergence(format!("{context}: {e}")),
            GeomError::Connection { ref source, .. } if matches!(**source, GeomError::ConnectionFailure { .. }) => {
                CliError::NonConvergence(format!("{context}: {e}"))
            }
            source => CliError::Computation { context, source },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub trait Context<T> {
    fn context(self, context: &'static str) -> CliResult<T>;
}

impl<T> Context<T> for curvkit::Result<T> {
    fn context(self, context: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::from_geom(context, e))
    }
}
