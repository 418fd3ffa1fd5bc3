use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("output directory {path} is not writable: {reason}")]
    Output { path: PathBuf, reason: String },

    #[error("unknown figure id `{0}`; expected one of {ids}", ids = crate::figures::FIGURE_IDS.join(", "))]
    UnknownFigure(String),

    #[error("{0}")]
    Usage(String),

    #[error("run aborted: {0}")]
    Aborted(String),
}

impl CliError {
    /// 1 for numerical aborts during a run, 2 for everything the user can fix
    /// before starting.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Aborted(_) => 1,
            _ => 2,
        }
    }
}

impl From<pcbo::Error> for CliError {
    fn from(e: pcbo::Error) -> Self {
        CliError::Spec(e.to_string())
    }
}
