use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("GAP {gap} cannot host any bin (space {space} m2)")]
    NoBinCombination { gap: usize, space: String },

    #[error("GAP cannot host any bin: space {space} m2 is below every bin area")]
    NoFeasibleBins { space: String },

    #[error("visit days must be nonempty")]
    EmptyVisitDays,

    #[error("oracle refuses instance: {0}")]
    OracleLimit(String),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
