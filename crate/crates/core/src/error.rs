use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its valid range or a component was wired wrongly.
    #[error("configuration error in `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("argument out of range: {0}")]
    Argument(String),

    /// Feedback or data that contradicts the delay protocol.
    #[error("data error: {0}")]
    Data(String),

    #[error("numeric error: {msg}")]
    Numeric {
        msg: String,
        /// Last bisection bracket, when the failure came from a root search.
        bracket: Option<(f64, f64)>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric {
            msg: msg.into(),
            bracket: None,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
