use std::path::PathBuf;

use crate::party::Party;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record that could not be parsed. `line` is 1-based.
    #[error("{context}: line {line}: {message}")]
    Parse {
        context: &'static str,
        line: usize,
        message: String,
    },

    /// A record that parsed but violates a domain constraint.
    #[error("{context}: {message}")]
    Validation {
        context: &'static str,
        message: String,
    },

    #[error("poll normalization: {0}")]
    Domain(String),

    #[error("tagger contract violated: {tokens} tokens but {tags} tags")]
    TaggerContract { tokens: usize, tags: usize },

    #[error("aggregation: {0}")]
    Aggregation(String),

    #[error("calibration: degenerate fit for {party}: {reason}")]
    DegenerateFit { party: Party, reason: String },

    #[error("calibration: degenerate inference, all raw values are non-positive ({0:?})")]
    DegenerateInference([f64; 3]),

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("evaluation: fold {fold}: {inner}")]
    Fold { fold: usize, inner: Box<Error> },

    #[error("config: {0}")]
    Config(String),

    /// An error raised inside one pipeline stage.
    #[error("{stage}: {inner}")]
    Stage {
        stage: &'static str,
        inner: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context,
            line,
            message: message.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            inner: Box::new(self),
        }
    }

    pub(crate) fn invalid(context: &'static str, message: impl Into<String>) -> Self {
        Error::Validation {
            context,
            message: message.into(),
        }
    }
}
