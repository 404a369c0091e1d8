use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
///
/// Each variant belongs to one of three classes (usage, data, numerical),
/// which the command-line front end maps onto exit codes 1, 2 and 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("invalid value `{value}` for {field} in row {row}")]
    InvalidField {
        field: String,
        value: String,
        row: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("configuration is missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error("empty vocabulary after document-frequency pruning (min_df = {min_df}); lower min_df")]
    EmptyVocabulary { min_df: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("optimization diverged: objective increased for {epochs} consecutive epochs")]
    Diverged { epochs: usize },

    #[error("{0}")]
    Degenerate(String),

    #[error("model file error: {0}")]
    Format(String),

    #[error("ids present in only one file ({count} total), first ones: {}", .first.join(", "))]
    UnmatchedIds { count: usize, first: Vec<String> },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::UnknownKey(_) | Error::MissingKeys(_) => ErrorClass::Usage,
            Error::NotConverged { .. } | Error::Diverged { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numerical => 3,
        }
    }
}
