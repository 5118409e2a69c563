use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the library. The CLI maps them onto exit codes via
/// [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid length: {0}")]
    InvalidLength(String),

    #[error("invalid process model: {0}")]
    InvalidModel(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The least-squares normaliser `sum x_i^2` vanished.
    #[error("degenerate design: sum of squared regressors is zero over {n} pairs")]
    DegenerateDesign { n: usize },

    #[error("ingestion failed for {path}: {}", format_lines(.problems))]
    Ingestion {
        path: String,
        problems: Vec<RowProblem>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

/// One offending row in an input file. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq)]
pub struct RowProblem {
    pub line: u64,
    pub message: String,
}

fn format_lines(problems: &[RowProblem]) -> String {
    let shown: Vec<String> = problems
        .iter()
        .take(20)
        .map(|p| format!("line {}: {}", p.line, p.message))
        .collect();
    let mut out = shown.join("; ");
    if problems.len() > 20 {
        out.push_str(&format!("; ... {} more", problems.len() - 20));
    }
    out
}

/// Coarse error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Internal,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) | Error::InvalidModel(_) | Error::Toml(_) => ErrorClass::Config,
            Error::InvalidLength(_)
            | Error::InsufficientData(_)
            | Error::InvalidInput(_)
            | Error::DegenerateDesign { .. }
            | Error::Ingestion { .. }
            | Error::Csv(_) => ErrorClass::Data,
            Error::Stage { source, .. } => source.class(),
            Error::Io { .. } | Error::Json(_) => ErrorClass::Internal,
        }
    }
}
