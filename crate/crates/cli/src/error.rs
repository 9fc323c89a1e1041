use std::path::PathBuf;

use boxfill::correlogram::CorrelogramError;
use boxfill::diagnostics::DiagnosticsError;
use boxfill::evaluate::EvalError;
use boxfill::filter::ImputeError;
use boxfill::ingest::IngestError;
use boxfill::sarima::ModelError;
use boxfill::series::SeriesError;
use thiserror::Error;

/// Pipeline stage an error belongs to; each maps to one exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Input parsing and configuration.
    Parse,
    /// Transforms, imputation and correlograms.
    Transform,
    /// Estimation and forecasting.
    Fit,
    /// Residual diagnostics and accuracy evaluation.
    Diagnose,
    Io,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Parse => 1,
            Stage::Transform => 2,
            Stage::Fit => 3,
            Stage::Diagnose => 4,
            Stage::Io => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Transform => "transform",
            Stage::Fit => "fit",
            Stage::Diagnose => "diagnose",
            Stage::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Ingest(IngestError),
    #[error("transform: {0}")]
    Series(#[from] SeriesError),
    #[error("impute: {0}")]
    Impute(#[from] ImputeError),
    #[error("correlogram: {0}")]
    Correlogram(#[from] CorrelogramError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("diagnostics: {0}")]
    Diagnostics(#[from] DiagnosticsError),
    #[error("evaluate: {0}")]
    Evaluate(#[from] EvalError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{failed} branch failed: {message}")]
    Branch {
        failed: &'static str,
        stage: Stage,
        message: String,
    },
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Ingest(e)
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            CliError::Config(_) => Stage::Parse,
            CliError::Ingest(IngestError::Io(_)) => Stage::Io,
            CliError::Ingest(_) => Stage::Parse,
            CliError::Series(_) | CliError::Impute(_) | CliError::Correlogram(_) => Stage::Transform,
            CliError::Model(ModelError::Series(_)) => Stage::Transform,
            CliError::Model(_) => Stage::Fit,
            CliError::Diagnostics(_) | CliError::Evaluate(_) => Stage::Diagnose,
            CliError::Io { .. } => Stage::Io,
            CliError::Branch { stage, .. } => *stage,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage().exit_code()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
