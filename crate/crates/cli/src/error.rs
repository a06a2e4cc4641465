use spconv_core::analytic::AnalyticError;
use spconv_core::calibration::CalibrationError;
use spconv_core::pipeline::PipelineError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Simulation(PipelineError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } | CliError::Invalid(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Simulation(_) => "simulation",
            CliError::Analytic(_) => "range",
            CliError::Calibration(_) => "calibration",
            CliError::Output(_) => "output",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config { .. } | CliError::Invalid(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Simulation(_) => 5,
            CliError::Analytic(_) => 6,
            CliError::Calibration(_) => 7,
            CliError::Output(_) => 8,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            // invalid parameters are a config problem, whoever supplied them
            PipelineError::Config(v) => CliError::Invalid(v.to_string()),
            other => CliError::Simulation(other),
        }
    }
}
