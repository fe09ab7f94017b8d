use dlalab::bounds::BoundsError;
use dlalab::dla::DlaError;
use dlalab::experiments::ExperimentError;
use dlalab::pauli::PauliError;
use dlalab::simulator::SimError;
use dlalab::training::TrainError;
use serde_json::json;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) | CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Validation(_) => "validation",
            CliError::Domain(_) => "domain",
            CliError::Runtime(_) => "runtime",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let details: Vec<String> = match self {
            CliError::Validation(v) => v.clone(),
            _ => vec![],
        };
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
                "details": details,
            }
        })
        .to_string()
    }

    pub fn runtime(msg: impl std::fmt::Display) -> Self {
        CliError::Runtime(anyhow::anyhow!("{msg}"))
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<PauliError> for CliError {
    fn from(e: PauliError) -> Self {
        match e {
            PauliError::Eigensolver => CliError::runtime(e),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<DlaError> for CliError {
    fn from(e: DlaError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Reconstruction(_) => CliError::runtime(e),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Divergence { .. } => CliError::runtime(e),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Train(t) => t.into(),
            ExperimentError::Sim(s) => s.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}
