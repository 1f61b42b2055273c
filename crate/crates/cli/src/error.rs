use agri_offload::agents::AgentError;
use agri_offload::baselines::BaselineError;
use agri_offload::oracle::OracleError;
use agri_offload::scenario::ScenarioError;
use agri_offload::simenv::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o failure on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.as_ref().display().to_string();
        move |source| CliError::Io { path, source }
    }

    /// 2 for bad input, 3 for search budget or infeasibility, 4 for i/o.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::InvalidRange(_) | CliError::Baseline(_) | CliError::Sim(_) => 2,
            CliError::Scenario(ScenarioError::Io(_)) => 4,
            CliError::Scenario(_) => 2,
            CliError::Agent(AgentError::Io(_)) => 4,
            CliError::Agent(_) => 2,
            CliError::Oracle(
                OracleError::BudgetExceeded { .. } | OracleError::HorizonTooLong { .. } | OracleError::NoFeasibleSchedule,
            ) => 3,
            CliError::Oracle(OracleError::Io(_)) => 4,
            CliError::Oracle(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) => 4,
        }
    }
}
