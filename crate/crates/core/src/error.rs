use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model that must always be feasible came back infeasible.
    #[error("{context} reported infeasible; shedding/curtailment recourse should make this impossible")]
    Infeasible { context: String },

    #[error("{context}: solver stopped with status {status:?}")]
    Solver { context: String, status: SolveStatus },

    #[error("generator {generator}: min up/down times ({min_up}, {min_down}) unsupported; the KKT reformulation needs both equal to 1")]
    UnsupportedMinTimes { generator: String, min_up: u32, min_down: u32 },

    #[error("instance too large for reference solver: {vars} variables exceeds cap of {cap}")]
    TooLarge { vars: usize, cap: usize },

    #[error("day {day}: {source}")]
    Day {
        day: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("missing series cell: day {day}, hour {hour}, node {node}, provider {provider}")]
    MissingCell { day: u32, hour: usize, node: u32, provider: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("external solver: {0}")]
    External(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }

    pub(crate) fn on_day(self, day: u32) -> Self {
        Error::Day { day, source: Box::new(self) }
    }
}
