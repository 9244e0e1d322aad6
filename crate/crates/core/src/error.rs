use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("graph is disconnected ({reached} of {num_sites} sites reachable from site 0)")]
    Disconnected { reached: usize, num_sites: usize },

    #[error("erdos-renyi graph still disconnected after {attempts} draws")]
    ResampleBudgetExhausted { attempts: usize },

    #[error("invalid transition matrix: {0}")]
    InvalidKernel(String),

    #[error("singular linear system while computing {0}")]
    SingularSystem(&'static str),

    #[error("product chain has {states} states, budget is {budget}")]
    ProductChainTooLarge { states: usize, budget: usize },

    #[error("mixing time exceeded iteration cap {0}")]
    MixingCapExceeded(usize),

    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("observation {0} outside [0, 1]")]
    ObservationRange(f64),

    #[error("unknown robot id {id} (team size {n_robots})")]
    UnknownRobot { id: usize, n_robots: usize },

    #[error("vector length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("illegal move from site {from} to site {to}")]
    IllegalMove { from: usize, to: usize },

    #[error("custom observation sampler violates the mean constraint: {0}")]
    SamplerMean(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("record is not from a fixed-window crowd-vetting run")]
    NotDcvRecord,

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
