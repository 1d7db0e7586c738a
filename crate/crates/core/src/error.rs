use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::baselines::RansacIteration;
use crate::ebr::RestartRecord;
use crate::gibbs::ChainTrace;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite loss at data point {index}")]
    NonFiniteLoss { index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate data: {0}")]
    Degenerate(&'static str),

    #[error("value {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("all {} restarts diverged", restarts.len())]
    AllRestartsDiverged { restarts: Vec<RestartRecord> },

    #[error("no RANSAC iteration produced a consensus set larger than {min_consensus}")]
    NoConsensus {
        min_consensus: usize,
        iterations: Vec<RansacIteration>,
    },

    #[error("consensus set is empty: no point has loss below beta")]
    EmptyConsensus,

    #[error("rejection sampler exhausted its budget of {draws} draws")]
    RejectionBudgetExhausted { draws: usize },

    #[error("alternating maximization failed after {} rounds: {source}", trace.rounds.len())]
    ChainFailed { source: Box<Error>, trace: Box<ChainTrace> },

    #[error("support size {k} too large for exhaustive search (max {max})")]
    TooLarge { k: usize, max: usize },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error bound {error_bound}")]
    Quadrature { estimate: f64, error_bound: f64 },
}
