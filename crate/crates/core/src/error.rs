use thiserror::Error;

/// Errors raised by the model, solvers and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contention never resolves (single-winner probability is zero)")]
    ContentionNeverResolves,

    #[error("observation exceeded {limit} minislots without a winner")]
    MinislotLimit { limit: u64 },

    #[error("probing never terminates (second-hop success probability is zero)")]
    ProbingNeverTerminates,

    #[error("never transmit: rate cap is zero at lambda = {lambda}")]
    NeverTransmit { lambda: f64 },

    #[error("no positive-throughput policy: {0}")]
    NoPositiveThroughput(String),

    #[error("{what} did not converge: achieved {achieved:e}, tolerance {tolerance:e}")]
    NotConverged {
        what: &'static str,
        achieved: f64,
        tolerance: f64,
    },

    #[error("probe-once stop reward is not unimodal near r = {at}")]
    NotUnimodal { at: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
