//! Optimal relay-waiting opportunistic channel access for two-hop
//! decode-and-forward networks.
//!
//! Sources contend for the channel with slotted RTS. The winner's relay
//! measures the first-hop SNR and either gives up (everyone re-contends) or
//! accepts the traffic at a capped rate; the relay then probes the second hop
//! each coherence interval until the rate is supported. [`solver`] computes
//! the optimal throughput `lambda*`, the rate cap `x*` and the first-hop
//! threshold `r_hat_f`; [`sim`] checks them with an independent Monte Carlo
//! of the protocol; [`baseline`] is a probe-once comparator.

pub mod baseline;
pub mod cli;
pub mod config;
pub mod contention;
pub mod error;
pub mod model;
mod numeric;
pub mod sim;
pub mod solver;
pub mod verify;

pub use baseline::{solve_probe_once_policy, ProbeOncePolicy};
pub use contention::{mean_observation_duration, simulate_observation, ObservationOutcome};
pub use error::{Error, Result};
pub use model::{ChannelDist, SystemParams};
pub use sim::{estimate_throughput, run_cycle, CycleResult, ThroughputEstimate};
pub use solver::{solve_policy, StoppingPolicy};
