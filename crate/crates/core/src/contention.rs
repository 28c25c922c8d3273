//! Slotted RTS contention: analytic mean observation time and a generative
//! minislot simulator.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ChannelDist, SystemParams};

/// Upper bound on minislots in one observation.
pub const MAX_MINISLOTS: u64 = 1_000_000_000;

/// One contention round, ending with a single collision-free RTS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationOutcome {
    pub duration: f64,
    /// First-hop SNR seen by the winner's relay.
    pub winner_snr_hop1: f64,
    pub minislots_idle: u64,
    pub collisions: u64,
}

/// Per-minislot outcome probabilities `(idle, success, collision)`.
pub fn slot_probabilities(params: &SystemParams) -> (f64, f64, f64) {
    let m = params.num_sources as i32;
    let p = params.tx_prob;
    let idle = (1.0 - p).powi(m);
    let success = m as f64 * p * (1.0 - p).powi(m - 1);
    let collision = (1.0 - idle - success).max(0.0);
    (idle, success, collision)
}

/// Mean observation duration `tau1`.
pub fn mean_observation_duration(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    let (idle, success, collision) = slot_probabilities(params);
    if success <= 0.0 {
        return Err(Error::ContentionNeverResolves);
    }
    Ok(idle / success * params.minislot
        + collision / success * (params.rts + params.timeout)
        + params.rts)
}

/// Minislot-level contention process with cached slot probabilities.
#[derive(Debug, Clone, Copy)]
pub struct ContentionProcess {
    params: SystemParams,
    idle: f64,
    success: f64,
}

impl ContentionProcess {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let (idle, success, _) = slot_probabilities(params);
        if success <= 0.0 {
            return Err(Error::ContentionNeverResolves);
        }
        Ok(Self {
            params: *params,
            idle,
            success,
        })
    }

    /// Runs minislots until exactly one source transmits.
    ///
    /// Each minislot classifies the Binomial(M, p) transmitter count into
    /// zero, one, or more with a single uniform draw.
    pub fn observe<R: Rng + ?Sized>(
        &self,
        hop1: &ChannelDist,
        rng: &mut R,
    ) -> Result<ObservationOutcome> {
        let mut minislots_idle = 0u64;
        let mut collisions = 0u64;
        loop {
            if minislots_idle + collisions >= MAX_MINISLOTS {
                return Err(Error::MinislotLimit {
                    limit: MAX_MINISLOTS,
                });
            }
            let u: f64 = rng.random();
            if u < self.idle {
                minislots_idle += 1;
            } else if u < self.idle + self.success {
                break;
            } else {
                collisions += 1;
            }
        }
        let p = &self.params;
        let duration = minislots_idle as f64 * p.minislot
            + collisions as f64 * (p.rts + p.timeout)
            + p.rts;
        Ok(ObservationOutcome {
            duration,
            winner_snr_hop1: hop1.sample(rng),
            minislots_idle,
            collisions,
        })
    }
}

pub fn simulate_observation<R: Rng + ?Sized>(
    params: &SystemParams,
    hop1: &ChannelDist,
    rng: &mut R,
) -> Result<ObservationOutcome> {
    ContentionProcess::new(params)?.observe(hop1, rng)
}
