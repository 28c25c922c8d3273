//! Monte Carlo of the full protocol: contention, the first-hop threshold
//! decision, first-hop transmission and second-hop probing.
//!
//! Throughput is the renewal-reward ratio `sum(Y) / sum(T)` over independent
//! stop-and-deliver cycles. Cycle `i` draws from its own ChaCha stream
//! `(seed, i)`, so results do not depend on how cycles are spread over
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::contention::{ContentionProcess, ObservationOutcome};
use crate::error::{Error, Result};
use crate::model::{ChannelDist, SystemParams};
use crate::solver::{rate_for_cap, StoppingPolicy};

pub const MIN_CYCLES: u64 = 1000;

/// Hard cap on second-hop probes in one cycle.
pub const MAX_PROBES: u64 = 1_000_000_000;

/// Random stream for cycle `index` under `seed`.
pub fn cycle_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// What the relay does on the second hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondHop {
    /// Probe every coherence interval until the rate is supported.
    KeepProbing,
    /// Probe once; on outage the traffic is dropped and contention restarts.
    ProbeOnce,
}

/// First-hop decision rule: stop iff `r_f >= hop1_threshold`, send at
/// `log2(1 + min(r_f, rate_cap_snr))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRule {
    pub hop1_threshold: f64,
    pub rate_cap_snr: f64,
    pub second_hop: SecondHop,
}

impl From<&StoppingPolicy> for ThresholdRule {
    fn from(p: &StoppingPolicy) -> Self {
        Self {
            hop1_threshold: p.hop1_threshold,
            rate_cap_snr: p.rate_cap_snr,
            second_hop: SecondHop::KeepProbing,
        }
    }
}

/// One renewal cycle: from contention start until the relay delivers (or,
/// for probe-once, until the single second-hop probe resolves).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleResult {
    /// Bits/Hz delivered to the destination.
    pub delivered: f64,
    /// Total time, seconds.
    pub elapsed: f64,
    pub observations: u64,
    pub hop2_probes: u64,
    /// Required second-hop SNR `min(r_f, cap)` of the stopping observation.
    pub required_snr: f64,
    pub contention_time: f64,
    /// Give-up CTS time.
    pub give_up_time: f64,
    /// CTS plus data time on the first hop.
    pub hop1_time: f64,
    pub hop2_time: f64,
}

impl CycleResult {
    pub fn itemized_total(&self) -> f64 {
        self.contention_time + self.give_up_time + self.hop1_time + self.hop2_time
    }
}

/// Source of contention outcomes and second-hop SNR samples.
pub trait ChannelEvents {
    fn next_observation(&mut self) -> Result<ObservationOutcome>;
    fn probe_hop2(&mut self) -> f64;
}

/// [`ChannelEvents`] backed by a random stream.
pub struct RandomChannels<'r, R: ?Sized> {
    contention: ContentionProcess,
    hop1: ChannelDist,
    hop2: ChannelDist,
    rng: &'r mut R,
}

impl<'r, R: Rng + ?Sized> RandomChannels<'r, R> {
    pub fn new(params: &SystemParams, rng: &'r mut R) -> Result<Self> {
        Ok(Self {
            contention: ContentionProcess::new(params)?,
            hop1: params.hop1(),
            hop2: params.hop2(),
            rng,
        })
    }
}

impl<R: Rng + ?Sized> ChannelEvents for RandomChannels<'_, R> {
    fn next_observation(&mut self) -> Result<ObservationOutcome> {
        self.contention.observe(&self.hop1, self.rng)
    }

    fn probe_hop2(&mut self) -> f64 {
        self.hop2.sample(self.rng)
    }
}

/// Runs one cycle of `rule` against `events`.
pub fn run_cycle_with<E: ChannelEvents + ?Sized>(
    rule: &ThresholdRule,
    params: &SystemParams,
    events: &mut E,
) -> Result<CycleResult> {
    let mut c = CycleResult {
        delivered: 0.0,
        elapsed: 0.0,
        observations: 0,
        hop2_probes: 0,
        required_snr: 0.0,
        contention_time: 0.0,
        give_up_time: 0.0,
        hop1_time: 0.0,
        hop2_time: 0.0,
    };

    let r_f = loop {
        let obs = events.next_observation()?;
        c.observations += 1;
        c.contention_time += obs.duration;
        if obs.winner_snr_hop1 >= rule.hop1_threshold {
            break obs.winner_snr_hop1;
        }
        c.give_up_time += params.cts;
    };

    c.hop1_time = params.cts + params.coherence;
    c.required_snr = r_f.min(rule.rate_cap_snr);
    let rate = rate_for_cap(c.required_snr);

    loop {
        if c.hop2_probes >= MAX_PROBES {
            return Err(Error::ProbingNeverTerminates);
        }
        let r_g = events.probe_hop2();
        c.hop2_probes += 1;
        c.hop2_time += params.probe();
        if rate_for_cap(r_g) >= rate {
            c.hop2_time += params.coherence;
            c.delivered = rate * params.coherence;
            break;
        }
        match rule.second_hop {
            SecondHop::ProbeOnce => break,
            // wait out the coherence interval before re-probing
            SecondHop::KeepProbing => c.hop2_time += params.coherence,
        }
    }

    c.elapsed = c.itemized_total();
    Ok(c)
}

pub fn run_cycle<R: Rng + ?Sized>(
    policy: &StoppingPolicy,
    params: &SystemParams,
    rng: &mut R,
) -> Result<CycleResult> {
    let mut events = RandomChannels::new(params, rng)?;
    run_cycle_with(&ThresholdRule::from(policy), params, &mut events)
}

/// Renewal-reward throughput estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputEstimate {
    /// `sum(delivered) / sum(elapsed)`, bits/s/Hz.
    pub mean: f64,
    /// Delta-method standard error of `mean`.
    pub stderr: f64,
    pub cycles: u64,
    pub total_time: f64,
}

impl ThroughputEstimate {
    /// Ratio-of-sums estimate over per-cycle `(delivered, elapsed)` pairs.
    pub fn from_cycles(samples: &[(f64, f64)]) -> Self {
        let n = samples.len();
        let (sum_y, sum_t) = samples
            .iter()
            .fold((0.0, 0.0), |(y, t), &(dy, dt)| (y + dy, t + dt));
        let mean = sum_y / sum_t;
        let stderr = if n >= 2 {
            let nf = n as f64;
            let ss: f64 = samples
                .iter()
                .map(|&(y, t)| {
                    let d = y - mean * t;
                    d * d
                })
                .sum();
            (ss / (nf * (nf - 1.0))).sqrt() / (sum_t / nf)
        } else {
            f64::NAN
        };
        Self {
            mean,
            stderr,
            cycles: n as u64,
            total_time: sum_t,
        }
    }
}

/// Simulates `cycles` cycles of `rule` in parallel and reduces in cycle order.
pub fn estimate_rule_throughput(
    rule: &ThresholdRule,
    params: &SystemParams,
    cycles: u64,
    seed: u64,
) -> Result<ThroughputEstimate> {
    params.validate()?;
    if cycles < MIN_CYCLES {
        return Err(Error::InvalidParam {
            name: "cycles",
            reason: format!("must be at least {MIN_CYCLES}, got {cycles}"),
        });
    }
    let contention = ContentionProcess::new(params)?;
    let (hop1, hop2) = (params.hop1(), params.hop2());
    let samples = (0..cycles)
        .into_par_iter()
        .map(|i| {
            let mut rng = cycle_rng(seed, i);
            let mut events = RandomChannels {
                contention,
                hop1,
                hop2,
                rng: &mut rng,
            };
            run_cycle_with(rule, params, &mut events).map(|c| (c.delivered, c.elapsed))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThroughputEstimate::from_cycles(&samples))
}

pub fn estimate_throughput(
    policy: &StoppingPolicy,
    params: &SystemParams,
    cycles: u64,
    seed: u64,
) -> Result<ThroughputEstimate> {
    estimate_rule_throughput(&ThresholdRule::from(policy), params, cycles, seed)
}
