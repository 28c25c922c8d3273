//! Probe-once comparator: the relay probes the second hop a single time and
//! drops the traffic on outage. Its first-hop rate cap and threshold are
//! optimized with the same fixed-point machinery as the relay-waiting policy.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::numeric::golden_section_max;
use crate::sim::{estimate_rule_throughput, SecondHop, ThresholdRule, ThroughputEstimate};
use crate::solver::{
    expected_v1, rate_for_cap, solve_fixed_point, RateCap, SolverDiagnostics, StopRewardModel,
    Tolerances,
};

const UNIMODALITY_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOncePolicy {
    pub lambda_star: f64,
    pub rate_cap_snr: f64,
    pub hop1_threshold: f64,
    pub diagnostics: SolverDiagnostics,
}

impl ProbeOncePolicy {
    pub fn rule(&self) -> ThresholdRule {
        ThresholdRule {
            hop1_threshold: self.hop1_threshold,
            rate_cap_snr: self.rate_cap_snr,
            second_hop: SecondHop::ProbeOnce,
        }
    }
}

/// First-hop net stop reward when the relay probes once.
pub fn probe_once_stop_reward(lambda: f64, r_n: f64, params: &SystemParams) -> f64 {
    expected_v1(lambda, r_n, params).value() - lambda * (params.cts + params.coherence)
}

/// Derivative of the single-probe reward in `r_n`.
fn probe_once_slope(lambda: f64, r_n: f64, params: &SystemParams) -> f64 {
    let rho = params.mean_snr_hop2;
    params.coherence
        * (-r_n / rho).exp()
        * (1.0 / ((1.0 + r_n) * LN_2) - (rate_for_cap(r_n) - lambda) / rho)
}

/// Maximizer of the probe-once stop reward over `[0, r_f]` by golden section.
pub fn best_probe_once_snr(lambda: f64, r_f: f64, params: &SystemParams, tol: f64) -> f64 {
    golden_section_max(|r| probe_once_stop_reward(lambda, r, params), 0.0, r_f, tol)
}

/// Unconstrained probe-once rate cap, with a grid check that the reward is
/// single-peaked so that the constrained maximizer is `min(r_f, cap)`.
pub fn probe_once_rate_cap(lambda: f64, params: &SystemParams, tol: f64) -> Result<RateCap> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    let f = |r: f64| probe_once_stop_reward(lambda, r, params);
    let mut hi = 1.0;
    let mut doublings = 0;
    while f(2.0 * hi) > f(hi) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 1000 {
            return Err(Error::NotConverged {
                what: "probe-once rate cap bracket",
                achieved: hi,
                tolerance: tol,
            });
        }
    }
    let upper = 2.0 * hi;
    check_unimodal(&f, upper)?;
    let snr = golden_section_max(f, 0.0, upper, tol);
    Ok(RateCap {
        snr,
        residual: probe_once_slope(lambda, snr, params),
        degenerate: false,
        iterations: 0,
    })
}

fn check_unimodal<F: Fn(f64) -> f64>(f: &F, upper: f64) -> Result<()> {
    let values: Vec<f64> = (0..=UNIMODALITY_GRID)
        .map(|i| f(upper * i as f64 / UNIMODALITY_GRID as f64))
        .collect();
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let slack = 1e-15 * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, w) in values.windows(2).enumerate() {
        let rising = w[1] >= w[0] - slack;
        let falling = w[1] <= w[0] + slack;
        if (i < peak && !rising) || (i >= peak && !falling) {
            return Err(Error::NotUnimodal {
                at: upper * i as f64 / UNIMODALITY_GRID as f64,
            });
        }
    }
    Ok(())
}

struct ProbeOnce<'a> {
    params: &'a SystemParams,
    tol: Tolerances,
}

impl StopRewardModel for ProbeOnce<'_> {
    fn params(&self) -> &SystemParams {
        self.params
    }

    fn rate_cap(&self, lambda: f64) -> Result<RateCap> {
        probe_once_rate_cap(lambda, self.params, self.tol.golden)
    }

    fn stop_reward(&self, lambda: f64, r_n: f64) -> f64 {
        probe_once_stop_reward(lambda, r_n, self.params)
    }
}

/// `G(lambda)` of the probe-once scheme.
pub fn probe_once_gap(lambda: f64, params: &SystemParams) -> Result<f64> {
    params.validate()?;
    let tol = Tolerances::for_params(params);
    let tau1 = crate::contention::mean_observation_duration(params)?;
    let model = ProbeOnce { params, tol };
    Ok(crate::solver::evaluate_gap(&model, lambda, tau1, tol.quadrature)?.gap)
}

pub fn solve_probe_once_policy(params: &SystemParams, tol: f64) -> Result<ProbeOncePolicy> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParam {
            name: "tol",
            reason: format!("must be > 0, got {tol}"),
        });
    }
    params.validate()?;
    let tol = Tolerances::for_params(params).with_gap(tol);
    let model = ProbeOnce { params, tol };
    let fp = solve_fixed_point(&model, &tol)?;
    let threshold = fp
        .eval
        .threshold
        .ok_or(Error::NeverTransmit { lambda: fp.lambda })?;
    Ok(ProbeOncePolicy {
        lambda_star: fp.lambda,
        rate_cap_snr: fp.eval.cap.snr,
        hop1_threshold: threshold,
        diagnostics: SolverDiagnostics {
            rate_cap_residual: fp.eval.cap.residual,
            optimality_residual: fp.eval.gap,
            bisection_iterations: fp.iterations,
            quadrature_error: fp.eval.quadrature_error,
        },
    })
}

pub fn estimate_probe_once_throughput(
    policy: &ProbeOncePolicy,
    params: &SystemParams,
    cycles: u64,
    seed: u64,
) -> Result<ThroughputEstimate> {
    estimate_rule_throughput(&policy.rule(), params, cycles, seed)
}
