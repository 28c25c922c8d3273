//! Second-hop reward formulas, the rate-cap equation, the throughput fixed
//! point, and the first-hop SNR threshold.
//!
//! Rewards are in the transformed units `Y - lambda * T`: bits/Hz, with
//! `lambda` in bits/s/Hz and times in seconds.

use std::f64::consts::LN_2;

use crate::contention::mean_observation_duration;
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::numeric::{adaptive_simpson, bisect};

/// Smallest `lambda` tried when bracketing the fixed point.
pub const LAMBDA_FLOOR: f64 = 1e-9;

const MAX_DOUBLINGS: u32 = 64;

/// A net reward `Y - lambda * T` (bits/Hz).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TransformedReward(pub f64);

impl TransformedReward {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Rate `log2(1 + r_n)` whose minimum required SNR is `r_n`.
pub fn rate_for_cap(r_n: f64) -> f64 {
    r_n.ln_1p() / LN_2
}

/// Probability that one second-hop probe fails to support `r_n`.
fn hop2_outage(r_n: f64, params: &SystemParams) -> f64 {
    -(-r_n / params.mean_snr_hop2).exp_m1()
}

/// Expected net reward when the relay probes at most once.
pub fn expected_v1(lambda: f64, r_n: f64, params: &SystemParams) -> TransformedReward {
    let outage = hop2_outage(r_n, params);
    let success = params.hop2().survival(r_n);
    let rate = rate_for_cap(r_n);
    TransformedReward(
        success * (rate * params.coherence - lambda * params.tau2())
            + outage * (-lambda * params.probe()),
    )
}

/// Expected net reward when the relay keeps probing until the second hop
/// supports `r_n`. The number of probes is geometric with mean `1/(1 - F_g)`.
pub fn expected_v_inf(lambda: f64, r_n: f64, params: &SystemParams) -> Result<TransformedReward> {
    let success = params.hop2().survival(r_n);
    if success <= 0.0 {
        return Err(Error::ProbingNeverTerminates);
    }
    Ok(TransformedReward(
        rate_for_cap(r_n) * params.coherence - lambda * params.tau2() / success,
    ))
}

/// Expected net reward with at most `max_probes` probes, summed term by term.
pub fn expected_v_l(
    lambda: f64,
    r_n: f64,
    max_probes: u32,
    params: &SystemParams,
) -> Result<TransformedReward> {
    if max_probes == 0 {
        return Err(Error::InvalidParam {
            name: "max_probes",
            reason: "must be at least 1".into(),
        });
    }
    let outage = hop2_outage(r_n, params);
    let success = params.hop2().survival(r_n);
    let payload = rate_for_cap(r_n) * params.coherence;
    let tau2 = params.tau2();

    let mut total = 0.0;
    // P[first k-1 probes fail]
    let mut all_failed = 1.0;
    for k in 1..=max_probes {
        total += all_failed * success * (payload - f64::from(k) * lambda * tau2);
        all_failed *= outage;
    }
    total += all_failed
        * (-f64::from(max_probes - 1) * lambda * tau2 - lambda * params.probe());
    Ok(TransformedReward(total))
}

/// First-hop net stop reward as a function of the required second-hop SNR `x`:
/// `log2(1+x) td - lambda (t_cts + td + exp(x/rho_g) tau2)`.
pub fn rate_cap_objective(lambda: f64, x: f64, params: &SystemParams) -> f64 {
    rate_for_cap(x) * params.coherence
        - lambda * params.cts
        - lambda * params.coherence
        - lambda * (x / params.mean_snr_hop2).exp() * params.tau2()
}

/// Derivative of [`rate_cap_objective`] in `x`; zero at the rate cap.
pub fn rate_cap_residual(lambda: f64, x: f64, params: &SystemParams) -> f64 {
    params.coherence / ((1.0 + x) * LN_2)
        - lambda / params.mean_snr_hop2 * (x / params.mean_snr_hop2).exp() * params.tau2()
}

/// Maximizer of the stop reward over the required second-hop SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCap {
    pub snr: f64,
    /// Stationarity residual at `snr`.
    pub residual: f64,
    /// The objective is already decreasing at zero, so the cap is zero.
    pub degenerate: bool,
    pub iterations: u32,
}

pub fn solve_rate_cap(lambda: f64, params: &SystemParams) -> Result<RateCap> {
    solve_rate_cap_with(lambda, params, Tolerances::DEFAULT_RATE_CAP)
}

/// Bisection on the derivative, which is strictly decreasing.
pub fn solve_rate_cap_with(lambda: f64, params: &SystemParams, tol: f64) -> Result<RateCap> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    let d0 = rate_cap_residual(lambda, 0.0, params);
    if d0 <= 0.0 {
        return Ok(RateCap {
            snr: 0.0,
            residual: d0,
            degenerate: true,
            iterations: 0,
        });
    }
    let mut hi = 1.0;
    let mut d_hi = rate_cap_residual(lambda, hi, params);
    let mut doublings = 0;
    while d_hi >= 0.0 {
        hi *= 2.0;
        d_hi = rate_cap_residual(lambda, hi, params);
        doublings += 1;
        if doublings > MAX_DOUBLINGS * 16 || !d_hi.is_finite() {
            return Err(Error::NotConverged {
                what: "rate cap bracket",
                achieved: d_hi,
                tolerance: tol,
            });
        }
    }
    let lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    let d_lo = rate_cap_residual(lambda, lo, params);
    let b = bisect(|x| rate_cap_residual(lambda, x, params), lo, hi, d_lo, d_hi, tol);
    let (snr, residual) = b.best();
    Ok(RateCap {
        snr,
        residual,
        degenerate: false,
        iterations: b.iterations,
    })
}

/// Net reward of stopping at first-hop SNR `r_f` with rate cap `x_star`.
pub fn net_stop_reward(lambda: f64, r_f: f64, x_star: f64, params: &SystemParams) -> TransformedReward {
    TransformedReward(rate_cap_objective(lambda, r_f.min(x_star), params))
}

/// Solver tolerances. Absolute, in bits/Hz for rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|G(lambda*)|` bound.
    pub gap: f64,
    /// Rate-cap stationarity residual bound.
    pub rate_cap: f64,
    /// Absolute quadrature tolerance for the first-hop expectation.
    pub quadrature: f64,
    /// Interval width for golden-section searches.
    pub golden: f64,
}

impl Tolerances {
    pub const DEFAULT_RATE_CAP: f64 = 1e-12;
    pub const DEFAULT_GOLDEN: f64 = 1e-8;

    pub fn for_params(params: &SystemParams) -> Self {
        Self {
            gap: 1e-9 * params.coherence,
            rate_cap: Self::DEFAULT_RATE_CAP,
            quadrature: 1e-10 * params.coherence,
            golden: Self::DEFAULT_GOLDEN,
        }
    }

    pub fn with_gap(self, gap: f64) -> Self {
        Self { gap, ..self }
    }
}

/// Stop-reward shape shared by the relay-waiting and probe-once schemes:
/// increasing in the required SNR up to a cap, constant above it.
pub(crate) trait StopRewardModel {
    fn params(&self) -> &SystemParams;
    fn rate_cap(&self, lambda: f64) -> Result<RateCap>;
    /// Net reward of stopping with required second-hop SNR `r_n <= cap`.
    fn stop_reward(&self, lambda: f64, r_n: f64) -> f64;
}

pub(crate) struct KeepProbing<'a> {
    pub params: &'a SystemParams,
    pub tol: Tolerances,
}

impl StopRewardModel for KeepProbing<'_> {
    fn params(&self) -> &SystemParams {
        self.params
    }

    fn rate_cap(&self, lambda: f64) -> Result<RateCap> {
        solve_rate_cap_with(lambda, self.params, self.tol.rate_cap)
    }

    fn stop_reward(&self, lambda: f64, r_n: f64) -> f64 {
        rate_cap_objective(lambda, r_n, self.params)
    }
}

/// Smallest first-hop SNR in `[0, cap]` at which stopping is at least as good
/// as giving up, or `None` if giving up always wins.
pub(crate) fn indifference_point<M: StopRewardModel>(model: &M, lambda: f64, cap: f64) -> Option<f64> {
    let give_up = -lambda * model.params().cts;
    let h = |r: f64| model.stop_reward(lambda, r) - give_up;
    let h0 = h(0.0);
    if h0 >= 0.0 {
        return Some(0.0);
    }
    let h_cap = h(cap);
    if h_cap < 0.0 {
        return None;
    }
    Some(bisect(h, 0.0, cap, h0, h_cap, 0.0).hi)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GapEval {
    pub gap: f64,
    pub cap: RateCap,
    pub threshold: Option<f64>,
    pub quadrature_error: f64,
}

/// `E[max(stop, give-up)] - lambda * tau1`, with the expectation over the
/// exponential first-hop SNR split at the threshold and the cap.
pub(crate) fn evaluate_gap<M: StopRewardModel>(
    model: &M,
    lambda: f64,
    tau1: f64,
    quad_tol: f64,
) -> Result<GapEval> {
    let params = model.params();
    let hop1 = params.hop1();
    let give_up = -lambda * params.cts;
    let cap = model.rate_cap(lambda)?;
    let threshold = indifference_point(model, lambda, cap.snr);

    let (expected, quadrature_error) = match threshold {
        None => (give_up, 0.0),
        Some(thr) => {
            let below = -(-thr / hop1.mean_snr).exp_m1() * give_up;
            // In the survival variable s = exp(-r / rho_f) the first-hop
            // law is uniform, so the integrand carries no density weight.
            let q = adaptive_simpson(
                |s| model.stop_reward(lambda, (-hop1.mean_snr * s.ln()).min(cap.snr)),
                hop1.survival(cap.snr),
                hop1.survival(thr),
                quad_tol,
            );
            if !q.converged {
                return Err(Error::NotConverged {
                    what: "first-hop quadrature",
                    achieved: q.error,
                    tolerance: quad_tol,
                });
            }
            let tail = hop1.survival(cap.snr) * model.stop_reward(lambda, cap.snr);
            (below + q.value + tail, q.error)
        }
    };
    Ok(GapEval {
        gap: expected - lambda * tau1,
        cap,
        threshold,
        quadrature_error,
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FixedPoint {
    pub lambda: f64,
    pub eval: GapEval,
    pub iterations: u32,
}

/// Finds the root of the strictly decreasing `G(lambda)` by doubling a
/// bracket from 1 and bisecting until `|G| < tol.gap`.
pub(crate) fn solve_fixed_point<M: StopRewardModel>(model: &M, tol: &Tolerances) -> Result<FixedPoint> {
    let tau1 = mean_observation_duration(model.params())?;
    let gap = |lambda: f64| evaluate_gap(model, lambda, tau1, tol.quadrature);

    let mut lo = LAMBDA_FLOOR;
    let lo_eval = gap(lo)?;
    if lo_eval.gap <= 0.0 {
        return Err(Error::NoPositiveThroughput(format!(
            "G({lo:e}) = {:e} is not positive",
            lo_eval.gap
        )));
    }
    let mut hi = 1.0;
    let mut hi_eval = gap(hi)?;
    let mut doublings = 0;
    while hi_eval.gap >= 0.0 {
        lo = hi;
        hi *= 2.0;
        hi_eval = gap(hi)?;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::NoPositiveThroughput(
                "G(lambda) stays nonnegative while doubling lambda".into(),
            ));
        }
    }
    let mut lo_eval = gap(lo)?;

    let mut iterations = 0;
    loop {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let mid_eval = gap(mid)?;
        iterations += 1;
        if mid_eval.gap >= 0.0 {
            lo = mid;
            lo_eval = mid_eval;
        } else {
            hi = mid;
            hi_eval = mid_eval;
        }
        if mid_eval.gap.abs() < tol.gap {
            break;
        }
    }
    let (lambda, eval) = if lo_eval.gap.abs() <= hi_eval.gap.abs() {
        (lo, lo_eval)
    } else {
        (hi, hi_eval)
    };
    if eval.gap.abs() >= tol.gap {
        return Err(Error::NotConverged {
            what: "throughput fixed point",
            achieved: eval.gap.abs(),
            tolerance: tol.gap,
        });
    }
    Ok(FixedPoint {
        lambda,
        eval,
        iterations,
    })
}

/// Optimality-equation gap `G(lambda)` for the keep-probing scheme.
pub fn optimality_gap(lambda: f64, params: &SystemParams) -> Result<f64> {
    optimality_gap_with(lambda, params, &Tolerances::for_params(params))
}

pub fn optimality_gap_with(lambda: f64, params: &SystemParams, tol: &Tolerances) -> Result<f64> {
    params.validate()?;
    let tau1 = mean_observation_duration(params)?;
    let model = KeepProbing {
        params,
        tol: *tol,
    };
    Ok(evaluate_gap(&model, lambda, tau1, tol.quadrature)?.gap)
}

/// First-hop threshold at a given `lambda` (not necessarily the optimum).
pub fn hop1_threshold_at(lambda: f64, params: &SystemParams) -> Result<Option<f64>> {
    let model = KeepProbing {
        params,
        tol: Tolerances::for_params(params),
    };
    let cap = model.rate_cap(lambda)?;
    Ok(indifference_point(&model, lambda, cap.snr))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverDiagnostics {
    /// Rate-cap stationarity residual at `rate_cap_snr`.
    pub rate_cap_residual: f64,
    /// `G(lambda_star)`.
    pub optimality_residual: f64,
    pub bisection_iterations: u32,
    pub quadrature_error: f64,
}

/// Solved pure-threshold policy: stop iff `r_f >= hop1_threshold`, then
/// send at `log2(1 + min(r_f, rate_cap_snr))` and keep probing the second hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingPolicy {
    /// Optimal throughput, bits/s/Hz.
    pub lambda_star: f64,
    pub rate_cap_snr: f64,
    pub hop1_threshold: f64,
    pub diagnostics: SolverDiagnostics,
}

impl StoppingPolicy {
    pub fn should_stop(&self, r_f: f64) -> bool {
        r_f >= self.hop1_threshold
    }

    /// Required second-hop SNR when stopping at `r_f`.
    pub fn required_snr(&self, r_f: f64) -> f64 {
        r_f.min(self.rate_cap_snr)
    }
}

pub fn solve_policy(params: &SystemParams, tol: f64) -> Result<StoppingPolicy> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParam {
            name: "tol",
            reason: format!("must be > 0, got {tol}"),
        });
    }
    solve_policy_with(params, &Tolerances::for_params(params).with_gap(tol))
}

pub fn solve_policy_with(params: &SystemParams, tol: &Tolerances) -> Result<StoppingPolicy> {
    params.validate()?;
    let model = KeepProbing { params, tol: *tol };
    let fp = solve_fixed_point(&model, tol)?;
    let cap = fp.eval.cap;
    let threshold = match (cap.degenerate, fp.eval.threshold) {
        (false, Some(t)) => t,
        _ => return Err(Error::NeverTransmit { lambda: fp.lambda }),
    };
    Ok(StoppingPolicy {
        lambda_star: fp.lambda,
        rate_cap_snr: cap.snr,
        hop1_threshold: threshold,
        diagnostics: SolverDiagnostics {
            rate_cap_residual: cap.residual,
            optimality_residual: fp.eval.gap,
            bisection_iterations: fp.iterations,
            quadrature_error: fp.eval.quadrature_error,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params10() -> SystemParams {
        SystemParams::default().with_mean_snr_hop2(10.0)
    }

    #[test]
    fn rate_for_cap_values() {
        assert_eq!(rate_for_cap(0.0), 0.0);
        assert!((rate_for_cap(1.0) - 1.0).abs() < 1e-15);
        assert!((rate_for_cap(3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn v1_edge_cases() {
        let p = params10();
        let v = expected_v1(3.0, 0.0, &p).value();
        assert!((v + 3.0 * p.tau2()).abs() < 1e-15);
        let r = 5.0;
        let v = expected_v1(0.0, r, &p).value();
        let expect = (-r / 10.0f64).exp() * rate_for_cap(r) * p.coherence;
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn v_inf_edge_cases() {
        let p = params10();
        let v = expected_v_inf(3.0, 0.0, &p).unwrap().value();
        assert!((v + 3.0 * p.tau2()).abs() < 1e-15);
        let v = expected_v_inf(0.0, 5.0, &p).unwrap().value();
        assert!((v - rate_for_cap(5.0) * p.coherence).abs() < 1e-15);
        assert_eq!(
            expected_v_inf(1.0, 1e6, &p),
            Err(Error::ProbingNeverTerminates)
        );
    }

    #[test]
    fn v_l_with_one_probe_is_v1() {
        let p = params10();
        for &(lambda, r) in &[(0.0, 0.0), (0.3, 1.0), (100.0, 5.0), (2.0, 40.0)] {
            let a = expected_v_l(lambda, r, 1, &p).unwrap().value();
            let b = expected_v1(lambda, r, &p).value();
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
        assert!(expected_v_l(1.0, 1.0, 0, &p).is_err());
    }

    #[test]
    fn difference_identities_at_reference_point() {
        let p = params10();
        let (lambda, r) = (100.0, 5.0);
        let f = p.hop2().cdf(r).unwrap();
        let vinf = expected_v_inf(lambda, r, &p).unwrap().value();
        let v1 = expected_v1(lambda, r, &p).value();
        assert!((vinf - v1 - f * (vinf - lambda * p.coherence)).abs() < 1e-12);
        for l in [1u32, 2, 5, 20] {
            let vl = expected_v_l(lambda, r, l, &p).unwrap().value();
            let rhs = f.powi(l as i32) * (vinf - lambda * p.coherence);
            assert!((vinf - vl - rhs).abs() < 1e-12, "l={l}");
        }
    }

    #[test]
    fn v_l_converges_to_v_inf() {
        // F_g(r_n) = 0.39
        let p = params10();
        let r = -10.0 * (0.61f64).ln();
        assert!((p.hop2().cdf(r).unwrap() - 0.39).abs() < 1e-12);
        let vl = expected_v_l(100.0, r, 1000, &p).unwrap().value();
        let vinf = expected_v_inf(100.0, r, &p).unwrap().value();
        assert!((vl - vinf).abs() < 1e-9);
    }

    #[test]
    fn rate_cap_residual_and_local_max() {
        let p = params10();
        for lambda in [0.05, 0.2, 0.34, 1.0, 5.0] {
            let cap = solve_rate_cap(lambda, &p).unwrap();
            assert!(!cap.degenerate);
            assert!(cap.residual.abs() < 1e-10, "lambda={lambda}: {}", cap.residual);
            let phi = |x: f64| rate_cap_objective(lambda, x, &p);
            assert!(phi(cap.snr) >= phi(cap.snr + 1e-3));
            assert!(phi(cap.snr) >= phi((cap.snr - 1e-3).max(0.0)));
        }
    }

    #[test]
    fn rate_cap_degenerate_when_cost_dominates() {
        // td/ln2 <= lambda*tau2/rho_g for lambda = 200, rho_g = 10
        let cap = solve_rate_cap(200.0, &params10()).unwrap();
        assert!(cap.degenerate);
        assert_eq!(cap.snr, 0.0);
        assert!(solve_rate_cap(0.0, &params10()).is_err());
    }

    #[test]
    fn rate_cap_decreasing_in_lambda() {
        let p = params10();
        let mut prev = f64::INFINITY;
        for i in 1..=50 {
            let x = solve_rate_cap(0.05 * i as f64, &p).unwrap().snr;
            assert!(x < prev);
            prev = x;
        }
    }

    #[test]
    fn net_stop_reward_cases() {
        let p = params10();
        let lambda = 0.3;
        let x = solve_rate_cap(lambda, &p).unwrap().snr;
        let r0 = net_stop_reward(lambda, 0.0, x, &p).value();
        assert!((r0 + lambda * (p.cts + p.coherence + p.tau2())).abs() < 1e-15);
        assert_eq!(
            net_stop_reward(lambda, x, x, &p),
            net_stop_reward(lambda, 10.0 * x, x, &p)
        );
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let lam: f64 = rng.random_range(0.01..2.0);
            let r_f: f64 = rng.random_range(0.0..30.0);
            let x = solve_rate_cap(lam, &p).unwrap().snr;
            let lhs = net_stop_reward(lam, r_f, x, &p).value();
            let rhs = expected_v_inf(lam, r_f.min(x), &p).unwrap().value()
                - lam * (p.cts + p.coherence);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_negative_when_cap_degenerate() {
        let p = params10();
        let tau1 = mean_observation_duration(&p).unwrap();
        let lambda = 200.0;
        let g = optimality_gap(lambda, &p).unwrap();
        assert!(g < 0.0);
        assert!((g + lambda * (p.cts + tau1)).abs() < 1e-12);
    }

    #[test]
    fn gap_positive_at_lambda_floor() {
        // the rate cap is far out in the first-hop tail here
        for rho_g in 2..=20 {
            let p = SystemParams::default().with_mean_snr_hop2(f64::from(rho_g));
            assert!(solve_rate_cap(LAMBDA_FLOOR, &p).unwrap().snr > 30.0);
            assert!(optimality_gap(LAMBDA_FLOOR, &p).unwrap() > 1e-4, "rho_g={rho_g}");
        }
    }

    #[test]
    fn gap_strictly_decreasing() {
        let p = params10();
        let gs: Vec<f64> = (0..100)
            .map(|i| optimality_gap(0.01 + 0.2 * i as f64, &p).unwrap())
            .collect();
        assert!(gs.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn solved_policy_invariants() {
        let p = params10();
        let tol = Tolerances::for_params(&p);
        let pol = solve_policy(&p, tol.gap).unwrap();
        assert!(pol.lambda_star > 0.0 && pol.rate_cap_snr > 0.0 && pol.hop1_threshold > 0.0);
        assert!(pol.diagnostics.optimality_residual.abs() < tol.gap);
        assert!(pol.diagnostics.rate_cap_residual.abs() < 1e-10);
        let g = optimality_gap(pol.lambda_star, &p).unwrap();
        assert!(g.abs() < tol.gap);
    }

    #[test]
    fn threshold_rule_matches_reward_comparison() {
        let p = params10();
        let pol = solve_policy(&p, 1e-9 * p.coherence).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let give_up = -pol.lambda_star * p.cts;
        let mut disagreements = 0;
        for _ in 0..10_000 {
            let r_f = p.hop1().sample(&mut rng);
            let by_reward =
                net_stop_reward(pol.lambda_star, r_f, pol.rate_cap_snr, &p).value() >= give_up;
            if by_reward != pol.should_stop(r_f) {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
        // exact boundary
        let h = |r: f64| net_stop_reward(pol.lambda_star, r, pol.rate_cap_snr, &p).value();
        assert!(h(pol.hop1_threshold) >= give_up);
        assert!(h(pol.hop1_threshold.next_down()) < give_up);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(solve_policy(&params10(), 0.0).is_err());
    }
}
