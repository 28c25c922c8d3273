//! Self-check suite run by the `verify` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline::solve_probe_once_policy;
use crate::contention::{mean_observation_duration, ContentionProcess};
use crate::error::Result;
use crate::model::SystemParams;
use crate::sim::{cycle_rng, estimate_throughput};
use crate::solver::{
    expected_v1, expected_v_inf, expected_v_l, net_stop_reward, optimality_gap, solve_policy,
};

/// One check: passes when `achieved <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub achieved: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, achieved: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            achieved,
            tolerance,
            passed: achieved < tolerance,
        }
    }

    fn at_most(name: impl Into<String>, achieved: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            achieved,
            tolerance,
            passed: achieved <= tolerance,
        }
    }
}

const IDENTITY_TOL: f64 = 1e-12;
const RATE_CAP_TOL: f64 = 1e-10;
const TAU1_REL_TOL: f64 = 0.005;
const RENEWAL_REL_TOL: f64 = 0.01;
const THRESHOLD_DRAWS: usize = 10_000;
const MAX_PROBES_CHECKED: u32 = 50;

/// `(lambda, r_n)` grid; `r_n` spans 0 to 4 mean second-hop SNRs.
fn reward_grid(params: &SystemParams) -> impl Iterator<Item = (f64, f64)> {
    let rho_g = params.mean_snr_hop2;
    let lambdas = [0.01, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 200.0, 1000.0];
    let snrs = [0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 4.0];
    lambdas
        .into_iter()
        .flat_map(move |l| snrs.into_iter().map(move |r| (l, r * rho_g)))
}

/// Largest violation of the single-probe and l-probe difference identities.
pub fn identity_errors(params: &SystemParams) -> Result<(f64, f64)> {
    let mut one = 0.0f64;
    let mut many = 0.0f64;
    for (lambda, r) in reward_grid(params) {
        let f = params.hop2().cdf(r)?;
        let vinf = expected_v_inf(lambda, r, params)?.value();
        let excess = vinf - lambda * params.coherence;
        let v1 = expected_v1(lambda, r, params).value();
        one = one.max((vinf - v1 - f * excess).abs());
        for l in [1u32, 2, 5, 20] {
            let vl = expected_v_l(lambda, r, l, params)?.value();
            many = many.max((vinf - vl - f.powi(l as i32) * excess).abs());
        }
    }
    Ok((one, many))
}

/// Count of grid points where the best bounded-probe strategy is not the one
/// predicted by comparing `E[V_inf]` with `lambda * td`.
pub fn dichotomy_violations(params: &SystemParams) -> Result<u64> {
    let mut violations = 0;
    for (lambda, r) in reward_grid(params) {
        let vinf = expected_v_inf(lambda, r, params)?.value();
        let v1 = expected_v1(lambda, r, params).value();
        let slack = 1e-12 * (1.0 + vinf.abs());
        let keep_probing = vinf >= lambda * params.coherence;
        for l in 1..=MAX_PROBES_CHECKED {
            let vl = expected_v_l(lambda, r, l, params)?.value();
            let ok = if keep_probing {
                vinf >= vl - slack
            } else {
                l == 1 || v1 > vl - slack
            };
            if !ok {
                violations += 1;
            }
        }
        if !keep_probing {
            // transmitting never beats giving up on the first hop
            if v1 - lambda * (params.cts + params.coherence) >= -lambda * params.cts {
                violations += 1;
            }
        }
    }
    Ok(violations)
}

/// Runs every check for one parameter set.
pub fn run_checks(params: &SystemParams, cycles: u64, seed: u64, gap_tol: f64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let tau1 = mean_observation_duration(params)?;
    let contention = ContentionProcess::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hop1 = params.hop1();
    let mut total = 0.0;
    for _ in 0..cycles {
        total += contention.observe(&hop1, &mut rng)?.duration;
    }
    let empirical = total / cycles as f64;
    checks.push(Check::below(
        "mean observation duration (relative error)",
        (empirical - tau1).abs() / tau1,
        TAU1_REL_TOL,
    ));

    let (one, many) = identity_errors(params)?;
    checks.push(Check::below("single-probe difference identity", one, IDENTITY_TOL));
    checks.push(Check::below("l-probe difference identity", many, IDENTITY_TOL));
    checks.push(Check::at_most(
        "second-hop dichotomy violations",
        dichotomy_violations(params)? as f64,
        0.0,
    ));

    let policy = solve_policy(params, gap_tol)?;
    checks.push(Check::below(
        "rate-cap residual",
        policy.diagnostics.rate_cap_residual.abs(),
        RATE_CAP_TOL,
    ));
    checks.push(Check::below(
        "fixed-point residual |G(lambda*)|",
        optimality_gap(policy.lambda_star, params)?.abs(),
        gap_tol,
    ));

    let mut rng = cycle_rng(seed, u64::MAX);
    let give_up = -policy.lambda_star * params.cts;
    let mut disagreements = 0u64;
    for _ in 0..THRESHOLD_DRAWS {
        // oversample the region around the threshold
        let r_f = if rng.random::<bool>() {
            hop1.sample(&mut rng)
        } else {
            policy.hop1_threshold * rng.random_range(0.5..1.5)
        };
        let by_reward =
            net_stop_reward(policy.lambda_star, r_f, policy.rate_cap_snr, params).value() >= give_up;
        if by_reward != policy.should_stop(r_f) {
            disagreements += 1;
        }
    }
    checks.push(Check::at_most(
        "threshold rule disagreements",
        disagreements as f64,
        0.0,
    ));

    let est = estimate_throughput(&policy, params, cycles, seed)?;
    checks.push(Check::below(
        "simulated throughput vs lambda* (relative error)",
        (est.mean - policy.lambda_star).abs() / policy.lambda_star,
        RENEWAL_REL_TOL,
    ));

    let base = solve_probe_once_policy(params, gap_tol)?;
    checks.push(Check::at_most(
        "probe-once lambda* minus relay-waiting lambda*",
        base.lambda_star - policy.lambda_star,
        0.0,
    ));

    Ok(checks)
}
