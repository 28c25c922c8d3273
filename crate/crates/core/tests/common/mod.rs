//! Independent oracles for integration tests. Nothing here calls the
//! library's root finders or quadrature.

#![allow(dead_code)]

use rand::Rng;
use relaywait::SystemParams;

pub fn log2_1p(x: f64) -> f64 {
    (1.0 + x).log2()
}

/// Stop reward of the keep-probing scheme at required SNR `x`.
pub fn phi(lambda: f64, x: f64, p: &SystemParams) -> f64 {
    log2_1p(x) * p.coherence
        - lambda * (p.cts + p.coherence + (x / p.mean_snr_hop2).exp() * p.tau2())
}

/// Stop reward of the probe-once scheme at required SNR `x`.
pub fn psi(lambda: f64, x: f64, p: &SystemParams) -> f64 {
    let s = (-x / p.mean_snr_hop2).exp();
    s * (log2_1p(x) * p.coherence - lambda * p.tau2()) - (1.0 - s) * lambda * (p.rts + p.cts)
        - lambda * (p.cts + p.coherence)
}

/// Brute-force argmax of `f` on `[0, hi]` at spacing `step`.
pub fn grid_argmax<F: Fn(f64) -> f64>(f: F, hi: f64, step: f64) -> f64 {
    let n = (hi / step).round() as u64;
    let mut best = (0.0, f(0.0));
    for i in 1..=n {
        let x = i as f64 * step;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best.0
}

/// Ternary search for the maximum of a unimodal function.
pub fn ternary_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..300 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    0.5 * (a + b)
}

/// Maximizer of a unimodal reward over `[0, inf)` with an expanding bracket.
pub fn unimodal_argmax<F: Fn(f64) -> f64>(f: F) -> f64 {
    let mut hi = 1.0;
    while f(2.0 * hi) > f(hi) {
        hi *= 2.0;
    }
    ternary_max(f, 0.0, 2.0 * hi)
}

fn tau1(p: &SystemParams) -> f64 {
    let m = p.num_sources as f64;
    let idle = (1.0 - p.tx_prob).powf(m);
    let win = m * p.tx_prob * (1.0 - p.tx_prob).powf(m - 1.0);
    (idle * p.minislot + (1.0 - idle - win) * (p.rts + p.timeout)) / win + p.rts
}

/// `E[max(stop(min(r_f, cap)), give_up)] - lambda * tau1` by composite
/// Simpson on `[0, cap]` plus the closed-form tail.
pub fn gap_oracle<F: Fn(f64, f64) -> f64>(lambda: f64, p: &SystemParams, stop: F) -> f64 {
    let give_up = -lambda * p.cts;
    let cap = unimodal_argmax(|x| stop(lambda, x));
    let rho_f = p.mean_snr_hop1;
    let integrand = |r: f64| stop(lambda, r).max(give_up) * (-r / rho_f).exp() / rho_f;
    let n = 20_000;
    let h = cap / n as f64;
    let mut s = integrand(0.0) + integrand(cap);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * integrand(i as f64 * h);
    }
    let body = s * h / 3.0;
    let tail = (-cap / rho_f).exp() * stop(lambda, cap).max(give_up);
    body + tail - lambda * tau1(p)
}

/// Grid root oracle: the first grid point in `[lo, hi]` (spacing `step`)
/// where the decreasing `g` turns negative, located by binary search over
/// grid indices. Returns the midpoint of the sign-change cell.
pub fn grid_root<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as u64;
    let at = |i: u64| lo + i as f64 * step;
    assert!(g(at(0)) > 0.0 && g(at(n)) < 0.0, "no sign change on grid");
    let (mut a, mut b) = (0u64, n);
    while b - a > 1 {
        let m = (a + b) / 2;
        if g(at(m)) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (at(a) + at(b))
}

/// Net reward of one second-hop episode allowing at most `max_probes`
/// probes (`None` = unbounded).
pub fn episode_reward<R: Rng>(
    lambda: f64,
    r_n: f64,
    max_probes: Option<u32>,
    p: &SystemParams,
    rng: &mut R,
) -> f64 {
    let payload = log2_1p(r_n) * p.coherence;
    let mut k = 0u32;
    loop {
        k += 1;
        let u: f64 = 1.0 - rng.random::<f64>();
        let r_g = -p.mean_snr_hop2 * u.ln();
        if r_g >= r_n {
            return payload - k as f64 * lambda * p.tau2();
        }
        if Some(k) == max_probes {
            return -((k - 1) as f64) * lambda * p.tau2() - lambda * (p.rts + p.cts);
        }
    }
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
