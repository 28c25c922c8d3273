//! Protocol parameters and the Rayleigh-fading SNR law.
//!
//! Durations are stored in seconds and SNRs are linear (not dB).

use rand::Rng;

use crate::error::{Error, Result};

/// Timing, contention and channel parameters of the relay network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Number of source-destination pairs.
    pub num_sources: u32,
    /// Per-minislot RTS transmission probability of each source.
    pub tx_prob: f64,
    pub minislot: f64,
    pub rts: f64,
    pub cts: f64,
    pub timeout: f64,
    /// Channel coherence time, also the data transmission time of each hop.
    pub coherence: f64,
    /// Mean SNR of the source-relay hop.
    pub mean_snr_hop1: f64,
    /// Mean SNR of the relay-destination hop.
    pub mean_snr_hop2: f64,
}

impl Default for SystemParams {
    /// 18 pairs, p = 0.1, 20 us minislot, 103 us RTS, 106 us CTS and
    /// timeout, 0.8 ms coherence time, unit first-hop SNR, second-hop SNR 10.
    fn default() -> Self {
        Self {
            num_sources: 18,
            tx_prob: 0.1,
            minislot: 20e-6,
            rts: 103e-6,
            cts: 106e-6,
            timeout: 106e-6,
            coherence: 0.8e-3,
            mean_snr_hop1: 1.0,
            mean_snr_hop2: 10.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        if self.num_sources == 0 {
            return Err(Error::InvalidParam {
                name: "num_sources",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.tx_prob > 0.0 && self.tx_prob <= 1.0) {
            return Err(Error::InvalidParam {
                name: "tx_prob",
                reason: format!("must lie in (0, 1], got {}", self.tx_prob),
            });
        }
        positive("minislot", self.minislot)?;
        positive("rts", self.rts)?;
        positive("cts", self.cts)?;
        positive("timeout", self.timeout)?;
        positive("coherence", self.coherence)?;
        positive("mean_snr_hop1", self.mean_snr_hop1)?;
        positive("mean_snr_hop2", self.mean_snr_hop2)?;
        Ok(())
    }

    /// Second-hop cost of one probe plus one coherence interval.
    pub fn tau2(&self) -> f64 {
        self.rts + self.cts + self.coherence
    }

    /// Duration of one RTS/CTS probing exchange.
    pub fn probe(&self) -> f64 {
        self.rts + self.cts
    }

    pub fn hop1(&self) -> ChannelDist {
        ChannelDist {
            mean_snr: self.mean_snr_hop1,
        }
    }

    pub fn hop2(&self) -> ChannelDist {
        ChannelDist {
            mean_snr: self.mean_snr_hop2,
        }
    }

    pub fn with_mean_snr_hop2(self, mean_snr_hop2: f64) -> Self {
        Self {
            mean_snr_hop2,
            ..self
        }
    }
}

/// Exponential SNR law of a Rayleigh-fading link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDist {
    pub mean_snr: f64,
}

impl ChannelDist {
    pub fn new(mean_snr: f64) -> Result<Self> {
        if mean_snr.is_finite() && mean_snr > 0.0 {
            Ok(Self { mean_snr })
        } else {
            Err(Error::InvalidParam {
                name: "mean_snr",
                reason: format!("must be finite and > 0, got {mean_snr}"),
            })
        }
    }

    /// `P[snr' <= snr] = 1 - exp(-snr / mean)`.
    pub fn cdf(&self, snr: f64) -> Result<f64> {
        if snr.is_nan() || snr < 0.0 {
            return Err(Error::Domain(format!("SNR must be >= 0, got {snr}")));
        }
        Ok(-(-snr / self.mean_snr).exp_m1())
    }

    /// `P[snr' > snr]`, computed directly to keep precision in the tail.
    pub fn survival(&self, snr: f64) -> f64 {
        (-snr / self.mean_snr).exp()
    }

    pub fn pdf(&self, snr: f64) -> f64 {
        self.survival(snr) / self.mean_snr
    }

    /// Inverse-CDF transform of a uniform variate `u` in (0, 1].
    pub fn snr_from_uniform(&self, u: f64) -> f64 {
        let v = -self.mean_snr * u.ln();
        // -0.0 at u = 1
        v.max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.snr_from_uniform(open_closed_unit(rng))
    }
}

/// Uniform variate on (0, 1].
pub fn open_closed_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_params_are_valid() {
        let p = SystemParams::default();
        p.validate().unwrap();
        assert!((p.tau2() - 1009e-6).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        let base = SystemParams::default();
        for bad in [
            SystemParams { num_sources: 0, ..base },
            SystemParams { tx_prob: 0.0, ..base },
            SystemParams { tx_prob: 1.5, ..base },
            SystemParams { minislot: 0.0, ..base },
            SystemParams { cts: -1.0, ..base },
            SystemParams { coherence: f64::NAN, ..base },
            SystemParams { mean_snr_hop2: 0.0, ..base },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(SystemParams { tx_prob: 1.0, ..base }.validate().is_ok());
    }

    #[test]
    fn cdf_values() {
        let d = ChannelDist::new(10.0).unwrap();
        assert_eq!(d.cdf(0.0).unwrap(), 0.0);
        assert!((d.cdf(10.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!(d.cdf(-1e-9).is_err());
        assert!(d.cdf(1e6).unwrap() <= 1.0);
    }

    #[test]
    fn inverse_cdf_endpoints() {
        assert_eq!(ChannelDist::new(3.0).unwrap().snr_from_uniform(1.0), 0.0);
        let d = ChannelDist::new(5.0).unwrap();
        assert!((d.snr_from_uniform((-1.0f64).exp()) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn sample_mean_converges() {
        let d = ChannelDist::new(10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((9.97..=10.03).contains(&mean), "mean {mean}");
    }

    #[test]
    fn empirical_cdf_matches_within_ks_tolerance() {
        let d = ChannelDist::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = d.cdf(x).unwrap();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((hi - f).abs());
        }
        assert!(ks < 0.002, "KS statistic {ks}");
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let d = ChannelDist::new(2.0).unwrap();
        let a: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(3);
            (0..100).map(|_| d.sample(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(3);
            (0..100).map(|_| d.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }
}
