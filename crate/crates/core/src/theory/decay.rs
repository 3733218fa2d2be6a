//! The stopping-time process `X_{k+1} = X_k - Z_k`, absorbed at 1.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use super::Summary;
use crate::error::{Error, Result};
use crate::rng;

/// Rules for drawing `Z_k` given `X_k >= 2`. Each keeps
/// `1 <= Z_k <= X_k - 1` and `E[Z_k | X_k] >= alpha * X_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZSampler {
    /// Uniform on `{1, ..., X - 1}`; alpha 0.4.
    Uniform,
    /// `max(1, floor(X / 2))`; alpha 1/3.
    Halving,
    /// `1 + Bin(X - 2, 1/4)`; alpha 1/4.
    Binomial,
    /// `X - 1`: absorbed after one step.
    Full,
}

impl ZSampler {
    pub const COMPLIANT: [ZSampler; 3] = [ZSampler::Uniform, ZSampler::Halving, ZSampler::Binomial];

    pub fn alpha(self) -> f64 {
        match self {
            ZSampler::Uniform => 0.4,
            ZSampler::Halving => 1.0 / 3.0,
            ZSampler::Binomial => 0.25,
            ZSampler::Full => 0.5,
        }
    }

    pub fn sample(self, x: u64, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            ZSampler::Uniform => rng.random_range(1..x),
            ZSampler::Halving => (x / 2).max(1),
            ZSampler::Binomial => 1 + Binomial::new(x - 2, 0.25).expect("valid parameters").sample(rng),
            ZSampler::Full => x - 1,
        }
    }
}

impl fmt::Display for ZSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZSampler::Uniform => "uniform",
            ZSampler::Halving => "halving",
            ZSampler::Binomial => "binomial",
            ZSampler::Full => "full",
        })
    }
}

impl FromStr for ZSampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ZSampler::Uniform),
            "halving" => Ok(ZSampler::Halving),
            "binomial" => Ok(ZSampler::Binomial),
            "full" => Ok(ZSampler::Full),
            _ => Err(Error::contract(format!(
                "unknown sampler {s:?} (expected uniform, halving, binomial or full)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecayConfig {
    pub n: u64,
    pub sampler: ZSampler,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub n: u64,
    pub sampler: ZSampler,
    pub alpha: f64,
    pub trials: usize,
    pub tau: Summary,
    /// `ln n / ln(1 / (1 - alpha))`.
    pub bound: f64,
}

/// Upper bound on the expected absorption time.
pub fn decay_bound(n: u64, alpha: f64) -> f64 {
    (n as f64).ln() / (1.0 / (1.0 - alpha)).ln()
}

/// Absorption times over `trials` runs of an arbitrary sampler. A draw
/// outside `1..=X-1` is a contract violation.
pub fn simulate_decay<F>(n: u64, trials: usize, seed: u64, sampler: F) -> Result<Vec<u64>>
where
    F: Fn(u64, &mut ChaCha8Rng) -> u64 + Sync,
{
    if n < 1 {
        return Err(Error::contract("X_0 must be at least 1"));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, "decay", t as u64);
            let (mut x, mut tau) = (n, 0u64);
            while x > 1 {
                let z = sampler(x, &mut rng);
                if z < 1 || z >= x {
                    return Err(Error::contract(format!("sampler drew Z = {z} for X = {x}")));
                }
                x -= z;
                tau += 1;
            }
            Ok(tau)
        })
        .collect()
}

pub fn sim_decay_process(cfg: &DecayConfig) -> Result<DecayReport> {
    let sampler = cfg.sampler;
    let taus = simulate_decay(cfg.n, cfg.trials, cfg.seed, |x, rng| sampler.sample(x, rng))?;
    let taus: Vec<f64> = taus.into_iter().map(|t| t as f64).collect();
    Ok(DecayReport {
        n: cfg.n,
        sampler,
        alpha: sampler.alpha(),
        trials: cfg.trials,
        tau: Summary::of(&taus),
        bound: decay_bound(cfg.n, sampler.alpha()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(n: u64, sampler: ZSampler, trials: usize) -> DecayReport {
        sim_decay_process(&DecayConfig {
            n,
            sampler,
            trials,
            seed: 1,
        })
        .unwrap()
    }

    #[test]
    fn deterministic_samplers() {
        let r = run(1000, ZSampler::Full, 5);
        assert_eq!((r.tau.min, r.tau.max), (1.0, 1.0));
        let r = run(1024, ZSampler::Halving, 3);
        assert_eq!((r.tau.min, r.tau.max), (10.0, 10.0));
    }

    #[test]
    fn uniform_within_bound() {
        let r = run(1024, ZSampler::Uniform, 2000);
        assert!((r.bound - 13.57).abs() < 0.01);
        assert!(r.tau.mean <= r.bound);
    }

    #[test]
    fn samplers_stay_in_range() {
        let mut rng = rng::stream(3, "test", 0);
        for s in [ZSampler::Uniform, ZSampler::Halving, ZSampler::Binomial, ZSampler::Full] {
            for x in 2..200 {
                let z = s.sample(x, &mut rng);
                assert!((1..x).contains(&z), "{s} drew {z} for {x}");
            }
        }
    }

    #[test]
    fn bad_sampler_is_rejected() {
        let err = simulate_decay(10, 2, 0, |x, _| x).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn reproducible() {
        let a = simulate_decay(500, 50, 9, |x, r| ZSampler::Uniform.sample(x, r)).unwrap();
        let b = simulate_decay(500, 50, 9, |x, r| ZSampler::Uniform.sample(x, r)).unwrap();
        assert_eq!(a, b);
    }
}
