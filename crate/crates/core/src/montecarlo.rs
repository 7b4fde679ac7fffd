//! Simulation estimate of `P(P̂_n ∈ A)` with a Wilson score interval.
//!
//! Generator: ChaCha20 (`rand_chacha::ChaCha20Rng`) keyed by
//! `SeedableRng::seed_from_u64(seed)`, with the word stream set to the
//! partition index. Each symbol is drawn by inversion: take
//! `u = (next_u64 >> 11) * 2^-53` and return the first `x` whose cumulative
//! probability exceeds `u`. Trials are split into contiguous partitions of
//! `trials / partitions` (the first `trials % partitions` partitions get one
//! extra), each run on its own stream; hit counts are summed.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::error::{check_dim, Error, Result};
use crate::measures::Dist;

pub const GENERATOR: &str = "chacha20/seed_from_u64/stream=partition/inversion-u53";

/// Two-sided 95% normal quantile.
pub const Z_95_TWO_SIDED: f64 = 1.959_963_984_540_054;
/// One-sided 95% normal quantile.
pub const Z_95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McEstimate {
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// True when `hits = 0` and the interval is the one-sided 95% upper bound.
    pub one_sided: bool,
    pub seed: u64,
    pub partitions: u32,
    pub generator: String,
}

/// Wilson score interval for `hits` successes in `trials` at normal quantile `z`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let radius = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - radius) / denom).clamp(0.0, 1.0),
        ((center + radius) / denom).clamp(0.0, 1.0),
    )
}

struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    fn new(p: &Dist) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = p
            .probs()
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        // Absorb round-off so every u in [0, 1) lands somewhere.
        if let Some(last) = cdf.iter().rposition(|_| true) {
            cdf[last] = f64::INFINITY;
        }
        Self { cdf }
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> usize {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cdf.len() - 1)
    }
}

fn run_partition(
    sampler: &Sampler,
    k: usize,
    n: u64,
    a: &ConstraintSet,
    trials: u64,
    seed: u64,
    stream: u64,
) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut counts = vec![0u64; k];
    let mut hits = 0;
    for _ in 0..trials {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            counts[sampler.draw(&mut rng)] += 1;
        }
        if a.contains_counts(&counts, n) {
            hits += 1;
        }
    }
    hits
}

/// Estimates the event probability from `trials` simulated n-samples,
/// split across `partitions` independent streams run on separate threads.
pub fn estimate_partitioned(
    p: &Dist,
    n: u64,
    a: &ConstraintSet,
    trials: u64,
    seed: u64,
    partitions: u32,
) -> Result<McEstimate> {
    check_dim(a.k(), p.len())?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be positive".into(),
        ));
    }
    if partitions == 0 {
        return Err(Error::InvalidArgument(
            "partitions must be at least 1".into(),
        ));
    }
    let sampler = Sampler::new(p);
    let k = p.len();
    let parts = partitions as u64;
    let share = |i: u64| trials / parts + u64::from(i < trials % parts);
    let hits: u64 = if partitions == 1 {
        run_partition(&sampler, k, n, a, trials, seed, 0)
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..parts)
                .map(|i| {
                    let sampler = &sampler;
                    scope.spawn(move || run_partition(sampler, k, n, a, share(i), seed, i))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("partition worker panicked"))
                .sum()
        })
    };
    let p_hat = hits as f64 / trials as f64;
    let (ci_low, ci_high, one_sided) = if hits == 0 {
        (0.0, wilson_interval(0, trials, Z_95_ONE_SIDED).1, true)
    } else {
        let (lo, hi) = wilson_interval(hits, trials, Z_95_TWO_SIDED);
        (lo.min(p_hat), hi.max(p_hat), false)
    };
    Ok(McEstimate {
        trials,
        hits,
        p_hat,
        ci_low,
        ci_high,
        one_sided,
        seed,
        partitions,
        generator: GENERATOR.to_string(),
    })
}

pub fn estimate(p: &Dist, n: u64, a: &ConstraintSet, trials: u64, seed: u64) -> Result<McEstimate> {
    estimate_partitioned(p, n, a, trials, seed, 1)
}

impl McEstimate {
    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}
