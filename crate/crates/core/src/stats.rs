//! Time-series statistics for Markov-chain output: integrated
//! autocorrelation time, blocking and jackknife errors.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (`n − 1` denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Integrated autocorrelation time `τ = ½ + Σ_{t≥1} ρ(t)` with Sokal's
/// self-consistent window `W ≥ c τ(W)`, `c = 6`. Units are samples; an
/// uncorrelated series gives `τ ≈ ½`.
pub fn integrated_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 0.5;
    }
    let m = mean(xs);
    let c0 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for t in 1..n / 2 {
        let ct = xs[..n - t]
            .iter()
            .zip(&xs[t..])
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / n as f64;
        tau += ct / c0;
        if t as f64 >= 6.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Averages of consecutive blocks of length `len` (a trailing partial
/// block is dropped).
pub fn block_means(xs: &[f64], len: usize) -> Vec<f64> {
    xs.chunks_exact(len.max(1)).map(mean).collect()
}

/// Jackknife estimate and standard error of `g(mean)` over block means.
pub fn jackknife(blocks: &[f64], g: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = blocks.len();
    let total: f64 = blocks.iter().sum();
    let full = g(total / n as f64);
    if n < 2 {
        return (full, f64::INFINITY);
    }
    let loo: Vec<f64> = blocks
        .iter()
        .map(|b| g((total - b) / (n - 1) as f64))
        .collect();
    let loo_mean = mean(&loo);
    let var = loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)).sum::<f64>() * (n - 1) as f64
        / n as f64;
    // bias-corrected estimator
    (n as f64 * full - (n - 1) as f64 * loo_mean, var.sqrt())
}
