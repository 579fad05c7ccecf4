//! Path-integral Monte Carlo estimate of the Euclidean propagator.
//!
//! With `N` slices of width `ε` the lattice amplitude is
//!
//! ```text
//! G_ε(x_in, x_fi) = G_free(x_in, x_fi; T) · ⟨exp(−U/hbar)⟩_free,
//! U = ε Σ_k (V(x_k) + V(x_{k+1})) / 2,
//! ```
//!
//! where the free Gaussian bridge is normalized exactly. The average is
//! computed as a product of ratios `⟨exp(−Δλ U/hbar)⟩_λ` along a ladder
//! `0 = λ_0 < λ_1 < … < 1` (stepping stones), each stage sampling
//! `exp(−[S_kin + λ U]/hbar)` by Metropolis regeneration of path segments
//! from the free bridge. The step `Δλ` adapts to the observed spread of `U`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::exec::Executor;
use crate::model::{BoundarySet, PolynomialPotential, Units};
use crate::spectral::PropagatorTable;
use crate::stats::{block_means, integrated_autocorrelation, jackknife};
use crate::{Error, Result};

/// Default slice width.
pub const DEFAULT_EPSILON: f64 = 1.0 / 256.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub n_slices: usize,
    pub seed: u64,
    /// Production sweeps per stage.
    pub n_sweeps: usize,
    /// Equilibration sweeps at the start of every stage.
    pub n_therm: usize,
    /// Sweeps between stored measurements.
    pub n_decorrelate: usize,
    /// Target spread of `Δλ U / hbar` per stage.
    pub stage_scale: f64,
    pub max_stages: usize,
}

impl LatticeConfig {
    /// Defaults with `n_slices = max(32, ceil(T / ε))`.
    pub fn for_time(t: f64, seed: u64) -> Self {
        LatticeConfig {
            n_slices: ((t / DEFAULT_EPSILON).ceil() as usize).max(32),
            seed,
            n_sweeps: 4000,
            n_therm: 200,
            n_decorrelate: 2,
            stage_scale: 1.0,
            max_stages: 400,
        }
    }

    pub fn epsilon(&self, t: f64) -> f64 {
        t / self.n_slices as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_slices < 2 {
            return Err(Error::param("n_slices", "need at least 2 slices"));
        }
        if self.n_sweeps == 0 || self.n_therm == 0 || self.n_decorrelate == 0 {
            return Err(Error::param("sweeps", "all sweep counts must be positive"));
        }
        if self.n_sweeps / self.n_decorrelate < 16 {
            return Err(Error::param("n_sweeps", "need at least 16 measurements per stage"));
        }
        if !(self.stage_scale > 0.0) || self.max_stages == 0 {
            return Err(Error::param("stage_scale", "must be positive"));
        }
        Ok(())
    }
}

/// `Σ_k [ m (x_{k+1} − x_k)² / 2ε + ε (V(x_{k+1}) + V(x_k)) / 2 ]`.
pub fn euclidean_lattice_action(path: &[f64], potential: &PolynomialPotential, mass: f64, epsilon: f64) -> f64 {
    path.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            mass * d * d / (2.0 * epsilon) + 0.5 * epsilon * (potential.value(w[0]) + potential.value(w[1]))
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryDiagnostics {
    pub i: usize,
    pub j: usize,
    /// Mean Metropolis acceptance over the interacting stages.
    pub acceptance: f64,
    /// Largest integrated autocorrelation time over the stages, in sweeps.
    pub tau: f64,
    pub stages: usize,
    pub segment: usize,
    /// `tau` exceeded `n_decorrelate` in some stage.
    pub slow_mixing: bool,
    pub log_g: f64,
    pub log_g_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PimcOutput {
    pub table: PropagatorTable,
    /// Entries with `i ≤ j`; the table is filled symmetrically.
    pub diagnostics: Vec<EntryDiagnostics>,
    pub epsilon: f64,
    /// `ε ω_max > 0.1` over the boundary interval.
    pub epsilon_too_coarse: bool,
}

struct Chain<'a> {
    potential: &'a PolynomialPotential,
    mass: f64,
    eps: f64,
    hbar: f64,
    x: Vec<f64>,
    v: Vec<f64>,
    rng: ChaCha8Rng,
    segment: usize,
    scratch: Vec<f64>,
    scratch_v: Vec<f64>,
}

impl Chain<'_> {
    fn n(&self) -> usize {
        self.x.len() - 1
    }

    fn potential_energy(&self) -> f64 {
        let n = self.n();
        self.eps * (0.5 * (self.v[0] + self.v[n]) + self.v[1..n].iter().sum::<f64>())
    }

    /// Free-bridge regeneration of `x[s..s+len]` between the fixed
    /// neighbours `x[s−1]` and `x[s+len]`, written to `scratch`.
    fn bridge(&mut self, s: usize, len: usize) {
        let var_step = self.hbar * self.eps / self.mass;
        let target = self.x[s + len];
        let mut prev = self.x[s - 1];
        self.scratch.clear();
        for k in 0..len {
            let remaining = (len - k + 1) as f64;
            let mean = prev + (target - prev) / remaining;
            let sd = (var_step * (remaining - 1.0) / remaining).sqrt();
            let z: f64 = self.rng.sample(StandardNormal);
            prev = mean + sd * z;
            self.scratch.push(prev);
        }
    }

    fn resample_all(&mut self) {
        let n = self.n();
        self.bridge(1, n - 1);
        for k in 1..n {
            self.x[k] = self.scratch[k - 1];
            self.v[k] = self.potential.value(self.x[k]);
        }
    }

    /// One sweep of segment moves at coupling `lambda`; returns (accepted, tried).
    fn sweep(&mut self, lambda: f64) -> (usize, usize) {
        let n = self.n();
        let len = self.segment.min(n - 1);
        let moves = (n - 1).div_ceil(len);
        let mut accepted = 0;
        for _ in 0..moves {
            let s = self.rng.random_range(1..=n - len);
            self.bridge(s, len);
            self.scratch_v.clear();
            let mut dv = 0.0;
            for k in 0..len {
                let v = self.potential.value(self.scratch[k]);
                dv += v - self.v[s + k];
                self.scratch_v.push(v);
            }
            let log_accept = -lambda * self.eps * dv / self.hbar;
            if log_accept >= 0.0 || self.rng.random::<f64>() < log_accept.exp() {
                self.x[s..s + len].copy_from_slice(&self.scratch);
                self.v[s..s + len].copy_from_slice(&self.scratch_v);
                accepted += 1;
            }
        }
        (accepted, moves)
    }
}

struct StageEstimate {
    log_ratio: f64,
    variance: f64,
    tau: f64,
}

/// `ln ⟨exp(−Δλ U / hbar)⟩` over the samples with its blocked jackknife error.
fn stage_ratio(samples: &[f64], dl: f64, hbar: f64, n_decorrelate: usize) -> StageEstimate {
    let u_min = samples.iter().fold(f64::INFINITY, |m, &u| m.min(u));
    let w: Vec<f64> = samples.iter().map(|&u| (-dl * (u - u_min) / hbar).exp()).collect();
    let tau = integrated_autocorrelation(&w).max(integrated_autocorrelation(samples));
    let len = (4.0 * tau).ceil() as usize;
    let blocks = block_means(&w, len.max(1));
    let (est, err) = jackknife(&blocks, |m| m.ln());
    StageEstimate {
        log_ratio: est - dl * u_min / hbar,
        variance: err * err,
        tau: tau * n_decorrelate as f64,
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    crate::stats::variance(xs).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn estimate_entry(
    potential: &PolynomialPotential,
    mass: f64,
    x_in: f64,
    x_fi: f64,
    t: f64,
    cfg: &LatticeConfig,
    units: Units,
    stream: u64,
) -> Result<(f64, f64, EntryDiagnostics)> {
    let n = cfg.n_slices;
    let eps = cfg.epsilon(t);
    let hbar = units.hbar;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut x = vec![0.0; n + 1];
    x[0] = x_in;
    x[n] = x_fi;
    let v = x.iter().map(|&p| potential.value(p)).collect();
    let mut chain = Chain {
        potential,
        mass,
        eps,
        hbar,
        x,
        v,
        rng,
        segment: (n / 4).max(1),
        scratch: Vec::with_capacity(n),
        scratch_v: Vec::with_capacity(n),
    };
    let measurements = cfg.n_sweeps / cfg.n_decorrelate;

    let mut lambda = 0.0;
    let mut log_g = 0.5 * (mass / (2.0 * PI * hbar * t)).ln() - mass * (x_fi - x_in).powi(2) / (2.0 * hbar * t);
    let mut var = 0.0;
    let mut tau_max = 0.5;
    let mut stages = 0;
    let (mut acc, mut tried) = (0usize, 0usize);
    let mut samples = Vec::with_capacity(measurements);

    while lambda < 1.0 {
        if stages >= cfg.max_stages {
            return Err(Error::param("max_stages", "stage ladder did not reach λ = 1"));
        }
        samples.clear();
        if lambda == 0.0 {
            // the free bridge is sampled exactly
            for _ in 0..measurements {
                chain.resample_all();
                samples.push(chain.potential_energy());
            }
        } else {
            for _ in 0..cfg.n_therm {
                let (a, m) = chain.sweep(lambda);
                // keep the segment length in the 40–60 % acceptance window
                let rate = a as f64 / m as f64;
                if rate < 0.4 && chain.segment > 1 {
                    chain.segment -= 1;
                } else if rate > 0.6 && chain.segment < n - 1 {
                    chain.segment += 1;
                }
            }
            for _ in 0..measurements {
                for _ in 0..cfg.n_decorrelate {
                    let (a, m) = chain.sweep(lambda);
                    acc += a;
                    tried += m;
                }
                samples.push(chain.potential_energy());
            }
        }
        let spread = std_dev(&samples);
        let dl = if spread > 0.0 {
            (cfg.stage_scale * hbar / spread).min(1.0 - lambda)
        } else {
            1.0 - lambda
        };
        let est = stage_ratio(&samples, dl, hbar, cfg.n_decorrelate);
        log_g += est.log_ratio;
        var += est.variance;
        if lambda > 0.0 {
            tau_max = f64::max(tau_max, est.tau);
        }
        lambda = if 1.0 - (lambda + dl) < 1e-12 { 1.0 } else { lambda + dl };
        stages += 1;
    }
    let acceptance = if tried > 0 { acc as f64 / tried as f64 } else { 1.0 };
    let diag = EntryDiagnostics {
        i: 0,
        j: 0,
        acceptance,
        tau: tau_max,
        stages,
        segment: chain.segment,
        slow_mixing: tau_max > cfg.n_decorrelate as f64,
        log_g,
        log_g_error: var.sqrt(),
    };
    Ok((log_g, var.sqrt(), diag))
}

/// PIMC table over all boundary pairs; pair `(i, j)` with `i ≤ j` uses RNG
/// stream `i·J + j` of the master seed, so results do not depend on the
/// executor.
pub fn pimc_propagator<E: Executor>(
    potential: &PolynomialPotential,
    mass: f64,
    boundary: &BoundarySet,
    t: f64,
    cfg: &LatticeConfig,
    units: Units,
    exec: &E,
) -> Result<PimcOutput> {
    potential.require_confining()?;
    cfg.validate()?;
    if !(mass > 0.0) {
        return Err(Error::param("mass", "must be positive"));
    }
    if !(t > 0.0) {
        return Err(Error::param("T", "must be positive"));
    }
    let j = boundary.len();
    let pts = boundary.points();
    let pairs: Vec<(usize, usize)> = (0..j).flat_map(|a| (a..j).map(move |b| (a, b))).collect();
    let results = exec.map_indexed(pairs.len(), |p| {
        let (a, b) = pairs[p];
        estimate_entry(potential, mass, pts[a], pts[b], t, cfg, units, (a * j + b) as u64)
    });
    let mut values = vec![0.0; j * j];
    let mut sigmas = vec![0.0; j * j];
    let mut diagnostics = Vec::with_capacity(pairs.len());
    for (&(a, b), r) in pairs.iter().zip(results) {
        let (lg, err, mut d) = r?;
        let g = lg.exp();
        values[a * j + b] = g;
        values[b * j + a] = g;
        sigmas[a * j + b] = g * err;
        sigmas[b * j + a] = g * err;
        d.i = a;
        d.j = b;
        diagnostics.push(d);
    }
    let eps = cfg.epsilon(t);
    let (lo, hi) = boundary.interval();
    let curvature = (0..=64)
        .map(|k| potential.second_derivative(lo + (hi - lo) * k as f64 / 64.0).abs())
        .fold(0.0f64, f64::max);
    let table = PropagatorTable::new(boundary.clone(), t, values, sigmas);
    table.check_positive()?;
    Ok(PimcOutput {
        table,
        diagnostics,
        epsilon: eps,
        epsilon_too_coarse: eps * (curvature / mass).sqrt() > 0.1,
    })
}
