//! Euclidean classical paths of a trial action.
//!
//! The boundary-value problem `m x'' = V'(x)`, `x(0) = x_in`, `x(T) = x_fi`
//! is solved by minimizing the time-sliced action
//!
//! ```text
//! S_N = Σ_k [ m (x_{k+1} − x_k)² / 2Δ + Δ (V(x_k) + V(x_{k+1})) / 2 ]
//! ```
//!
//! with damped Newton steps on its tridiagonal Hessian. Its stationary points
//! are Störmer–Verlet trajectories, whose error expands in even powers of
//! `Δ`, so one Richardson step between `N` and `2N` slices leaves `O(Δ⁴)`.
//! Several starting paths (straight line, dwelling near each minimum of `V`)
//! are relaxed and the least action minimum is kept. A non-positive pivot of
//! the Hessian at the optimum is a conjugate point.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::linalg::{solve_tridiagonal, tridiagonal_pivots};
use crate::model::{ActionParams, PolynomialPotential};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// Target `Δ · ω_max` on the coarse level.
    pub step_scale: f64,
    pub min_slices: usize,
    pub max_slices: usize,
    /// Fixed coarse slice count, overriding the automatic choice.
    pub slices: Option<usize>,
    pub max_iterations: usize,
    /// Two distinct minima closer than this in action are reported as ambiguous.
    pub ambiguity_tolerance: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            step_scale: 0.02,
            min_slices: 200,
            max_slices: 40_000,
            slices: None,
            max_iterations: 200,
            ambiguity_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPath {
    pub times: Vec<f64>,
    /// Extrapolated positions on the coarse time nodes.
    pub positions: Vec<f64>,
    /// `∫ [m/2 x'² + V(x)] dt`.
    pub action: f64,
    /// `∫ x'²/2 dt`, equal to `∂S/∂m` at fixed endpoints.
    pub kinetic: f64,
    /// `∫ x^k dt` for `k = 0..=degree`, equal to `∂S/∂v_k`.
    pub moments: Vec<f64>,
    /// Distinct local minima found besides the returned one.
    pub discarded: usize,
    /// A discarded minimum lies within the ambiguity tolerance in action.
    pub ambiguous: bool,
}

struct Level {
    x: Vec<f64>,
    action: f64,
    kinetic: f64,
    moments: Vec<f64>,
}

struct Problem<'a> {
    potential: &'a PolynomialPotential,
    mass: f64,
    dt: f64,
}

impl Problem<'_> {
    fn action(&self, x: &[f64]) -> f64 {
        let (m, dt) = (self.mass, self.dt);
        let mut s = 0.0;
        let mut v_prev = self.potential.value(x[0]);
        for w in x.windows(2) {
            let d = w[1] - w[0];
            let v = self.potential.value(w[1]);
            s += m * d * d / (2.0 * dt) + 0.5 * dt * (v_prev + v);
            v_prev = v;
        }
        s
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (m, dt) = (self.mass, self.dt);
        (1..x.len() - 1)
            .map(|k| m * (2.0 * x[k] - x[k - 1] - x[k + 1]) / dt + dt * self.potential.derivative(x[k]))
            .collect()
    }

    fn hessian_diag(&self, x: &[f64]) -> Vec<f64> {
        (1..x.len() - 1)
            .map(|k| 2.0 * self.mass / self.dt + self.dt * self.potential.second_derivative(x[k]))
            .collect()
    }

    fn is_minimum(&self, x: &[f64]) -> bool {
        let diag = self.hessian_diag(x);
        let off = vec![-self.mass / self.dt; diag.len().saturating_sub(1)];
        tridiagonal_pivots(&diag, &off).iter().all(|&p| p > 0.0)
    }

    /// Relaxes `x` (endpoints fixed) to a stationary point of the action.
    fn relax(&self, x: &mut [f64], max_iterations: usize) -> Result<()> {
        let n = x.len() - 2;
        if n == 0 {
            return Ok(());
        }
        let off_val = -self.mass / self.dt;
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut s0 = self.action(x);
        for _ in 0..max_iterations {
            let g = self.gradient(x);
            let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gnorm == 0.0 {
                return Ok(());
            }
            let diag = self.hessian_diag(x);
            let off = vec![off_val; n - 1];
            let top = 2.0 * self.mass / self.dt;
            let mut shift = 0.0;
            let step = loop {
                let shifted: Vec<f64> = diag.iter().map(|d| d + shift).collect();
                if tridiagonal_pivots(&shifted, &off).iter().all(|&p| p > 0.0) {
                    let mut rhs: Vec<f64> = g.iter().map(|v| -v).collect();
                    if solve_tridiagonal(&off, &shifted, &off, &mut rhs).is_some() {
                        break rhs;
                    }
                }
                shift = if shift == 0.0 { 1e-3 * top } else { 10.0 * shift };
                if shift > 1e12 * top {
                    return Err(Error::BvpNoConvergence("Hessian shift diverged".into()));
                }
            };
            let slope: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
            let dmax = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if shift == 0.0 && dmax <= 1e-12 * scale {
                return Ok(());
            }
            let mut alpha = 1.0;
            let mut trial = x.to_vec();
            let mut accepted = false;
            for _ in 0..60 {
                for k in 0..n {
                    trial[k + 1] = x[k + 1] + alpha * step[k];
                }
                let s1 = self.action(&trial);
                if s1.is_finite() {
                    let armijo = s1 <= s0 + 1e-4 * alpha * slope;
                    // below rounding the action cannot discriminate; use the gradient
                    let flat = shift == 0.0
                        && (s1 - s0).abs() <= 1e-13 * s0.abs().max(1.0)
                        && self.gradient(&trial).iter().fold(0.0f64, |m, v| m.max(v.abs())) < gnorm;
                    if armijo || flat {
                        s0 = s1;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                if dmax <= 1e-8 * scale {
                    return Ok(());
                }
                return Err(Error::BvpNoConvergence("line search failed".into()));
            }
            x.copy_from_slice(&trial);
            // quadratic convergence: the remaining error is O(dmax²)
            if shift == 0.0 && dmax <= 1e-8 * scale {
                return Ok(());
            }
        }
        Err(Error::BvpNoConvergence(format!(
            "no convergence after {max_iterations} Newton iterations"
        )))
    }

    fn level(&self, x: Vec<f64>, degree: usize) -> Level {
        let dt = self.dt;
        let mut kinetic = 0.0;
        let mut moments = vec![0.0; degree + 1];
        for w in x.windows(2) {
            let d = w[1] - w[0];
            kinetic += d * d / (2.0 * dt);
            let (mut pa, mut pb) = (1.0, 1.0);
            for mk in moments.iter_mut() {
                *mk += 0.5 * dt * (pa + pb);
                pa *= w[0];
                pb *= w[1];
            }
        }
        Level {
            action: self.action(&x),
            x,
            kinetic,
            moments,
        }
    }
}

fn straight(x_in: f64, x_fi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| x_in + (x_fi - x_in) * k as f64 / n as f64).collect()
}

/// Starting path that relaxes quickly to `centre` and leaves it at the end.
fn dwell(x_in: f64, x_fi: f64, centre: f64, rate: f64, t: f64, n: usize) -> Vec<f64> {
    let tail = (-rate * t).exp();
    (0..=n)
        .map(|k| {
            let s = t * k as f64 / n as f64;
            let a = (-rate * s).exp();
            let b = (-rate * (t - s)).exp();
            // exact endpoints despite the overlapping tails
            let ca = (x_in - centre - (x_fi - centre) * tail) / (1.0 - tail * tail);
            let cb = (x_fi - centre - (x_in - centre) * tail) / (1.0 - tail * tail);
            centre + ca * a + cb * b
        })
        .collect()
}

fn refine(coarse: &[f64]) -> Vec<f64> {
    let mut fine = Vec::with_capacity(2 * coarse.len() - 1);
    for w in coarse.windows(2) {
        fine.push(w[0]);
        fine.push(0.5 * (w[0] + w[1]));
    }
    fine.push(*coarse.last().unwrap());
    fine
}

/// Boundary-value solver bound to one trial action.
pub struct BvpSolver<'a> {
    params: &'a ActionParams,
    options: BvpOptions,
    minima: Vec<(f64, f64)>,
}

impl<'a> BvpSolver<'a> {
    pub fn new(params: &'a ActionParams, options: BvpOptions) -> Result<Self> {
        params.validate()?;
        params.potential.require_confining()?;
        let m = params.mass;
        let minima = params
            .potential
            .local_minima()
            .into_iter()
            .map(|x| (x, (params.potential.second_derivative(x) / m).sqrt()))
            .collect();
        Ok(BvpSolver {
            params,
            options,
            minima,
        })
    }

    fn slices(&self, x_in: f64, x_fi: f64) -> usize {
        if let Some(n) = self.options.slices {
            return n.max(2);
        }
        let p = &self.params.potential;
        let mut lo = x_in.min(x_fi);
        let mut hi = x_in.max(x_fi);
        for &(x, _) in &self.minima {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let curvature = (0..=64)
            .map(|i| p.second_derivative(lo + (hi - lo) * i as f64 / 64.0).abs())
            .fold(0.0f64, f64::max);
        let omega = (curvature / self.params.mass).sqrt().max(1.0 / self.params.transition_time);
        let n = (self.params.transition_time * omega / self.options.step_scale).ceil() as usize;
        n.clamp(self.options.min_slices, self.options.max_slices)
    }

    pub fn solve(&self, x_in: f64, x_fi: f64) -> Result<ClassicalPath> {
        if !x_in.is_finite() || !x_fi.is_finite() {
            return Err(Error::param("endpoints", "must be finite"));
        }
        let p = self.params;
        let t = p.transition_time;
        let n = self.slices(x_in, x_fi);
        let coarse = Problem {
            potential: &p.potential,
            mass: p.mass,
            dt: t / n as f64,
        };

        let mut starts = vec![straight(x_in, x_fi, n)];
        for &(xm, omega) in &self.minima {
            starts.push(dwell(x_in, x_fi, xm, omega.max(4.0 / t), t, n));
        }
        let scale = 1.0 + x_in.abs().max(x_fi.abs());
        let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut last_err = None;
        for mut x in starts {
            match coarse.relax(&mut x, self.options.max_iterations) {
                Ok(()) if coarse.is_minimum(&x) => {
                    let s = coarse.action(&x);
                    let dup = found.iter().any(|(_, y)| {
                        x.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-6 * scale)
                    });
                    if !dup {
                        found.push((s, x));
                    }
                }
                Ok(()) => {}
                Err(e) => last_err = Some(e),
            }
        }
        if found.is_empty() {
            return Err(match last_err {
                Some(e) => e,
                None => Error::Caustic { x_in, x_fi },
            });
        }
        found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let ambiguous = found
            .get(1)
            .is_some_and(|(s, _)| (s - found[0].0).abs() < self.options.ambiguity_tolerance);
        let discarded = found.len() - 1;
        let best = found.swap_remove(0).1;

        let fine_problem = Problem {
            potential: &p.potential,
            mass: p.mass,
            dt: t / (2 * n) as f64,
        };
        let mut fine = refine(&best);
        fine_problem.relax(&mut fine, self.options.max_iterations)?;
        if !fine_problem.is_minimum(&fine) {
            return Err(Error::Caustic { x_in, x_fi });
        }

        let degree = p.potential.degree();
        let c = coarse.level(best, degree);
        let f = fine_problem.level(fine, degree);
        let rich = |a: f64, b: f64| (4.0 * b - a) / 3.0;
        let positions: Vec<f64> = c
            .x
            .iter()
            .enumerate()
            .map(|(k, &xc)| rich(xc, f.x[2 * k]))
            .collect();
        Ok(ClassicalPath {
            times: (0..=n).map(|k| t * k as f64 / n as f64).collect(),
            positions,
            action: rich(c.action, f.action),
            kinetic: rich(c.kinetic, f.kinetic),
            moments: c.moments.iter().zip(&f.moments).map(|(&a, &b)| rich(a, b)).collect(),
            discarded,
            ambiguous,
        })
    }
}

/// Least-action Euclidean classical path between `x_in` at 0 and `x_fi` at `T`.
pub fn solve_euclidean_bvp(params: &ActionParams, x_in: f64, x_fi: f64) -> Result<ClassicalPath> {
    BvpSolver::new(params, BvpOptions::default())?.solve(x_in, x_fi)
}

/// `exp(logZ − S / hbar)` along the least-action path.
pub fn amplitude_from_action(params: &ActionParams, x_in: f64, x_fi: f64) -> Result<f64> {
    let path = solve_euclidean_bvp(params, x_in, x_fi)?;
    Ok((params.log_z - path.action / params.units.hbar).exp())
}

/// Euclidean energy `m/2 x'² − V(x)` on the path nodes, with sixth-order central
/// velocities (lower order near the ends).
pub fn euclidean_energy(params: &ActionParams, path: &ClassicalPath) -> Vec<f64> {
    let x = &path.positions;
    let n = x.len();
    if n < 7 {
        return Vec::new();
    }
    let dt = path.times[1] - path.times[0];
    const ONE_SIDED: [f64; 6] = [-137.0 / 60.0, 5.0, -5.0, 10.0 / 3.0, -5.0 / 4.0, 1.0 / 5.0];
    (0..n)
        .map(|k| {
            let v = if k >= 3 && k + 3 < n {
                (-x[k - 3] + 9.0 * x[k - 2] - 45.0 * x[k - 1] + 45.0 * x[k + 1] - 9.0 * x[k + 2] + x[k + 3]) / (60.0 * dt)
            } else if k >= 2 && k + 2 < n {
                (x[k - 2] - 8.0 * x[k - 1] + 8.0 * x[k + 1] - x[k + 2]) / (12.0 * dt)
            } else if k < 2 {
                ONE_SIDED.iter().enumerate().map(|(j, c)| c * x[k + j]).sum::<f64>() / dt
            } else {
                -ONE_SIDED.iter().enumerate().map(|(j, c)| c * x[k - j]).sum::<f64>() / dt
            };
            0.5 * params.mass * v * v - params.potential.value(x[k])
        })
        .collect()
}

/// Largest deviation of the Euclidean energy from its mean, relative to the
/// path's energy scale: the largest of `|Ē|`, `S/T` and `Σ |v_k| X^k` with
/// `X = max |x|`.
pub fn energy_deviation(params: &ActionParams, path: &ClassicalPath) -> f64 {
    let e = euclidean_energy(params, path);
    if e.is_empty() {
        return 0.0;
    }
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    let t = params.transition_time;
    let reach = path.positions.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let terms: f64 = params.potential.coeffs().iter().enumerate().map(|(k, c)| c.abs() * reach.powi(k as i32)).sum();
    let scale = mean
        .abs()
        .max((params.mass * path.kinetic + path.moments.iter().enumerate().map(|(k, mk)| params.potential.coeff(k) * mk).sum::<f64>().abs()) / t)
        .max(terms)
        .max(f64::MIN_POSITIVE);
    e.iter().fold(0.0f64, |m, v| m.max((v - mean).abs())) / scale
}
