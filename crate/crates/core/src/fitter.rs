//! Global least-squares fit of the quantum action to a propagator table.
//!
//! The parameters are `θ = (ln m~, v~_1, …, v~_N, ln Z~)` with `v~_0 = 0`:
//! a constant shift of the potential only rescales every amplitude by
//! `exp(−cT/hbar)`, so it is absorbed in `ln Z~`. The residuals are
//!
//! ```text
//! r_ij = sqrt(w_ij) [ ln G_ij − ln Z~ + S~(x_i → x_j) / hbar ],   i ≤ j
//! ```
//!
//! and the Jacobian is exact: at a stationary path `∂S/∂m = ∫ x'²/2` and
//! `∂S/∂v_k = ∫ x^k` (the path's own variation does not contribute).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::exec::Executor;
use crate::linalg::SymMatrix;
use crate::model::{ActionParams, BoundarySet, PolynomialPotential, MAX_DEGREE};
use crate::oracle::PropagatorOracle;
use crate::spectral::PropagatorTable;
use crate::trajectory::{BvpOptions, BvpSolver};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Initial Levenberg–Marquardt damping (relative to the normal-matrix diagonal).
    pub initial_damping: f64,
    /// Converged when an accepted step lowers χ² by less than this fraction.
    pub tolerance: f64,
    pub bvp: BvpOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            initial_damping: 1e-3,
            tolerance: 1e-10,
            bvp: BvpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Fitted action with `v~_0 = 0`; `log_z` carries the normalization.
    pub params: ActionParams,
    pub mass_error: f64,
    /// One-sigma errors of `v~_0 … v~_N`; entry 0 refers to [`FitResult::v0_unit_z`].
    pub coeff_errors: Vec<f64>,
    pub log_z_error: f64,
    /// Covariance of `(ln m~, v~_1, …, v~_N, ln Z~)`.
    pub covariance: SymMatrix,
    pub chi2: f64,
    pub dof: usize,
    pub interval: (f64, f64),
    pub iterations: usize,
    /// χ² after every accepted step, starting with the initial point.
    pub chi2_history: Vec<f64>,
    /// Largest `|G_fit / G − 1|` over the fitted entries.
    pub max_relative_residual: f64,
    /// Boundary pairs whose least-action path was ambiguous.
    pub ambiguous_pairs: usize,
    /// Whether the table was deterministic (uniform weights).
    pub exact: bool,
}

impl FitResult {
    pub fn transition_time(&self) -> f64 {
        self.params.transition_time
    }

    /// `β = T / hbar`.
    pub fn beta(&self) -> f64 {
        self.params.units.beta(self.params.transition_time)
    }

    /// `τ = 1 / (k_B β)`.
    pub fn temperature(&self) -> f64 {
        self.params.units.temperature(self.params.transition_time)
    }

    pub fn mass(&self) -> f64 {
        self.params.mass
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.params.potential.coeff(k)
    }

    pub fn degree(&self) -> usize {
        self.params.potential.degree()
    }

    /// `v~_0` with the normalization absorbed into the potential (`Z~ = 1`).
    pub fn v0_unit_z(&self) -> f64 {
        -self.params.log_z * self.params.units.hbar / self.params.transition_time
    }

    /// `v~_0` with `Z~` set to the free-particle value `sqrt(m~ / 2π hbar T)`.
    pub fn v0_free_particle(&self) -> f64 {
        let (h, t) = (self.params.units.hbar, self.params.transition_time);
        let free = 0.5 * (self.params.mass / (2.0 * core::f64::consts::PI * h * t)).ln();
        (free - self.params.log_z) * h / t
    }

    /// `ln Z~ − v~_0 T / hbar`, independent of how the constant is split.
    pub fn gauge_invariant(&self) -> f64 {
        self.params.log_z - self.coeff(0) * self.params.transition_time / self.params.units.hbar
    }

    /// `(m~, v~_0, v~_1, …, v~_N)` with `v~_0` in the unit-`Z~` convention.
    pub fn table_row(&self) -> Vec<f64> {
        let mut row = vec![self.mass(), self.v0_unit_z()];
        row.extend((1..=self.degree()).map(|k| self.coeff(k)));
        row
    }

    pub fn table_errors(&self) -> Vec<f64> {
        let mut row = vec![self.mass_error];
        row.extend_from_slice(&self.coeff_errors);
        row
    }

    /// `ln Z~ − S~ / hbar` with the fitted action.
    pub fn log_amplitude(&self, x_in: f64, x_fi: f64, bvp: BvpOptions) -> Result<f64> {
        let path = BvpSolver::new(&self.params, bvp)?.solve(x_in, x_fi)?;
        Ok(self.params.log_z - path.action / self.params.units.hbar)
    }
}

/// Fits over a scan variable with per-column mean and sample deviation of
/// `[table_row…, ln Z~]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSeries {
    pub scan: Vec<f64>,
    pub results: Vec<FitResult>,
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl FitSeries {
    pub fn new(scan: Vec<f64>, results: Vec<FitResult>) -> Result<Self> {
        if scan.len() != results.len() || scan.is_empty() {
            return Err(Error::param("scan", "one result per scan value is required"));
        }
        if scan.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("scan", "values must be strictly increasing"));
        }
        let rows: Vec<Vec<f64>> = results
            .iter()
            .map(|r| {
                let mut row = r.table_row();
                row.push(r.params.log_z);
                row
            })
            .collect();
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);
        let n = rows.len() as f64;
        let col = |c: usize| rows.iter().map(move |r| r.get(c).copied().unwrap_or(0.0));
        let mean: Vec<f64> = (0..width).map(|c| col(c).sum::<f64>() / n).collect();
        let sigma = (0..width)
            .map(|c| {
                if rows.len() < 2 {
                    0.0
                } else {
                    (col(c).map(|v| (v - mean[c]) * (v - mean[c])).sum::<f64>() / (n - 1.0)).sqrt()
                }
            })
            .collect();
        Ok(FitSeries {
            scan,
            results,
            mean,
            sigma,
        })
    }
}

struct Model<'a> {
    pairs: Vec<(f64, f64)>,
    y: Vec<f64>,
    sqrt_w: Vec<f64>,
    template: &'a ActionParams,
    degree: usize,
    bvp: BvpOptions,
}

struct Evaluation {
    residuals: Vec<f64>,
    /// Row-major `n_res × n_par`.
    jacobian: Vec<f64>,
    chi2: f64,
    ambiguous: usize,
}

impl Model<'_> {
    fn n_par(&self) -> usize {
        self.degree + 2
    }

    fn params(&self, theta: &[f64]) -> Result<ActionParams> {
        let mut coeffs = vec![0.0; self.degree + 1];
        coeffs[1..].copy_from_slice(&theta[1..=self.degree]);
        let mut p = self.template.clone();
        p.mass = theta[0].exp();
        p.potential = PolynomialPotential::new(coeffs)?;
        p.log_z = theta[self.degree + 1];
        Ok(p)
    }

    fn evaluate<E: Executor>(&self, theta: &[f64], exec: &E) -> Result<Evaluation> {
        let p = self.params(theta)?;
        let solver = BvpSolver::new(&p, self.bvp)?;
        let paths = exec.map_indexed(self.pairs.len(), |i| solver.solve(self.pairs[i].0, self.pairs[i].1));
        let np = self.n_par();
        let hbar = p.units.hbar;
        let mut residuals = Vec::with_capacity(self.pairs.len());
        let mut jacobian = Vec::with_capacity(self.pairs.len() * np);
        let mut ambiguous = 0;
        for (i, path) in paths.into_iter().enumerate() {
            let path = path?;
            ambiguous += path.ambiguous as usize;
            let sw = self.sqrt_w[i];
            residuals.push(sw * (self.y[i] - p.log_z + path.action / hbar));
            jacobian.push(sw * p.mass * path.kinetic / hbar);
            for k in 1..=self.degree {
                jacobian.push(sw * path.moments[k] / hbar);
            }
            jacobian.push(-sw);
        }
        let chi2 = residuals.iter().map(|r| r * r).sum();
        Ok(Evaluation {
            residuals,
            jacobian,
            chi2,
            ambiguous,
        })
    }
}

fn normal_equations(ev: &Evaluation, np: usize) -> (SymMatrix, Vec<f64>) {
    let mut a = SymMatrix::zeros(np);
    let mut g = vec![0.0; np];
    for (row, r) in ev.jacobian.chunks(np).zip(&ev.residuals) {
        for p in 0..np {
            g[p] += row[p] * r;
            for q in 0..np {
                a.data[p * np + q] += row[p] * row[q];
            }
        }
    }
    (a, g)
}

/// `(A + λ diag A)^{-1}` applied to `rhs`, solved in diagonally scaled form.
fn damped_solve(a: &SymMatrix, rhs: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let n = a.n;
    let d: Vec<f64> = (0..n).map(|i| a.get(i, i).sqrt()).collect();
    if d.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let mut s = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, a.get(i, j) / (d[i] * d[j]));
        }
        s.data[i * n + i] += lambda;
    }
    let b: Vec<f64> = rhs.iter().zip(&d).map(|(r, di)| r / di).collect();
    let x = s.solve(&b)?;
    Some(x.iter().zip(&d).map(|(v, di)| v / di).collect())
}

fn scaled_inverse(a: &SymMatrix) -> Option<SymMatrix> {
    let n = a.n;
    let d: Vec<f64> = (0..n).map(|i| a.get(i, i).sqrt()).collect();
    if d.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let mut s = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, a.get(i, j) / (d[i] * d[j]));
        }
    }
    let inv = s.inverse()?;
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, inv.get(i, j) / (d[i] * d[j]));
        }
    }
    Some(out)
}

/// Levenberg–Marquardt fit of `(m~, v~_1 … v~_N, ln Z~)` to the `i ≤ j`
/// entries of `table`, starting from `init` (its `v_0` and `log_z` are ignored).
pub fn fit_quantum_action<E: Executor>(
    table: &PropagatorTable,
    ansatz_degree: usize,
    init: &ActionParams,
    options: &FitOptions,
    exec: &E,
) -> Result<FitResult> {
    if ansatz_degree < 2 || !ansatz_degree.is_multiple_of(2) || ansatz_degree > MAX_DEGREE {
        return Err(Error::param(
            "ansatz_degree",
            format!("must be even and in 2..={MAX_DEGREE}, got {ansatz_degree}"),
        ));
    }
    init.validate()?;
    table.check_positive()?;
    if (init.transition_time - table.transition_time).abs() > 1e-12 * table.transition_time {
        return Err(Error::param("T", "initial parameters and table disagree on T"));
    }
    let j = table.size();
    let exact = table.is_exact();
    let mut pairs = Vec::new();
    let mut y = Vec::new();
    let mut sqrt_w = Vec::new();
    for a in 0..j {
        for b in a..j {
            let g = table.get(a, b);
            pairs.push((table.boundary.points()[a], table.boundary.points()[b]));
            y.push(g.ln());
            sqrt_w.push(if exact {
                1.0
            } else {
                let s = table.sigma(a, b);
                if !(s > 0.0) {
                    return Err(Error::param("sigma", "stochastic tables need positive sigmas"));
                }
                g / s
            });
        }
    }
    let model = Model {
        pairs,
        y,
        sqrt_w,
        template: init,
        degree: ansatz_degree,
        bvp: options.bvp,
    };
    let np = model.n_par();
    if model.pairs.len() <= np {
        return Err(Error::TooFewAmplitudes {
            amplitudes: model.pairs.len(),
            parameters: np,
        });
    }

    let mut theta = vec![0.0; np];
    theta[0] = init.mass.ln();
    for k in 1..=ansatz_degree {
        theta[k] = init.potential.coeff(k);
    }
    // optimal ln Z for the starting action
    let start = model.evaluate(&theta, exec)?;
    let wsum: f64 = model.sqrt_w.iter().map(|s| s * s).sum();
    let shift: f64 = start
        .residuals
        .iter()
        .zip(&model.sqrt_w)
        .map(|(r, s)| r * s)
        .sum::<f64>()
        / wsum;
    theta[np - 1] = shift;
    let mut current = model.evaluate(&theta, exec)?;
    let mut history = vec![current.chi2];
    let mut lambda = options.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let (a, g) = normal_equations(&current, np);
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut accepted = None;
        while lambda < 1e16 {
            let step = match damped_solve(&a, &rhs, lambda) {
                Some(s) => s,
                None => return Err(Error::SingularNormalEquations),
            };
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
            match model.evaluate(&trial, exec) {
                Ok(ev) if ev.chi2 <= current.chi2 => {
                    accepted = Some((trial, ev, step));
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        let Some((trial, ev, step)) = accepted else {
            // no descent direction left at any damping: stationary to rounding
            converged = true;
            break;
        };
        lambda = (lambda / 10.0).max(1e-12);
        let drop = current.chi2 - ev.chi2;
        let small_step = step
            .iter()
            .zip(&trial)
            .all(|(s, t)| s.abs() <= 1e-10 * (1.0 + t.abs()));
        theta = trial;
        current = ev;
        history.push(current.chi2);
        // at the noise floor of the oracle and the path solver χ² keeps
        // creeping down by rounding-sized amounts
        stalled = if drop <= 1e-7 * current.chi2 { stalled + 1 } else { 0 };
        if drop <= options.tolerance * current.chi2 || small_step || stalled >= 5 || current.chi2 == 0.0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FitNoConvergence {
            iterations,
            chi2: current.chi2,
        });
    }

    let params = model.params(&theta)?;
    if !(params.mass > 0.0) || !params.mass.is_finite() {
        return Err(Error::NonPositiveMass(params.mass));
    }
    let (a, _) = normal_equations(&current, np);
    let dof = model.pairs.len() - np;
    let mut cov = scaled_inverse(&a).ok_or(Error::SingularNormalEquations)?;
    if exact {
        let s = current.chi2 / dof as f64;
        cov.data.iter_mut().for_each(|v| *v *= s);
    }
    let sd = |i: usize| cov.get(i, i).max(0.0).sqrt();
    let hbar = params.units.hbar;
    let t = params.transition_time;
    let mut coeff_errors = vec![sd(np - 1) * hbar / t];
    coeff_errors.extend((1..=ansatz_degree).map(sd));
    let max_relative_residual = current
        .residuals
        .iter()
        .zip(&model.sqrt_w)
        .map(|(r, s)| ((-r / s).exp() - 1.0).abs())
        .fold(0.0, f64::max);

    Ok(FitResult {
        mass_error: params.mass * sd(0),
        log_z_error: sd(np - 1),
        coeff_errors,
        covariance: cov,
        chi2: current.chi2,
        dof,
        interval: table.boundary.interval(),
        iterations,
        chi2_history: history,
        max_relative_residual,
        ambiguous_pairs: current.ambiguous,
        exact,
        params,
    })
}

/// One fit per symmetric interval `[−a, +a]` with `J` equally spaced points.
#[allow(clippy::too_many_arguments)]
pub fn interval_scan<O: PropagatorOracle, E: Executor>(
    oracle: &O,
    classical: &ActionParams,
    half_widths: &[f64],
    points: usize,
    ansatz_degree: usize,
    options: &FitOptions,
    exec: &E,
) -> Result<FitSeries> {
    if half_widths.is_empty() {
        return Err(Error::param("intervals", "at least one interval is required"));
    }
    let boundaries = half_widths
        .iter()
        .map(|&a| BoundarySet::symmetric(a, points))
        .collect::<Result<Vec<_>>>()?;
    let tables = oracle.tables(
        &classical.potential,
        classical.mass,
        classical.transition_time,
        &boundaries,
        exec,
    )?;
    let results = tables
        .iter()
        .map(|table| fit_quantum_action(table, ansatz_degree, classical, options, exec))
        .collect::<Result<Vec<_>>>()?;
    FitSeries::new(half_widths.to_vec(), results)
}

/// Fits at increasing transition times on a fixed boundary set; each fit
/// starts from the previous one (the first from the classical action).
#[allow(clippy::too_many_arguments)]
pub fn temperature_scan<O: PropagatorOracle, E: Executor>(
    oracle: &O,
    classical: &ActionParams,
    t_values: &[f64],
    boundary: &BoundarySet,
    ansatz_degree: usize,
    options: &FitOptions,
    exec: &E,
) -> Result<FitSeries> {
    if t_values.is_empty() || t_values.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::param("T", "values must be positive"));
    }
    if t_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("T", "values must be strictly increasing"));
    }
    let tables = exec
        .map_indexed(t_values.len(), |i| {
            oracle.tables(
                &classical.potential,
                classical.mass,
                t_values[i],
                core::slice::from_ref(boundary),
                exec,
            )
        })
        .into_iter()
        .map(|r| r.map(|mut v| v.remove(0)))
        .collect::<Result<Vec<_>>>()?;
    fit_temperature_series(&tables, classical, ansatz_degree, options, exec)
}

/// Warm-started fits of tables at strictly increasing transition times.
/// Stops at the first fit that fails.
pub fn fit_temperature_series<E: Executor>(
    tables: &[PropagatorTable],
    classical: &ActionParams,
    ansatz_degree: usize,
    options: &FitOptions,
    exec: &E,
) -> Result<FitSeries> {
    let results = warm_started(tables, classical, ansatz_degree, options, exec, true)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    FitSeries::new(tables.iter().map(|t| t.transition_time).collect(), results)
}

/// Like [`fit_temperature_series`] but keeps going past failed fits. Each
/// fit starts from the last successful one. A warm start that fails for a
/// reason other than the iteration budget is retried from the classical action.
pub fn fit_temperature_steps<E: Executor>(
    tables: &[PropagatorTable],
    classical: &ActionParams,
    ansatz_degree: usize,
    options: &FitOptions,
    exec: &E,
) -> Vec<Result<FitResult>> {
    warm_started(tables, classical, ansatz_degree, options, exec, false)
}

fn warm_started<E: Executor>(
    tables: &[PropagatorTable],
    classical: &ActionParams,
    ansatz_degree: usize,
    options: &FitOptions,
    exec: &E,
    stop_on_error: bool,
) -> Vec<Result<FitResult>> {
    let mut results: Vec<Result<FitResult>> = Vec::with_capacity(tables.len());
    let mut last: Option<ActionParams> = None;
    for table in tables {
        let t = table.transition_time;
        let mut cold = classical.clone();
        cold.transition_time = t;
        let fit = match &last {
            Some(prev) => {
                let mut warm = prev.clone();
                warm.transition_time = t;
                match fit_quantum_action(table, ansatz_degree, &warm, options, exec) {
                    Ok(f) => Ok(f),
                    Err(e @ Error::FitNoConvergence { .. }) => Err(e),
                    Err(e) => fit_quantum_action(table, ansatz_degree, &cold, options, exec).map_err(|_| e),
                }
            }
            None => fit_quantum_action(table, ansatz_degree, &cold, options, exec),
        };
        if let Ok(f) = &fit {
            last = Some(f.params.clone());
        }
        let failed = fit.is_err();
        results.push(fit);
        if failed && stop_on_error {
            break;
        }
    }
    results
}

/// One-loop shifts `(δv_2, δv_4) = (3 hbar λ / mω, 9 hbar λ² / mω²)` of the
/// weakly anharmonic oscillator `V = m ω² x²/2 + λ x⁴`.
pub fn one_loop_coefficients(mass: f64, omega: f64, lambda: f64, hbar: f64) -> Result<(f64, f64)> {
    if !(mass > 0.0) {
        return Err(Error::param("mass", format!("must be positive, got {mass}")));
    }
    if !(omega > 0.0) {
        return Err(Error::param("omega", format!("must be positive, got {omega}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda", format!("must be non-negative, got {lambda}")));
    }
    Ok((
        3.0 * hbar * lambda / (mass * omega),
        9.0 * hbar * lambda * lambda / (mass * omega * omega),
    ))
}
