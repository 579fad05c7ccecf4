//! Instantons of symmetric double-well potentials.
//!
//! For an even potential with wells at `±a`, `ΔV = V − V(a)` factors as
//! `(x² − a²)² r(x²)` with `r > 0` on the barrier. The zero-energy kink then
//! follows from quadratures with smooth integrands:
//!
//! ```text
//! S_inst = ∫_{−a}^{a} sqrt(2 m r(x²)) (a² − x²) dx
//! t(x)   = (1/ω) ln(a / (a − x)) + ∫_0^x [ f(y)/(a² − y²) − f(a)/(2a (a − y)) ] dy,
//!          f = sqrt(m / 2r),   ω = sqrt(V''(a)/m) = 2a / f(a)
//! ```
//!
//! and `x(t)` is obtained by inverting `t(x)` with safeguarded Newton steps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::fitter::{FitResult, FitSeries};
use crate::model::{PolynomialPotential, Units};
use crate::{Error, Result};

const QUADRATURE_NODES: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct InstantonProfile {
    /// Symmetric grid with `|t| ≤ 12 / ω_well`.
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Positive well position `a`; the wells are `±a`.
    pub well: f64,
    pub action: f64,
    pub omega_well: f64,
    pub mass: f64,
    /// Symmetrized potential used for the quadrature.
    pub potential: PolynomialPotential,
    /// Well height difference of the input potential before symmetrization.
    pub mismatch: f64,
    /// Transition time of the fitted action, `None` for a classical input.
    pub source_t: Option<f64>,
    /// `τ = hbar / (k_B T)` for fitted input.
    pub temperature: Option<f64>,
}

impl InstantonProfile {
    pub fn well_edges(&self) -> (f64, f64) {
        (-self.well, self.well)
    }

    /// Zero-energy position at time `t` (kink centred at 0).
    pub fn position_at(&self, t: f64) -> f64 {
        let shape = Shape::new(&self.potential, self.mass, self.well);
        shape.position(t)
    }
}

/// Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

struct Shape {
    /// Coefficients of `r(y)`, `y = x²`.
    r: Vec<f64>,
    mass: f64,
    a: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Shape {
    fn new(even: &PolynomialPotential, mass: f64, a: f64) -> Self {
        // ΔV as a polynomial in y = x², divided twice by (y − a²)
        let mut p: Vec<f64> = even.coeffs().iter().step_by(2).copied().collect();
        p[0] -= even.value(a);
        let y0 = a * a;
        for _ in 0..2 {
            let n = p.len();
            let mut q = vec![0.0; n - 1];
            let mut carry = 0.0;
            for k in (1..n).rev() {
                carry = p[k] + carry * y0;
                q[k - 1] = carry;
            }
            p = q;
        }
        let (nodes, weights) = gauss_legendre(QUADRATURE_NODES);
        Shape {
            r: p,
            mass,
            a,
            nodes,
            weights,
        }
    }

    fn r_at(&self, x: f64) -> f64 {
        let y = x * x;
        self.r.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    fn f(&self, x: f64) -> f64 {
        (self.mass / (2.0 * self.r_at(x))).sqrt()
    }

    fn omega(&self) -> f64 {
        2.0 * self.a / self.f(self.a)
    }

    fn integrate(&self, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (c, h) = (0.5 * (hi + lo), 0.5 * (hi - lo));
        h * self.nodes.iter().zip(&self.weights).map(|(z, w)| w * g(c + h * z)).sum::<f64>()
    }

    fn action(&self) -> f64 {
        let a = self.a;
        self.integrate(-a, a, |x| (2.0 * self.mass * self.r_at(x)).sqrt() * (a * a - x * x))
    }

    /// `t(x)` for `0 ≤ x < a`.
    fn time(&self, x: f64) -> f64 {
        let a = self.a;
        let fa = self.f(a);
        let regular = self.integrate(0.0, x, |y| {
            (2.0 * a * self.f(y) - fa * (a + y)) / (2.0 * a * (a * a - y * y))
        });
        (a / (a - x)).ln() / self.omega() + regular
    }

    fn dtdx(&self, x: f64) -> f64 {
        self.f(x) / (self.a * self.a - x * x)
    }

    fn position(&self, t: f64) -> f64 {
        if t < 0.0 {
            return -self.position(-t);
        }
        if t == 0.0 {
            return 0.0;
        }
        let a = self.a;
        let (mut lo, mut hi) = (0.0, a);
        // harmonic tail as a start
        let mut x = (a - a * (-self.omega() * t).exp()).clamp(0.0, a * (1.0 - 1e-300));
        for _ in 0..200 {
            let g = self.time(x) - t;
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = g / self.dtdx(x);
            let mut next = x - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * a || hi - lo <= 1e-15 * a {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Instanton of `V` (odd coefficients dropped first). `tolerance` bounds the
/// well-height difference of the unsymmetrized input.
pub fn extract_instanton(potential: &PolynomialPotential, mass: f64, tolerance: f64) -> Result<InstantonProfile> {
    if !(mass > 0.0) {
        return Err(Error::param("mass", format!("must be positive, got {mass}")));
    }
    let even = potential.even_part();
    if !even.is_confining() {
        return Err(Error::NotDoubleWell("potential is not confining".into()));
    }
    if !(even.second_derivative(0.0) < 0.0) {
        return Err(Error::NotDoubleWell(format!(
            "no barrier at the origin (v2 = {})",
            even.coeff(2)
        )));
    }
    let a = even
        .local_minima()
        .into_iter()
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !a.is_finite() {
        return Err(Error::NotDoubleWell("no well at positive x".into()));
    }
    // polish the well on V' = 0
    let a = crate::model::bisect(|x| even.derivative(x), 0.5 * a, 1.5 * a).max(f64::MIN_POSITIVE);

    let mismatch = well_mismatch(potential, a);
    let scale = even.value(0.0).abs() + even.value(a).abs();
    if mismatch > tolerance + 1e-12 * scale.max(1.0) {
        return Err(Error::AsymmetricWell { mismatch, tolerance });
    }

    let shape = Shape::new(&even, mass, a);
    // r must stay positive across the barrier
    if (0..=64).any(|k| !(shape.r_at(a * k as f64 / 64.0) > 0.0)) {
        return Err(Error::NotDoubleWell("additional zeros of V − V_min between the wells".into()));
    }
    let omega = shape.omega();
    let action = shape.action();
    let t_max = 12.0 / omega;
    const HALF: usize = 600;
    let times: Vec<f64> = (0..=2 * HALF)
        .map(|k| t_max * (k as f64 - HALF as f64) / HALF as f64)
        .collect();
    let mut positions = vec![0.0; times.len()];
    for k in HALF..times.len() {
        let x = shape.position(times[k]);
        positions[k] = x;
        positions[2 * HALF - k] = -x;
    }
    Ok(InstantonProfile {
        times,
        positions,
        well: a,
        action,
        omega_well: omega,
        mass,
        potential: even,
        mismatch,
        source_t: None,
        temperature: None,
    })
}

fn well_mismatch(potential: &PolynomialPotential, a: f64) -> f64 {
    if (1..=potential.degree()).step_by(2).all(|k| potential.coeff(k) == 0.0) {
        return 0.0;
    }
    let find = |guess: f64| {
        let w = 0.25 * a;
        crate::model::bisect(|x| potential.derivative(x), guess - w, guess + w)
    };
    let (left, right) = (find(-a), find(a));
    (potential.value(right) - potential.value(left)).abs()
}

/// Instanton of a fitted action. The well-height tolerance is five times the
/// error of `2 Σ_odd v~_k a^k` propagated from the fit.
pub fn instanton_from_fit(fit: &FitResult) -> Result<InstantonProfile> {
    let even = fit.params.potential.even_part();
    let a_guess = if even.coeff(4) > 0.0 && even.coeff(2) < 0.0 {
        (-even.coeff(2) / (2.0 * even.coeff(4))).sqrt()
    } else {
        1.0
    };
    let var: f64 = (1..=fit.degree())
        .step_by(2)
        .map(|k| {
            let e = 2.0 * fit.coeff_errors[k] * a_guess.powi(k as i32);
            e * e
        })
        .sum();
    let mut profile = extract_instanton(&fit.params.potential, fit.params.mass, 5.0 * var.sqrt())?;
    let t = fit.params.transition_time;
    profile.source_t = Some(t);
    profile.temperature = Some(fit.params.units.temperature(t));
    Ok(profile)
}

/// One instanton per fit of a temperature scan; failures are kept per entry.
pub fn quantum_instanton_scan(series: &FitSeries) -> Vec<Result<InstantonProfile>> {
    series.results.iter().map(instanton_from_fit).collect()
}

/// `τ` labels of a scan, in order.
pub fn scan_temperatures(series: &FitSeries, units: Units) -> Vec<f64> {
    series.scan.iter().map(|&t| units.temperature(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::double_well_from_shape;

    #[test]
    fn classical_kink() {
        let dw = double_well_from_shape(0.5, 1.0).unwrap();
        let p = extract_instanton(&dw, 1.0, 0.0).unwrap();
        assert!((p.action - 4.0 / 3.0).abs() < 1e-12);
        assert!((p.well - 1.0).abs() < 1e-12);
        for (t, x) in p.times.iter().zip(&p.positions) {
            assert!((x - t.tanh()).abs() < 1e-12, "t={t}");
        }
        assert_eq!(p.position_at(0.0), 0.0);
        assert!(p.positions.windows(2).all(|w| w[1] >= w[0]));
        assert!((p.times.last().unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn action_scales_with_sqrt_of_potential() {
        let dw = double_well_from_shape(0.5, 1.0).unwrap();
        let scaled = PolynomialPotential::new(dw.coeffs().iter().map(|c| 4.0 * c).collect()).unwrap();
        let s1 = extract_instanton(&dw, 1.0, 0.0).unwrap().action;
        let s4 = extract_instanton(&scaled, 1.0, 0.0).unwrap().action;
        assert!((s4 / s1 - 2.0).abs() < 1e-12);
        let shape = double_well_from_shape(1.3, 0.7).unwrap();
        let s = extract_instanton(&shape, 1.0, 0.0).unwrap().action;
        assert!((s - (2.0f64 * 1.3).sqrt() * 4.0 * 0.7f64.powi(3) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fitted_table_two_mean() {
        let v = PolynomialPotential::new(vec![1.571, 0.0, -0.745, 0.0, 0.493]).unwrap();
        let p = extract_instanton(&v, 0.9961, 0.0).unwrap();
        assert!((p.well - (0.745f64 / (2.0 * 0.493)).sqrt()).abs() < 1e-12);
        assert!((p.well - 0.869).abs() < 1e-3);
        assert!(p.action > 0.0 && p.action.is_finite());
    }

    #[test]
    fn sextic_well_satisfies_equation_of_motion() {
        let v = PolynomialPotential::new(vec![0.0, 0.0, -1.0, 0.0, 0.3, 0.0, 0.05]).unwrap();
        let m = 1.3;
        let p = extract_instanton(&v, m, 0.0).unwrap();
        let dt = p.times[1] - p.times[0];
        let x = &p.positions;
        for k in 2..x.len() - 2 {
            if x[k].abs() > 0.9 * p.well {
                continue;
            }
            let acc = (-x[k + 2] + 16.0 * x[k + 1] - 30.0 * x[k] + 16.0 * x[k - 1] - x[k - 2]) / (12.0 * dt * dt);
            let force = p.potential.derivative(x[k]);
            assert!((m * acc - force).abs() < 1e-5 * (1.0 + force.abs()), "k={k}");
        }
        for (a, b) in x.iter().zip(x.iter().rev()) {
            assert!((a + b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_single_wells_and_asymmetry() {
        assert!(matches!(
            extract_instanton(&PolynomialPotential::quartic(1.0), 1.0, 0.0),
            Err(Error::NotDoubleWell(_))
        ));
        let tilted = PolynomialPotential::new(vec![0.5, 0.1, -1.0, 0.0, 0.5]).unwrap();
        assert!(matches!(extract_instanton(&tilted, 1.0, 1e-3), Err(Error::AsymmetricWell { .. })));
        let p = extract_instanton(&tilted, 1.0, 1.0).unwrap();
        assert!((p.mismatch - 0.2).abs() < 0.01);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(QUADRATURE_NODES);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((integral - 2.0 / 11.0).abs() < 1e-14);
    }
}
