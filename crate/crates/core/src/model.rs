//! Physical model: polynomial potentials, action parameters, units and the
//! numeric grids shared by the propagator oracles.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Largest polynomial degree accepted for potentials.
pub const MAX_DEGREE: usize = 8;

/// Unit system. Every experiment in this crate uses `hbar = k_B = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub hbar: f64,
    pub k_b: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            hbar: 1.0,
            k_b: 1.0,
        }
    }
}

impl Units {
    /// Inverse temperature matching a Euclidean transition time, `beta = T / hbar`.
    pub fn beta(&self, transition_time: f64) -> f64 {
        transition_time / self.hbar
    }

    /// Temperature `tau = 1 / (k_B beta) = hbar / (k_B T)`.
    pub fn temperature(&self, transition_time: f64) -> f64 {
        self.hbar / (self.k_b * transition_time)
    }
}

/// `V(x) = Σ_k v_k x^k` in the monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    coeffs: Vec<f64>,
}

impl PolynomialPotential {
    /// Coefficients are `v_0 … v_N`; the nominal degree is `coeffs.len() - 1`
    /// and may carry zero leading terms (e.g. a quadratic start for a quartic fit).
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 3 || coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::InvalidPotential(format!(
                "degree must be between 2 and {MAX_DEGREE}, got {}",
                coeffs.len() as isize - 1
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        Ok(PolynomialPotential { coeffs })
    }

    pub fn quartic(v4: f64) -> Self {
        PolynomialPotential {
            coeffs: alloc::vec![0.0, 0.0, 0.0, 0.0, v4],
        }
    }

    /// `½ m ω² x² + λ x⁴`.
    pub fn anharmonic(mass: f64, omega: f64, lambda: f64) -> Self {
        PolynomialPotential {
            coeffs: alloc::vec![0.0, 0.0, 0.5 * mass * omega * omega, 0.0, lambda],
        }
    }

    pub fn harmonic(mass: f64, omega: f64) -> Self {
        PolynomialPotential {
            coeffs: alloc::vec![0.0, 0.0, 0.5 * mass * omega * omega],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Same potential padded with zeros (or truncated) to `degree`.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        let mut c = self.coeffs.clone();
        c.resize(degree + 1, 0.0);
        PolynomialPotential::new(c)
    }

    /// Highest non-vanishing degree.
    pub fn effective_degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Bounded below with a discrete spectrum: even effective degree and a
    /// positive leading coefficient.
    pub fn is_confining(&self) -> bool {
        let n = self.effective_degree();
        n >= 2 && n.is_multiple_of(2) && self.coeffs[n] > 0.0
    }

    pub(crate) fn require_confining(&self) -> Result<()> {
        if self.is_confining() {
            Ok(())
        } else {
            Err(Error::InvalidPotential(format!(
                "potential {:?} is not confining",
                self.coeffs
            )))
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let mut acc = 0.0;
        for k in (1..n).rev() {
            acc = acc * x + k as f64 * self.coeffs[k];
        }
        acc
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let mut acc = 0.0;
        for k in (2..n).rev() {
            acc = acc * x + (k * (k - 1)) as f64 * self.coeffs[k];
        }
        acc
    }

    pub fn third_derivative(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let mut acc = 0.0;
        for k in (3..n).rev() {
            acc = acc * x + (k * (k - 1) * (k - 2)) as f64 * self.coeffs[k];
        }
        acc
    }

    /// Parity-even part (odd coefficients dropped).
    pub fn even_part(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c } else { 0.0 })
            .collect();
        PolynomialPotential { coeffs }
    }

    /// Radius beyond which `V` has no stationary points (Cauchy bound of `V'`).
    pub fn stationary_bound(&self) -> f64 {
        let n = self.effective_degree();
        if n < 2 {
            return 0.0;
        }
        let lead = n as f64 * self.coeffs[n];
        let max_ratio = (1..n)
            .map(|k| (k as f64 * self.coeffs[k] / lead).abs())
            .fold(0.0, f64::max);
        1.0 + max_ratio
    }

    /// Real stationary points `V'(x) = 0`, ascending. Roots are bracketed on a
    /// fine scan of the Cauchy interval and polished by bisection; tangential
    /// (even-multiplicity) roots are caught through sign changes of `V''`.
    pub fn stationary_points(&self) -> Vec<f64> {
        let bound = self.stationary_bound();
        if bound == 0.0 {
            return Vec::new();
        }
        const SCAN: usize = 4096;
        let step = 2.0 * bound / SCAN as f64;
        let mut roots: Vec<f64> = Vec::new();
        let f = |x: f64| self.derivative(x);
        let mut a = -bound;
        let mut fa = f(a);
        for i in 1..=SCAN {
            let b = -bound + i as f64 * step;
            let fb = f(b);
            if fa == 0.0 {
                push_root(&mut roots, a, step);
            } else if fa * fb < 0.0 {
                push_root(&mut roots, bisect(f, a, b), step);
            } else {
                // a double root shows up as an extremum of V' touching zero
                let (da, db) = (self.second_derivative(a), self.second_derivative(b));
                if da * db < 0.0 {
                    let c = bisect(|x| self.second_derivative(x), a, b);
                    if f(c).abs() <= 1e-12 * (1.0 + self.derivative_scale(bound)) {
                        push_root(&mut roots, c, step);
                    }
                }
            }
            a = b;
            fa = fb;
        }
        if fa == 0.0 {
            push_root(&mut roots, a, step);
        }
        roots
    }

    /// Stationary points with `V'' > 0`.
    pub fn local_minima(&self) -> Vec<f64> {
        self.stationary_points()
            .into_iter()
            .filter(|&x| self.second_derivative(x) > 0.0)
            .collect()
    }

    fn derivative_scale(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| (k as f64 * c).abs() * r.powi(k as i32 - 1))
            .sum()
    }
}

fn push_root(roots: &mut Vec<f64>, x: f64, step: f64) {
    if roots.last().is_none_or(|&r| (x - r).abs() > 2.0 * step) {
        roots.push(x);
    }
}

pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Expanded coefficients of `A (x² − a²)²`: `(A a⁴, 0, −2 A a², 0, A)`.
pub fn double_well_from_shape(amplitude: f64, half_distance: f64) -> Result<PolynomialPotential> {
    if !(amplitude > 0.0) {
        return Err(Error::param("A", format!("must be positive, got {amplitude}")));
    }
    if !(half_distance > 0.0) {
        return Err(Error::param("a", format!("must be positive, got {half_distance}")));
    }
    let a2 = half_distance * half_distance;
    PolynomialPotential::new(alloc::vec![
        amplitude * a2 * a2,
        0.0,
        -2.0 * amplitude * a2,
        0.0,
        amplitude
    ])
}

/// A classical-form Euclidean action `∫ dt [m/2 x'² + V(x)]` at transition
/// time `T`, with the amplitude normalization `ln Z`.
///
/// `log_z` is a fit output; for physical (classical) inputs it is left at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionParams {
    pub mass: f64,
    pub potential: PolynomialPotential,
    pub log_z: f64,
    pub transition_time: f64,
    pub units: Units,
}

impl ActionParams {
    pub fn new(mass: f64, potential: PolynomialPotential, transition_time: f64) -> Result<Self> {
        let a = ActionParams {
            mass,
            potential,
            log_z: 0.0,
            transition_time,
            units: Units::default(),
        };
        a.validate()?;
        Ok(a)
    }

    pub fn with_log_z(mut self, log_z: f64) -> Self {
        self.log_z = log_z;
        self
    }

    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::param("mass", format!("must be positive, got {}", self.mass)));
        }
        if !(self.transition_time > 0.0) || !self.transition_time.is_finite() {
            return Err(Error::param(
                "T",
                format!("must be positive, got {}", self.transition_time),
            ));
        }
        if !(self.units.hbar > 0.0) || !(self.units.k_b > 0.0) {
            return Err(Error::param("units", "hbar and k_B must be positive"));
        }
        Ok(())
    }
}

/// Uniform grid `xmin, xmin + h, …, xmax`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub xmin: f64,
    pub xmax: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(xmin: f64, xmax: f64, n_points: usize) -> Result<Self> {
        if !(xmax > xmin) {
            return Err(Error::param("grid", format!("need xmax > xmin, got [{xmin}, {xmax}]")));
        }
        if n_points < 3 {
            return Err(Error::param("grid", format!("need at least 3 points, got {n_points}")));
        }
        Ok(Grid { xmin, xmax, n_points })
    }

    /// Symmetric grid `[-half_width, half_width]` with the given spacing
    /// (rounded so that the edges are nodes).
    pub fn symmetric(half_width: f64, spacing: f64) -> Result<Self> {
        let cells = (2.0 * half_width / spacing).round() as usize;
        Grid::new(-half_width, half_width, cells + 1)
    }

    pub fn spacing(&self) -> f64 {
        (self.xmax - self.xmin) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.xmin && x <= self.xmax
    }
}

/// Boundary positions `x_1 < … < x_J` used as both initial and final points.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet {
    points: Vec<f64>,
}

impl BoundarySet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("boundary", "need at least two points"));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("boundary", "points must be finite and strictly increasing"));
        }
        Ok(BoundarySet { points })
    }

    /// `J` equally spaced points covering `[-a, +a]`.
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::param("interval", format!("half width must be positive, got {half_width}")));
        }
        if count < 2 {
            return Err(Error::param("J", "need at least two points"));
        }
        let step = 2.0 * half_width / (count - 1) as f64;
        BoundarySet::new((0..count).map(|i| -half_width + i as f64 * step).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().fold(0.0f64, |m, p| m.max(p.abs()))
    }
}

/// Closed forms of the Euclidean harmonic oscillator `V = ½ m ω² x²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicOscillator {
    pub mass: f64,
    pub omega: f64,
    pub units: Units,
}

impl HarmonicOscillator {
    pub fn new(mass: f64, omega: f64) -> Self {
        HarmonicOscillator {
            mass,
            omega,
            units: Units::default(),
        }
    }

    pub fn potential(&self) -> PolynomialPotential {
        PolynomialPotential::harmonic(self.mass, self.omega)
    }

    /// Classical Euclidean action
    /// `mω / (2 sinh ωT) [(x_fi² + x_in²) cosh ωT − 2 x_in x_fi]`.
    pub fn classical_action(&self, x_in: f64, x_fi: f64, t: f64) -> f64 {
        let wt = self.omega * t;
        self.mass * self.omega / (2.0 * wt.sinh())
            * ((x_fi * x_fi + x_in * x_in) * wt.cosh() - 2.0 * x_in * x_fi)
    }

    /// `ln sqrt(mω / (2π hbar sinh ωT))`.
    pub fn log_normalization(&self, t: f64) -> f64 {
        0.5 * (self.mass * self.omega
            / (2.0 * core::f64::consts::PI * self.units.hbar * (self.omega * t).sinh()))
        .ln()
    }

    pub fn kernel(&self, x_in: f64, x_fi: f64, t: f64) -> f64 {
        (self.log_normalization(t) - self.classical_action(x_in, x_fi, t) / self.units.hbar).exp()
    }

    /// Classical path `x(t) = [x_in sinh ω(T−t) + x_fi sinh ωt] / sinh ωT`.
    pub fn classical_path(&self, x_in: f64, x_fi: f64, total: f64, t: f64) -> f64 {
        let w = self.omega;
        (x_in * (w * (total - t)).sinh() + x_fi * (w * t).sinh()) / (w * total).sinh()
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.units.hbar * self.omega * (n as f64 + 0.5)
    }
}
