//! Deterministic propagator from the eigenstates of the 1-D Hamiltonian.
//!
//! `H = −hbar²/(2m) d²/dx² + V(x)` is discretized with second-order central
//! differences and Dirichlet edges. The lowest eigenvalues come from Sturm
//! bisection of the symmetric tridiagonal matrix and the eigenvectors from
//! inverse iteration, so only the requested states are ever formed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::linalg::sturm_count;
use crate::model::{BoundarySet, Grid, PolynomialPotential, Units};
use crate::{Error, Result};

/// Default relative tolerance on the neglected tail of the spectral sum.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;

/// Edge amplitude (relative to the maximum) above which a state is
/// considered to feel the box walls.
pub const EDGE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// `E_0 < E_1 < … < E_{K−1}`.
    pub energies: Vec<f64>,
    /// `ψ_n` on every grid node (edge nodes are zero), normalized to
    /// `h Σ ψ² = 1` and positive on the left flank.
    pub wavefunctions: Vec<Vec<f64>>,
    pub grid: Grid,
    /// `E_K`, the first neglected level, used for the truncation estimate.
    pub next_energy: f64,
    pub units: Units,
}

/// Euclidean amplitudes `G(x_j, T; x_i, 0)`: row `i` is the initial point,
/// column `j` the final point.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorTable {
    pub boundary: BoundarySet,
    pub transition_time: f64,
    /// Row-major `J × J`.
    pub values: Vec<f64>,
    /// One-sigma uncertainties, zero for deterministic tables.
    pub sigmas: Vec<f64>,
}

impl PropagatorTable {
    pub fn new(boundary: BoundarySet, transition_time: f64, values: Vec<f64>, sigmas: Vec<f64>) -> Self {
        let n = boundary.len();
        assert_eq!(values.len(), n * n);
        assert_eq!(sigmas.len(), n * n);
        PropagatorTable {
            boundary,
            transition_time,
            values,
            sigmas,
        }
    }

    pub fn size(&self) -> usize {
        self.boundary.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigmas[i * self.size() + j]
    }

    pub fn is_exact(&self) -> bool {
        self.sigmas.iter().all(|&s| s == 0.0)
    }

    /// Largest `|G_ij − G_ji| / max(|G_ij|, |G_ji|)`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.size();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (self.get(i, j), self.get(j, i));
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        worst
    }

    pub fn check_positive(&self) -> Result<()> {
        let n = self.size();
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::NonPositiveAmplitude { i, j, value: v });
                }
            }
        }
        Ok(())
    }
}

/// Lowest `k` eigenpairs of the finite-difference Hamiltonian on `grid`.
pub fn solve_eigen(
    potential: &PolynomialPotential,
    mass: f64,
    grid: &Grid,
    k: usize,
    units: Units,
) -> Result<EigenSystem> {
    potential.require_confining()?;
    if !(mass > 0.0) {
        return Err(Error::param("mass", format!("must be positive, got {mass}")));
    }
    if k == 0 {
        return Err(Error::param("K", "need at least one state"));
    }
    let h = grid.spacing();
    let n = grid.n_points - 2;
    let hop = units.hbar * units.hbar / (2.0 * mass * h * h);
    let diag: Vec<f64> = (1..=n).map(|i| 2.0 * hop + potential.value(grid.point(i))).collect();
    let off_sq = vec![hop * hop; n.saturating_sub(1)];

    let vmin = diag.iter().fold(f64::INFINITY, |m, &d| m.min(d - 2.0 * hop));
    let resolvable = sturm_count(&diag, &off_sq, vmin + hop).min(n);
    if k + 1 > resolvable {
        return Err(Error::TooManyStates {
            requested: k,
            resolvable: resolvable.saturating_sub(1),
        });
    }

    let lo = diag.iter().fold(f64::INFINITY, |m, &d| m.min(d)) - 2.0 * hop;
    let hi = diag.iter().fold(f64::NEG_INFINITY, |m, &d| m.max(d)) + 2.0 * hop;
    let levels: Vec<f64> = (0..=k).map(|idx| kth_eigenvalue(&diag, &off_sq, idx, lo, hi)).collect();

    let mut wavefunctions = Vec::with_capacity(k);
    for (idx, &e) in levels[..k].iter().enumerate() {
        let mut psi = vec![0.0; grid.n_points];
        let interior = inverse_iteration(&diag, -hop, e);
        let norm = (h * interior.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let peak = interior.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = interior
            .iter()
            .find(|v| v.abs() > 1e-3 * peak)
            .copied()
            .unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for (dst, v) in psi[1..=n].iter_mut().zip(&interior) {
            *dst = sign * v / norm;
        }
        let edge = psi[1].abs().max(psi[n].abs()) / (peak / norm);
        if edge > EDGE_TOLERANCE {
            return Err(Error::GridTooNarrow {
                state: idx,
                amplitude: edge,
            });
        }
        wavefunctions.push(psi);
    }

    Ok(EigenSystem {
        energies: levels[..k].to_vec(),
        wavefunctions,
        grid: *grid,
        next_energy: levels[k],
        units,
    })
}

fn kth_eigenvalue(diag: &[f64], off_sq: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    // invariant: count(lo) ≤ k < count(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off_sq, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector of `tridiag(off, diag, off)` for the (accurate) eigenvalue
/// `shift`, by inverse iteration with partial pivoting.
fn inverse_iteration(diag: &[f64], off: f64, shift: f64) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 2.0 * off.abs();
    let perturbed = shift + 4.0 * f64::EPSILON * scale;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64 / 13.0).collect();
    for _ in 0..3 {
        x = pivoted_tridiagonal_solve(diag, off, perturbed, &x);
        let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x.iter_mut().for_each(|v| *v /= m);
    }
    x
}

/// Solves `(tridiag(off, diag − s, off)) y = b` by Gaussian elimination with
/// partial pivoting (fill-in on a second superdiagonal).
fn pivoted_tridiagonal_solve(diag: &[f64], off: f64, s: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let tiny = f64::EPSILON * (diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + off.abs());
    // row i holds (a[i], u1[i], u2[i]) on columns i, i+1, i+2 after elimination
    let mut a: Vec<f64> = diag.iter().map(|d| d - s).collect();
    let mut u1 = vec![off; n];
    let mut u2 = vec![0.0; n];
    let mut rhs = b.to_vec();
    let mut low = vec![off; n];
    for i in 0..n.saturating_sub(1) {
        // candidate pivot rows i (a[i], u1[i], u2[i]) and i+1 (low[i], a[i+1], u1[i+1])
        if low[i].abs() > a[i].abs() {
            let (ra, rb, rc, rr) = (a[i], u1[i], u2[i], rhs[i]);
            a[i] = low[i];
            u1[i] = a[i + 1];
            u2[i] = if i + 1 < n - 1 { u1[i + 1] } else { 0.0 };
            rhs[i] = rhs[i + 1];
            low[i] = ra;
            a[i + 1] = rb;
            u1[i + 1] = rc;
            rhs[i + 1] = rr;
        }
        if a[i] == 0.0 {
            a[i] = tiny;
        }
        let f = low[i] / a[i];
        a[i + 1] -= f * u1[i];
        if i + 1 < n - 1 {
            u1[i + 1] -= f * u2[i];
        }
        rhs[i + 1] -= f * rhs[i];
    }
    if a[n - 1] == 0.0 {
        a[n - 1] = tiny;
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        if i + 1 < n {
            v -= u1[i] * y[i + 1];
        }
        if i + 2 < n {
            v -= u2[i] * y[i + 2];
        }
        y[i] = v / a[i];
    }
    y
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `ψ_n(x)` by cubic Lagrange interpolation on the four nearest nodes.
    pub fn wavefunction_at(&self, n: usize, x: f64) -> f64 {
        let (idx, w) = cubic_weights(&self.grid, x);
        let psi = &self.wavefunctions[n];
        idx.iter().zip(w).map(|(&i, w)| w * psi[i]).sum()
    }

    /// Number of sign changes of `ψ_n`, ignoring values below `1e-10` of the peak.
    pub fn node_count(&self, n: usize) -> usize {
        let psi = &self.wavefunctions[n];
        let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut last = 0.0;
        let mut changes = 0;
        for &v in psi {
            if v.abs() < 1e-10 * peak {
                continue;
            }
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                changes += 1;
            }
            last = v;
        }
        changes
    }

    /// Spectral sum `Σ_n ψ_n(x) ψ_n(y) exp(−E_n T / hbar)`.
    pub fn kernel(&self, x: f64, y: f64, t: f64) -> f64 {
        let beta = t / self.units.hbar;
        (0..self.len())
            .map(|n| self.wavefunction_at(n, x) * self.wavefunction_at(n, y) * (-self.energies[n] * beta).exp())
            .sum()
    }

    /// Same sum on grid nodes, without interpolation.
    pub fn kernel_nodes(&self, i: usize, j: usize, t: f64) -> f64 {
        let beta = t / self.units.hbar;
        (0..self.len())
            .map(|n| self.wavefunctions[n][i] * self.wavefunctions[n][j] * (-self.energies[n] * beta).exp())
            .sum()
    }

    /// Absolute bound on the neglected terms `n ≥ K`: `max|ψ|² e^{−E_K T}`
    /// summed as a geometric series with ratio `e^{−(E_K − E_{K−1}) T}`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let beta = t / self.units.hbar;
        let psi_max = self
            .wavefunctions
            .iter()
            .flat_map(|w| w.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let gap = self.next_energy - self.energies[self.len() - 1];
        psi_max * psi_max * (-self.next_energy * beta).exp() / (1.0 - (-gap * beta).exp())
    }
}

fn cubic_weights(grid: &Grid, x: f64) -> ([usize; 4], [f64; 4]) {
    let h = grid.spacing();
    let s = (x - grid.xmin) / h;
    let last = grid.n_points - 1;
    let base = (s.floor() as isize - 1).clamp(0, last as isize - 3) as usize;
    let idx = [base, base + 1, base + 2, base + 3];
    let mut w = [1.0; 4];
    for (a, wa) in w.iter_mut().enumerate() {
        for b in 0..4 {
            if a != b {
                *wa *= (s - idx[b] as f64) / (idx[a] as f64 - idx[b] as f64);
            }
        }
    }
    (idx, w)
}

/// Table of spectral-sum amplitudes at the default truncation tolerance.
pub fn spectral_propagator(es: &EigenSystem, boundary: &BoundarySet, t: f64) -> Result<PropagatorTable> {
    spectral_propagator_with_tolerance(es, boundary, t, TRUNCATION_TOLERANCE)
}

pub fn spectral_propagator_with_tolerance(
    es: &EigenSystem,
    boundary: &BoundarySet,
    t: f64,
    tolerance: f64,
) -> Result<PropagatorTable> {
    if !(t > 0.0) {
        return Err(Error::param("T", format!("must be positive, got {t}")));
    }
    let h = es.grid.spacing();
    if boundary
        .points()
        .iter()
        .any(|&x| x < es.grid.xmin + h || x > es.grid.xmax - h)
    {
        return Err(Error::param("boundary", "points must lie inside the grid"));
    }
    let j = boundary.len();
    let beta = t / es.units.hbar;
    let psi: Vec<Vec<f64>> = boundary
        .points()
        .iter()
        .map(|&x| (0..es.len()).map(|n| es.wavefunction_at(n, x)).collect())
        .collect();
    let decay: Vec<f64> = es.energies.iter().map(|e| (-e * beta).exp()).collect();
    let tail = es.tail_bound(t);
    let mut values = vec![0.0; j * j];
    for a in 0..j {
        for b in 0..j {
            let g: f64 = (0..es.len()).map(|n| psi[a][n] * psi[b][n] * decay[n]).sum();
            if !(g > 0.0) {
                return Err(Error::NonPositiveAmplitude { i: a, j: b, value: g });
            }
            let relative = tail / g;
            if relative > tolerance {
                return Err(Error::TruncationInsufficient { i: a, j: b, relative });
            }
            values[a * j + b] = g;
        }
    }
    Ok(PropagatorTable::new(boundary.clone(), t, values, vec![0.0; j * j]))
}

/// `E_0`.
pub fn ground_state_energy(es: &EigenSystem) -> f64 {
    es.energies[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{double_well_from_shape, HarmonicOscillator};

    fn default_grid() -> Grid {
        Grid::new(-8.0, 8.0, 2001).unwrap()
    }

    #[test]
    fn harmonic_levels() {
        let grid = Grid::new(-7.0, 7.0, 20001).unwrap();
        let es = solve_eigen(&PolynomialPotential::harmonic(1.0, 1.0), 1.0, &grid, 5, Units::default()).unwrap();
        for (n, e) in es.energies.iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-6, "E_{n} = {e}");
        }
        assert_eq!(ground_state_energy(&es), es.energies[0]);
        assert!((ground_state_energy(&es) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn wavefunctions_are_normalized_and_have_n_nodes() {
        let es = solve_eigen(&PolynomialPotential::quartic(1.0), 1.0, &default_grid(), 30, Units::default()).unwrap();
        let h = es.grid.spacing();
        for n in 0..es.len() {
            let norm: f64 = h * es.wavefunctions[n].iter().map(|v| v * v).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-10);
            assert_eq!(es.node_count(n), n);
        }
        assert!(es.energies.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn quartic_ground_state_converges_quadratically() {
        // Oracle: two resolutions and their Richardson combination.
        let q = PolynomialPotential::quartic(1.0);
        let coarse = solve_eigen(&q, 1.0, &Grid::new(-6.0, 6.0, 1201).unwrap(), 1, Units::default()).unwrap();
        let fine = solve_eigen(&q, 1.0, &Grid::new(-6.0, 6.0, 2401).unwrap(), 1, Units::default()).unwrap();
        let (e1, e2) = (coarse.energies[0], fine.energies[0]);
        let extrapolated = (4.0 * e2 - e1) / 3.0;
        assert!((extrapolated - 0.667_986).abs() < 1e-6, "E0 = {extrapolated}");
        // halving the spacing divides the error by ~4
        let ratio = (e1 - extrapolated) / (e2 - extrapolated);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
        let default = solve_eigen(&q, 1.0, &default_grid(), 1, Units::default()).unwrap();
        assert!((default.energies[0] - 0.667_986).abs() < 1e-4);
    }

    #[test]
    fn double_well_has_split_doublet_below_barrier() {
        let dw = double_well_from_shape(0.5, 1.0).unwrap();
        let es = solve_eigen(&dw, 1.0, &default_grid(), 4, Units::default()).unwrap();
        assert!(es.energies[1] - es.energies[0] > 0.0);
        // zero-point energy of the sqrt(2) wells lifts E0 above the 0.5 barrier
        assert!((es.energies[0] - 0.568_892).abs() < 1e-4, "E0 = {}", es.energies[0]);
    }

    #[test]
    fn harmonic_kernel_matches_closed_form() {
        let ho = HarmonicOscillator::new(1.0, 1.0);
        let grid = Grid::new(-12.0, 12.0, 3001).unwrap();
        let es = solve_eigen(&ho.potential(), 1.0, &grid, 30, Units::default()).unwrap();
        let b = BoundarySet::new(alloc::vec![0.0, 0.5, 1.0]).unwrap();
        let table = spectral_propagator(&es, &b, 1.0).unwrap();
        assert!((table.get(0, 0) - 0.36800).abs() < 5e-5);
        for i in 0..3 {
            for j in 0..3 {
                let exact = ho.kernel(b.points()[i], b.points()[j], 1.0);
                assert!((table.get(i, j) / exact - 1.0).abs() < 2e-5);
            }
        }
    }

    #[test]
    fn ground_state_dominates_at_large_t() {
        let es = solve_eigen(&PolynomialPotential::quartic(1.0), 1.0, &default_grid(), 30, Units::default()).unwrap();
        let t = 12.0;
        let (x, y) = (0.3, -0.7);
        let g = es.kernel(x, y, t);
        let ground = es.wavefunction_at(0, x) * es.wavefunction_at(0, y) * (-es.energies[0] * t).exp();
        assert!((g / ground - 1.0).abs() < 1e-8);
    }

    #[test]
    fn short_time_table_is_diagonally_dominant() {
        let es = solve_eigen(&PolynomialPotential::quartic(1.0), 1.0, &default_grid(), 30, Units::default()).unwrap();
        let nodes = [900usize, 1000, 1100];
        let ratio = |t: f64| es.kernel_nodes(nodes[1], nodes[1], t) / es.kernel_nodes(nodes[1], nodes[2], t);
        assert!(ratio(0.05) > ratio(0.2));
        assert!(ratio(0.2) > ratio(1.0));
    }

    #[test]
    fn truncation_is_detected() {
        let es = solve_eigen(&PolynomialPotential::quartic(1.0), 1.0, &default_grid(), 7, Units::default()).unwrap();
        let b = BoundarySet::symmetric(3.0, 6).unwrap();
        let err = spectral_propagator(&es, &b, 0.5).unwrap_err();
        assert!(matches!(
            err,
            Error::TruncationInsufficient { .. } | Error::NonPositiveAmplitude { .. }
        ));
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let grid = Grid::new(-2.0, 2.0, 401).unwrap();
        let err = solve_eigen(&PolynomialPotential::harmonic(1.0, 1.0), 1.0, &grid, 10, Units::default()).unwrap_err();
        assert!(matches!(err, Error::GridTooNarrow { .. }));
        let coarse = Grid::new(-8.0, 8.0, 21).unwrap();
        let err = solve_eigen(&PolynomialPotential::harmonic(1.0, 1.0), 1.0, &coarse, 30, Units::default()).unwrap_err();
        assert!(matches!(err, Error::TooManyStates { .. }));
    }
}
