//! Time-sliced transfer-matrix propagator.
//!
//! The symmetric short-time kernel
//!
//! ```text
//! K_ε(x, y) = sqrt(m / 2π hbar ε) exp(−[m (x−y)²/2ε + ε (V(x)+V(y))/2] / hbar)
//! ```
//!
//! is positive, so repeated squaring of `h K_ε` on a grid never cancels and
//! stays accurate for amplitudes many orders of magnitude below the diagonal.
//! The boundary points enter through exact kernel rows, so they need not lie
//! on the grid. Two slice widths are combined by Richardson extrapolation in
//! `ln G`, removing the `O(ε²)` splitting error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::model::{BoundarySet, Grid, PolynomialPotential, Units};
use crate::spectral::PropagatorTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig {
    pub grid: Grid,
    /// Largest slice width of the coarser level.
    pub max_step: f64,
    /// Combine two levels by Richardson extrapolation.
    pub extrapolate: bool,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            grid: Grid::new(-6.0, 6.0, 961).expect("static grid"),
            max_step: 2e-3,
            extrapolate: true,
        }
    }
}

impl TransferConfig {
    /// Number of squarings `k` of the coarse level, `ε = T / (2^k + 2)`.
    pub fn levels(&self, t: f64) -> u32 {
        let mut k = 0;
        while t / ((1u64 << k) as f64 + 2.0) > self.max_step && k < 40 {
            k += 1;
        }
        k
    }
}

struct Kernel<'a> {
    potential: &'a PolynomialPotential,
    mass: f64,
    hbar: f64,
    eps: f64,
}

impl Kernel<'_> {
    fn log_value(&self, x: f64, y: f64, vx: f64, vy: f64) -> f64 {
        let d = x - y;
        0.5 * (self.mass / (2.0 * PI * self.hbar * self.eps)).ln()
            - (self.mass * d * d / (2.0 * self.eps) + 0.5 * self.eps * (vx + vy)) / self.hbar
    }

    fn row(&self, x: f64, nodes: &[f64], v_nodes: &[f64]) -> Vec<f64> {
        let vx = self.potential.value(x);
        nodes
            .iter()
            .zip(v_nodes)
            .map(|(&z, &vz)| self.log_value(x, z, vx, vz).exp())
            .collect()
    }
}

fn square(a: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    // SAFETY: all three buffers hold n×n row-major matrices.
    unsafe {
        matrixmultiply::dgemm(
            n,
            n,
            n,
            1.0,
            a.as_ptr(),
            n as isize,
            1,
            a.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

/// `ln G` for every boundary pair of every set at the slice width
/// `T / (2^k + 2)`, indexed `[level][set][i * J + j]`.
fn log_tables(
    potential: &PolynomialPotential,
    mass: f64,
    boundaries: &[BoundarySet],
    t: f64,
    grid: &Grid,
    k_levels: &[u32],
    units: Units,
) -> Vec<Vec<Vec<f64>>> {
    let nodes = grid.points();
    let n = nodes.len();
    let h = grid.spacing();
    let v_nodes: Vec<f64> = nodes.iter().map(|&z| potential.value(z)).collect();
    let mut out = Vec::with_capacity(k_levels.len());
    for &k in k_levels {
        let eps = t / ((1u64 << k) as f64 + 2.0);
        let kernel = Kernel {
            potential,
            mass,
            hbar: units.hbar,
            eps,
        };
        let mut a = vec![0.0; n * n];
        for r in 0..n {
            for c in r..n {
                let v = h * kernel.log_value(nodes[r], nodes[c], v_nodes[r], v_nodes[c]).exp();
                a[r * n + c] = v;
                a[c * n + r] = v;
            }
        }
        for _ in 0..k {
            a = square(&a, n);
        }
        let mut level = Vec::with_capacity(boundaries.len());
        for boundary in boundaries {
            let j = boundary.len();
            let rows: Vec<Vec<f64>> = boundary
                .points()
                .iter()
                .map(|&x| kernel.row(x, &nodes, &v_nodes))
                .collect();
            // h M K(·, y) for each final point
            let mw: Vec<Vec<f64>> = rows
                .iter()
                .map(|u| {
                    (0..n)
                        .map(|r| h * a[r * n..(r + 1) * n].iter().zip(u).map(|(m, w)| m * w).sum::<f64>())
                        .collect()
                })
                .collect();
            let mut table = vec![0.0; j * j];
            for p in 0..j {
                for q in p..j {
                    let g1: f64 = rows[p].iter().zip(&mw[q]).map(|(a, b)| a * b).sum();
                    let g2: f64 = rows[q].iter().zip(&mw[p]).map(|(a, b)| a * b).sum();
                    let lg = (0.5 * (g1 + g2)).ln();
                    table[p * j + q] = lg;
                    table[q * j + p] = lg;
                }
            }
            level.push(table);
        }
        out.push(level);
    }
    out
}

/// Amplitude table `G(x_j, T; x_i, 0)` from transfer matrices.
pub fn transfer_propagator(
    potential: &PolynomialPotential,
    mass: f64,
    boundary: &BoundarySet,
    t: f64,
    cfg: &TransferConfig,
    units: Units,
) -> Result<PropagatorTable> {
    let mut tables = transfer_tables(potential, mass, core::slice::from_ref(boundary), t, cfg, units)?;
    Ok(tables.remove(0))
}

/// Tables for several boundary sets sharing one set of matrix powers.
pub fn transfer_tables(
    potential: &PolynomialPotential,
    mass: f64,
    boundaries: &[BoundarySet],
    t: f64,
    cfg: &TransferConfig,
    units: Units,
) -> Result<Vec<PropagatorTable>> {
    potential.require_confining()?;
    if !(mass > 0.0) {
        return Err(Error::param("mass", format!("must be positive, got {mass}")));
    }
    if !(t > 0.0) {
        return Err(Error::param("T", format!("must be positive, got {t}")));
    }
    if !(cfg.max_step > 0.0) {
        return Err(Error::param("max_step", "must be positive"));
    }
    for boundary in boundaries {
        let (lo, hi) = boundary.interval();
        if lo <= cfg.grid.xmin || hi >= cfg.grid.xmax {
            return Err(Error::param("boundary", "points must lie inside the grid"));
        }
    }
    let k = cfg.levels(t);
    let levels: Vec<Vec<Vec<f64>>> = if cfg.extrapolate {
        let tables = log_tables(potential, mass, boundaries, t, &cfg.grid, &[k, k + 1], units);
        let e1 = t / ((1u64 << k) as f64 + 2.0);
        let e2 = t / ((1u64 << (k + 1)) as f64 + 2.0);
        let (w1, w2) = (e1 * e1, e2 * e2);
        vec![tables[0]
            .iter()
            .zip(&tables[1])
            .map(|(a, b)| a.iter().zip(b).map(|(g1, g2)| (w1 * g2 - w2 * g1) / (w1 - w2)).collect())
            .collect()]
    } else {
        log_tables(potential, mass, boundaries, t, &cfg.grid, &[k], units)
    };
    let mut out = Vec::with_capacity(boundaries.len());
    for (boundary, logs) in boundaries.iter().zip(&levels[0]) {
        let j = boundary.len();
        let table = PropagatorTable::new(
            boundary.clone(),
            t,
            logs.iter().map(|g| g.exp()).collect(),
            vec![0.0; j * j],
        );
        table.check_positive()?;
        out.push(table);
    }
    Ok(out)
}
