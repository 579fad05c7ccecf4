//! Interchangeable sources of propagator tables.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::exec::Executor;
use crate::model::{BoundarySet, Grid, HarmonicOscillator, PolynomialPotential, Units};
use crate::pimc::{pimc_propagator, LatticeConfig};
use crate::spectral::{solve_eigen, spectral_propagator_with_tolerance, PropagatorTable, TRUNCATION_TOLERANCE};
use crate::transfer::{transfer_tables, TransferConfig};
use crate::{Error, Result};

pub trait PropagatorOracle: Sync {
    fn name(&self) -> &'static str;

    /// One table per boundary set, all at transition time `t`.
    fn tables<E: Executor>(
        &self,
        potential: &PolynomialPotential,
        mass: f64,
        t: f64,
        boundaries: &[BoundarySet],
        exec: &E,
    ) -> Result<Vec<PropagatorTable>>;
}

/// Truncated eigen-sum on a finite-difference grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOracle {
    pub grid: Grid,
    pub states: usize,
    pub tolerance: f64,
    pub units: Units,
}

impl Default for SpectralOracle {
    fn default() -> Self {
        SpectralOracle {
            grid: Grid::new(-10.0, 10.0, 2501).expect("static grid"),
            states: 30,
            tolerance: TRUNCATION_TOLERANCE,
            units: Units::default(),
        }
    }
}

impl PropagatorOracle for SpectralOracle {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn tables<E: Executor>(
        &self,
        potential: &PolynomialPotential,
        mass: f64,
        t: f64,
        boundaries: &[BoundarySet],
        exec: &E,
    ) -> Result<Vec<PropagatorTable>> {
        let es = solve_eigen(potential, mass, &self.grid, self.states, self.units)?;
        exec.map_indexed(boundaries.len(), |i| {
            spectral_propagator_with_tolerance(&es, &boundaries[i], t, self.tolerance)
        })
        .into_iter()
        .collect()
    }
}

/// Positive transfer matrices with Richardson extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransferOracle {
    pub config: TransferConfig,
    pub units: Units,
}

impl PropagatorOracle for TransferOracle {
    fn name(&self) -> &'static str {
        "transfer"
    }

    fn tables<E: Executor>(
        &self,
        potential: &PolynomialPotential,
        mass: f64,
        t: f64,
        boundaries: &[BoundarySet],
        _exec: &E,
    ) -> Result<Vec<PropagatorTable>> {
        transfer_tables(potential, mass, boundaries, t, &self.config, self.units)
    }
}

/// Path-integral Monte Carlo. `n_slices` of the stored configuration is
/// replaced by the default rule for each `T` unless `fixed_slices` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PimcOracle {
    pub lattice: LatticeConfig,
    pub fixed_slices: bool,
    pub units: Units,
}

impl PropagatorOracle for PimcOracle {
    fn name(&self) -> &'static str {
        "pimc"
    }

    fn tables<E: Executor>(
        &self,
        potential: &PolynomialPotential,
        mass: f64,
        t: f64,
        boundaries: &[BoundarySet],
        exec: &E,
    ) -> Result<Vec<PropagatorTable>> {
        let mut cfg = self.lattice;
        if !self.fixed_slices {
            cfg.n_slices = LatticeConfig::for_time(t, cfg.seed).n_slices;
        }
        boundaries
            .iter()
            .map(|b| pimc_propagator(potential, mass, b, t, &cfg, self.units, exec).map(|o| o.table))
            .collect()
    }
}

/// Closed-form harmonic kernel; the potential must be `v_2 x²` only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HarmonicOracle {
    pub units: Units,
}

impl PropagatorOracle for HarmonicOracle {
    fn name(&self) -> &'static str {
        "harmonic"
    }

    fn tables<E: Executor>(
        &self,
        potential: &PolynomialPotential,
        mass: f64,
        t: f64,
        boundaries: &[BoundarySet],
        _exec: &E,
    ) -> Result<Vec<PropagatorTable>> {
        let c = potential.coeffs();
        if potential.effective_degree() != 2 || c[0] != 0.0 || c[1] != 0.0 || !(c[2] > 0.0) {
            return Err(Error::InvalidPotential("closed form needs V = v2 x² with v2 > 0".into()));
        }
        let mut ho = HarmonicOscillator::new(mass, (2.0 * c[2] / mass).sqrt());
        ho.units = self.units;
        Ok(boundaries
            .iter()
            .map(|b| {
                let x = b.points();
                let values = x
                    .iter()
                    .flat_map(|&xi| x.iter().map(move |&xj| (xi, xj)))
                    .map(|(xi, xj)| ho.kernel(xi, xj, t))
                    .collect();
                PropagatorTable::new(b.clone(), t, values, alloc::vec![0.0; x.len() * x.len()])
            })
            .collect())
    }
}
