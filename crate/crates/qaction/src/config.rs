//! Run configuration in TOML.
//!
//! ```toml
//! system = "double-well"
//! amplitude = 0.5
//! half_distance = 1.0
//! oracle = "transfer"
//! transition_times = [0.5, 1.0, 2.0]
//! intervals = [1.2, 1.6, 2.0]
//! points = 6
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use qaction_core::fitter::FitOptions;
use qaction_core::model::{double_well_from_shape, Grid, PolynomialPotential};
use qaction_core::oracle::{HarmonicOracle, PimcOracle, SpectralOracle, TransferOracle};
use qaction_core::pimc::LatticeConfig;
use qaction_core::transfer::TransferConfig;
use qaction_core::{ActionParams, Units};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Harmonic,
    WeakAnharmonic,
    Quartic,
    DoubleWell,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Spectral,
    Transfer,
    Pimc,
    /// Mehler kernel, harmonic systems only.
    ClosedForm,
    /// Exact reference and Monte Carlo side by side.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: System,
    pub mass: f64,
    /// Harmonic and weak-anharmonic angular frequency.
    pub omega: f64,
    /// Weak-anharmonic coupling of `x⁴`.
    pub lambda: f64,
    /// Double well `A (x² − a²)²`.
    pub amplitude: f64,
    pub half_distance: f64,
    /// Quartic `v4` and custom `v0, v1, …`.
    pub v4: f64,
    pub coefficients: Vec<f64>,

    pub oracle: OracleKind,
    /// Exact oracle used for `both` and for comparisons.
    pub reference: OracleKind,
    pub transition_times: Vec<f64>,
    /// Half-widths `a` of the boundary intervals `[−a, +a]`.
    pub intervals: Vec<f64>,
    pub points: usize,
    pub degree: usize,
    /// Levenberg–Marquardt iterations per fit.
    pub fit_max_iterations: usize,

    pub spectral_grid: [f64; 2],
    pub spectral_points: usize,
    pub spectral_states: usize,
    pub transfer_grid: [f64; 2],
    pub transfer_points: usize,
    pub transfer_max_step: f64,
    /// Zero picks the slice count from `T`.
    pub pimc_slices: usize,
    pub pimc_sweeps: usize,
    pub pimc_thermalization: usize,
    pub seed: u64,

    pub hbar: f64,
    pub k_b: f64,
    pub output: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lattice = LatticeConfig::for_time(1.0, 0);
        RunConfig {
            system: System::Quartic,
            mass: 1.0,
            omega: 2f64.sqrt(),
            lambda: 0.0,
            amplitude: 0.5,
            half_distance: 1.0,
            v4: 1.0,
            coefficients: Vec::new(),
            oracle: OracleKind::Transfer,
            reference: OracleKind::Spectral,
            transition_times: vec![0.5],
            intervals: vec![2.0],
            points: 6,
            degree: 4,
            fit_max_iterations: FitOptions::default().max_iterations,
            spectral_grid: [-10.0, 10.0],
            spectral_points: 2501,
            spectral_states: 30,
            transfer_grid: [-6.0, 6.0],
            transfer_points: 961,
            transfer_max_step: 2e-3,
            pimc_slices: 0,
            pimc_sweeps: lattice.n_sweeps,
            pimc_thermalization: lattice.n_therm,
            seed: 1,
            hbar: 1.0,
            k_b: 1.0,
            output: "out".into(),
        }
    }
}

/// A run record: the resolved configuration plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunInfo,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub command: String,
    pub version: String,
    pub threads: usize,
    /// Seed of the Monte Carlo table for each `(T, interval)`, row-major.
    pub table_seeds: Vec<u64>,
    pub files: Vec<String>,
}

/// TOML integers are signed 64-bit.
const MAX_SEED: u64 = i64::MAX as u64;

fn invalid(field: &str, reason: impl Into<String>) -> RunError {
    RunError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid("config", e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a configuration or a manifest written by an earlier run.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| invalid("config", e.message()))?;
        if table.contains_key("run") && table.contains_key("config") {
            let manifest: Manifest = toml::from_str(&text).map_err(|e| invalid("manifest", e.message()))?;
            manifest.config.validate()?;
            Ok(manifest.config)
        } else {
            RunConfig::from_toml(&text)
        }
    }

    pub fn units(&self) -> Units {
        Units {
            hbar: self.hbar,
            k_b: self.k_b,
        }
    }

    pub fn potential(&self) -> Result<PolynomialPotential, RunError> {
        let p = match self.system {
            System::Harmonic => PolynomialPotential::harmonic(self.mass, self.omega),
            System::WeakAnharmonic => PolynomialPotential::anharmonic(self.mass, self.omega, self.lambda),
            System::Quartic => PolynomialPotential::quartic(self.v4),
            System::DoubleWell => double_well_from_shape(self.amplitude, self.half_distance)?,
            System::Custom => PolynomialPotential::new(self.coefficients.clone())?,
        };
        Ok(p)
    }

    pub fn classical(&self, t: f64) -> Result<ActionParams, RunError> {
        Ok(ActionParams::new(self.mass, self.potential()?, t)?.with_units(self.units()))
    }

    pub fn spectral(&self) -> Result<SpectralOracle, RunError> {
        Ok(SpectralOracle {
            grid: Grid::new(self.spectral_grid[0], self.spectral_grid[1], self.spectral_points)?,
            states: self.spectral_states,
            units: self.units(),
            ..SpectralOracle::default()
        })
    }

    pub fn transfer(&self) -> Result<TransferOracle, RunError> {
        Ok(TransferOracle {
            config: TransferConfig {
                grid: Grid::new(self.transfer_grid[0], self.transfer_grid[1], self.transfer_points)?,
                max_step: self.transfer_max_step,
                ..TransferConfig::default()
            },
            units: self.units(),
        })
    }

    pub fn closed_form(&self) -> HarmonicOracle {
        HarmonicOracle { units: self.units() }
    }

    /// Monte Carlo oracle for one table; `seed` is the derived table seed.
    pub fn pimc(&self, t: f64, seed: u64) -> PimcOracle {
        let mut lattice = LatticeConfig::for_time(t, seed);
        if self.pimc_slices > 0 {
            lattice.n_slices = self.pimc_slices;
        }
        lattice.n_sweeps = self.pimc_sweeps;
        lattice.n_therm = self.pimc_thermalization;
        PimcOracle {
            lattice,
            fixed_slices: self.pimc_slices > 0,
            units: self.units(),
        }
    }

    /// Seed of the Monte Carlo table at `(T index, interval index)`.
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_iterations: self.fit_max_iterations,
            ..FitOptions::default()
        }
    }

    pub fn table_seed(&self, t_index: usize, interval_index: usize) -> u64 {
        self.seed
            .wrapping_mul(1_000_003)
            .wrapping_add((t_index * self.intervals.len() + interval_index) as u64)
            & MAX_SEED
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive and finite, got {v}")))
            }
        };
        positive("mass", self.mass)?;
        positive("hbar", self.hbar)?;
        positive("k_b", self.k_b)?;
        match self.system {
            System::Harmonic => positive("omega", self.omega)?,
            System::WeakAnharmonic => {
                positive("omega", self.omega)?;
                if !(self.lambda >= 0.0) {
                    return Err(invalid("lambda", format!("must be non-negative, got {}", self.lambda)));
                }
            }
            System::Quartic => positive("v4", self.v4)?,
            System::DoubleWell => {
                positive("amplitude", self.amplitude)?;
                positive("half_distance", self.half_distance)?;
            }
            System::Custom => {
                if self.coefficients.is_empty() {
                    return Err(invalid("coefficients", "custom systems need coefficients"));
                }
            }
        }
        let potential = self.potential()?;
        if !potential.is_confining() {
            return Err(invalid("system", "potential must be confining (even degree, positive leading term)"));
        }
        if self.transition_times.is_empty() {
            return Err(invalid("transition_times", "at least one value is required"));
        }
        for &t in &self.transition_times {
            positive("transition_times", t)?;
        }
        if self.transition_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("transition_times", "must be strictly increasing"));
        }
        if self.intervals.is_empty() {
            return Err(invalid("intervals", "at least one half-width is required"));
        }
        for &a in &self.intervals {
            positive("intervals", a)?;
        }
        if self.points < 2 {
            return Err(invalid("points", "need at least two boundary points"));
        }
        if self.degree < 2 || !self.degree.is_multiple_of(2) || self.degree > 8 {
            return Err(invalid("degree", format!("must be even and in 2..=8, got {}", self.degree)));
        }
        if self.reference == OracleKind::Pimc || self.reference == OracleKind::Both {
            return Err(invalid("reference", "must be an exact oracle (spectral, transfer or closed-form)"));
        }
        let closed = self.oracle == OracleKind::ClosedForm || self.reference == OracleKind::ClosedForm;
        if closed && self.system != System::Harmonic {
            return Err(invalid("oracle", "the closed form exists for the harmonic system only"));
        }
        let widest = self.intervals.iter().cloned().fold(0.0, f64::max);
        let inside = |field: &str, grid: [f64; 2], n: usize| {
            Grid::new(grid[0], grid[1], n).map_err(|e| invalid(field, e.to_string()))?;
            if !(grid[0] < -widest && grid[1] > widest) {
                return Err(invalid(field, format!("must contain the widest interval ±{widest}")));
            }
            Ok(())
        };
        inside("spectral_grid", self.spectral_grid, self.spectral_points)?;
        inside("transfer_grid", self.transfer_grid, self.transfer_points)?;
        positive("transfer_max_step", self.transfer_max_step)?;
        if self.seed > MAX_SEED {
            return Err(invalid("seed", format!("must be at most {MAX_SEED}, got {}", self.seed)));
        }
        if self.fit_max_iterations == 0 {
            return Err(invalid("fit_max_iterations", "must be positive"));
        }
        if self.spectral_states == 0 {
            return Err(invalid("spectral_states", "must be positive"));
        }
        if self.pimc_sweeps == 0 {
            return Err(invalid("pimc_sweeps", "must be positive"));
        }
        if self.pimc_slices == 1 {
            return Err(invalid("pimc_slices", "need at least two slices (or 0 for automatic)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            system: System::DoubleWell,
            transition_times: vec![0.5, 1.0, 9.0],
            intervals: vec![1.2, 1.4],
            seed: 99,
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_fail() {
        let err = RunConfig::from_toml("system = \"quartic\"\nsytem = 1\n").unwrap_err();
        assert!(err.to_string().contains("sytem"), "{err}");
    }

    #[test]
    fn field_errors_name_the_field() {
        let err = RunConfig::from_toml("transition_times = [1.0, 0.5]").unwrap_err();
        assert!(err.to_string().contains("transition_times"), "{err}");
        let err = RunConfig::from_toml("intervals = [7.0]").unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
        let err = RunConfig::from_toml("system = \"custom\"\ncoefficients = [0.0, 0.0, -1.0]").unwrap_err();
        assert!(err.to_string().contains("confining"), "{err}");
    }
}
