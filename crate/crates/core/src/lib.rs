//! Quantum action for one-dimensional Euclidean quantum mechanics.
//!
//! The crate computes Euclidean transition amplitudes
//! `G(x_fi, T; x_in, 0) = <x_fi| exp(-H T / hbar) |x_in>` for polynomial
//! potentials and fits a classical-form action
//!
//! ```text
//! S~ = ∫ dt [ m~/2 x'^2 + V~(x) ],    G = Z~ exp(-S~[x~_cl] / hbar)
//! ```
//!
//! with renormalized mass `m~` and potential coefficients `v~_k`, such that a
//! single action reproduces every amplitude between a set of boundary points
//! at fixed transition time `T`. From the fitted action it extracts
//! finite-temperature instantons (`beta = T / hbar`).
//!
//! Amplitudes come from three independent routes:
//!
//! * [`spectral`]: finite-difference eigenstates summed as
//!   `Σ ψ_n(x) ψ_n(y) exp(-E_n T / hbar)`;
//! * [`transfer`]: time-sliced positive transfer matrices with Richardson
//!   extrapolation in the slice width, accurate for widely separated points
//!   at short `T` where the eigen-sum cancels catastrophically;
//! * [`pimc`]: path-integral Monte Carlo with a free-bridge reference.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, configuration
//! and the command-line runner live in the `qaction` companion crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
pub mod exec;
pub mod fitter;
pub mod instanton;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pimc;
pub mod spectral;
pub mod stats;
pub mod trajectory;
pub mod transfer;

pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use model::{
    double_well_from_shape, ActionParams, BoundarySet, Grid, HarmonicOscillator,
    PolynomialPotential, Units,
};
pub use spectral::{EigenSystem, PropagatorTable};
