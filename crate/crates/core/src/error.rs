use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too narrow: state {state} has edge amplitude {amplitude:.3e}")]
    GridTooNarrow { state: usize, amplitude: f64 },

    #[error("requested {requested} states but the grid resolves only {resolvable}")]
    TooManyStates { requested: usize, resolvable: usize },

    #[error(
        "spectral sum truncated too early at entry ({i}, {j}): tail/G = {relative:.3e} \
         (increase the number of states or T)"
    )]
    TruncationInsufficient { i: usize, j: usize, relative: f64 },

    #[error("non-positive propagator entry ({i}, {j}) = {value:.3e}")]
    NonPositiveAmplitude { i: usize, j: usize, value: f64 },

    #[error("boundary value problem did not converge: {0}")]
    BvpNoConvergence(String),

    #[error("conjugate point along the classical path from {x_in} to {x_fi}")]
    Caustic { x_in: f64, x_fi: f64 },

    #[error("fit did not converge after {iterations} iterations (chi2 = {chi2:.6e})")]
    FitNoConvergence { iterations: usize, chi2: f64 },

    #[error("singular normal equations in the fit")]
    SingularNormalEquations,

    #[error("fitted mass is not positive: {0}")]
    NonPositiveMass(f64),

    #[error("too few amplitudes: {amplitudes} for {parameters} free parameters")]
    TooFewAmplitudes { amplitudes: usize, parameters: usize },

    #[error("potential is not a double well: {0}")]
    NotDoubleWell(String),

    #[error("wells differ in height by {mismatch:.3e} (tolerance {tolerance:.3e})")]
    AsymmetricWell { mismatch: f64, tolerance: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical method, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidPotential(_) | Error::InvalidParameter { .. }
        )
    }
}
