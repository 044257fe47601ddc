use thiserror::Error;

/// Everything that can go wrong across the crate.
///
/// Construction failures (bad parameters, speeds below the relevant spreading
/// speed) and runtime failures (quadrature not converging, bisection brackets
/// not found, simulation state leaving its invariant box) share one enum so
/// that pipeline code can thread a single `Result` type through.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("speed {s} is below the minimal admissible speed {s_min}")]
    SubcriticalSpeed { s: f64, s_min: f64 },

    #[error("front profile is not monotone near y = {y}")]
    NonMonotone { y: f64 },

    #[error("front tail does not match the expected decay: fitted rate {fitted}, expected {expected}, relative error {rel_err:.3e}")]
    WrongDecay {
        fitted: f64,
        expected: f64,
        rel_err: f64,
    },

    #[error("adaptive quadrature failed to reach tolerance {tol:.3e}: estimate {estimate:.6e}, error bound {error:.3e}")]
    QuadratureFailure { tol: f64, estimate: f64, error: f64 },

    #[error("ODE integration failed at t = {t}: {what}")]
    OdeFailure { t: f64, what: String },

    #[error("no sign change bracketing a root of {what}")]
    NoBracket { what: String },

    #[error("{what} not found within horizon {horizon}")]
    NotFoundWithinHorizon { what: String, horizon: f64 },

    #[error("parameters lie outside the regime required for this construction: {0}")]
    OutOfRegime(String),

    #[error("dispersion factor d + delta = {value:.6e} is not positive; choose a smaller delta")]
    NonpositiveD { value: f64 },

    #[error("exponential prefactor too small: crossing point {theta:.6} lies left of the v-saturation point {y_v:.6}")]
    CuTooSmall { theta: f64, y_v: f64 },

    #[error("data out of range: {0}")]
    DataOutOfRange(String),

    #[error("simulation left the invariant region at t = {t}: {what}")]
    StabilityViolation { t: f64, what: String },

    #[error("no grid point crossed level {level}")]
    NotCrossed { level: f64 },

    #[error("invasion point x = {x} is within {margin_cells} cells of the window edge; measurement would be clipped")]
    WindowClipped { x: f64, margin_cells: usize },

    #[error("not enough samples: needed {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
