use thiserror::Error;

/// Errors raised by the semigroup, perturbation and transport machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time {t} exceeds the horizon {horizon} of the translation system")]
    HorizonExceeded { t: f64, horizon: f64 },

    #[error("time {t} is not a multiple of the grid spacing {spacing}")]
    OffGrid { t: f64, spacing: f64 },

    #[error("lambda = {lambda} is not above the growth bound {growth_bound}")]
    ResolventDomain { lambda: f64, growth_bound: f64 },

    #[error("element is not in the state space (second difference {second_difference:.3e} > threshold {threshold:.3e} at x = {location})")]
    NotInX {
        second_difference: f64,
        threshold: f64,
        location: f64,
    },

    #[error("Volterra operator norm bound {bound} violates the guard (< {limit})")]
    GuardViolation { bound: f64, limit: f64 },

    #[error("Neumann series failed to converge: term ratio >= 1 for {consecutive} consecutive terms after {terms} terms")]
    NonConvergence { terms: usize, consecutive: usize },

    #[error("oracle step size too large: diagonal coefficient {diagonal} <= 0")]
    StepSize { diagonal: f64 },

    #[error("rank-one perturbation needs a regularized profile h with g = h - h'")]
    MissingRegularization,

    #[error("degenerate domain construction: Phi(w) = {phi_w} equals 1")]
    Degenerate { phi_w: f64 },

    #[error("superoperator is not a right module homomorphism (residual {residual:.3e})")]
    NonMultiplicative { residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
