use num_complex::Complex64;
use thiserror::Error;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid initial profile: {0}")]
    InvalidProfile(String),

    #[error("coefficient evaluated too close to a pole (k = {k}, |D| = {denominator:e})")]
    PoleProximity { k: Complex64, denominator: f64 },

    #[error("asymptotic seed requested outside its regime (n = {n}, n*pi = {n_pi:.4} not below opacity {opacity})")]
    SeedOutOfRegime { n: usize, n_pi: f64, opacity: f64 },

    #[error(
        "Newton refinement from {seed} stalled after {iterations} iterations (|F| = {residual:e})"
    )]
    NoConvergence {
        seed: Complex64,
        iterations: usize,
        residual: f64,
    },

    #[error("root {k} is not a fourth-quadrant resonance: {reason}")]
    WrongQuadrant { k: Complex64, reason: &'static str },

    #[error("argument principle encloses {winding} zeros but {found} poles were found below Re k = {k_max}")]
    CountMismatch {
        winding: i64,
        found: usize,
        k_max: f64,
    },

    #[error(
        "quadrature did not reach tolerance (estimated error {error:e}, tolerance {tolerance:e})"
    )]
    QuadratureNotConverged { error: f64, tolerance: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("residue formula and contour integral disagree at k = {k} (relative difference {relative:e})")]
    ResidueMismatch { k: Complex64, relative: f64 },

    #[error("fit window holds {points} usable samples, at least {required} needed")]
    WindowTooSmall { points: usize, required: usize },

    #[error("tail window starts at t = {start} before the crossover t* = {crossover}")]
    WindowBeforeCrossover { start: f64, crossover: f64 },

    #[error("exponential and power-law branches do not cross in [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
