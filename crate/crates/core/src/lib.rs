//! Decay of a particle initially confined in a delta-shell well.
//!
//! Units: hbar = 2m = 1. The well has a hard wall at x = 0 and the shell
//! V(x) = (lambda / a) delta(x - a).
//!
//! Modules, bottom up: [`well`] (scattering coefficients), [`poles`]
//! (resonances), [`profile`] (initial states), [`spectral`] (real-axis
//! evolution), [`gamow`] (rotated contour and residues), [`exterior`]
//! (x > a and norm audit), [`decay`] (survival curves and fits), [`run`]
//! (configuration and file output).

pub mod decay;
pub mod error;
pub mod exterior;
pub mod gamow;
pub mod poles;
pub mod profile;
pub mod quadrature;
pub mod run;
pub mod spectral;
pub mod well;

pub use decay::{
    fit_exponential, fit_tail_exponent, flux_derivative, geometric_times, nonescape_curve,
    regime_report, CurveBuilder, DecayCurve, MethodPolicy, RegimeReport,
};
pub use error::{Error, Result};
pub use exterior::{norm_audit, ExteriorWave, NormAudit};
pub use gamow::{
    asymptotic_background, background_integral, crossover_time, evolve_rotated,
    nonescape_asymptote, residue_c, RotatedEvolver,
};
pub use poles::{asymptotic_pole_seed, enumerate_poles, first_pole, refine_pole, Resonance};
pub use profile::InitialProfile;
pub use spectral::{evolve_direct, uniform_grid, DirectEvolver, Method, WaveState};
pub use well::{
    coefficient_a, coefficient_a_bar, coefficient_b, quantization_residual, ComplexWavenumber,
    ScatteringPair, WellParameters,
};
