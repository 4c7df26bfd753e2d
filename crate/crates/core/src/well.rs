//! Delta-shell well: parameters, scattering coefficients and the
//! quantization function whose zeros are the resonance poles.
//!
//! Units throughout: hbar = 2m = 1, so E = k^2.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size of |D| below which a coefficient is treated as singular.
const POLE_GUARD: f64 = 1e-13;

/// Opacity lambda and width a of the shell V(x) = (lambda/a) delta(x - a),
/// with an impenetrable wall at x = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellParameters {
    opacity: f64,
    width: f64,
}

impl WellParameters {
    pub fn new(opacity: f64, width: f64) -> Result<Self> {
        if !(opacity.is_finite() && opacity > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "opacity must be finite and positive, got {opacity}"
            )));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "width must be finite and positive, got {width}"
            )));
        }
        Ok(Self { opacity, width })
    }

    pub fn opacity(&self) -> f64 {
        self.opacity
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Opaque enough for the leading-order pole expansion and lifetime law.
    pub fn is_metastable(&self) -> bool {
        self.opacity >= 10.0
    }

    /// Leading-order lifetime (lambda a)^2 / (4 (n pi)^3).
    pub fn asymptotic_lifetime(&self, n: usize) -> f64 {
        let np = n as f64 * PI;
        (self.opacity * self.width).powi(2) / (4.0 * np.powi(3))
    }

    /// Leading-order decay rate, reciprocal of [`Self::asymptotic_lifetime`].
    pub fn asymptotic_width(&self, n: usize) -> f64 {
        1.0 / self.asymptotic_lifetime(n)
    }
}

/// A finite complex wavenumber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexWavenumber(Complex64);

impl ComplexWavenumber {
    pub fn new(k: Complex64) -> Result<Self> {
        if k.re.is_finite() && k.im.is_finite() {
            Ok(Self(k))
        } else {
            Err(Error::InvalidParameters(format!(
                "non-finite wavenumber {k}"
            )))
        }
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    /// Real part (the oscillation wavenumber).
    pub fn kappa(&self) -> f64 {
        self.0.re
    }

    /// Decay constant -2 Im k.
    pub fn decay_constant(&self) -> f64 {
        -2.0 * self.0.im
    }
}

impl From<ComplexWavenumber> for Complex64 {
    fn from(k: ComplexWavenumber) -> Self {
        k.0
    }
}

/// D(k) = ka + lambda e^{ika} sin(ka).
pub fn denominator(k: Complex64, w: &WellParameters) -> Complex64 {
    let z = k * w.width;
    z + (Complex64::i() * z).exp() * z.sin() * w.opacity
}

/// Dbar(k) = ka + lambda e^{-ika} sin(ka).
pub fn denominator_bar(k: Complex64, w: &WellParameters) -> Complex64 {
    let z = k * w.width;
    z + (-Complex64::i() * z).exp() * z.sin() * w.opacity
}

/// dD/dk = a + lambda a e^{2ika}.
pub fn denominator_derivative(k: Complex64, w: &WellParameters) -> Complex64 {
    let z = k * w.width;
    (Complex64::new(1.0, 0.0) + (Complex64::i() * z * 2.0).exp() * w.opacity) * w.width
}

/// F(k) = ka cos(ka) + (lambda - i ka) sin(ka); D = e^{ika} F.
///
/// Entire, with F(0) = 0, no zeros in the closed upper half-plane other
/// than the origin, and zeros symmetric under k -> -conj(k).
pub fn quantization_residual(k: Complex64, w: &WellParameters) -> Complex64 {
    let z = k * w.width;
    let (s, c) = (z.sin(), z.cos());
    z * c + (Complex64::new(w.opacity, 0.0) - Complex64::i() * z) * s
}

/// dF/dk.
pub fn quantization_derivative(k: Complex64, w: &WellParameters) -> Complex64 {
    let a = w.width;
    let z = k * a;
    let (s, c) = (z.sin(), z.cos());
    let i = Complex64::i();
    (c - z * s - i * s + (Complex64::new(w.opacity, 0.0) - i * z) * c) * a
}

fn guard(k: Complex64, d: Complex64, w: &WellParameters) -> Result<()> {
    let scale = (k * w.width).norm().max(1.0) + w.opacity;
    if d.norm() <= POLE_GUARD * scale || !d.is_finite() {
        Err(Error::PoleProximity {
            k,
            denominator: d.norm(),
        })
    } else {
        Ok(())
    }
}

/// A(k) = -2ika / D(k), amplitude of the interior wave.
pub fn coefficient_a(k: Complex64, w: &WellParameters) -> Result<Complex64> {
    if k == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(0.0, -2.0 / (1.0 + w.opacity)));
    }
    let d = denominator(k, w);
    guard(k, d, w)?;
    Ok(Complex64::new(0.0, -2.0) * k * w.width / d)
}

/// Abar(k) = 2ika / Dbar(k); equals conj(A(k)) for real k.
pub fn coefficient_a_bar(k: Complex64, w: &WellParameters) -> Result<Complex64> {
    if k == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(0.0, 2.0 / (1.0 + w.opacity)));
    }
    let d = denominator_bar(k, w);
    guard(k, d, w)?;
    Ok(Complex64::new(0.0, 2.0) * k * w.width / d)
}

/// B(k) = -Dbar(k) / D(k); unimodular for real k.
pub fn coefficient_b(k: Complex64, w: &WellParameters) -> Result<Complex64> {
    if k == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    let d = denominator(k, w);
    guard(k, d, w)?;
    Ok(-denominator_bar(k, w) / d)
}

/// Analytic continuation of |A|^2, i.e. A(k) Abar(k) = 4(ka)^2 / (D Dbar).
pub fn transmission_weight(k: Complex64, w: &WellParameters) -> Result<Complex64> {
    let z = k * w.width;
    if z.norm() < 1e-8 {
        let l = 1.0 + w.opacity;
        return Ok(Complex64::new(4.0 / (l * l), 0.0));
    }
    let d = denominator(k, w);
    let db = denominator_bar(k, w);
    guard(k, d, w)?;
    guard(k, db, w)?;
    Ok(z * z * 4.0 / (d * db))
}

/// |A(k)|^2 for real k, written without complex arithmetic.
pub fn transmission_weight_real(k: f64, w: &WellParameters) -> f64 {
    let z = k * w.width;
    if z.abs() < 1e-8 {
        let l = 1.0 + w.opacity;
        return 4.0 / (l * l);
    }
    let (s, c) = z.sin_cos();
    // D = e^{iz} F with F real part z c + lambda s and imaginary part -z s
    let fr = z * c + w.opacity * s;
    let fi = -z * s;
    4.0 * z * z / (fr * fr + fi * fi)
}

/// The pair (A, B) of interior and reflection amplitudes at one wavenumber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringPair {
    pub k: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

impl ScatteringPair {
    pub fn evaluate(k: Complex64, w: &WellParameters) -> Result<Self> {
        Ok(Self {
            k,
            a: coefficient_a(k, w)?,
            b: coefficient_b(k, w)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WellParameters::new(0.0, 1.0).is_err());
        assert!(WellParameters::new(10.0, -1.0).is_err());
        assert!(WellParameters::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn zero_energy_limits() {
        let w = WellParameters::new(10.0, 1.0).unwrap();
        let a0 = coefficient_a(c(0.0, 0.0), &w).unwrap();
        assert!((a0 - c(0.0, -2.0 / 11.0)).norm() < 1e-15);
        let tiny = coefficient_a(c(1e-7, 0.0), &w).unwrap();
        assert!((tiny - a0).norm() < 1e-6);
        assert_eq!(coefficient_b(c(0.0, 0.0), &w).unwrap(), c(-1.0, 0.0));
        let b = coefficient_b(c(1e-7, 0.0), &w).unwrap();
        assert!((b + 1.0).norm() < 1e-5);
    }

    #[test]
    fn frozen_coefficient_values() {
        // high-precision reference values
        let w = WellParameters::new(100.0, 1.0).unwrap();
        let a = coefficient_a(c(1.0, 0.0), &w).unwrap();
        assert!((a.norm() - 0.023_615_098_121_498_747).abs() < 1e-15);
        let w10 = WellParameters::new(10.0, 1.0).unwrap();
        let f = quantization_residual(c(3.0, 0.0), &w10);
        assert!((f - c(-1.558_777_409_202_664_2, -0.423_360_024_179_601_67)).norm() < 1e-14);
    }

    #[test]
    fn real_axis_identities() {
        let w = WellParameters::new(30.0, 1.3).unwrap();
        for i in 1..200 {
            let k = 0.07 * i as f64;
            let kc = c(k, 0.0);
            let b = coefficient_b(kc, &w).unwrap();
            assert!((b.norm() - 1.0).abs() < 1e-12);
            let a = coefficient_a(kc, &w).unwrap();
            let ab = coefficient_a_bar(kc, &w).unwrap();
            assert!((ab - a.conj()).norm() < 1e-12 * a.norm().max(1.0));
            let t = transmission_weight(kc, &w).unwrap();
            assert!((t.re - a.norm_sqr()).abs() < 1e-10 * a.norm_sqr().max(1.0));
            assert!(
                (transmission_weight_real(k, &w) - a.norm_sqr()).abs()
                    < 1e-10 * a.norm_sqr().max(1.0)
            );
            // B conj(A) = A
            assert!((b * a.conj() - a).norm() < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let w = WellParameters::new(10.0, 1.0).unwrap();
        let k = c(2.3, -0.4);
        let h = 1e-6;
        let fd = (quantization_residual(k + h, &w) - quantization_residual(k - h, &w)) / (2.0 * h);
        assert!((fd - quantization_derivative(k, &w)).norm() < 1e-7);
        let dd = (denominator(k + h, &w) - denominator(k - h, &w)) / (2.0 * h);
        assert!((dd - denominator_derivative(k, &w)).norm() < 1e-7);
    }

    #[test]
    fn pole_proximity_detected() {
        let w = WellParameters::new(100.0, 1.0).unwrap();
        let pole = c(3.110_526_827_213_917_7, -0.000_956_145_587_831_996_64);
        assert!(matches!(
            coefficient_a(pole, &w),
            Err(Error::PoleProximity { .. })
        ));
        let near = coefficient_a(c(pole.re + 1e-6, 0.0), &w).unwrap();
        assert!(near.norm() > 30.0);
    }
}
