//! Initial wave functions confined to [0, a] and their sine overlap
//! phi(k) = int_0^a psi(x) sin(kx) dx.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::well::WellParameters;

const FIXED_PANELS: usize = 64;
const FIXED_ORDER: usize = 16;
/// Largest |k| a for which the fixed node set is used.
const FIXED_RANGE: f64 = 200.0;

/// Shape of an initial profile (before normalisation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileShape {
    /// sqrt(2/a) sin(n pi x / a).
    BoxMode { n: usize },
    /// Gaussian with the chord through its end values removed.
    TruncatedGaussian { center: f64, sigma: f64 },
    /// Piecewise-linear interpolation of equally spaced samples on [0, a].
    Samples { values: Vec<Complex64> },
}

/// A normalised state vanishing at x = 0 and x = a.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialProfile {
    shape: ProfileShape,
    width: f64,
    scale: f64,
}

impl InitialProfile {
    pub fn box_mode(n: usize, w: &WellParameters) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProfile("box mode index starts at 1".into()));
        }
        Ok(Self {
            shape: ProfileShape::BoxMode { n },
            width: w.width(),
            scale: (2.0 / w.width()).sqrt(),
        })
    }

    pub fn truncated_gaussian(center: f64, sigma: f64, w: &WellParameters) -> Result<Self> {
        let a = w.width();
        if !(center > 0.0 && center < a) {
            return Err(Error::InvalidProfile(format!(
                "gaussian center {center} outside (0, {a})"
            )));
        }
        if !(sigma >= a / 100.0 && sigma.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "gaussian width {sigma} below a/100"
            )));
        }
        let mut p = Self {
            shape: ProfileShape::TruncatedGaussian { center, sigma },
            width: a,
            scale: 1.0,
        };
        let rule = GaussLegendre::new(FIXED_ORDER);
        let mut n2 = 0.0;
        for j in 0..FIXED_PANELS {
            let (x0, x1) = panel(a, j);
            n2 += rule.integrate_real(x0, x1, |x| p.gaussian_raw(x).powi(2));
        }
        if n2 <= 0.0 {
            return Err(Error::InvalidProfile(
                "gaussian vanishes after baseline removal".into(),
            ));
        }
        p.scale = 1.0 / n2.sqrt();
        Ok(p)
    }

    pub fn from_samples(values: Vec<Complex64>, w: &WellParameters) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidProfile("need at least 3 samples".into()));
        }
        if values[0].norm() > 1e-12 || values[values.len() - 1].norm() > 1e-12 {
            return Err(Error::InvalidProfile(
                "samples must vanish at x = 0 and x = a".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        let h = w.width() / (values.len() - 1) as f64;
        let n2: f64 = values
            .windows(2)
            .map(|p| h / 3.0 * (p[0].norm_sqr() + (p[0] * p[1].conj()).re + p[1].norm_sqr()))
            .sum();
        if n2 <= 0.0 {
            return Err(Error::InvalidProfile("samples are identically zero".into()));
        }
        Ok(Self {
            shape: ProfileShape::Samples { values },
            width: w.width(),
            scale: 1.0 / n2.sqrt(),
        })
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Short label such as `box:1` or `gauss:0.5,0.1`.
    pub fn descriptor(&self) -> String {
        match &self.shape {
            ProfileShape::BoxMode { n } => format!("box:{n}"),
            ProfileShape::TruncatedGaussian { center, sigma } => format!("gauss:{center},{sigma}"),
            ProfileShape::Samples { values } => format!("samples:{}", values.len()),
        }
    }

    fn gaussian_raw(&self, x: f64) -> f64 {
        match self.shape {
            ProfileShape::TruncatedGaussian { center, sigma } => {
                let a = self.width;
                let g = |y: f64| (-(y - center).powi(2) / (2.0 * sigma * sigma)).exp();
                g(x) - (g(0.0) * (1.0 - x / a) + g(a) * x / a)
            }
            _ => unreachable!(),
        }
    }

    /// psi(x); zero outside [0, a].
    pub fn amplitude(&self, x: f64) -> Complex64 {
        let a = self.width;
        if !(0.0..=a).contains(&x) {
            return Complex64::new(0.0, 0.0);
        }
        match &self.shape {
            ProfileShape::BoxMode { n } => {
                Complex64::new(self.scale * (*n as f64 * PI * x / a).sin(), 0.0)
            }
            ProfileShape::TruncatedGaussian { .. } => {
                Complex64::new(self.scale * self.gaussian_raw(x), 0.0)
            }
            ProfileShape::Samples { values } => {
                let m = values.len() - 1;
                let s = x / a * m as f64;
                let j = (s.floor() as usize).min(m - 1);
                let t = s - j as f64;
                (values[j] * (1.0 - t) + values[j + 1] * t) * self.scale
            }
        }
    }

    /// phi'(0) = int_0^a x psi(x) dx.
    pub fn overlap_slope_at_zero(&self) -> Complex64 {
        let a = self.width;
        match &self.shape {
            ProfileShape::BoxMode { n } => {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                Complex64::new(self.scale * a * a * sign / (*n as f64 * PI), 0.0)
            }
            ProfileShape::TruncatedGaussian { .. } => {
                let rule = GaussLegendre::new(FIXED_ORDER);
                let mut s = 0.0;
                for j in 0..FIXED_PANELS {
                    let (x0, x1) = panel(a, j);
                    s += rule.integrate_real(x0, x1, |x| x * self.gaussian_raw(x));
                }
                Complex64::new(s * self.scale, 0.0)
            }
            ProfileShape::Samples { values } => {
                let h = a / (values.len() - 1) as f64;
                let mut s = Complex64::new(0.0, 0.0);
                for (j, p) in values.windows(2).enumerate() {
                    let x0 = j as f64 * h;
                    // int (y0 + (y1 - y0) t) (x0 + h t) h dt over [0, 1]
                    s += (p[0] * (x0 / 2.0 + h / 6.0) + p[1] * (x0 / 2.0 + h / 3.0)) * h;
                }
                s * self.scale
            }
        }
    }

    /// M with |phi(k)| <= M / k^2 on the real axis.
    pub fn overlap_envelope(&self) -> f64 {
        let a = self.width;
        match &self.shape {
            ProfileShape::BoxMode { n } => {
                let q = *n as f64 * PI / a;
                self.scale * q * (1.0 + 2.0 * *n as f64)
            }
            ProfileShape::TruncatedGaussian { center, sigma } => {
                let g = |y: f64| (-(y - center).powi(2) / (2.0 * sigma * sigma)).exp();
                let g1 = |y: f64| -(y - center) / (sigma * sigma) * g(y);
                let g2 =
                    |y: f64| ((y - center).powi(2) / sigma.powi(4) - 1.0 / (sigma * sigma)) * g(y);
                let edge = (g1(a) - (g(a) - g(0.0)) / a).abs();
                let rule = GaussLegendre::new(FIXED_ORDER);
                let mut curv = 0.0;
                for j in 0..FIXED_PANELS {
                    let (x0, x1) = panel(a, j);
                    curv += rule.integrate_real(x0, x1, |x| g2(x).abs());
                }
                // |g''| has kinks; pad the quadrature estimate
                self.scale * (edge + 1.01 * curv)
            }
            ProfileShape::Samples { values } => {
                let h = a / (values.len() - 1) as f64;
                let slopes: Vec<Complex64> = values.windows(2).map(|p| (p[1] - p[0]) / h).collect();
                let jumps: f64 = slopes.windows(2).map(|s| (s[1] - s[0]).norm()).sum();
                self.scale * (slopes[slopes.len() - 1].norm() + jumps)
            }
        }
    }

    /// Prepares the overlap transform.
    pub fn spectral_density(&self) -> SpectralDensity {
        SpectralDensity::new(self)
    }
}

fn panel(a: f64, j: usize) -> (f64, f64) {
    let h = a / FIXED_PANELS as f64;
    (j as f64 * h, (j + 1) as f64 * h)
}

/// Evaluator for phi(k) with cached quadrature nodes.
#[derive(Clone, Debug)]
pub struct SpectralDensity {
    profile: InitialProfile,
    /// (x, w psi(x)) on the fixed composite rule; empty for closed forms.
    nodes: Vec<(f64, Complex64)>,
}

fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

fn sinc_real(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

impl SpectralDensity {
    pub fn new(profile: &InitialProfile) -> Self {
        let mut nodes = Vec::new();
        if let ProfileShape::TruncatedGaussian { .. } = profile.shape {
            let rule = GaussLegendre::new(FIXED_ORDER);
            for j in 0..FIXED_PANELS {
                let (x0, x1) = panel(profile.width, j);
                rule.for_each_node(x0, x1, |x, w| nodes.push((x, profile.amplitude(x) * w)));
            }
        }
        Self {
            profile: profile.clone(),
            nodes,
        }
    }

    pub fn profile(&self) -> &InitialProfile {
        &self.profile
    }

    /// phi(k) for complex k (entire in k).
    pub fn evaluate(&self, k: Complex64) -> Complex64 {
        let p = &self.profile;
        let a = p.width;
        match &p.shape {
            ProfileShape::BoxMode { n } => {
                let q = *n as f64 * PI / a;
                (sinc((k - q) * a) - sinc((k + q) * a)) * (0.5 * a * p.scale)
            }
            ProfileShape::TruncatedGaussian { .. } => {
                if (k * a).norm() <= FIXED_RANGE {
                    self.nodes.iter().map(|(x, wp)| wp * (k * x).sin()).sum()
                } else {
                    // finer composite rule, about 2 radians of phase per panel
                    let panels = ((k * a).norm() / 2.0).ceil() as usize;
                    let rule = GaussLegendre::new(FIXED_ORDER);
                    let h = a / panels as f64;
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..panels {
                        let x0 = j as f64 * h;
                        rule.for_each_node(x0, x0 + h, |x, w| {
                            s += p.amplitude(x) * (k * x).sin() * w
                        });
                    }
                    s
                }
            }
            ProfileShape::Samples { values } => samples_transform(values, a, p.scale, k),
        }
    }

    /// phi(k) for real k; real-valued for real profiles.
    pub fn evaluate_real(&self, k: f64) -> Complex64 {
        let p = &self.profile;
        match &p.shape {
            ProfileShape::BoxMode { n } => {
                let a = p.width;
                let q = *n as f64 * PI / a;
                Complex64::new(
                    (sinc_real((k - q) * a) - sinc_real((k + q) * a)) * (0.5 * a * p.scale),
                    0.0,
                )
            }
            ProfileShape::TruncatedGaussian { .. } if (k * p.width).abs() <= FIXED_RANGE => {
                let s: f64 = self.nodes.iter().map(|(x, wp)| wp.re * (k * x).sin()).sum();
                Complex64::new(s, 0.0)
            }
            _ => self.evaluate(Complex64::new(k, 0.0)),
        }
    }
}

fn samples_transform(values: &[Complex64], a: f64, scale: f64, k: Complex64) -> Complex64 {
    let m = values.len() - 1;
    let h = a / m as f64;
    let mut s = Complex64::new(0.0, 0.0);
    if (k * h).norm() < 1.0 {
        let rule = GaussLegendre::new(8);
        for (j, p) in values.windows(2).enumerate() {
            let x0 = j as f64 * h;
            rule.for_each_node(x0, x0 + h, |x, w| {
                let t = (x - x0) / h;
                s += (p[0] * (1.0 - t) + p[1] * t) * (k * x).sin() * w;
            });
        }
    } else {
        // exact: int (alpha + beta x) sin(kx) = -(alpha + beta x) cos(kx)/k + beta sin(kx)/k^2
        for (j, p) in values.windows(2).enumerate() {
            let x0 = j as f64 * h;
            let x1 = x0 + h;
            let beta = (p[1] - p[0]) / h;
            let anti =
                |x: f64, y: Complex64| -y * (k * x).cos() / k + beta * (k * x).sin() / (k * k);
            s += anti(x1, p[1]) - anti(x0, p[0]);
        }
    }
    s * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well() -> WellParameters {
        WellParameters::new(10.0, 1.0).unwrap()
    }

    fn reference_transform(p: &InitialProfile, k: Complex64) -> Complex64 {
        let rule = GaussLegendre::new(20);
        let mut s = Complex64::new(0.0, 0.0);
        let m = 4000;
        let h = p.width() / m as f64;
        for j in 0..m {
            let x0 = j as f64 * h;
            s += rule.integrate(x0, x0 + h, |x| p.amplitude(x) * (k * x).sin());
        }
        s
    }

    #[test]
    fn box_transform_values() {
        let p = InitialProfile::box_mode(1, &well()).unwrap();
        let d = p.spectral_density();
        let slope = p.overlap_slope_at_zero().re;
        assert!((slope - 2f64.sqrt() / PI).abs() < 1e-15);
        assert!((d.evaluate_real(1e-6).re / 1e-6 - slope).abs() < 1e-9);
        // at k = q the overlap is sqrt(2/a) a / 2
        assert!((d.evaluate_real(PI).re - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        for k in [
            Complex64::new(3.3, -0.7),
            Complex64::new(17.0, 0.0),
            Complex64::new(40.0, -40.0),
        ] {
            let r = reference_transform(&p, k);
            assert!((d.evaluate(k) - r).norm() < 1e-11 * r.norm().max(1.0));
        }
    }

    #[test]
    fn gaussian_profile() {
        let w = well();
        let p = InitialProfile::truncated_gaussian(0.5, 0.1, &w).unwrap();
        assert!(p.amplitude(0.0).norm() < 1e-15 && p.amplitude(1.0).norm() < 1e-15);
        let d = p.spectral_density();
        for k in [
            Complex64::new(2.0, 0.0),
            Complex64::new(30.0, -5.0),
            Complex64::new(250.0, -200.0),
        ] {
            let r = reference_transform(&p, k);
            assert!(
                (d.evaluate(k) - r).norm() < 1e-10 * r.norm().max(1.0),
                "{k}"
            );
        }
        let m = p.overlap_envelope();
        for i in 1..400 {
            let k = 0.5 * i as f64;
            assert!(d.evaluate_real(k).norm() <= m / (k * k) + 1e-14);
        }
        assert!(InitialProfile::truncated_gaussian(1.2, 0.1, &w).is_err());
    }

    #[test]
    fn samples_profile() {
        let w = well();
        let vals: Vec<Complex64> = (0..=40)
            .map(|j| {
                let x = j as f64 / 40.0;
                Complex64::new(x * (1.0 - x), 0.3 * (PI * x).sin())
            })
            .collect();
        let p = InitialProfile::from_samples(vals, &w).unwrap();
        let d = p.spectral_density();
        for k in [
            Complex64::new(0.01, 0.0),
            Complex64::new(9.0, -1.0),
            Complex64::new(120.0, 0.0),
        ] {
            let r = reference_transform(&p, k);
            assert!(
                (d.evaluate(k) - r).norm() < 1e-11 * r.norm().max(1.0),
                "{k}"
            );
        }
        let slope = p.overlap_slope_at_zero();
        let r = reference_transform(&p, Complex64::new(1e-7, 0.0)) / 1e-7;
        assert!((slope - r).norm() < 1e-8);
        assert!(InitialProfile::from_samples(vec![Complex64::new(1.0, 0.0); 5], &w).is_err());
    }

    #[test]
    fn envelope_bounds_box() {
        let p = InitialProfile::box_mode(3, &well()).unwrap();
        let d = p.spectral_density();
        let m = p.overlap_envelope();
        for i in 1..2000 {
            let k = 0.05 * i as f64;
            assert!(d.evaluate_real(k).norm() <= m / (k * k) * (1.0 + 1e-12));
        }
    }
}
