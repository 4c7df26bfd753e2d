//! Rotated-contour representation: pole residues plus the background
//! integral along arg k = -pi/4, and the closed-form long-time asymptotics.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poles::{enumerate_poles, first_pole, PoleSequence, Resonance};
use crate::profile::{InitialProfile, SpectralDensity};
use crate::quadrature::{circle_contour, AdaptiveGaussLegendre};
use crate::spectral::{Method, WaveState};
use crate::well::{coefficient_a_bar, denominator_derivative, transmission_weight, WellParameters};

/// Residue self-check threshold (relative).
pub const RESIDUE_TOLERANCE: f64 = 1e-6;
const CONTOUR_POINTS: usize = 128;
const PHI_ROUNDING: f64 = 64.0 * f64::EPSILON;
/// Poles with Gamma_n t above this are dropped from the residue sum.
const POLE_DAMPING_LIMIT: f64 = 60.0;
/// Below this t / a^2 the rotated integrand cancels catastrophically.
pub const MIN_ROTATED_TIME: f64 = 1.0 / 240.0;
pub const SMALL_TIME_WARNING: f64 = 0.02;

fn rotation() -> Complex64 {
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
}

/// f(k, x) = (1/2pi) phi(k) A(k) Abar(k) sin(kx).
pub fn integrand_f(
    k: Complex64,
    x: f64,
    p: &InitialProfile,
    w: &WellParameters,
) -> Result<Complex64> {
    let d = p.spectral_density();
    integrand_with(&d, k, x, w)
}

fn integrand_with(
    d: &SpectralDensity,
    k: Complex64,
    x: f64,
    w: &WellParameters,
) -> Result<Complex64> {
    if k == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(d.evaluate(k) * transmission_weight(k, w)? * (k * x).sin() / (2.0 * PI))
}

/// One pole contribution C(k_n, x) = P_n sin(k_n x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueTerm {
    pub resonance: Resonance,
    /// P_n = -i phi(k_n) Abar(k_n) N(k_n) / D'(k_n), N = -2ika.
    pub prefactor: Complex64,
    /// c_n = int_0^a |C(k_n, x)|^2 dx.
    pub weight: f64,
    /// Relative gap between the closed form and the circle integral; the
    /// check allows the rounding floor of phi(k_n) on top of the tolerance.
    pub contour_mismatch: f64,
}

impl ResidueTerm {
    pub fn new(r: &Resonance, d: &SpectralDensity, w: &WellParameters) -> Result<Self> {
        let k = r.wavenumber();
        let a = w.width();
        let n = Complex64::new(0.0, -2.0) * k * a;
        let kernel = -Complex64::i() * coefficient_a_bar(k, w)? * n / denominator_derivative(k, w);
        let prefactor = d.evaluate(k) * kernel;
        // phi(k_n) is a sum of terms up to sqrt(a) cosh(Im k a) in size, so
        // it carries that much absolute rounding
        let floor = PHI_ROUNDING * a.sqrt() * (k.im * a).cosh() * kernel.norm();
        // -2 pi i Res g = -oint g dk, with g = phi A Abar / 2pi
        let radius = (1e-3 / a).min(-k.im / 10.0);
        let mut failure = None;
        let contour = -circle_contour(k, radius, CONTOUR_POINTS, |z| {
            match transmission_weight(z, w) {
                Ok(t) => d.evaluate(z) * t / (2.0 * PI),
                Err(e) => {
                    failure = Some(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let gap = (contour - prefactor).norm();
        let mismatch = gap / prefactor.norm().max(1e-300);
        if gap > RESIDUE_TOLERANCE * prefactor.norm() + floor {
            return Err(Error::ResidueMismatch {
                k,
                relative: mismatch,
            });
        }
        Ok(Self {
            resonance: *r,
            prefactor,
            weight: prefactor.norm_sqr() * sine_norm(k, a),
            contour_mismatch: mismatch,
        })
    }

    pub fn coefficient(&self, x: f64) -> Complex64 {
        self.prefactor * (self.resonance.wavenumber() * x).sin()
    }

    /// C(k_n, x) e^{-i k_n^2 t}.
    pub fn at_time(&self, x: f64, t: f64) -> Complex64 {
        self.coefficient(x) * self.phase(t)
    }

    pub fn phase(&self, t: f64) -> Complex64 {
        (-Complex64::i() * self.resonance.energy() * t).exp()
    }
}

/// int_0^a |sin(kx)|^2 dx for k = kappa - i gamma.
fn sine_norm(k: Complex64, a: f64) -> f64 {
    let (kappa, gamma) = (k.re, -k.im);
    let hyper = if gamma.abs() < 1e-8 {
        a
    } else {
        (2.0 * gamma * a).sinh() / (2.0 * gamma)
    };
    let trig = if kappa.abs() < 1e-8 {
        a
    } else {
        (2.0 * kappa * a).sin() / (2.0 * kappa)
    };
    0.5 * (hyper - trig)
}

/// int_0^a sin(alpha x) sin(beta x) dx for complex alpha, beta.
fn sine_overlap(alpha: Complex64, beta: Complex64, a: f64) -> Complex64 {
    let part = |z: Complex64| {
        if z.norm() * a < 1e-8 {
            Complex64::new(a, 0.0)
        } else {
            (z * a).sin() / z
        }
    };
    0.5 * (part(alpha - beta) - part(alpha + beta))
}

/// G_nm = int_0^a conj(C_n) C_m dx / sqrt(c_n c_m) for the given terms.
pub fn gram_matrix(terms: &[ResidueTerm], a: f64) -> Vec<Vec<Complex64>> {
    terms
        .iter()
        .map(|n| {
            terms
                .iter()
                .map(|m| {
                    let kn = n.resonance.wavenumber().conj();
                    let km = m.resonance.wavenumber();
                    n.prefactor.conj() * m.prefactor * sine_overlap(kn, km, a)
                        / (n.weight * m.weight).sqrt()
                })
                .collect()
        })
        .collect()
}

/// C(k_n, x) for a refined pole, checked against a circle integral.
pub fn residue_c(
    r: &Resonance,
    x: f64,
    p: &InitialProfile,
    w: &WellParameters,
) -> Result<Complex64> {
    Ok(ResidueTerm::new(r, &p.spectral_density(), w)?.coefficient(x))
}

/// Background integral on a grid, with its quadrature error estimate.
fn background_on_grid(
    d: &SpectralDensity,
    w: &WellParameters,
    t: f64,
    xs: &[f64],
    tolerance: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let a = w.width();
    let st = t.sqrt();
    // e^{-v^2} must beat the growth e^{v (a - x) / sqrt(2t)}
    let c = a / (2.0 * t).sqrt();
    let top = c + 9.0;
    let mut breaks: Vec<f64> = vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.5, 6.0, 9.0];
    breaks.retain(|&v| v < top);
    let mut v = 9.0;
    while v + 1.5 < top {
        v += 1.5;
        breaks.push(v);
    }
    breaks.push(top);
    let rot = rotation();
    let quad = AdaptiveGaussLegendre::new(20, tolerance);
    let failure = std::sync::Mutex::new(None);
    let r = quad.integrate(&breaks, xs.len(), &|v, out: &mut [Complex64]| {
        let k = rot * (v / st);
        if v == 0.0 {
            out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
            return;
        }
        let weight = match transmission_weight(k, w) {
            Ok(t) => t,
            Err(e) => {
                *failure.lock().unwrap() = Some(e);
                Complex64::new(0.0, 0.0)
            }
        };
        let base = rot * d.evaluate(k) * weight * ((-v * v).exp() / (2.0 * PI * st));
        for (o, x) in out.iter_mut().zip(xs) {
            *o = base * (k * x).sin();
        }
    })?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok((r.values, r.error))
}

fn check_time(t: f64, w: &WellParameters) -> Result<()> {
    let a2 = w.width() * w.width();
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!(
            "rotated representation needs t > 0, got {t}"
        )));
    }
    if t < MIN_ROTATED_TIME * a2 {
        return Err(Error::Precondition(format!(
            "t = {t} below {:.3e} a^2: rotated integrand loses all precision, use the direct method",
            MIN_ROTATED_TIME
        )));
    }
    if t < SMALL_TIME_WARNING * a2 {
        warn!(
            "rotated representation at small t = {t}: background integrand grows like e^(a^2/8t)"
        );
    }
    Ok(())
}

/// e^{-i pi/4} int_0^inf e^{-k^2 t} f(e^{-i pi/4} k, x) dk.
pub fn background_integral(
    x: f64,
    t: f64,
    p: &InitialProfile,
    w: &WellParameters,
) -> Result<Complex64> {
    check_time(t, w)?;
    let (v, _) = background_on_grid(&p.spectral_density(), w, t, &[x], 1e-14)?;
    Ok(v[0])
}

/// A residue term together with its phase at the evaluation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasedResidue {
    pub term: ResidueTerm,
    pub phase: Complex64,
}

/// Background, residues and their sum at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedDecomposition {
    pub background: WaveState,
    pub residues: Vec<PhasedResidue>,
    pub total: WaveState,
    pub quadrature_error: f64,
    /// Size of the first omitted pole term, max over the grid.
    pub dropped_tail: f64,
}

impl RotatedDecomposition {
    /// Wave function built from the first `n` residues only.
    pub fn partial_residue_sum(&self, n: usize) -> WaveState {
        let values = self
            .total
            .grid
            .iter()
            .map(|&x| {
                self.residues
                    .iter()
                    .take(n)
                    .map(|r| r.term.coefficient(x) * r.phase)
                    .sum()
            })
            .collect();
        WaveState {
            grid: self.total.grid.clone(),
            values,
            time: self.total.time,
            method: Method::Rotated,
        }
    }
}

/// Smallest Re k beyond which every pole satisfies Gamma_n t > limit.
pub fn rotated_pole_cutoff(w: &WellParameters, t: f64) -> Result<f64> {
    for r in PoleSequence::new(*w) {
        let r = r?;
        if r.width() * t > POLE_DAMPING_LIMIT {
            return Ok(r.k.kappa());
        }
    }
    unreachable!("pole sequence is unbounded")
}

/// Reusable rotated-contour propagator; residues are computed once.
#[derive(Clone, Debug)]
pub struct RotatedEvolver {
    well: WellParameters,
    density: SpectralDensity,
    terms: Vec<ResidueTerm>,
    fixed_cutoff: Option<f64>,
    covered: f64,
    tolerance: f64,
}

impl RotatedEvolver {
    /// Pole set extended on demand so omitted terms are damped by e^{-30}.
    pub fn new(p: &InitialProfile, w: &WellParameters) -> Self {
        Self {
            well: *w,
            density: p.spectral_density(),
            terms: Vec::new(),
            fixed_cutoff: None,
            covered: 0.0,
            tolerance: 1e-12,
        }
    }

    /// Residues from all poles with Re k < k_max, whatever the time.
    pub fn with_cutoff(p: &InitialProfile, w: &WellParameters, k_max: f64) -> Result<Self> {
        let mut e = Self::new(p, w);
        e.fixed_cutoff = Some(k_max);
        e.extend(k_max)?;
        Ok(e)
    }

    pub fn terms(&self) -> &[ResidueTerm] {
        &self.terms
    }

    fn extend(&mut self, k_max: f64) -> Result<()> {
        if k_max <= self.covered {
            return Ok(());
        }
        let poles = enumerate_poles(&self.well, k_max)?;
        let mut terms = Vec::with_capacity(poles.len());
        for r in &poles {
            match self.terms.iter().find(|t| t.resonance.index == r.index) {
                Some(t) => terms.push(t.clone()),
                None => terms.push(ResidueTerm::new(r, &self.density, &self.well)?),
            }
        }
        self.terms = terms;
        self.covered = k_max;
        Ok(())
    }

    pub fn evolve(&mut self, t: f64, grid: &[f64]) -> Result<RotatedDecomposition> {
        check_time(t, &self.well)?;
        let a = self.well.width();
        if grid
            .iter()
            .any(|&x| !(0.0..=a * (1.0 + 1e-12)).contains(&x))
        {
            return Err(Error::InvalidParameters(
                "rotated evolution grid must lie in [0, a]".into(),
            ));
        }
        let cutoff = match self.fixed_cutoff {
            Some(k) => k,
            None => rotated_pole_cutoff(&self.well, t)? + 0.5 / a,
        };
        self.extend(cutoff)?;
        let used: Vec<&ResidueTerm> = self
            .terms
            .iter()
            .filter(|r| r.resonance.k.kappa() < cutoff)
            .collect();
        // late times: only the t^{-3/2} background is left to set the scale
        let floor = asymptotic_background(a, t, self.density.profile(), &self.well).norm();
        let scale = used
            .iter()
            .map(|r| r.prefactor.norm() * r.phase(t).norm())
            .fold(floor.min(1.0), f64::max);
        let (bg, err) =
            background_on_grid(&self.density, &self.well, t, grid, self.tolerance * scale)?;
        let residues: Vec<PhasedResidue> = used
            .iter()
            .map(|r| PhasedResidue {
                term: (*r).clone(),
                phase: r.phase(t),
            })
            .collect();
        let total: Vec<Complex64> = grid
            .iter()
            .zip(&bg)
            .map(|(&x, b)| {
                b + residues
                    .iter()
                    .map(|r| r.term.coefficient(x) * r.phase)
                    .sum::<Complex64>()
            })
            .collect();
        let dropped_tail = self.dropped_estimate(used.len(), t, a);
        Ok(RotatedDecomposition {
            background: WaveState::new(grid.to_vec(), bg, t, Method::Rotated)?,
            residues,
            total: WaveState::new(grid.to_vec(), total, t, Method::Rotated)?,
            quadrature_error: err,
            dropped_tail,
        })
    }

    fn dropped_estimate(&self, used: usize, t: f64, a: f64) -> f64 {
        let next = PoleSequence::new(self.well).nth(used);
        match next {
            Some(Ok(r)) => match ResidueTerm::new(&r, &self.density, &self.well) {
                Ok(term) => {
                    let k = r.wavenumber();
                    let grow = (-k.im * a).exp();
                    term.prefactor.norm() * grow * term.phase(t).norm()
                }
                Err(_) => f64::NAN,
            },
            _ => f64::NAN,
        }
    }
}

/// Rotated representation with residues from poles below `k_max`.
pub fn evolve_rotated(
    p: &InitialProfile,
    t: f64,
    grid: &[f64],
    w: &WellParameters,
    k_max: f64,
) -> Result<RotatedDecomposition> {
    check_time(t, w)?;
    RotatedEvolver::with_cutoff(p, w, k_max)?.evolve(t, grid)
}

/// (1/2pi) phi'(0) |A(0)|^2, the small-k coefficient of the background.
fn asymptotic_prefactor(p: &InitialProfile, w: &WellParameters) -> Complex64 {
    let l = 1.0 + w.opacity();
    p.overlap_slope_at_zero() * (4.0 / (l * l) / (2.0 * PI))
}

/// Leading long-time background,
/// e^{-3i pi/4} (1/2pi) phi'(0) (4/(1+lambda)^2) x sqrt(pi) / (4 t^{3/2}).
pub fn asymptotic_background(x: f64, t: f64, p: &InitialProfile, w: &WellParameters) -> Complex64 {
    let phase = Complex64::from_polar(1.0, -0.75 * PI);
    phase * asymptotic_prefactor(p, w) * x * (PI.sqrt() / (4.0 * t.powf(1.5)))
}

/// int_0^a |asymptotic_background|^2 dx = |pref|^2 (a^3/3) pi / (16 t^3).
pub fn nonescape_asymptote(t: f64, p: &InitialProfile, w: &WellParameters) -> f64 {
    let a = w.width();
    asymptotic_prefactor(p, w).norm_sqr() * a.powi(3) / 3.0 * PI / (16.0 * t.powi(3))
}

/// Crossing of c_1 e^{-t/tau_1} with the t^{-3} asymptote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub t_star: f64,
    pub tau_1: f64,
    pub c_1: f64,
    /// 10 tau_1 ln(lambda).
    pub estimate: f64,
    pub probability: f64,
}

pub fn crossover_time(p: &InitialProfile, w: &WellParameters) -> Result<Crossover> {
    if !w.is_metastable() {
        return Err(Error::Precondition(format!(
            "crossover needs opacity >= 10, got {}",
            w.opacity()
        )));
    }
    let r = first_pole(w)?;
    let term = ResidueTerm::new(&r, &p.spectral_density(), w)?;
    let tau = r.lifetime();
    let c1 = term.weight;
    let gap = |t: f64| c1.ln() - t / tau - nonescape_asymptote(t, p, w).ln();
    let (mut lo, mut hi) = (tau, 1e4 * tau);
    if !(gap(lo) > 0.0 && gap(hi) < 0.0) {
        return Err(Error::NoCrossing { lo, hi });
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = (lo * hi).sqrt();
    Ok(Crossover {
        t_star,
        tau_1: tau,
        c_1: c1,
        estimate: 10.0 * tau * w.opacity().ln(),
        probability: c1 * (-t_star / tau).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::first_pole;
    use crate::well::coefficient_a;

    fn setup(l: f64) -> (WellParameters, InitialProfile) {
        let w = WellParameters::new(l, 1.0).unwrap();
        (w, InitialProfile::box_mode(1, &w).unwrap())
    }

    #[test]
    fn integrand_on_real_axis() {
        let (w, p) = setup(10.0);
        let k = 1.7;
        let a = coefficient_a(Complex64::new(k, 0.0), &w).unwrap();
        let phi = p.spectral_density().evaluate_real(k);
        let expected = phi * a.norm_sqr() * (k * 0.3f64).sin() / (2.0 * PI);
        let got = integrand_f(Complex64::new(k, 0.0), 0.3, &p, &w).unwrap();
        assert!((got - expected).norm() < 1e-14);
        assert_eq!(
            integrand_f(Complex64::new(0.0, 0.0), 0.3, &p, &w).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert!(integrand_f(rotation(), 0.5, &p, &setup(100.0).0)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn residue_reference_values() {
        for (l, re, im) in [
            (100.0, 1.406_826_201_013_09, -0.000_672_483_678_267_418),
            (10.0, 1.344_227_852_477_03, -0.054_104_034_766_692_2),
            (30.0, 1.388_421_897_556_99, -0.007_344_795_300_123_3),
        ] {
            let (w, p) = setup(l);
            let r = first_pole(&w).unwrap();
            let c = residue_c(&r, 0.5, &p, &w).unwrap();
            assert!((c - Complex64::new(re, im)).norm() < 1e-11, "{l}: {c}");
            assert_eq!(
                residue_c(&r, 0.0, &p, &w).unwrap(),
                Complex64::new(0.0, 0.0)
            );
        }
        let (w, p) = setup(100.0);
        let t = ResidueTerm::new(&first_pole(&w).unwrap(), &p.spectral_density(), &w).unwrap();
        assert!((t.weight - 0.999_698_656_463).abs() < 1e-10);
        assert!(t.contour_mismatch < 1e-8);
    }

    #[test]
    fn asymptote_closed_form() {
        let (w, p) = setup(10.0);
        let r = asymptotic_background(0.5, 3.0, &p, &w).norm()
            / asymptotic_background(0.5, 24.0, &p, &w).norm();
        assert!((r - 8f64.powf(1.5)).abs() < 1e-10 * r);
        assert!(
            (nonescape_asymptote(2.0, &p, &w) / nonescape_asymptote(1.0, &p, &w) - 0.125).abs()
                < 1e-15
        );
        let (w20, p20) = setup(20.0);
        let ratio = nonescape_asymptote(7.0, &p20, &w20) / nonescape_asymptote(7.0, &p, &w);
        assert!((ratio - (11.0f64 / 21.0).powi(4)).abs() < 1e-14);
        assert_eq!(
            asymptotic_background(0.0, 1.0, &p, &w),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn background_approaches_asymptote() {
        let (w, p) = setup(10.0);
        let b = background_integral(0.5, 5000.0, &p, &w).unwrap();
        let s = asymptotic_background(0.5, 5000.0, &p, &w);
        assert!((b / s - 1.0).norm() < 0.1, "{}", b / s);
        assert_eq!(
            background_integral(0.0, 5.0, &p, &w).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert!(background_integral(0.5, 0.0, &p, &w).is_err());
    }

    #[test]
    fn gram_is_nearly_identity() {
        let (w, p) = setup(100.0);
        let d = p.spectral_density();
        let terms: Vec<ResidueTerm> = crate::poles::enumerate_poles(&w, 10.0)
            .unwrap()
            .iter()
            .map(|r| ResidueTerm::new(r, &d, &w).unwrap())
            .collect();
        assert_eq!(terms.len(), 3);
        let g = gram_matrix(&terms, 1.0);
        for (i, row) in g.iter().enumerate() {
            assert!((row[i] - 1.0).norm() < 1e-12);
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    assert!(v.norm() < 0.05, "{i},{j}: {v}");
                }
            }
        }
    }

    #[test]
    fn crossover_reference() {
        let (w, p) = setup(100.0);
        let c = crossover_time(&p, &w).unwrap();
        assert!((c.t_star - 4088.07).abs() < 0.05, "{}", c.t_star);
        let (w10, p10) = setup(10.0);
        let c10 = crossover_time(&p10, &w10).unwrap();
        assert!((c10.t_star - 33.07).abs() < 0.01, "{}", c10.t_star);
        assert!(c.t_star / c.tau_1 > c10.t_star / c10.tau_1);
        let (w1, p1) = setup(2.0);
        assert!(crossover_time(&p1, &w1).is_err());
    }
}
