//! Wave function outside the shell and the total-norm audit.
//!
//! For x > a the exterior eigenfunction branch folds into
//! psi(x, t) = (1/2pi) int_R e^{-iq^2 t + iqx} A(q) phi(q) dq,
//! evaluated along q = q0 + e^{-i pi/4} s with q0 near the saddle x/2t.
//! Poles of A crossed by the deformation contribute -i e^{-ik^2 t + ikx} R_n,
//! R_n = phi(k_n) N(k_n) / D'(k_n).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poles::{enumerate_poles, Resonance};
use crate::profile::{InitialProfile, SpectralDensity};
use crate::quadrature::{AdaptiveGaussLegendre, GaussLegendre};
use crate::spectral::{norm_inside, WaveState};
use crate::well::{coefficient_a, denominator_derivative, WellParameters};

/// Closest the integration line may pass to a pole.
const MIN_POLE_GAP: f64 = 1e-3;
/// Pole terms and Gaussian tails below e^{-LOG_CUT} are dropped.
const LOG_CUT: f64 = 50.0;

#[derive(Clone, Debug)]
struct PoleData {
    k: Complex64,
    residue: Complex64,
    /// Re k + Im k: the line through q0 crosses the pole when q0 < c.
    c: f64,
}

/// Evaluator of psi(x, t) for x >= a at a fixed time.
#[derive(Clone, Debug)]
pub struct ExteriorWave {
    well: WellParameters,
    density: SpectralDensity,
    t: f64,
    poles: Vec<PoleData>,
    tolerance: f64,
}

impl ExteriorWave {
    /// Poles are enumerated up to `q_max`; values are reliable for x < 2 t q_max.
    pub fn new(p: &InitialProfile, w: &WellParameters, t: f64, q_max: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Precondition(format!(
                "exterior wave needs t > 0, got {t}"
            )));
        }
        let density = p.spectral_density();
        let reach = q_max + 1.0 / w.width() + LOG_CUT / (t * 0.1f64.min(1.0 / w.width()));
        let poles = enumerate_poles(w, reach.max(2.0 * PI / w.width()))?
            .iter()
            .map(|r| pole_data(r, &density, w))
            .collect();
        Ok(Self {
            well: *w,
            density,
            t,
            poles,
            tolerance: 1e-12,
        })
    }

    fn h(&self, q: Complex64) -> Result<Complex64> {
        Ok(coefficient_a(q, &self.well)? * self.density.evaluate(q))
    }

    /// psi(x, t) for x >= a.
    pub fn value(&self, x: f64) -> Result<Complex64> {
        Ok(self.values(&[x])?[0])
    }

    /// psi(x, t) at several x >= a; nearby points share one integration line.
    pub fn values(&self, xs: &[f64]) -> Result<Vec<Complex64>> {
        let span = 4.0 * self.t.sqrt();
        let mut out = Vec::with_capacity(xs.len());
        let mut start = 0;
        while start < xs.len() {
            let (mut lo, mut hi) = (xs[start], xs[start]);
            let mut end = start + 1;
            while end < xs.len() && xs[end].max(hi) - xs[end].min(lo) <= span {
                lo = lo.min(xs[end]);
                hi = hi.max(xs[end]);
                end += 1;
            }
            out.extend(self.group(&xs[start..end], 0.5 * (lo + hi))?);
            start = end;
        }
        Ok(out)
    }

    fn group(&self, xs: &[f64], x_c: f64) -> Result<Vec<Complex64>> {
        let t = self.t;
        let a = self.well.width();
        let rho = Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
        let i = Complex64::i();
        let mut q0 = x_c / (2.0 * t);
        let gap = MIN_POLE_GAP / a * 2f64.sqrt();
        for p in &self.poles {
            if (p.c - q0).abs() < gap {
                q0 = if q0 <= p.c { p.c - gap } else { p.c + gap };
            }
        }
        let mut values: Vec<Complex64> = xs
            .iter()
            .map(|&x| {
                // crossed poles
                let mut sum = Complex64::new(0.0, 0.0);
                for p in self.poles.iter().filter(|p| p.c > q0) {
                    let e = -i * p.k * p.k * t + i * p.k * x;
                    if e.re > -LOG_CUT {
                        sum += -i * e.exp() * p.residue;
                    }
                }
                sum
            })
            .collect();
        // |integrand| ~ exp(-t s^2 + (beta - a) s / sqrt 2), beta = x - 2 q0 t
        let (x_min, x_max) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(u, v), &x| {
                (u.min(x), v.max(x))
            });
        let centre = |x: f64| (x - 2.0 * q0 * t - a) / (2.0 * 2f64.sqrt() * t);
        let half = (LOG_CUT / t).sqrt() + 1.0 / t.sqrt();
        let (lo, hi) = (centre(x_min) - half, centre(x_max) + half);
        let step = 1.5 / t.sqrt();
        let mut breaks = Vec::new();
        let m = ((hi - lo) / step).ceil().max(1.0) as usize;
        for j in 0..=m {
            breaks.push(lo + (hi - lo) * j as f64 / m as f64);
        }
        for p in &self.poles {
            let d = (p.k - q0) * rho.conj();
            let (sp, dist) = (d.re, d.im.abs());
            if dist < 1.0 / a && sp > lo && sp < hi {
                for o in [0.0, -dist, dist, -4.0 * dist, 4.0 * dist] {
                    let s = sp + o;
                    if s > lo && s < hi {
                        breaks.push(s);
                    }
                }
            }
        }
        breaks.sort_by(|u, v| u.partial_cmp(v).unwrap());
        breaks.dedup_by(|u, v| (*u - *v).abs() < 1e-14 * (hi - lo));
        let noise = 8.0 * f64::EPSILON * (q0 * q0 * t + q0.abs() * x_max + 1.0);
        let quad = AdaptiveGaussLegendre::new(20, self.tolerance).with_noise_floor(noise);
        let failure = std::sync::Mutex::new(None);
        let line = quad.integrate(&breaks, xs.len(), &|s, out: &mut [Complex64]| {
            let q = q0 + rho * s;
            match self.h(q) {
                Ok(h) => {
                    let common = h * (-i * q * q * t + i * q * x_c).exp() * rho / (2.0 * PI);
                    for (o, &x) in out.iter_mut().zip(xs) {
                        *o = common * (i * q * (x - x_c)).exp();
                    }
                }
                Err(e) => {
                    *failure.lock().unwrap() = Some(e);
                    out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                }
            }
        })?;
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        for (v, l) in values.iter_mut().zip(line.values) {
            *v += l;
        }
        Ok(values)
    }

    /// (1/2pi) int_{q}^inf |h(q')|^2 dq' for real q', the probability
    /// that will eventually be found beyond x = 2 t q.
    pub fn momentum_tail(&self, q: f64) -> Result<f64> {
        let a = self.well.width();
        let far = (4e3 / a).max(4.0 * q);
        let mut breaks = vec![q];
        let mut s = q;
        while s < far {
            s = (s + 1.0 / a).max(s * 1.02).min(far);
            breaks.push(s);
        }
        let quad = AdaptiveGaussLegendre::new(16, 1e-13);
        let (v, _) = quad.integrate_scalar(&breaks, |k| {
            let k = Complex64::new(k, 0.0);
            Complex64::new(self.h(k).map(|h| h.norm_sqr()).unwrap_or(0.0), 0.0)
        })?;
        // beyond `far`: |A|^2 -> 4 and |phi| <= M / k^2
        let m = self.density.profile().overlap_envelope();
        let rest = 4.0 * m * m / (3.0 * far.powi(3));
        Ok((v.re + rest) / (2.0 * PI))
    }
}

fn pole_data(r: &Resonance, d: &SpectralDensity, w: &WellParameters) -> PoleData {
    let k = r.wavenumber();
    let n = Complex64::new(0.0, -2.0) * k * w.width();
    PoleData {
        k,
        residue: d.evaluate(k) * n / denominator_derivative(k, w),
        c: k.re + k.im,
    }
}

/// Inside, outside and unresolved tail probabilities at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormAudit {
    pub time: f64,
    pub inside: f64,
    pub outside: f64,
    pub tail: f64,
    pub total: f64,
    pub x_out: f64,
}

/// Momentum beyond which at most `target` probability remains.
fn tail_momentum(wave: &ExteriorWave, target: f64) -> Result<(f64, f64)> {
    let a = wave.well.width();
    let mut q = 20.0 / a;
    loop {
        let tail = wave.momentum_tail(q)?;
        if tail < target || q > 1e5 / a {
            return Ok((q, tail));
        }
        q *= 1.5;
    }
}

/// int_a^{x_out} |psi|^2 dx plus the momentum-space tail beyond x_out.
pub fn outside_norm(
    p: &InitialProfile,
    w: &WellParameters,
    t: f64,
    tail_target: f64,
) -> Result<(f64, f64, f64)> {
    let a = w.width();
    let probe = ExteriorWave::new(p, w, t, 0.0)?;
    let (q_c, tail) = tail_momentum(&probe, tail_target)?;
    let wave = ExteriorWave::new(p, w, t, q_c)?;
    // resonances still alive set the fine region
    let live = wave
        .poles
        .iter()
        .filter(|p| -2.0 * (p.k * p.k).im * t < 60.0)
        .map(|p| p.c)
        .fold(0.0, f64::max);
    let q_mid = (live + 3.0 / a).min(q_c);
    let x_mid = a + 2.0 * t * q_mid;
    let x_out = a + 2.0 * t * q_c;
    let width = (4.0 * a).min(10.0 / q_mid).max(1e-3 * a);
    let mut breaks = vec![a];
    let mut x = a;
    while x < x_mid {
        x = (x + width).min(x_mid);
        breaks.push(x);
    }
    while x < x_out {
        x = (x * 1.1).max(x + width).min(x_out);
        breaks.push(x);
    }
    let rule = GaussLegendre::new(16);
    let total_len = x_out - a;
    let mut outside = 0.0;
    for pair in breaks.windows(2) {
        outside += density_panel(&wave, &rule, pair[0], pair[1], 1e-9 / total_len, 0)?;
    }
    Ok((outside, tail, x_out))
}

/// int_u^v |psi|^2 dx by GL16 against two half-panel GL16 sums, bisecting
/// where they disagree by more than `density * (v - u)`.
fn density_panel(
    wave: &ExteriorWave,
    rule: &GaussLegendre,
    u: f64,
    v: f64,
    density: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (u + v);
    let mut xs = Vec::with_capacity(3 * rule.order());
    let mut ws = Vec::with_capacity(3 * rule.order());
    for (lo, hi) in [(u, v), (u, m), (m, v)] {
        rule.for_each_node(lo, hi, |x, w| {
            xs.push(x);
            ws.push(w);
        });
    }
    let vals = wave.values(&xs)?;
    let n = rule.order();
    let sum = |r: std::ops::Range<usize>| r.map(|j| ws[j] * vals[j].norm_sqr()).sum::<f64>();
    let coarse = sum(0..n);
    let fine = sum(n..3 * n);
    if !(coarse.is_finite() && fine.is_finite()) {
        return Err(Error::QuadratureNotConverged {
            error: f64::NAN,
            tolerance: density * (v - u),
        });
    }
    if (coarse - fine).abs() <= (density * (v - u)).max(1e-13 * fine.abs()) || depth >= 20 {
        return Ok(fine);
    }
    Ok(density_panel(wave, rule, u, m, density, depth + 1)?
        + density_panel(wave, rule, m, v, density, depth + 1)?)
}

/// Total probability audit: inside (from `inside_state`) + outside + tail.
///
/// At t = 0 the state is confined and the outside contributions vanish.
pub fn norm_audit(
    p: &InitialProfile,
    w: &WellParameters,
    inside_state: &WaveState,
) -> Result<NormAudit> {
    let t = inside_state.time;
    let inside = norm_inside(inside_state, w)?;
    let (outside, tail, x_out) = if t == 0.0 {
        (0.0, 0.0, w.width())
    } else {
        outside_norm(p, w, t, 1e-8)?
    };
    Ok(NormAudit {
        time: t,
        inside,
        outside,
        tail,
        total: inside + outside + tail,
        x_out,
    })
}
