//! Resonance poles: closed-form seeds, safeguarded Newton refinement and
//! enumeration audited by the argument principle.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::well::{
    quantization_derivative, quantization_residual, ComplexWavenumber, WellParameters,
};

const MAX_NEWTON: usize = 50;
const POLE_TOLERANCE: f64 = 1e-12;
const AUDIT_POINTS: usize = 4096;
const INDENT_RADIUS: f64 = 1e-6;

/// A decaying resonance: a fourth-quadrant zero of F with arg k > -pi/4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// 1-based position in the Re k ordering.
    pub index: usize,
    pub k: ComplexWavenumber,
    /// |F(k)| at the accepted root.
    pub residual: f64,
}

impl Resonance {
    pub fn wavenumber(&self) -> Complex64 {
        self.k.value()
    }

    /// E = k^2.
    pub fn energy(&self) -> Complex64 {
        let k = self.k.value();
        k * k
    }

    /// Decay rate Gamma = -2 Im E.
    pub fn width(&self) -> f64 {
        -2.0 * self.energy().im
    }

    /// Lifetime 1 / Gamma.
    pub fn lifetime(&self) -> f64 {
        1.0 / self.width()
    }
}

/// Leading-order pole k_n a = n pi lambda / (1 + lambda) - i (n pi / lambda)^2.
pub fn asymptotic_pole_seed(n: usize, w: &WellParameters) -> Result<ComplexWavenumber> {
    if n == 0 {
        return Err(Error::InvalidParameters("pole index starts at 1".into()));
    }
    let lambda = w.opacity();
    let np = n as f64 * PI;
    if np >= lambda {
        return Err(Error::SeedOutOfRegime {
            n,
            n_pi: np,
            opacity: lambda,
        });
    }
    Ok(seed_formula(n, w))
}

fn seed_formula(n: usize, w: &WellParameters) -> ComplexWavenumber {
    let lambda = w.opacity();
    let np = n as f64 * PI;
    let za = Complex64::new(np * lambda / (1.0 + lambda), -(np / lambda).powi(2));
    ComplexWavenumber::new(za / w.width()).expect("finite seed")
}

/// Seed valid for every n: fixed point of z = n pi - (i/2) Log(1 - 2iz/lambda).
pub fn fixed_point_seed(n: usize, w: &WellParameters) -> ComplexWavenumber {
    let lambda = w.opacity();
    let np = n as f64 * PI;
    let i = Complex64::i();
    let mut z = Complex64::new(np, 0.0);
    for _ in 0..200 {
        let next = np - 0.5 * i * (Complex64::new(1.0, 0.0) - 2.0 * i * z / lambda).ln();
        let done = (next - z).norm() < 1e-14 * np;
        z = next;
        if done {
            break;
        }
    }
    ComplexWavenumber::new(z / w.width()).expect("finite seed")
}

fn pole_index(k: Complex64, w: &WellParameters) -> usize {
    let r = k.re * w.width() / PI + 0.25;
    (r.round() as usize).max(1)
}

/// Safeguarded Newton on F starting from `seed`.
pub fn refine_pole(seed: ComplexWavenumber, w: &WellParameters) -> Result<Resonance> {
    let a = w.width();
    let mut k = seed.value();
    let mut f = quantization_residual(k, w);
    let mut iterations = 0;
    loop {
        let tol = POLE_TOLERANCE * (k * a).norm().max(1.0);
        if f.norm() < tol {
            // one polishing step, kept only if it does not hurt
            let d = quantization_derivative(k, w);
            let kp = k - f / d;
            let fp = quantization_residual(kp, w);
            if fp.norm() <= f.norm() {
                k = kp;
                f = fp;
            }
            break;
        }
        if iterations >= MAX_NEWTON {
            return Err(Error::NoConvergence {
                seed: seed.value(),
                iterations,
                residual: f.norm(),
            });
        }
        iterations += 1;
        let d = quantization_derivative(k, w);
        if d.norm() == 0.0 || !d.is_finite() {
            return Err(Error::NoConvergence {
                seed: seed.value(),
                iterations,
                residual: f.norm(),
            });
        }
        let step = f / d;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let kn = k - step * scale;
            let fn_ = quantization_residual(kn, w);
            if fn_.is_finite() && fn_.norm() < f.norm() {
                k = kn;
                f = fn_;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                seed: seed.value(),
                iterations,
                residual: f.norm(),
            });
        }
    }
    check_sector(k)?;
    Ok(Resonance {
        index: pole_index(k, w),
        k: ComplexWavenumber::new(k)?,
        residual: f.norm(),
    })
}

fn check_sector(k: Complex64) -> Result<()> {
    if k.re <= 0.0 {
        return Err(Error::WrongQuadrant {
            k,
            reason: "Re k must be positive (third-quadrant roots are growing states)",
        });
    }
    if k.im >= 0.0 {
        return Err(Error::WrongQuadrant {
            k,
            reason: "Im k must be negative",
        });
    }
    if k.arg() <= -FRAC_PI_4 {
        return Err(Error::WrongQuadrant {
            k,
            reason: "arg k must exceed -pi/4",
        });
    }
    Ok(())
}

/// Iterator over successive poles n = 1, 2, ... (unaudited).
pub struct PoleSequence {
    well: WellParameters,
    n: usize,
    previous: Option<Complex64>,
}

impl PoleSequence {
    pub fn new(well: WellParameters) -> Self {
        Self {
            well,
            n: 0,
            previous: None,
        }
    }

    fn accept(&self, r: &Resonance) -> bool {
        match self.previous {
            Some(p) => r.k.kappa() > p.re + 0.25 / self.well.width(),
            None => true,
        }
    }
}

impl Iterator for PoleSequence {
    type Item = Result<Resonance>;

    fn next(&mut self) -> Option<Self::Item> {
        self.n += 1;
        let n = self.n;
        let w = self.well;
        let lambda = w.opacity();
        let mut seeds = Vec::with_capacity(3);
        if (n as f64) * PI < 0.5 * lambda {
            seeds.push(seed_formula(n, &w));
        } else if let Some(p) = self.previous {
            let step = PI * lambda / (1.0 + lambda) / w.width();
            seeds.push(ComplexWavenumber::new(p + step).expect("finite"));
        }
        seeds.push(fixed_point_seed(n, &w));
        let mut last_err = None;
        for s in seeds {
            match refine_pole(s, &w) {
                Ok(mut r) if self.accept(&r) => {
                    r.index = n;
                    self.previous = Some(r.wavenumber());
                    return Some(Ok(r));
                }
                Ok(r) => {
                    last_err = Some(Error::NoConvergence {
                        seed: s.value(),
                        iterations: 0,
                        residual: r.residual,
                    })
                }
                Err(e) => last_err = Some(e),
            }
        }
        Some(Err(last_err.expect("at least one seed")))
    }
}

/// Outcome of the argument-principle count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingAudit {
    pub winding: i64,
    pub right_edge: f64,
    pub depth: f64,
    pub top: f64,
    pub evaluations: usize,
}

/// Depth of the audit rectangle below the real axis.
pub fn audit_depth(w: &WellParameters, k_max: f64) -> f64 {
    let ka = k_max * w.width();
    (0.5 * (1.0 + 4.0 * (ka + 5.0) / w.opacity()).ln() + 1.0) / w.width()
}

/// Number of zeros of F inside the rectangle (0, right) x (-depth, top),
/// with the trivial zero at the origin cut out by a small semicircle.
pub fn winding_number(w: &WellParameters, right: f64, depth: f64, top: f64) -> WindingAudit {
    let c = Complex64::new;
    let eps = INDENT_RADIUS / w.width();
    let edges: Vec<(Complex64, Complex64)> = vec![
        (c(0.0, -depth), c(right, -depth)),
        (c(right, -depth), c(right, top)),
        (c(right, top), c(0.0, top)),
        (c(0.0, top), c(0.0, eps)),
    ];
    let closing = (c(0.0, -eps), c(0.0, -depth));
    let perimeter = 2.0 * right + 2.0 * (depth + top);
    let mut total = 0.0;
    let mut evaluations = 0;
    let f = |z: Complex64| quantization_residual(z, w);
    let mut segment = |path: &dyn Fn(f64) -> Complex64, len: f64| {
        // F turns by about one radian per unit of ka; sample at least that finely
        let by_share = (AUDIT_POINTS as f64 * len / perimeter).ceil();
        let by_phase = (4.0 * len * w.width()).ceil();
        let m = (by_share.max(by_phase) as usize).max(32);
        let mut s0 = 0.0;
        let mut f0 = f(path(0.0));
        evaluations += 1;
        for j in 1..=m {
            let s1 = j as f64 / m as f64;
            let f1 = f(path(s1));
            evaluations += 1;
            total += arg_change(path, &f, s0, s1, f0, f1, 0, &mut evaluations);
            s0 = s1;
            f0 = f1;
        }
    };
    for (p, q) in edges {
        segment(&move |s| p + (q - p) * s, (q - p).norm());
    }
    // clockwise semicircle through +eps
    segment(
        &move |s| Complex64::from_polar(eps, FRAC_PI_4 * 2.0 - PI * s),
        PI * eps,
    );
    let (p, q) = closing;
    segment(&move |s| p + (q - p) * s, (q - p).norm());
    WindingAudit {
        winding: (total / (2.0 * PI)).round() as i64,
        right_edge: right,
        depth,
        top,
        evaluations,
    }
}

#[allow(clippy::too_many_arguments)]
fn arg_change(
    path: &dyn Fn(f64) -> Complex64,
    f: &dyn Fn(Complex64) -> Complex64,
    s0: f64,
    s1: f64,
    f0: Complex64,
    f1: Complex64,
    level: usize,
    evaluations: &mut usize,
) -> f64 {
    let d = (f1 / f0).arg();
    if d.abs() <= FRAC_PI_4 || level >= 48 {
        return d;
    }
    let sm = 0.5 * (s0 + s1);
    let fm = f(path(sm));
    *evaluations += 1;
    arg_change(path, f, s0, sm, f0, fm, level + 1, evaluations)
        + arg_change(path, f, sm, s1, fm, f1, level + 1, evaluations)
}

/// Poles with Re k < k_max and the audit that certifies the count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    pub poles: Vec<Resonance>,
    pub audit: WindingAudit,
}

/// All fourth-quadrant poles with Re k < k_max, sorted by Re k.
pub fn enumerate_poles(w: &WellParameters, k_max: f64) -> Result<Vec<Resonance>> {
    Ok(enumerate_poles_audited(w, k_max)?.poles)
}

pub fn enumerate_poles_audited(w: &WellParameters, k_max: f64) -> Result<PoleSet> {
    if !(k_max.is_finite() && k_max > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "k_max must be positive, got {k_max}"
        )));
    }
    let mut poles = Vec::new();
    let mut next = None;
    for r in PoleSequence::new(*w) {
        let r = r?;
        if r.k.kappa() >= k_max {
            next = Some(r);
            break;
        }
        poles.push(r);
    }
    // keep the audit edge clear of any pole
    let mut right = k_max;
    let gap = 1e-6 / w.width();
    for p in poles.iter().chain(next.iter()) {
        let re = p.k.kappa();
        if (re - k_max).abs() < gap {
            right = if re < k_max {
                re + 2.0 * gap
            } else {
                re - 2.0 * gap
            };
        }
    }
    let depth = audit_depth(w, right);
    let audit = winding_number(w, right, depth, 0.5 / w.width());
    if audit.winding != poles.len() as i64 {
        return Err(Error::CountMismatch {
            winding: audit.winding,
            found: poles.len(),
            k_max,
        });
    }
    Ok(PoleSet { poles, audit })
}

/// First pole (n = 1).
pub fn first_pole(w: &WellParameters) -> Result<Resonance> {
    PoleSequence::new(*w).next().expect("sequence is infinite")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well(l: f64) -> WellParameters {
        WellParameters::new(l, 1.0).unwrap()
    }

    #[test]
    fn seeds_match_closed_form() {
        let s = asymptotic_pole_seed(1, &well(100.0)).unwrap().value();
        assert!(
            (s - Complex64::new(3.110_487_775_831_478_5, -0.000_986_960_440_108_935_86)).norm()
                < 1e-15
        );
        let s2 = asymptotic_pole_seed(2, &well(100.0)).unwrap().value();
        assert!(
            (s2 - Complex64::new(6.220_975_551_662_957, -0.003_947_841_760_435_743_4)).norm()
                < 1e-14
        );
        let s3 = asymptotic_pole_seed(1, &well(10.0)).unwrap().value();
        assert!(
            (s3 - Complex64::new(2.855_993_321_445_266_6, -0.098_696_044_010_893_586)).norm()
                < 1e-14
        );
        assert!(matches!(
            asymptotic_pole_seed(4, &well(10.0)),
            Err(Error::SeedOutOfRegime { .. })
        ));
    }

    #[test]
    fn refined_poles_match_reference() {
        let w = well(100.0);
        let r = refine_pole(asymptotic_pole_seed(1, &w).unwrap(), &w).unwrap();
        let k = r.wavenumber();
        assert!(
            (k - Complex64::new(3.110_526_827_213_917_7, -0.000_956_145_587_831_996_64)).norm()
                < 1e-13
        );
        assert!(quantization_residual(k, &w).norm() < 1e-12);
        assert!((r.width() - 0.011_896_466_006_694_587).abs() < 1e-14);
        let w10 = well(10.0);
        let r10 = refine_pole(asymptotic_pole_seed(1, &w10).unwrap(), &w10).unwrap();
        assert!(
            (r10.wavenumber()
                - Complex64::new(2.877_577_458_457_587_4, -0.066_510_672_489_968_892))
            .norm()
                < 1e-13
        );
        assert!((r10.lifetime() - 1.306_235_994_278_582_7).abs() < 1e-11);
    }

    #[test]
    fn third_quadrant_root_rejected() {
        let w = well(100.0);
        let k = Complex64::new(-3.110_526_827_213_917_7, -0.000_956_145_587_831_996_64);
        let e = refine_pole(ComplexWavenumber::new(k).unwrap(), &w).unwrap_err();
        assert!(matches!(e, Error::WrongQuadrant { .. }));
    }

    #[test]
    fn enumeration_examples() {
        let set = enumerate_poles_audited(&well(100.0), 16.0).unwrap();
        assert_eq!(set.poles.len(), 5);
        assert_eq!(set.audit.winding, 5);
        let reference = [
            (12.444_370_098_804_866, -0.014_885_329_825_460_876),
            (15.557_074_923_743_07, -0.022_892_512_466_912_236),
        ];
        for (p, (re, im)) in set.poles[3..].iter().zip(reference) {
            assert!((p.wavenumber() - Complex64::new(re, im)).norm() < 1e-12);
        }
        assert!(enumerate_poles(&well(100.0), 3.0).unwrap().is_empty());
        let small = enumerate_poles(&well(0.5), 20.0).unwrap();
        assert!(
            (small[0].wavenumber()
                - Complex64::new(2.165_873_259_863_118_7, -1.116_691_220_626_803))
            .norm()
                < 1e-12
        );
    }

    #[test]
    fn continuation_past_seed_regime() {
        let w = well(10.0);
        let poles = enumerate_poles(&w, 60.0).unwrap();
        assert!(
            (poles[1].wavenumber()
                - Complex64::new(5.841_379_586_076_052, -0.206_480_096_302_156_53))
            .norm()
                < 1e-12
        );
        for (i, p) in poles.iter().enumerate() {
            assert_eq!(p.index, i + 1);
            assert!(p.residual < 1e-12 * p.wavenumber().norm().max(1.0));
        }
        for pair in poles.windows(2) {
            assert!(pair[1].width() > pair[0].width());
        }
    }

    #[test]
    fn audit_counts_near_edge() {
        let w = well(100.0);
        let k1 = 3.110_526_827_213_917_7;
        assert_eq!(enumerate_poles(&w, k1 + 1e-9).unwrap().len(), 1);
        assert_eq!(enumerate_poles(&w, k1 - 1e-9).unwrap().len(), 0);
    }
}
