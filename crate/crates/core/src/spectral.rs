//! Real-axis spectral evolution
//! psi(x, t) = (1/2pi) int_0^inf e^{-ik^2 t} phi(k) |A(k)|^2 sin(kx) dk   (x <= a)
//! and its exterior counterpart for x > a.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poles::{enumerate_poles, Resonance};
use crate::profile::{InitialProfile, SpectralDensity};
use crate::quadrature::{simpson, AdaptiveGaussLegendre};
use crate::well::{coefficient_a, coefficient_b, transmission_weight_real, WellParameters};

/// Which representation produced a wave function or probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Rotated,
    Asymptotic,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Rotated => "rotated",
            Method::Asymptotic => "asymptotic",
        }
    }
}

/// psi sampled on an ascending grid at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub time: f64,
    pub method: Method,
}

impl WaveState {
    pub fn new(grid: Vec<f64>, values: Vec<Complex64>, time: f64, method: Method) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidParameters(
                "grid and values differ in length".into(),
            ));
        }
        if grid.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidParameters(
                "grid must be strictly ascending".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) || !(time >= 0.0) {
            return Err(Error::InvalidParameters(
                "non-finite state or negative time".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            time,
            method,
        })
    }

    /// The initial profile sampled on `grid` (t = 0).
    pub fn initial(profile: &InitialProfile, grid: &[f64]) -> Self {
        Self {
            grid: grid.to_vec(),
            values: grid.iter().map(|&x| profile.amplitude(x)).collect(),
            time: 0.0,
            method: Method::Direct,
        }
    }

    /// Largest pointwise |psi - other| on a shared grid.
    pub fn sup_distance(&self, other: &WaveState) -> f64 {
        assert_eq!(self.grid.len(), other.grid.len(), "grids differ");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `nodes` equally spaced points on [0, a], both ends included.
pub fn uniform_grid(a: f64, nodes: usize) -> Vec<f64> {
    assert!(nodes >= 2, "grid needs at least two nodes");
    let h = a / (nodes - 1) as f64;
    let mut g: Vec<f64> = (0..nodes).map(|i| i as f64 * h).collect();
    g[nodes - 1] = a;
    g
}

/// phi_k(x) = (2pi)^{-1/2} { A sin kx  (x < a);  e^{-ikx} + B e^{ikx}  (x > a) }.
pub fn continuum_eigenfunction(k: f64, x: f64, w: &WellParameters) -> Complex64 {
    let kc = Complex64::new(k, 0.0);
    let norm = 1.0 / (2.0 * PI).sqrt();
    if x <= w.width() {
        coefficient_a(kc, w).expect("no poles on the real axis") * (k * x).sin() * norm
    } else {
        let b = coefficient_b(kc, w).expect("no poles on the real axis");
        (Complex64::from_polar(1.0, -k * x) + b * Complex64::from_polar(1.0, k * x)) * norm
    }
}

/// Exterior branch of [`continuum_eigenfunction`], usable at any x.
pub fn continuum_eigenfunction_exterior(k: f64, x: f64, w: &WellParameters) -> Complex64 {
    let b = coefficient_b(Complex64::new(k, 0.0), w).expect("no poles on the real axis");
    (Complex64::from_polar(1.0, -k * x) + b * Complex64::from_polar(1.0, k * x)) / (2.0 * PI).sqrt()
}

/// phi(k) = int_0^a psi(x) sin(kx) dx.
pub fn overlap_transform(p: &InitialProfile, k: Complex64) -> Complex64 {
    p.spectral_density().evaluate(k)
}

/// P = int_0^a |psi|^2 dx over the grid nodes lying in [0, a].
pub fn norm_inside(ws: &WaveState, w: &WellParameters) -> Result<f64> {
    let a = w.width();
    let tol = 1e-12 * a;
    let inside: Vec<(f64, f64)> = ws
        .grid
        .iter()
        .zip(&ws.values)
        .filter(|(x, _)| **x <= a + tol)
        .map(|(x, v)| (*x, v.norm_sqr()))
        .collect();
    if inside.len() < 64 {
        return Err(Error::GridTooCoarse(format!(
            "{} nodes in [0, a], need 64",
            inside.len()
        )));
    }
    if inside[0].0.abs() > tol || (inside[inside.len() - 1].0 - a).abs() > tol {
        return Err(Error::GridTooCoarse(
            "grid must start at 0 and contain x = a".into(),
        ));
    }
    let n = inside.len();
    let h = a / (n - 1) as f64;
    let uniform = inside
        .iter()
        .enumerate()
        .all(|(i, (x, _))| (x - i as f64 * h).abs() < 1e-9 * a);
    let y: Vec<f64> = inside.iter().map(|p| p.1).collect();
    let p = if uniform {
        if n % 2 == 1 {
            simpson(h, &y)
        } else {
            // Simpson on the first n - 3 nodes plus the 3/8 rule on the last three intervals
            simpson(h, &y[..n - 3])
                + 3.0 * h / 8.0 * (y[n - 4] + 3.0 * y[n - 3] + 3.0 * y[n - 2] + y[n - 1])
        }
    } else {
        inside
            .windows(2)
            .map(|q| 0.5 * (q[1].0 - q[0].0) * (q[0].1 + q[1].1))
            .sum()
    };
    Ok(p)
}

/// Tunables of the real-axis quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectOptions {
    /// Absolute tolerance of the adaptive k-quadrature.
    pub tolerance: f64,
    /// Target for the truncation remainder after the end-point correction.
    pub truncation_target: f64,
    pub order: usize,
    /// Cutoff (in units of 1/a) used at t = 0, where no correction applies.
    pub cap_at_zero: f64,
    /// Lower bound on the cutoff, in units of 1/a.
    pub min_cutoff: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            truncation_target: 1e-9,
            order: 16,
            cap_at_zero: 2e4,
            min_cutoff: 40.0,
        }
    }
}

/// Result of a real-axis evolution with its error budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectEvolution {
    pub state: WaveState,
    pub quadrature_error: f64,
    pub truncation_bound: f64,
    pub cutoff: f64,
    pub panels: usize,
}

/// Which continuum branch is integrated.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Branch {
    Interior,
    Exterior,
}

/// Reusable real-axis propagator for one well and one initial profile.
#[derive(Clone, Debug)]
pub struct DirectEvolver {
    well: WellParameters,
    density: SpectralDensity,
    options: DirectOptions,
    poles: Vec<Resonance>,
    envelope: f64,
}

struct Kernel<'a> {
    xs: &'a [f64],
    step: Option<f64>,
}

impl<'a> Kernel<'a> {
    fn new(xs: &'a [f64]) -> Self {
        let step = if xs.len() >= 3 && xs[0] == 0.0 {
            let h = xs[1] - xs[0];
            let ok = xs
                .iter()
                .enumerate()
                .all(|(i, x)| (x - i as f64 * h).abs() <= 1e-12 * x.abs().max(h));
            ok.then_some(h)
        } else {
            None
        };
        Self { xs, step }
    }

    /// out_j = base * sin(k x_j)
    fn sines(&self, k: f64, base: Complex64, out: &mut [Complex64]) {
        match self.step {
            Some(h) => {
                let rot = Complex64::from_polar(1.0, k * h);
                let mut z = Complex64::new(1.0, 0.0);
                for (j, o) in out.iter_mut().enumerate() {
                    // re-anchor occasionally to stop drift
                    if j % 64 == 0 {
                        z = Complex64::from_polar(1.0, k * self.xs[j]);
                    }
                    *o = base * z.im;
                    z *= rot;
                }
            }
            None => {
                for (o, x) in out.iter_mut().zip(self.xs) {
                    *o = base * (k * x).sin();
                }
            }
        }
    }
}

impl DirectEvolver {
    pub fn new(profile: &InitialProfile, w: &WellParameters) -> Self {
        Self::with_options(profile, w, DirectOptions::default())
    }

    pub fn with_options(
        profile: &InitialProfile,
        w: &WellParameters,
        options: DirectOptions,
    ) -> Self {
        Self {
            well: *w,
            density: profile.spectral_density(),
            options,
            poles: Vec::new(),
            envelope: profile.overlap_envelope(),
        }
    }

    fn poles_to(&mut self, k: f64) -> Result<()> {
        let have = self.poles.last().map(|p| p.k.kappa()).unwrap_or(0.0);
        if self.poles.is_empty() || have < k {
            self.poles = enumerate_poles(&self.well, k + 2.0 * PI / self.well.width())?;
        }
        Ok(())
    }

    /// g(k) = (1/2pi) phi(k) |A(k)|^2.
    fn spectral_weight(&self, k: f64) -> Complex64 {
        self.density.evaluate_real(k) * (transmission_weight_real(k, &self.well) / (2.0 * PI))
    }

    /// (1/2pi) phi(k) conj(A(k)) and its partner (1/2pi) phi(k) A(k).
    fn exterior_weights(&self, k: f64) -> (Complex64, Complex64) {
        let a =
            coefficient_a(Complex64::new(k, 0.0), &self.well).expect("no poles on the real axis");
        let phi = self.density.evaluate_real(k) / (2.0 * PI);
        (phi * a.conj(), phi * a)
    }

    fn fill(&self, branch: Branch, kernel: &Kernel, k: f64, t: f64, out: &mut [Complex64]) {
        let phase = Complex64::from_polar(1.0, -k * k * t);
        match branch {
            Branch::Interior => kernel.sines(k, phase * self.spectral_weight(k), out),
            Branch::Exterior => {
                let (wm, wp) = self.exterior_weights(k);
                for (o, x) in out.iter_mut().zip(kernel.xs) {
                    let e = Complex64::from_polar(1.0, k * x);
                    *o = phase * (wm * e.conj() + wp * e);
                }
            }
        }
    }

    /// Panel breakpoints on [0, cutoff], graded around every resonance.
    fn breakpoints(&self, cutoff: f64, t: f64) -> Vec<f64> {
        let a = self.well.width();
        let mut pts = vec![0.0, cutoff];
        for p in &self.poles {
            let c = p.k.kappa();
            if c >= cutoff {
                break;
            }
            let g = -p.k.value().im;
            pts.push(c);
            for m in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0] {
                for s in [c - m * g, c + m * g] {
                    if s > 0.0 && s < cutoff {
                        pts.push(s);
                    }
                }
            }
        }
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * cutoff);
        let mut out = Vec::with_capacity(pts.len() * 2);
        for w in pts.windows(2) {
            let (k0, k1) = (w[0], w[1]);
            let by_width = ((k1 - k0) * a).ceil();
            let by_phase = (t * (k1 * k1 - k0 * k0) / (2.0 * PI)).ceil();
            let m = by_width.max(by_phase).max(1.0) as usize;
            for j in 0..m {
                out.push(k0 + (k1 - k0) * j as f64 / m as f64);
            }
        }
        out.push(cutoff);
        out
    }

    /// Cutoff between resonances, large enough for the end-point correction.
    fn cutoff(&mut self, branch: Branch, xs: &[f64], t: f64) -> Result<(f64, f64)> {
        let a = self.well.width();
        if t == 0.0 {
            let k = self.options.cap_at_zero / a;
            let ka = k * a;
            let lam = self.well.opacity();
            let rho = if ka > 2.0 * lam {
                (ka / (ka - lam)).powi(2)
            } else {
                f64::INFINITY
            };
            let bound = 4.0 * rho * self.envelope / (2.0 * PI * k);
            self.poles_to(k)?;
            return Ok((self.midway(k), bound));
        }
        let mut k = (self.options.min_cutoff / a).max(12.0 / t.sqrt());
        loop {
            self.poles_to(k)?;
            let km = self.midway(k);
            let r = self.remainder_estimate(branch, xs, km, t);
            if r <= self.options.truncation_target || km * a > 1e7 {
                return Ok((km, r));
            }
            k *= 1.5;
        }
    }

    /// Moves k to the midpoint between the neighbouring resonances.
    fn midway(&self, k: f64) -> f64 {
        let re: Vec<f64> = self.poles.iter().map(|p| p.k.kappa()).collect();
        match re.iter().position(|&c| c > k) {
            Some(0) => k,
            Some(i) => 0.5 * (re[i - 1] + re[i]),
            None => k,
        }
    }

    /// Size of the second end-point term, (1/2pi) |d/dk (G/(2kt))| / (2Kt).
    fn remainder_estimate(&self, branch: Branch, xs: &[f64], k: f64, t: f64) -> f64 {
        let kernel = Kernel::new(xs);
        let h = 1e-4 * k;
        let mut lo = vec![Complex64::new(0.0, 0.0); xs.len()];
        let mut hi = lo.clone();
        let amp = |kk: f64, out: &mut [Complex64]| {
            // amplitude without the oscillating phase
            match branch {
                Branch::Interior => {
                    kernel.sines(kk, self.spectral_weight(kk) / (2.0 * kk * t), out)
                }
                Branch::Exterior => {
                    let (wm, wp) = self.exterior_weights(kk);
                    for (o, x) in out.iter_mut().zip(xs) {
                        let e = Complex64::from_polar(1.0, kk * x);
                        *o = (wm * e.conj() + wp * e) / (2.0 * kk * t);
                    }
                }
            }
        };
        amp(k - h, &mut lo);
        amp(k + h, &mut hi);
        let d = lo
            .iter()
            .zip(&hi)
            .map(|(l, u)| ((u - l) / (2.0 * h)).norm())
            .fold(0.0, f64::max);
        // the remainder after two end-point terms is of the same order as the second
        2.0 * d / (2.0 * k * t)
    }

    fn integrate(
        &mut self,
        branch: Branch,
        xs: &[f64],
        t: f64,
    ) -> Result<(Vec<Complex64>, f64, f64, f64, usize)> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "time must be finite and >= 0, got {t}"
            )));
        }
        let a = self.well.width();
        if t > 50.0 * a * a {
            warn!("direct evolution at t = {t} > 50 a^2 is slow; the rotated representation is cheaper");
        }
        let (cutoff, bound) = self.cutoff(branch, xs, t)?;
        let breaks = self.breakpoints(cutoff, t);
        let kernel = Kernel::new(xs);
        // the phase k^2 t carries an absolute rounding error of a few ulp of K^2 t
        let noise = 4.0
            * f64::EPSILON
            * (cutoff * cutoff * t + cutoff * xs.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let quad = AdaptiveGaussLegendre::new(self.options.order, self.options.tolerance)
            .with_noise_floor(noise);
        let this = &*self;
        let r = quad.integrate(&breaks, xs.len(), &|k, out: &mut [Complex64]| {
            this.fill(branch, &kernel, k, t, out)
        })?;
        let mut values = r.values;
        if t > 0.0 {
            // end-point correction e^{-iK^2 t} G(K) / (2iKt)
            let mut g = vec![Complex64::new(0.0, 0.0); xs.len()];
            self.fill(branch, &kernel, cutoff, t, &mut g);
            let f = Complex64::new(0.0, 2.0 * cutoff * t);
            for (v, gi) in values.iter_mut().zip(&g) {
                *v += gi / f;
            }
        }
        Ok((values, r.error, bound, cutoff, r.panels))
    }

    /// psi(x, t) for x in [0, a] from the interior branch.
    pub fn evolve(&mut self, t: f64, grid: &[f64]) -> Result<DirectEvolution> {
        let a = self.well.width();
        if grid
            .iter()
            .any(|&x| !(0.0..=a * (1.0 + 1e-12)).contains(&x))
        {
            return Err(Error::InvalidParameters(
                "direct evolution grid must lie in [0, a]".into(),
            ));
        }
        let (values, err, bound, cutoff, panels) = self.integrate(Branch::Interior, grid, t)?;
        Ok(DirectEvolution {
            state: WaveState::new(grid.to_vec(), values, t, Method::Direct)?,
            quadrature_error: err,
            truncation_bound: bound,
            cutoff,
            panels,
        })
    }

    /// psi(x, t) for x > a from the exterior eigenfunction branch.
    pub fn evolve_exterior(&mut self, t: f64, xs: &[f64]) -> Result<Vec<Complex64>> {
        if t <= 0.0 {
            return Err(Error::Precondition(
                "exterior quadrature needs t > 0".into(),
            ));
        }
        Ok(self.integrate(Branch::Exterior, xs, t)?.0)
    }
}

/// One-shot real-axis evolution on `grid` (x in [0, a]).
pub fn evolve_direct(
    p: &InitialProfile,
    t: f64,
    grid: &[f64],
    w: &WellParameters,
) -> Result<WaveState> {
    Ok(DirectEvolver::new(p, w).evolve(t, grid)?.state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenfunction_continuity_and_jump() {
        let w = WellParameters::new(100.0, 1.0).unwrap();
        let k = 1.0;
        let inner = continuum_eigenfunction(k, 1.0, &w);
        let outer = continuum_eigenfunction_exterior(k, 1.0, &w);
        assert!((inner - outer).norm() < 1e-12 * inner.norm().max(1e-300));
        assert_eq!(
            continuum_eigenfunction(1.0, 0.0, &w),
            Complex64::new(0.0, 0.0)
        );
        // derivative jump (lambda/a) phi(a)
        let a_coef = coefficient_a(Complex64::new(k, 0.0), &w).unwrap();
        let b = coefficient_b(Complex64::new(k, 0.0), &w).unwrap();
        let n = 1.0 / (2.0 * PI).sqrt();
        let d_in = a_coef * k * (k * 1.0f64).cos() * n;
        let i = Complex64::i();
        let d_out = (-i * k * Complex64::from_polar(1.0, -k)
            + b * i * k * Complex64::from_polar(1.0, k))
            * n;
        assert!((d_out - d_in - inner * 100.0).norm() < 1e-10);
    }

    #[test]
    fn eigenfunction_exterior_reference() {
        let w = WellParameters::new(10.0, 1.0).unwrap();
        let b = coefficient_b(Complex64::new(2.0, 0.0), &w).unwrap();
        let expected = (Complex64::from_polar(1.0, -6.0) + b * Complex64::from_polar(1.0, 6.0))
            / (2.0 * PI).sqrt();
        assert!((continuum_eigenfunction(2.0, 3.0, &w) - expected).norm() < 1e-15);
    }

    #[test]
    fn norm_of_initial_and_zero_states() {
        let w = WellParameters::new(10.0, 1.0).unwrap();
        let p = InitialProfile::box_mode(1, &w).unwrap();
        for n in [257, 256] {
            let g = uniform_grid(1.0, n);
            let s = WaveState::initial(&p, &g);
            assert!((norm_inside(&s, &w).unwrap() - 1.0).abs() < 1e-10);
        }
        let g = uniform_grid(1.0, 65);
        let z = WaveState::new(
            g.clone(),
            vec![Complex64::new(0.0, 0.0); 65],
            1.0,
            Method::Direct,
        )
        .unwrap();
        assert_eq!(norm_inside(&z, &w).unwrap(), 0.0);
        let coarse = WaveState::initial(&p, &uniform_grid(1.0, 33));
        assert!(matches!(
            norm_inside(&coarse, &w),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn completeness_at_time_zero() {
        let w = WellParameters::new(100.0, 1.0).unwrap();
        let p = InitialProfile::box_mode(1, &w).unwrap();
        let g = uniform_grid(1.0, 65);
        let s = evolve_direct(&p, 0.0, &g, &w).unwrap();
        let exact = WaveState::initial(&p, &g);
        assert!(s.sup_distance(&exact) < 1e-4, "{}", s.sup_distance(&exact));
    }
}
