//! Quadrature rules: Gauss-Legendre (fixed and adaptive, vector valued),
//! composite Simpson and the periodic trapezoid rule on circles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on P_n.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Calls `f(x, w)` for every node mapped onto [a, b].
    pub fn for_each_node(&self, a: f64, b: f64, mut f: impl FnMut(f64, f64)) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            f(c + h * x, h * w);
        }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        self.for_each_node(a, b, |x, w| s += f(x) * w);
        s
    }

    pub fn integrate_real(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut s = 0.0;
        self.for_each_node(a, b, |x, w| s += f(x) * w);
        s
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of a vector-valued adaptive integration.
#[derive(Clone, Debug)]
pub struct VectorIntegral {
    pub values: Vec<Complex64>,
    /// Sum of per-panel |coarse - refined| estimates (max over components).
    pub error: f64,
    pub evaluations: usize,
    pub panels: usize,
}

/// Adaptive Gauss-Legendre for vector integrands.
///
/// Each panel is compared against the sum of its two halves; the halves are
/// kept when the panel is split, so no integrand value is computed twice.
#[derive(Clone, Debug)]
pub struct AdaptiveGaussLegendre {
    rule: GaussLegendre,
    abs_tol: f64,
    noise: f64,
    max_depth: usize,
}

const CHUNK: usize = 64;

struct PanelSum {
    values: Vec<Complex64>,
    magnitude: f64,
}

impl AdaptiveGaussLegendre {
    pub fn new(order: usize, abs_tol: f64) -> Self {
        Self {
            rule: GaussLegendre::new(order),
            abs_tol,
            noise: 0.0,
            max_depth: 30,
        }
    }

    /// Relative noise level of integrand evaluations; differences below
    /// `noise * sum |w f|` are not refined further.
    pub fn with_noise_floor(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.abs_tol
    }

    /// Integrates `f` over the union of the panels defined by `breaks`.
    ///
    /// `f(x, out)` must overwrite `out` (length `dim`) with the integrand at x.
    /// The tolerance is shared between panels in proportion to their length.
    pub fn integrate<F>(&self, breaks: &[f64], dim: usize, f: &F) -> Result<VectorIntegral>
    where
        F: Fn(f64, &mut [Complex64]) + Sync,
    {
        if breaks.len() < 2 {
            return Ok(VectorIntegral {
                values: vec![Complex64::new(0.0, 0.0); dim],
                error: 0.0,
                evaluations: 0,
                panels: 0,
            });
        }
        let total = (breaks[breaks.len() - 1] - breaks[0]).abs();
        let density = if total > 0.0 {
            self.abs_tol / total
        } else {
            0.0
        };
        let panels: Vec<(f64, f64)> = breaks.windows(2).map(|p| (p[0], p[1])).collect();

        let mut values = vec![Complex64::new(0.0, 0.0); dim];
        let mut error = 0.0;
        let mut evaluations = 0;
        let mut count = 0;
        let mut unresolved = false;
        for chunk in panels.chunks(CHUNK) {
            let parts: Vec<PanelOutcome> = chunk
                .par_iter()
                .map(|&(a, b)| self.panel(a, b, dim, density, f))
                .collect();
            for part in parts {
                for (v, p) in values.iter_mut().zip(&part.values) {
                    *v += p;
                }
                error += part.error;
                evaluations += part.evaluations;
                count += part.panels;
                unresolved |= part.unresolved;
            }
        }
        if unresolved && error > self.abs_tol {
            return Err(Error::QuadratureNotConverged {
                error,
                tolerance: self.abs_tol,
            });
        }
        Ok(VectorIntegral {
            values,
            error,
            evaluations,
            panels: count,
        })
    }

    /// Scalar convenience wrapper.
    pub fn integrate_scalar<F>(&self, breaks: &[f64], f: F) -> Result<(Complex64, f64)>
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        let r = self.integrate(breaks, 1, &|x, out: &mut [Complex64]| out[0] = f(x))?;
        Ok((r.values[0], r.error))
    }

    fn estimate<F>(&self, a: f64, b: f64, dim: usize, buf: &mut [Complex64], f: &F) -> PanelSum
    where
        F: Fn(f64, &mut [Complex64]) + Sync,
    {
        let mut values = vec![Complex64::new(0.0, 0.0); dim];
        let mut magnitude = 0.0;
        self.rule.for_each_node(a, b, |x, w| {
            f(x, buf);
            let mut m: f64 = 0.0;
            for (v, y) in values.iter_mut().zip(buf.iter()) {
                *v += y * w;
                m = m.max(y.re.abs() + y.im.abs());
            }
            magnitude += m * w.abs();
        });
        PanelSum { values, magnitude }
    }

    fn panel<F>(&self, a: f64, b: f64, dim: usize, density: f64, f: &F) -> PanelOutcome
    where
        F: Fn(f64, &mut [Complex64]) + Sync,
    {
        let mut buf = vec![Complex64::new(0.0, 0.0); dim];
        let coarse = self.estimate(a, b, dim, &mut buf, f);
        let mut out = PanelOutcome {
            values: vec![Complex64::new(0.0, 0.0); dim],
            error: 0.0,
            evaluations: self.rule.order(),
            panels: 0,
            unresolved: false,
        };
        self.refine(a, b, coarse, 0, density, &mut buf, &mut out, f);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F>(
        &self,
        a: f64,
        b: f64,
        coarse: PanelSum,
        depth: usize,
        density: f64,
        buf: &mut [Complex64],
        out: &mut PanelOutcome,
        f: &F,
    ) where
        F: Fn(f64, &mut [Complex64]) + Sync,
    {
        let dim = coarse.values.len();
        let m = 0.5 * (a + b);
        let left = self.estimate(a, m, dim, buf, f);
        let right = self.estimate(m, b, dim, buf, f);
        out.evaluations += 2 * self.rule.order();
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let d = coarse.values[i] - left.values[i] - right.values[i];
            err = err.max(d.re.abs() + d.im.abs());
        }
        let floor = (64.0 * f64::EPSILON + self.noise) * (left.magnitude + right.magnitude);
        let tol = (density * (b - a).abs()).max(floor);
        if err <= tol || depth >= self.max_depth {
            if err > tol {
                out.unresolved = true;
            }
            for i in 0..dim {
                out.values[i] += left.values[i] + right.values[i];
            }
            out.error += err;
            out.panels += 2;
            return;
        }
        self.refine(a, m, left, depth + 1, density, buf, out, f);
        self.refine(m, b, right, depth + 1, density, buf, out, f);
    }
}

struct PanelOutcome {
    values: Vec<Complex64>,
    error: f64,
    evaluations: usize,
    panels: usize,
    unresolved: bool,
}

/// Composite Simpson rule on uniformly spaced samples (odd count).
pub fn simpson(h: f64, values: &[f64]) -> f64 {
    let n = values.len();
    assert!(
        n >= 3 && n % 2 == 1,
        "Simpson needs an odd number of samples >= 3"
    );
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Trapezoid rule for the closed contour integral of `f` around a circle,
/// traversed counter-clockwise.
pub fn circle_contour(
    center: Complex64,
    radius: f64,
    points: usize,
    mut f: impl FnMut(Complex64) -> Complex64,
) -> Complex64 {
    let dtheta = 2.0 * PI / points as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..points {
        let e = Complex64::from_polar(1.0, j as f64 * dtheta);
        let z = center + e * radius;
        s += f(z) * Complex64::i() * e * radius;
    }
    s * dtheta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights_match_known_rule() {
        let g = GaussLegendre::new(5);
        let x = g.nodes();
        let w = g.weights();
        assert!((x[4] - 0.906_179_845_938_664).abs() < 1e-15);
        assert!((x[3] - 0.538_469_310_105_683).abs() < 1e-15);
        assert!(x[2].abs() < 1e-300);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-15);
        assert!((w[4] - 0.236_926_885_056_189).abs() < 1e-15);
        let g20 = GaussLegendre::new(20);
        assert!((g20.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_exactness() {
        let g = GaussLegendre::new(8);
        let v = g.integrate_real(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_handles_sharp_peak() {
        let q = AdaptiveGaussLegendre::new(16, 1e-12);
        let eps: f64 = 1e-4;
        let (v, _) = q
            .integrate_scalar(&[-1.0, 1.0], |x| {
                Complex64::new(eps / (x * x + eps * eps), 0.0)
            })
            .unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v.re - exact).abs() < 1e-10, "{} vs {}", v.re, exact);
    }

    #[test]
    fn adaptive_vector_oscillatory() {
        let q = AdaptiveGaussLegendre::new(16, 1e-12);
        let xs = [0.3, 1.0, 2.5];
        let r = q
            .integrate(&[0.0, 5.0, 10.0], xs.len(), &|k, out: &mut [Complex64]| {
                for (o, x) in out.iter_mut().zip(&xs) {
                    *o = Complex64::from_polar(1.0, -k * k * 0.7) * (k * x).sin();
                }
            })
            .unwrap();
        // reference by brute-force fixed rule on many panels
        let g = GaussLegendre::new(20);
        for (i, x) in xs.iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for p in 0..2000 {
                let a = p as f64 * 0.005;
                s += g.integrate(a, a + 0.005, |k| {
                    Complex64::from_polar(1.0, -k * k * 0.7) * (k * x).sin()
                });
            }
            assert!((r.values[i] - s).norm() < 1e-11);
        }
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let h = 0.1;
        let v: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(h, &v) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn circle_residue() {
        let c = Complex64::new(0.3, -0.2);
        let r = circle_contour(c, 1e-3, 64, |z| (z * 2.0).exp() / (z - c));
        let expected = Complex64::new(0.0, 2.0 * PI) * (c * 2.0).exp();
        assert!((r - expected).norm() < 1e-13);
    }
}
