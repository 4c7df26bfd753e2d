//! Nonescape probability curves, escape flux and regime fits.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamow::{
    crossover_time, nonescape_asymptote, ResidueTerm, RotatedEvolver, SMALL_TIME_WARNING,
};
use crate::poles::first_pole;
use crate::profile::InitialProfile;
use crate::spectral::{norm_inside, uniform_grid, DirectEvolver, Method, WaveState};
use crate::well::WellParameters;

/// Smallest Simpson grid for P(t).
pub const MIN_NODES: usize = 257;
const MAX_NODES: usize = 8193;
/// Simpson refinement stops once doubling changes P by less than this.
pub const NODE_REFINEMENT: f64 = 1e-8;
/// Minimum number of samples in a fit window.
pub const MIN_FIT_POINTS: usize = 8;

/// How each time point is evolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodPolicy {
    Direct,
    Rotated,
    /// Rotated values, with the direct result kept as a cross-check.
    Both,
    /// Direct for t < 0.02 a^2, rotated otherwise.
    Auto,
}

impl std::str::FromStr for MethodPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "rotated" => Ok(Self::Rotated),
            "both" => Ok(Self::Both),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidParameters(format!(
                "unknown method policy `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub p: f64,
    pub method: Method,
    /// Closed-form t^{-3} overlay.
    pub asymptote: Option<f64>,
    /// Sup-norm gap between direct and rotated states (policy `Both`).
    pub discrepancy: Option<f64>,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub opacity: f64,
    pub width: f64,
    pub profile: String,
    pub points: Vec<CurvePoint>,
}

impl DecayCurve {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p).collect()
    }
}

/// `per_decade` geometric samples from `start` to `stop`, both included.
pub fn geometric_times(start: f64, stop: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop >= start && stop.is_finite() && per_decade > 0) {
        return Err(Error::InvalidParameters(format!(
            "geometric grid needs 0 < start <= stop and points per decade > 0, got {start}:{stop}:{per_decade}"
        )));
    }
    let decades = (stop / start).log10();
    let n = (decades * per_decade as f64).round() as usize;
    if n == 0 {
        return Ok(vec![start]);
    }
    Ok((0..=n)
        .map(|j| start * (stop / start).powf(j as f64 / n as f64))
        .collect())
}

/// Evolves one profile under a fixed well, reusing residues across times.
pub struct CurveBuilder {
    profile: InitialProfile,
    well: WellParameters,
    policy: MethodPolicy,
    rotated: RotatedEvolver,
    direct: DirectEvolver,
    overlay: bool,
}

impl CurveBuilder {
    pub fn new(p: &InitialProfile, w: &WellParameters, policy: MethodPolicy) -> Self {
        Self {
            profile: p.clone(),
            well: *w,
            policy,
            rotated: RotatedEvolver::new(p, w),
            direct: DirectEvolver::new(p, w),
            overlay: false,
        }
    }

    /// Attach the closed-form asymptote to every point.
    pub fn with_asymptote(mut self) -> Self {
        self.overlay = true;
        self
    }

    fn method_for(&self, t: f64) -> Method {
        let a2 = self.well.width().powi(2);
        match self.policy {
            MethodPolicy::Direct => Method::Direct,
            MethodPolicy::Rotated | MethodPolicy::Both => Method::Rotated,
            MethodPolicy::Auto if t < SMALL_TIME_WARNING * a2 => Method::Direct,
            MethodPolicy::Auto => Method::Rotated,
        }
    }

    /// psi(., t) on `grid` with the method the policy selects.
    pub fn state(&mut self, t: f64, grid: &[f64]) -> Result<WaveState> {
        if t == 0.0 {
            return Ok(WaveState::initial(&self.profile, grid));
        }
        match self.method_for(t) {
            Method::Direct => Ok(self.direct.evolve(t, grid)?.state),
            _ => Ok(self.rotated.evolve(t, grid)?.total),
        }
    }

    /// One curve point with Simpson refinement in x.
    pub fn point(&mut self, t: f64) -> Result<CurvePoint> {
        let a = self.well.width();
        let mut nodes = MIN_NODES;
        let mut state = self.state(t, &uniform_grid(a, nodes))?;
        let mut p = norm_inside(&state, &self.well)?;
        loop {
            if nodes >= MAX_NODES {
                warn!("P({t}) not settled at {nodes} nodes");
                break;
            }
            let finer = self.state(t, &uniform_grid(a, 2 * nodes - 1))?;
            let q = norm_inside(&finer, &self.well)?;
            nodes = 2 * nodes - 1;
            let change = (q - p).abs();
            p = q;
            state = finer;
            if change < NODE_REFINEMENT {
                break;
            }
        }
        let discrepancy = if self.policy == MethodPolicy::Both && t > 0.0 {
            let direct = self.direct.evolve(t, &state.grid)?.state;
            Some(direct.sup_distance(&state))
        } else {
            None
        };
        let method = if t == 0.0 {
            Method::Direct
        } else {
            self.method_for(t)
        };
        Ok(CurvePoint {
            t,
            p,
            method,
            asymptote: (self.overlay && t > 0.0)
                .then(|| nonescape_asymptote(t, &self.profile, &self.well)),
            discrepancy,
            nodes,
        })
    }

    pub fn curve(&mut self, times: &[f64]) -> Result<DecayCurve> {
        if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameters(
                "times must be finite and >= 0".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameters(
                "times must be sorted ascending".into(),
            ));
        }
        let mut points = Vec::with_capacity(times.len());
        for &t in times {
            points.push(self.point(t)?);
        }
        Ok(DecayCurve {
            opacity: self.well.opacity(),
            width: self.well.width(),
            profile: self.profile.descriptor(),
            points,
        })
    }
}

/// P(t) = int_0^a |psi(x, t)|^2 dx at each time.
pub fn nonescape_curve(
    p: &InitialProfile,
    times: &[f64],
    w: &WellParameters,
    policy: MethodPolicy,
) -> Result<DecayCurve> {
    CurveBuilder::new(p, w, policy).curve(times)
}

/// dP/dt = -2 Im(conj(psi) psi') at x = a, psi' from the interior side.
pub fn flux_derivative(ws: &WaveState, w: &WellParameters) -> Result<f64> {
    let a = w.width();
    let g = &ws.grid;
    let n = g.len();
    let tol = 1e-12 * a;
    if n < 5 || (g[n - 1] - a).abs() > tol {
        return Err(Error::GridTooCoarse(
            "flux needs the last grid node at x = a".into(),
        ));
    }
    let h = g[n - 1] - g[n - 2];
    if h > a / 512.0 * (1.0 + 1e-9) || h <= 0.0 {
        return Err(Error::GridTooCoarse(format!(
            "spacing {h} at x = a exceeds a/512"
        )));
    }
    for j in 1..4 {
        if ((g[n - 1 - j] - g[n - 2 - j]) - h).abs() > 1e-9 * h {
            return Err(Error::GridTooCoarse(
                "flux stencil needs uniform spacing near x = a".into(),
            ));
        }
    }
    let f = &ws.values;
    let d = (f[n - 1] * 25.0 - f[n - 2] * 48.0 + f[n - 3] * 36.0 - f[n - 4] * 16.0
        + f[n - 5] * 3.0)
        / (12.0 * h);
    Ok(-2.0 * (f[n - 1].conj() * d).im)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub rate: f64,
    pub intercept: f64,
    /// Largest |ln P - fit| in the window.
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    /// 95% half-width from the regression standard error.
    pub half_width: f64,
    /// ln P = log_intercept + exponent ln t.
    pub log_intercept: f64,
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least squares y = c0 + c1 x; returns (c0, c1, max residual, slope standard error).
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let c0 = my - slope * mx;
    let res: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - c0 - slope * x).collect();
    let max = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let ss: f64 = res.iter().map(|r| r * r).sum();
    let se = if xs.len() > 2 {
        (ss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (c0, slope, max, se)
}

fn window_samples(curve: &DecayCurve, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = window;
    let tol = 1e-12 * hi.abs();
    let pts: Vec<&CurvePoint> = curve
        .points
        .iter()
        .filter(|p| p.t >= lo - tol && p.t <= hi + tol && p.p > 0.0 && p.t > 0.0)
        .collect();
    Ok((
        pts.iter().map(|p| p.t).collect(),
        pts.iter().map(|p| p.p).collect(),
    ))
}

/// Least squares of ln P against t over `window`.
pub fn fit_exponential(curve: &DecayCurve, window: (f64, f64)) -> Result<ExponentialFit> {
    let (ts, ps) = window_samples(curve, window)?;
    let keep: Vec<usize> = (0..ts.len()).filter(|&j| ps[j] > 1e-14).collect();
    if keep.len() < MIN_FIT_POINTS {
        return Err(Error::WindowTooSmall {
            points: keep.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let xs: Vec<f64> = keep.iter().map(|&j| ts[j]).collect();
    let ys: Vec<f64> = keep.iter().map(|&j| ps[j].ln()).collect();
    let (c0, slope, residual, _) = line_fit(&xs, &ys);
    Ok(ExponentialFit {
        rate: -slope,
        intercept: c0.exp(),
        residual,
        window,
        points: xs.len(),
    })
}

/// Least squares of ln P against ln t; the window must start after `crossover`.
pub fn fit_tail_exponent(
    curve: &DecayCurve,
    window: (f64, f64),
    crossover: f64,
) -> Result<TailFit> {
    if window.0 <= crossover {
        return Err(Error::WindowBeforeCrossover {
            start: window.0,
            crossover,
        });
    }
    let (ts, ps) = window_samples(curve, window)?;
    if ts.len() < MIN_FIT_POINTS {
        return Err(Error::WindowTooSmall {
            points: ts.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let (c0, slope, residual, se) = line_fit(&xs, &ys);
    Ok(TailFit {
        exponent: slope,
        half_width: 1.96 * se,
        log_intercept: c0,
        residual,
        window,
        points: xs.len(),
    })
}

/// Windows and sampling density for [`regime_report_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeOptions {
    /// Exponential window in units of tau_1.
    pub exponential_window: (f64, f64),
    /// Tail window in units of the estimated crossover time.
    pub tail_window: (f64, f64),
    pub per_decade: usize,
}

impl Default for RegimeOptions {
    fn default() -> Self {
        Self {
            exponential_window: (1.0, 5.0),
            tail_window: (10.0, 100.0),
            per_decade: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub opacity: f64,
    pub width: f64,
    pub profile: String,
    pub exponential: ExponentialFit,
    pub tail: TailFit,
    /// -2 Im k_1^2 from the refined pole.
    pub gamma_1: f64,
    /// 4 pi^3 / (lambda a)^2.
    pub gamma_1_asymptotic: f64,
    pub tau_1: f64,
    /// Weight of the leading residue term.
    pub c_1: f64,
    /// Crossing of c_1 e^{-t/tau_1} with the closed-form tail.
    pub t_star_estimate: f64,
    /// Intersection of the two fitted branches.
    pub t_star: f64,
    /// 10 tau_1 ln(lambda).
    pub t_star_reference: f64,
    /// P at the measured crossover, from the exponential branch.
    pub p_star: f64,
    /// -10 log10(lambda).
    pub log10_p_star_reference: f64,
}

pub fn regime_report(p: &InitialProfile, w: &WellParameters) -> Result<RegimeReport> {
    regime_report_with(p, w, &RegimeOptions::default())
}

/// Fits both regimes of a rotated-contour curve and intersects them.
pub fn regime_report_with(
    p: &InitialProfile,
    w: &WellParameters,
    o: &RegimeOptions,
) -> Result<RegimeReport> {
    let est = crossover_time(p, w)?;
    let r = first_pole(w)?;
    let term = ResidueTerm::new(&r, &p.spectral_density(), w)?;
    let tau = r.lifetime();
    let exp_window = (o.exponential_window.0 * tau, o.exponential_window.1 * tau);
    let tail_window = (o.tail_window.0 * est.t_star, o.tail_window.1 * est.t_star);
    let mut times = geometric_times(exp_window.0, exp_window.1, o.per_decade)?;
    times.extend(geometric_times(tail_window.0, tail_window.1, o.per_decade)?);
    let curve = CurveBuilder::new(p, w, MethodPolicy::Auto).curve(&times)?;
    let exponential = fit_exponential(&curve, exp_window)?;
    let tail = fit_tail_exponent(&curve, tail_window, est.t_star)?;
    // ln c - G t = b + s ln t, solved on a log scale
    let gap = |t: f64| {
        exponential.intercept.ln()
            - exponential.rate * t
            - tail.log_intercept
            - tail.exponent * t.ln()
    };
    let (mut lo, mut hi) = (exp_window.0, 1e4 * tail_window.1);
    if !(gap(lo) > 0.0 && gap(hi) < 0.0) {
        return Err(Error::NoCrossing { lo, hi });
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = (lo * hi).sqrt();
    let p_star = exponential.intercept * (-exponential.rate * t_star).exp();
    let a = w.width();
    info!(
        "measured crossover {t_star:.6e}, estimate {:.6e}",
        est.t_star
    );
    Ok(RegimeReport {
        opacity: w.opacity(),
        width: a,
        profile: p.descriptor(),
        exponential,
        tail,
        gamma_1: r.width(),
        gamma_1_asymptotic: 4.0 * std::f64::consts::PI.powi(3) / (w.opacity() * a).powi(2),
        tau_1: tau,
        c_1: term.weight,
        t_star_estimate: est.t_star,
        t_star,
        t_star_reference: est.estimate,
        p_star,
        log10_p_star_reference: -10.0 * w.opacity().log10(),
    })
}
