//! Run configuration, command dispatch and reproducible CSV/JSON output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::decay::{geometric_times, regime_report, CurveBuilder, MethodPolicy, RegimeReport};
use crate::error::{Error, Result};
use crate::gamow::{crossover_time, ResidueTerm, RotatedEvolver};
use crate::poles::{asymptotic_pole_seed, enumerate_poles_audited, first_pole, fixed_point_seed};
use crate::profile::InitialProfile;
use crate::spectral::{uniform_grid, DirectEvolver, DirectOptions, WaveState};
use crate::well::WellParameters;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidParameters(format!(
                "unknown format `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Poles,
    Evolve,
    Survival,
    Report,
}

/// Everything a run needs; echoed into every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub lambda: f64,
    pub width: f64,
    /// `box:n` or `gauss:center,sigma`.
    pub profile: String,
    /// `start:stop:points-per-decade` or a comma list; `None` picks a default.
    pub times: Option<String>,
    pub k_max: f64,
    pub policy: MethodPolicy,
    pub out: PathBuf,
    pub format: OutputFormat,
    /// Grid nodes on [0, a] for snapshots.
    pub nodes: usize,
    /// Absolute tolerance of the real-axis quadrature.
    pub direct_tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            width: 1.0,
            profile: "box:1".into(),
            times: None,
            k_max: 20.0,
            policy: MethodPolicy::Auto,
            out: PathBuf::from("."),
            format: OutputFormat::Csv,
            nodes: 257,
            direct_tolerance: DirectOptions::default().tolerance,
        }
    }
}

/// Parses `box:n` or `gauss:center,sigma`.
pub fn parse_profile(text: &str, w: &WellParameters) -> Result<InitialProfile> {
    let bad = || {
        Error::InvalidProfile(format!(
            "expected box:n or gauss:center,sigma, got `{text}`"
        ))
    };
    let (kind, args) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "box" => InitialProfile::box_mode(args.trim().parse().map_err(|_| bad())?, w),
        "gauss" => {
            let (c, s) = args.split_once(',').ok_or_else(bad)?;
            let c: f64 = c.trim().parse().map_err(|_| bad())?;
            let s: f64 = s.trim().parse().map_err(|_| bad())?;
            InitialProfile::truncated_gaussian(c, s, w)
        }
        _ => Err(bad()),
    }
}

/// Parses `start:stop:points-per-decade` (geometric) or `t1,t2,...`.
pub fn parse_times(text: &str) -> Result<Vec<f64>> {
    let bad = |m: &str| Error::InvalidParameters(format!("time grid `{text}`: {m}"));
    let times = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:points-per-decade"));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad("bad stop"))?;
        let per: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| bad("bad points per decade"))?;
        geometric_times(start, stop, per)?
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<Vec<f64>>>()?
    };
    if times.is_empty() {
        return Err(bad("empty"));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(bad("times must be finite and >= 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(bad("times must ascend"));
    }
    Ok(times)
}

/// A config checked against every module precondition.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub well: WellParameters,
    pub profile: InitialProfile,
    pub times: Vec<f64>,
}

impl RunConfig {
    pub fn resolve(&self, command: Command) -> Result<ResolvedRun> {
        let well = WellParameters::new(self.lambda, self.width)?;
        let profile = parse_profile(&self.profile, &well)?;
        if !(self.k_max > 0.0 && self.k_max.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "k_max must be positive, got {}",
                self.k_max
            )));
        }
        if self.nodes < 65 || self.nodes % 2 == 0 {
            return Err(Error::InvalidParameters(format!(
                "nodes must be odd and >= 65, got {}",
                self.nodes
            )));
        }
        if !(self.direct_tolerance > 0.0) {
            return Err(Error::InvalidParameters(
                "direct tolerance must be positive".into(),
            ));
        }
        let times = match (&self.times, command) {
            (Some(text), _) => parse_times(text)?,
            (None, Command::Evolve) => vec![0.0, first_pole(&well)?.lifetime()],
            (None, Command::Survival) => {
                let tau = first_pole(&well)?.lifetime();
                let mut t = vec![0.0];
                t.extend(geometric_times(1e-2 * tau, 1e3 * tau, 25)?);
                t
            }
            (None, _) => Vec::new(),
        };
        Ok(ResolvedRun {
            config: self.clone(),
            well,
            profile,
            times,
        })
    }
}

/// Process exit status for an error: 1 usage, 2 pole audit, 3 quadrature.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CountMismatch { .. }
        | Error::NoConvergence { .. }
        | Error::WrongQuadrant { .. }
        | Error::SeedOutOfRegime { .. } => 2,
        Error::QuadratureNotConverged { .. }
        | Error::ResidueMismatch { .. }
        | Error::GridTooCoarse(_) => 3,
        _ => 1,
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'a str,
    config: &'a RunConfig,
    data: T,
}

fn config_line(cfg: &RunConfig) -> String {
    format!(
        "# gamow-lab {VERSION} config={}\n",
        serde_json::to_string(cfg).expect("config serializes")
    )
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let io =
        |e: std::io::Error| Error::InvalidParameters(format!("writing {}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut f = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, cfg: &RunConfig, data: T) -> Result<()> {
    let env = Envelope {
        version: VERSION,
        config: cfg,
        data,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("output serializes");
    s.push('\n');
    write_atomic(path, &s)
}

fn write_csv(path: &Path, cfg: &RunConfig, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut s = config_line(cfg);
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    write_atomic(path, &s)
}

/// One refined pole as written by [`cmd_poles`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRow {
    pub n: usize,
    pub re_ka: f64,
    pub im_ka: f64,
    pub re_e: f64,
    pub gamma: f64,
    pub tau: f64,
    pub residual: f64,
    /// |k - seed| / |seed| against the closed-form seed (or the fixed-point one).
    pub seed_deviation: f64,
    pub metastable: bool,
}

pub fn pole_table(run: &ResolvedRun) -> Result<Vec<PoleRow>> {
    let w = &run.well;
    let a = w.width();
    let set = enumerate_poles_audited(w, run.config.k_max)?;
    if !w.is_metastable() {
        warn!(
            "opacity {} < 10: poles are broad, not metastable",
            w.opacity()
        );
    }
    Ok(set
        .poles
        .iter()
        .map(|r| {
            let k = r.wavenumber();
            let seed = asymptotic_pole_seed(r.index, w)
                .unwrap_or_else(|_| fixed_point_seed(r.index, w))
                .value();
            PoleRow {
                n: r.index,
                re_ka: k.re * a,
                im_ka: k.im * a,
                re_e: r.energy().re,
                gamma: r.width(),
                tau: r.lifetime(),
                residual: r.residual,
                seed_deviation: (k - seed).norm() / seed.norm(),
                metastable: w.is_metastable(),
            }
        })
        .collect())
}

pub fn cmd_poles(run: &ResolvedRun) -> Result<Vec<PathBuf>> {
    let rows = pole_table(run)?;
    let cfg = &run.config;
    let path = match cfg.format {
        OutputFormat::Csv => {
            let path = cfg.out.join("poles.csv");
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.re_ka),
                        num(r.im_ka),
                        num(r.re_e),
                        num(r.gamma),
                        num(r.tau),
                        num(r.residual),
                        num(r.seed_deviation),
                        if r.metastable {
                            String::new()
                        } else {
                            "not-metastable".into()
                        },
                    ]
                })
                .collect();
            write_csv(
                &path,
                cfg,
                &[
                    "n",
                    "re_ka",
                    "im_ka",
                    "re_e",
                    "gamma",
                    "tau",
                    "residual",
                    "seed_deviation",
                    "warning",
                ],
                &body,
            )?;
            path
        }
        OutputFormat::Json => {
            let path = cfg.out.join("poles.json");
            write_json(&path, cfg, &rows)?;
            path
        }
    };
    Ok(vec![path])
}

/// One evolved snapshot; `discrepancy` is set when both methods ran.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub states: Vec<WaveState>,
    pub discrepancy: Option<f64>,
}

pub fn snapshots(run: &ResolvedRun) -> Result<Vec<Snapshot>> {
    let w = &run.well;
    let grid = uniform_grid(w.width(), run.config.nodes);
    let options = DirectOptions {
        tolerance: run.config.direct_tolerance,
        ..DirectOptions::default()
    };
    let mut direct = DirectEvolver::with_options(&run.profile, w, options);
    let mut rotated = RotatedEvolver::new(&run.profile, w);
    let small = crate::gamow::SMALL_TIME_WARNING * w.width().powi(2);
    let mut out = Vec::with_capacity(run.times.len());
    for &t in &run.times {
        let use_direct = match run.config.policy {
            MethodPolicy::Direct | MethodPolicy::Both => true,
            MethodPolicy::Rotated => false,
            MethodPolicy::Auto => t < small,
        };
        let use_rotated = match run.config.policy {
            MethodPolicy::Rotated | MethodPolicy::Both => true,
            MethodPolicy::Direct => false,
            MethodPolicy::Auto => t >= small,
        };
        let mut states = Vec::new();
        if use_direct {
            states.push(direct.evolve(t, &grid)?.state);
        }
        if use_rotated {
            states.push(rotated.evolve(t, &grid)?.total);
        }
        let discrepancy = (states.len() == 2).then(|| states[0].sup_distance(&states[1]));
        out.push(Snapshot {
            t,
            states,
            discrepancy,
        });
    }
    Ok(out)
}

pub fn cmd_evolve(run: &ResolvedRun) -> Result<Vec<PathBuf>> {
    if run.times.is_empty() {
        return Err(Error::InvalidParameters(
            "evolve needs at least one time".into(),
        ));
    }
    let snaps = snapshots(run)?;
    let cfg = &run.config;
    let mut paths = Vec::new();
    match cfg.format {
        OutputFormat::Csv => {
            for (j, s) in snaps.iter().enumerate() {
                let path = cfg.out.join(format!("snapshot_{j:03}.csv"));
                let mut rows = Vec::new();
                for st in &s.states {
                    for (x, v) in st.grid.iter().zip(&st.values) {
                        rows.push(vec![
                            num(s.t),
                            num(*x),
                            num(v.re),
                            num(v.im),
                            num(v.norm_sqr()),
                            st.method.as_str().to_string(),
                        ]);
                    }
                }
                write_csv(
                    &path,
                    cfg,
                    &["t", "x", "re_psi", "im_psi", "abs2", "method"],
                    &rows,
                )?;
                paths.push(path);
            }
            let path = cfg.out.join("evolve_summary.csv");
            let rows: Vec<Vec<String>> = snaps
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let methods: Vec<&str> = s.states.iter().map(|st| st.method.as_str()).collect();
                    vec![
                        j.to_string(),
                        num(s.t),
                        methods.join("+"),
                        s.discrepancy.map(num).unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(
                &path,
                cfg,
                &["snapshot", "t", "methods", "discrepancy"],
                &rows,
            )?;
            paths.push(path);
        }
        OutputFormat::Json => {
            let path = cfg.out.join("evolve.json");
            write_json(&path, cfg, &snaps)?;
            paths.push(path);
        }
    }
    Ok(paths)
}

pub fn cmd_survival(run: &ResolvedRun) -> Result<Vec<PathBuf>> {
    if run.times.is_empty() {
        return Err(Error::InvalidParameters(
            "survival needs at least one time".into(),
        ));
    }
    let cfg = &run.config;
    let mut builder = CurveBuilder::new(&run.profile, &run.well, cfg.policy);
    if run.well.is_metastable() {
        builder = builder.with_asymptote();
    }
    let curve = builder.curve(&run.times)?;
    let mut paths = Vec::new();
    match cfg.format {
        OutputFormat::Csv => {
            let path = cfg.out.join("survival.csv");
            let rows: Vec<Vec<String>> = curve
                .points
                .iter()
                .map(|p| {
                    vec![
                        num(p.t),
                        num(p.p),
                        p.method.as_str().to_string(),
                        p.asymptote.map(num).unwrap_or_default(),
                        p.discrepancy.map(num).unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(
                &path,
                cfg,
                &["t", "p", "method", "asymptote", "discrepancy"],
                &rows,
            )?;
            paths.push(path);
        }
        OutputFormat::Json => {
            let path = cfg.out.join("survival.json");
            write_json(&path, cfg, &curve)?;
            paths.push(path);
        }
    }
    let report = regime_report(&run.profile, &run.well)?;
    let path = cfg.out.join("regime.json");
    write_json(&path, cfg, SurvivalSummary::from(&report))?;
    paths.push(path);
    Ok(paths)
}

/// Headline numbers of a survival run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSummary {
    pub gamma_fit: f64,
    pub gamma_1_exact: f64,
    pub gamma_ratio: f64,
    pub c_fit: f64,
    pub s_fit: f64,
    pub s_half_width: f64,
    pub t_star_meas: f64,
    pub ten_tau_ln_lambda: f64,
    pub report: RegimeReport,
}

impl From<&RegimeReport> for SurvivalSummary {
    fn from(r: &RegimeReport) -> Self {
        Self {
            gamma_fit: r.exponential.rate,
            gamma_1_exact: r.gamma_1,
            gamma_ratio: r.exponential.rate / r.gamma_1,
            c_fit: r.exponential.intercept,
            s_fit: r.tail.exponent,
            s_half_width: r.tail.half_width,
            t_star_meas: r.t_star,
            ten_tau_ln_lambda: r.t_star_reference,
            report: r.clone(),
        }
    }
}

/// Poles, leading residue weights, crossover and fitted regimes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub poles: Vec<PoleRow>,
    pub weights: Vec<f64>,
    pub flux_contrast: f64,
    pub regimes: Option<SurvivalSummary>,
}

pub fn summary(run: &ResolvedRun) -> Result<Summary> {
    let poles = pole_table(run)?;
    let density = run.profile.spectral_density();
    let set = crate::poles::enumerate_poles(&run.well, run.config.k_max)?;
    let mut weights = Vec::new();
    let mut contrast = 0.0;
    for r in &set {
        let term = ResidueTerm::new(r, &density, &run.well)?;
        contrast += term.weight * r.width();
        weights.push(term.weight);
    }
    let regimes = if run.well.is_metastable() {
        Some(SurvivalSummary::from(&regime_report(
            &run.profile,
            &run.well,
        )?))
    } else {
        None
    };
    Ok(Summary {
        poles,
        weights,
        flux_contrast: contrast,
        regimes,
    })
}

fn summary_text(run: &ResolvedRun, s: &Summary) -> Result<String> {
    let w = &run.well;
    let mut t = String::new();
    let _ = writeln!(t, "gamow-lab {VERSION}");
    let _ = writeln!(
        t,
        "opacity {}  width {}  profile {}",
        w.opacity(),
        w.width(),
        run.profile.descriptor()
    );
    let _ = writeln!(t, "\npoles with Re k < {}:", run.config.k_max);
    let _ = writeln!(
        t,
        "{:>4} {:>22} {:>22} {:>14} {:>14} {:>12}",
        "n", "Re ka", "Im ka", "Gamma", "tau", "c_n"
    );
    for (p, c) in s.poles.iter().zip(&s.weights) {
        let _ = writeln!(
            t,
            "{:>4} {:>22.15e} {:>22.15e} {:>14.6e} {:>14.6e} {:>12.6}",
            p.n, p.re_ka, p.im_ka, p.gamma, p.tau, c
        );
    }
    let _ = writeln!(
        t,
        "\nsum c_n Gamma_n over listed poles: {:.6e}",
        s.flux_contrast
    );
    match &s.regimes {
        Some(r) => {
            let rep = &r.report;
            let _ = writeln!(
                t,
                "Gamma_1 from pole {:.10e}, 4 pi^3/(lambda a)^2 = {:.10e}",
                rep.gamma_1, rep.gamma_1_asymptotic
            );
            let _ = writeln!(
                t,
                "fitted rate {:.10e} on [{:.4e}, {:.4e}], ratio {:.6}",
                r.gamma_fit, rep.exponential.window.0, rep.exponential.window.1, r.gamma_ratio
            );
            let _ = writeln!(t, "fitted intercept {:.6}, c_1 = {:.6}", r.c_fit, rep.c_1);
            let _ = writeln!(t, "tail exponent {:.6} +/- {:.2e}", r.s_fit, r.s_half_width);
            let _ = writeln!(
                t,
                "crossover t* = {:.6e} (= {:.3} tau_1), 10 tau_1 ln lambda = {:.6e}",
                r.t_star_meas,
                r.t_star_meas / rep.tau_1,
                r.ten_tau_ln_lambda
            );
            let _ = writeln!(
                t,
                "P(t*) = {:.3e}, log10 = {:.2} against {:.2}",
                rep.p_star,
                rep.p_star.log10(),
                rep.log10_p_star_reference
            );
        }
        None => {
            let _ = writeln!(t, "opacity below 10: no regime analysis");
        }
    }
    if w.is_metastable() {
        let c = crossover_time(&run.profile, w)?;
        let _ = writeln!(t, "closed-form crossover estimate {:.6e}", c.t_star);
    }
    Ok(t)
}

pub fn cmd_report(run: &ResolvedRun) -> Result<Vec<PathBuf>> {
    let s = summary(run)?;
    let cfg = &run.config;
    let path = match cfg.format {
        OutputFormat::Json => {
            let path = cfg.out.join("report.json");
            write_json(&path, cfg, &s)?;
            path
        }
        OutputFormat::Csv => {
            let path = cfg.out.join("report.txt");
            let mut text = config_line(cfg);
            text.push_str(&summary_text(run, &s)?);
            write_atomic(&path, &text)?;
            path
        }
    };
    Ok(vec![path])
}

/// Validates `config` and runs `command`, returning the files written.
pub fn execute(command: Command, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let run = config.resolve(command)?;
    match command {
        Command::Poles => cmd_poles(&run),
        Command::Evolve => cmd_evolve(&run),
        Command::Survival => cmd_survival(&run),
        Command::Report => cmd_report(&run),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        assert_eq!(parse_times("0,1.5,2").unwrap(), vec![0.0, 1.5, 2.0]);
        assert_eq!(parse_times("1:100:2").unwrap().len(), 5);
        assert!(parse_times("").is_err());
        assert!(parse_times("-1,2").is_err());
        assert!(parse_times("2,1").is_err());
        let w = WellParameters::new(10.0, 1.0).unwrap();
        assert!(parse_profile("box:2", &w).is_ok());
        assert!(parse_profile("gauss:0.5,0.1", &w).is_ok());
        assert!(parse_profile("tri:1", &w).is_err());
    }

    #[test]
    fn config_round_trip() {
        let c = RunConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::CountMismatch {
                winding: 3,
                found: 2,
                k_max: 1.0
            }),
            2
        );
        assert_eq!(
            exit_code(&Error::QuadratureNotConverged {
                error: 1.0,
                tolerance: 0.1
            }),
            3
        );
        assert_eq!(exit_code(&Error::InvalidParameters("x".into())), 1);
    }
}
