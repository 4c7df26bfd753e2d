//! Nonescape probability from 0.01 tau_1 into the power-law tail, with the
//! exponential fit and the closed-form asymptote alongside.
//!
//! cargo run --example survival_curve -- [lambda]

use gamow_lab::decay::geometric_times;
use gamow_lab::poles::first_pole;
use gamow_lab::profile::InitialProfile;
use gamow_lab::{fit_exponential, CurveBuilder, MethodPolicy, WellParameters};

fn main() -> gamow_lab::Result<()> {
    let lambda = std::env::args()
        .nth(1)
        .map_or(10.0, |s| s.parse().expect("numeric lambda"));
    let w = WellParameters::new(lambda, 1.0)?;
    let p = InitialProfile::box_mode(1, &w)?;
    let tau = first_pole(&w)?.lifetime();
    let times = geometric_times(0.01 * tau, 200.0 * tau, 16)?;
    let curve = CurveBuilder::new(&p, &w, MethodPolicy::Auto)
        .with_asymptote()
        .curve(&times)?;

    println!(
        "{:>12} {:>10} {:>22} {:>12} {:>9}",
        "t", "t/tau_1", "P", "P_asym", "method"
    );
    for pt in &curve.points {
        println!(
            "{:>12.5e} {:>10.3} {:>22.15e} {:>12.4e} {:>9}",
            pt.t,
            pt.t / tau,
            pt.p,
            pt.asymptote.unwrap_or(f64::NAN),
            pt.method.as_str()
        );
    }
    let fit = fit_exponential(&curve, (tau, 5.0 * tau))?;
    println!(
        "\nfit on [tau_1, 5 tau_1]: rate {:.8e} (pole {:.8e}), intercept {:.6}",
        fit.rate,
        1.0 / tau,
        fit.intercept
    );
    Ok(())
}
