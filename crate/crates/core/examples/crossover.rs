//! Exponential-to-power-law crossover for several opacities.

use gamow_lab::profile::InitialProfile;
use gamow_lab::{crossover_time, regime_report, WellParameters};

fn main() -> gamow_lab::Result<()> {
    println!(
        "{:>6} {:>12} {:>12} {:>10} {:>12} {:>12} {:>12} {:>8} {:>8}",
        "lambda",
        "Gamma fit",
        "Gamma_1",
        "tail exp",
        "t* fitted",
        "t* closed",
        "10tau ln l",
        "log P*",
        "-10logl"
    );
    for lambda in [10.0, 20.0, 30.0, 50.0, 100.0] {
        let w = WellParameters::new(lambda, 1.0)?;
        let p = InitialProfile::box_mode(1, &w)?;
        let r = regime_report(&p, &w)?;
        let c = crossover_time(&p, &w)?;
        println!(
            "{lambda:>6} {:>12.6e} {:>12.6e} {:>10.5} {:>12.5e} {:>12.5e} {:>12.5e} {:>8.2} {:>8.2}",
            r.exponential.rate,
            r.gamma_1,
            r.tail.exponent,
            r.t_star,
            c.t_star,
            r.t_star_reference,
            r.p_star.log10(),
            r.log10_p_star_reference
        );
    }
    Ok(())
}
