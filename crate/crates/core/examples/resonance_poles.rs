//! Resonance poles of the delta-shell well, with the leading-order seeds and
//! the winding-number audit of the enumeration.
//!
//! cargo run --example resonance_poles -- [lambda] [k_max]

use gamow_lab::poles::{asymptotic_pole_seed, enumerate_poles_audited};
use gamow_lab::well::WellParameters;

fn main() -> gamow_lab::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|s| s.parse::<f64>().expect("numeric argument"));
    let lambda = args.next().unwrap_or(100.0);
    let k_max = args.next().unwrap_or(20.0);
    let w = WellParameters::new(lambda, 1.0)?;
    let set = enumerate_poles_audited(&w, k_max)?;

    println!(
        "lambda {lambda}, poles with Re k < {k_max}: {} (winding {})",
        set.poles.len(),
        set.audit.winding
    );
    println!(
        "{:>3} {:>20} {:>20} {:>12} {:>12} {:>9} {:>9}",
        "n", "Re ka", "Im ka", "Gamma", "tau", "|F(k)|", "seed"
    );
    for r in &set.poles {
        let k = r.wavenumber();
        let seed = match asymptotic_pole_seed(r.index, &w) {
            Ok(s) => format!("{:.2e}", (s.value() - k).norm() / k.norm()),
            Err(_) => "n/a".into(),
        };
        println!(
            "{:>3} {:>20.15} {:>20.13e} {:>12.5e} {:>12.5e} {:>9.1e} {:>9}",
            r.index,
            k.re,
            k.im,
            r.width(),
            r.lifetime(),
            r.residual,
            seed
        );
    }
    if let [first, second, ..] = set.poles.as_slice() {
        println!("Gamma_2 / Gamma_1 = {:.4}", second.width() / first.width());
    }
    Ok(())
}
