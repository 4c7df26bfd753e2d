//! Probability current through the shell: zero at t = 0, then tracking
//! -Gamma_1 P once the exponential regime sets in.

use gamow_lab::poles::first_pole;
use gamow_lab::profile::InitialProfile;
use gamow_lab::spectral::uniform_grid;
use gamow_lab::{flux_derivative, CurveBuilder, MethodPolicy, WellParameters};

fn main() -> gamow_lab::Result<()> {
    let w = WellParameters::new(100.0, 1.0)?;
    let gamma = first_pole(&w)?.width();
    let grid = uniform_grid(1.0, 513);

    for p in [
        InitialProfile::box_mode(1, &w)?,
        InitialProfile::truncated_gaussian(0.3, 0.05, &w)?,
    ] {
        let mut b = CurveBuilder::new(&p, &w, MethodPolicy::Auto);
        println!("\n{}", p.descriptor());
        println!(
            "{:>8} {:>16} {:>14} {:>10}",
            "t/tau_1", "P", "dP/dt", "ratio"
        );
        for f in [0.0, 0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0] {
            let t = f / gamma;
            let state = b.state(t, &grid)?;
            let flux = flux_derivative(&state, &w)?;
            let pt = b.point(t)?.p;
            println!(
                "{f:>8} {pt:>16.12} {flux:>14.6e} {:>10.5}",
                -flux / (gamma * pt)
            );
        }
    }
    Ok(())
}
