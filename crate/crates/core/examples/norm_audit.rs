//! Probability bookkeeping: what stays inside, what has left through the
//! shell, and the momentum tail beyond the sampled exterior.
//!
//! The exterior sweep costs about t q^2 panels, where q bounds the momentum
//! content of the state, so profiles with slowly decaying phi(k) audit slowly.

use gamow_lab::poles::first_pole;
use gamow_lab::profile::InitialProfile;
use gamow_lab::spectral::{uniform_grid, WaveState};
use gamow_lab::{norm_audit, RotatedEvolver, WellParameters};

fn main() -> gamow_lab::Result<()> {
    let w = WellParameters::new(10.0, 1.0)?;
    let tau = first_pole(&w)?.lifetime();
    let grid = uniform_grid(1.0, 513);

    for n in [1, 2] {
        let p = InitialProfile::box_mode(n, &w)?;
        let mut ev = RotatedEvolver::new(&p, &w);
        println!("\nlambda 10, {}", p.descriptor());
        println!(
            "{:>8} {:>16} {:>16} {:>10} {:>10} {:>10}",
            "t/tau_1", "inside", "outside", "tail", "total-1", "x_out"
        );
        for f in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let t = f * tau;
            let state = if t == 0.0 {
                WaveState::initial(&p, &grid)
            } else {
                ev.evolve(t, &grid)?.total
            };
            let a = norm_audit(&p, &w, &state)?;
            println!(
                "{f:>8} {:>16.12} {:>16.12} {:>10.1e} {:>10.1e} {:>10.1}",
                a.inside,
                a.outside,
                a.tail,
                a.total - 1.0,
                a.x_out
            );
        }
    }
    Ok(())
}
