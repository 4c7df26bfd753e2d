//! Evolves the lowest box mode on the real momentum axis and on the rotated
//! contour, and samples the escaping wave outside the shell.

use gamow_lab::exterior::ExteriorWave;
use gamow_lab::poles::first_pole;
use gamow_lab::profile::InitialProfile;
use gamow_lab::spectral::{norm_inside, uniform_grid, DirectEvolver};
use gamow_lab::{RotatedEvolver, WellParameters};

fn main() -> gamow_lab::Result<()> {
    let w = WellParameters::new(10.0, 1.0)?;
    let p = InitialProfile::box_mode(1, &w)?;
    let tau = first_pole(&w)?.lifetime();
    let grid = uniform_grid(1.0, 257);
    let mut direct = DirectEvolver::new(&p, &w);
    let mut rotated = RotatedEvolver::new(&p, &w);

    println!("lambda 10, box:1, tau_1 = {tau:.6}");
    println!(
        "{:>8} {:>14} {:>14} {:>11} {:>16}",
        "t/tau_1", "P direct", "P rotated", "sup gap", "|psi(a/2)|^2"
    );
    for f in [0.05, 0.25, 0.5, 1.0, 2.0, 5.0] {
        let t = f * tau;
        let d = direct.evolve(t, &grid)?.state;
        let r = rotated.evolve(t, &grid)?.total;
        println!(
            "{f:>8} {:>14.10} {:>14.10} {:>11.2e} {:>16.10}",
            norm_inside(&d, &w)?,
            norm_inside(&r, &w)?,
            d.sup_distance(&r),
            r.values[128].norm_sqr()
        );
    }

    let t = tau;
    let outside = ExteriorWave::new(&p, &w, t, 10.0)?;
    let xs: Vec<f64> = (0..=8).map(|j| 1.0 + 0.5 * j as f64).collect();
    println!("\nescaping wave at t = tau_1");
    for (x, v) in xs.iter().zip(outside.values(&xs)?) {
        println!(
            "x {x:>4.1}  psi {:>12.5e} {:>+12.5e}i  |psi|^2 {:.5e}",
            v.re,
            v.im,
            v.norm_sqr()
        );
    }
    Ok(())
}
