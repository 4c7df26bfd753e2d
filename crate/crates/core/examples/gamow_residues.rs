//! Gamow-state content of a box mode: residue weights, the contour check of
//! each residue, their overlap matrix, and how much of the state the first
//! few terms carry at later times.

use gamow_lab::gamow::{gram_matrix, ResidueTerm};
use gamow_lab::poles::enumerate_poles;
use gamow_lab::profile::InitialProfile;
use gamow_lab::spectral::{norm_inside, uniform_grid};
use gamow_lab::{RotatedEvolver, WellParameters};

fn main() -> gamow_lab::Result<()> {
    let w = WellParameters::new(100.0, 1.0)?;
    let p = InitialProfile::box_mode(1, &w)?;
    let d = p.spectral_density();
    let terms: Vec<ResidueTerm> = enumerate_poles(&w, 20.0)?
        .iter()
        .map(|r| ResidueTerm::new(r, &d, &w))
        .collect::<gamow_lab::Result<_>>()?;

    println!(
        "{:>3} {:>14} {:>12} {:>10}",
        "n", "c_n", "Gamma_n", "contour"
    );
    for t in &terms {
        println!(
            "{:>3} {:>14.6e} {:>12.5e} {:>10.1e}",
            t.resonance.index,
            t.weight,
            t.resonance.width(),
            t.contour_mismatch
        );
    }

    println!("\noverlap of the first three Gamow terms");
    for row in gram_matrix(&terms[..3], w.width()) {
        println!(
            "{}",
            row.iter()
                .map(|g| format!("{:>10.2e}", g.norm()))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }

    let tau = terms[0].resonance.lifetime();
    let grid = uniform_grid(1.0, 513);
    let mut ev = RotatedEvolver::new(&p, &w);
    println!(
        "\n{:>8} {:>14} {:>14} {:>14}",
        "t/tau_1", "P full", "P one term", "c_1 e^-t/tau"
    );
    for f in [0.1, 0.5, 1.0, 3.0, 5.0] {
        let dec = ev.evolve(f * tau, &grid)?;
        println!(
            "{f:>8} {:>14.8} {:>14.8} {:>14.8}",
            norm_inside(&dec.total, &w)?,
            norm_inside(&dec.partial_residue_sum(1), &w)?,
            terms[0].weight * (-f).exp()
        );
    }
    Ok(())
}
