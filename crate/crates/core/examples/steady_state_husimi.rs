//! Stationary cavity state under a weak drive and its Husimi function.
//!
//! Prints the photon number, the modes found on the grid and a coarse
//! text rendering of Q(α).

use driven_dicke::dissipator::SpectralModel;
use driven_dicke::dynamics::{
    mean_photon_number, stationary_cavity_state, steady_state, BasisOptions, OpenSystem,
};
use driven_dicke::measures::{detect_modes, husimi, AlphaGrid};
use driven_dicke::model::{ModelParams, SpaceConfig};

fn main() -> driven_dicke::Result<()> {
    let cutoff = 16;
    let spectral = SpectralModel {
        gamma: 1e-3,
        temperature: 0.0,
        ..SpectralModel::default()
    };
    let sys = OpenSystem::new(
        ModelParams::resonant(1, 0.02, 0.01),
        SpaceConfig::new(cutoff, 1),
        spectral,
        &BasisOptions::for_cutoff(cutoff),
    )?;
    let p = steady_state(sys.rates())?;
    let cav = stationary_cavity_state(&sys.basis, &p, &sys.space, Some(sys.coherence()))?;
    for w in &cav.warnings {
        eprintln!("warning: {w}");
    }
    println!("n̄ = {:.4}", mean_photon_number(&cav.state));

    let field = husimi(&cav.state, &AlphaGrid::square(4.0, 33));
    for m in detect_modes(&field) {
        println!(
            "mode at α = {:+.3}{:+.3}i, Q = {:.4}",
            m.alpha.re, m.alpha.im, m.q
        );
    }

    let shades = [' ', '.', ':', '+', '#'];
    let peak = field.max();
    // rows top to bottom in Im α
    for row in (0..33).rev().step_by(2) {
        let line: String = (0..33)
            .map(|col| {
                let q = field.q[row * 33 + col] / peak;
                shades[((q * 4.0).round() as usize).min(4)]
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}
