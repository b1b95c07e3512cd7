//! ΔN, the change of the maximal non-Markovianity when the drive is
//! switched on, across a small coupling sweep.

use driven_dicke::dissipator::SpectralModel;
use driven_dicke::dynamics::{BasisOptions, OpenSystem};
use driven_dicke::measures::{delta_n, GridSpec, PairSampling};
use driven_dicke::model::{ModelParams, SpaceConfig};

fn main() -> driven_dicke::Result<()> {
    let cutoff = 4;
    let build = |g: f64, omega: f64| {
        OpenSystem::new(
            ModelParams::resonant(1, g, omega),
            SpaceConfig::new(cutoff, 1),
            SpectralModel::default(),
            &BasisOptions::for_cutoff(cutoff),
        )
    };
    for g in [0.02, 0.05] {
        let r = delta_n(
            &build(g, 0.01)?,
            &build(g, 0.0)?,
            2,
            7,
            PairSampling::Haar,
            &GridSpec::default(),
        )?;
        println!(
            "g = {g:.3}: N(Ω) = {:.5}, N(0) = {:.5}, ΔN = {:.3e}",
            r.driven.best, r.undriven.best, r.value
        );
    }
    Ok(())
}
