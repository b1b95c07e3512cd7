//! Trace-distance non-Markovianity of the emitter for the canonical pair
//! (|+⟩, |−⟩) and for Haar-random pairs.

use driven_dicke::dissipator::SpectralModel;
use driven_dicke::dynamics::{BasisOptions, OpenSystem};
use driven_dicke::measures::{maximize_nonmarkovianity, GridSpec, PairSampling};
use driven_dicke::model::{ModelParams, SpaceConfig};

fn main() -> driven_dicke::Result<()> {
    let cutoff = 6;
    let grid = GridSpec::default();
    for g in [0.1, 0.2] {
        let sys = OpenSystem::new(
            ModelParams::resonant(1, g, 0.01),
            SpaceConfig::new(cutoff, 1),
            SpectralModel::default(),
            &BasisOptions::for_cutoff(cutoff),
        )?;
        let r = maximize_nonmarkovianity(&sys, 4, 42, PairSampling::Haar, &grid)?;
        let canonical = &r.samples[0];
        println!(
            "g = {g:.2}: canonical N = {:.5} (converged {}), max over {} pairs = {:.5}",
            canonical.value,
            canonical.converged,
            r.samples.len(),
            r.best
        );
    }
    Ok(())
}
