//! Eigenvalues of the full Dicke Hamiltonian for two emitters as g grows.
//!
//! At g = 0 the ladder is n_c·ω_c + n_x·ω_x; the counter-rotating terms
//! split and shift it as the coupling increases.

use driven_dicke::model::{build_dicke_hamiltonian, spectrum, ModelParams, SpaceConfig};

fn main() -> driven_dicke::Result<()> {
    let space = SpaceConfig::new(6, 2);
    for g in [0.0, 0.1, 0.3, 0.6] {
        let params = ModelParams::resonant(2, g, 0.0);
        let levels = spectrum(&build_dicke_hamiltonian(&params, &space)?)?;
        let low: Vec<String> = levels.iter().take(8).map(|e| format!("{e:7.4}")).collect();
        println!("g = {g:.2}: {}", low.join(" "));
    }
    Ok(())
}
