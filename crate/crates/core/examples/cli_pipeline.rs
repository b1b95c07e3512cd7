//! Runs the `nonmark` subcommand in-process twice against the same cache
//! directory; the second run reuses the Floquet basis and dissipator.

use driven_dicke::cli::{run, Command, RunConfig, RunOptions};

fn main() -> driven_dicke::Result<()> {
    let root = std::env::temp_dir().join(format!("driven-dicke-example-{}", std::process::id()));
    let mut cfg = RunConfig::minimal(1, 0.1);
    cfg.photon_cutoff = 4;
    cfg.drive_amplitude = 0.01;
    cfg.n_samples = 3;
    println!("config:\n{}", cfg.to_toml());

    let opts = RunOptions {
        out: Some(root.join("out")),
        cache: Some(root.join("cache")),
        seed: Some(3),
        threads: Some(2),
    };
    for pass in 1..=2 {
        let report = run(Command::Nonmark, &cfg, &opts)?;
        println!(
            "pass {pass}: {} cache hit(s), wrote {:?}",
            report.cache_hits, report.files
        );
    }
    print!("{}", std::fs::read_to_string(root.join("out/nonmark.csv"))?);
    std::fs::remove_dir_all(&root)?;
    Ok(())
}
