//! Command-line front end: configuration, cached system construction,
//! subcommands and CSV export.

pub mod cache;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

pub use config::{RunConfig, Sweep};

use crate::dissipator::DissipatorData;
use crate::dynamics::{self, OpenSystem};
use crate::error::{Error, Result};
use crate::floquet::FloquetBasis;
use crate::measures::{self, AlphaGrid, MaximizeResult};
use crate::model;
use crate::semiclassical;
use cache::Cache;
use output::{num, Csv, Sidecar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Eigenvalues of the undriven Dicke Hamiltonian.
    Spectrum,
    /// Quasienergies of the driven system.
    Floquet,
    /// Husimi function of the stationary cavity state.
    Husimi,
    /// Non-Markovianity of the canonical and random emitter pairs.
    Nonmark,
    /// Drive-induced change of the maximal non-Markovianity.
    Deltan,
    /// Mean-field trajectory.
    Semiclassical,
    /// Print the annotated default configuration.
    Defaults,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Floquet => "floquet",
            Command::Husimi => "husimi",
            Command::Nonmark => "nonmark",
            Command::Deltan => "deltan",
            Command::Semiclassical => "semiclassical",
            Command::Defaults => "defaults",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "driven-dicke",
    version,
    about = "Floquet master-equation simulator for a laser-driven Dicke system"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration (required except for `defaults`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`; default `.`)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cache directory for Floquet bases and dissipators
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Base seed for random pairs (overrides `seed`)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; output does not depend on it
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Overrides taken from the command line.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub cache_hits: usize,
    pub warnings: Vec<String>,
}

/// 2 configuration, 3 convergence, 4 cache corruption, 1 anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } => 2,
        Error::Convergence(_)
        | Error::ConservationDrift { .. }
        | Error::NegativePopulation { .. }
        | Error::DegenerateSteadyState { .. } => 3,
        Error::CacheCorrupt(_) => 4,
        _ => 1,
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    if args.command == Command::Defaults {
        print!("{}", RunConfig::reference());
        return 0;
    }
    let Some(path) = args.config.as_deref() else {
        eprintln!("error: --config is required");
        return 2;
    };
    let opts = RunOptions {
        out: args.out,
        cache: args.cache,
        seed: args.seed,
        threads: args.threads,
    };
    match RunConfig::load(path).and_then(|cfg| run(args.command, &cfg, &opts)) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one subcommand. Data files are written before a convergence error
/// is returned.
pub fn run(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(Error::Config {
                key: "--threads".into(),
                reason: "must be at least 1".into(),
            });
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config {
        key: "--threads".into(),
        reason: e.to_string(),
    })?;
    let ctx = Context {
        out: opts
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        cache: Cache::new(opts.cache.clone().or_else(|| cfg.cache_dir.clone())),
        hits: AtomicUsize::new(0),
    };
    pool.install(|| match command {
        Command::Spectrum => spectrum(&cfg, &ctx),
        Command::Floquet => floquet(&cfg, &ctx),
        Command::Husimi => husimi(&cfg, &ctx),
        Command::Nonmark => nonmark(&cfg, &ctx),
        Command::Deltan => deltan(&cfg, &ctx),
        Command::Semiclassical => semiclassical_run(&cfg, &ctx),
        Command::Defaults => Ok(RunReport::default()),
    })
}

struct Context {
    out: PathBuf,
    cache: Cache,
    hits: AtomicUsize,
}

impl Context {
    fn sidecar(&self, command: &str, cfg: &RunConfig, points: usize) -> Sidecar {
        Sidecar {
            subcommand: command.into(),
            config_hash: cfg.content_hash(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            seed: cfg.seed,
            threads: rayon::current_num_threads(),
            points,
            warnings: Vec::new(),
            notes: Vec::new(),
            config: toml::Table::try_from(cfg).expect("config serializes"),
        }
    }

    fn file(&self, stem: &str, index: usize, count: usize) -> PathBuf {
        if count == 1 {
            self.out.join(format!("{stem}.csv"))
        } else {
            self.out.join(format!("{stem}_{index:03}.csv"))
        }
    }

    fn finish(&self, files: Vec<PathBuf>, warnings: Vec<String>) -> RunReport {
        RunReport {
            files,
            cache_hits: self.hits.load(Ordering::Relaxed),
            warnings,
        }
    }

    fn basis(&self, cfg: &RunConfig) -> Result<(FloquetBasis, String)> {
        let (params, space, opts) = (cfg.model_params(), cfg.space(), cfg.basis_options());
        let bkey = cache::basis_key(&params, &space, &opts);
        let basis = match self.cache.load(&bkey, "basis")? {
            Some(c) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                cache::decode_basis(&c)?
            }
            None => {
                let b = dynamics::build_basis(&params, &space, &opts)?;
                self.cache.store(&bkey, "basis", &cache::encode_basis(&b))?;
                b
            }
        };
        if basis.dim() != space.dim() {
            return Err(Error::CacheCorrupt(format!(
                "basis {bkey} has the wrong dimension"
            )));
        }
        Ok((basis, bkey))
    }

    /// Floquet basis and dissipator, from the cache when present.
    fn system(&self, cfg: &RunConfig) -> Result<OpenSystem> {
        let (params, space, spectral) = (cfg.model_params(), cfg.space(), cfg.spectral());
        let (basis, bkey) = self.basis(cfg)?;
        let dkey = cache::dissipator_key(&bkey, &spectral);
        let dissipator = match self.cache.load(&dkey, "dissipator")? {
            Some(c) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                cache::decode_dissipator(&c)?
            }
            None => {
                let channels = model::build_coupling_channels(&space)?;
                let d = DissipatorData::assemble(&basis, &channels, &spectral)?;
                self.cache
                    .store(&dkey, "dissipator", &cache::encode_dissipator(&d))?;
                d
            }
        };
        if dissipator.dim() != space.dim() {
            return Err(Error::CacheCorrupt(format!(
                "dissipator {dkey} has the wrong dimension"
            )));
        }
        Ok(OpenSystem {
            params,
            space,
            spectral,
            basis,
            dissipator,
        })
    }
}

fn spectrum(cfg: &RunConfig, ctx: &Context) -> Result<RunReport> {
    let points = cfg.points()?;
    let levels = points
        .par_iter()
        .map(|p| {
            model::spectrum(&model::build_dicke_hamiltonian(
                &p.model_params(),
                &p.space(),
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["g", "level_index", "energy"]);
    for (p, e) in points.iter().zip(&levels) {
        for (i, x) in e.iter().enumerate() {
            csv.row(&[num(p.g), i.to_string(), num(*x)]);
        }
    }
    let path = ctx.out.join("spectrum.csv");
    output::write_with_sidecar(&path, &csv, &ctx.sidecar("spectrum", cfg, points.len()))?;
    Ok(ctx.finish(vec![path], Vec::new()))
}

fn floquet(cfg: &RunConfig, ctx: &Context) -> Result<RunReport> {
    let points = cfg.points()?;
    let bases = points
        .par_iter()
        .map(|p| ctx.basis(p).map(|(b, _)| b))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["g", "omega", "level_index", "quasienergy"]);
    let mut meta = ctx.sidecar("floquet", cfg, points.len());
    for (p, b) in points.iter().zip(&bases) {
        for (i, e) in b.quasienergies.iter().enumerate() {
            csv.row(&[num(p.g), num(p.drive_amplitude), i.to_string(), num(*e)]);
        }
        meta.notes.push(format!(
            "g={}: max Gram deviation {:e}",
            p.g,
            b.gram_deviation()
        ));
    }
    let path = ctx.out.join("floquet.csv");
    output::write_with_sidecar(&path, &csv, &meta)?;
    Ok(ctx.finish(vec![path], Vec::new()))
}

fn husimi(cfg: &RunConfig, ctx: &Context) -> Result<RunReport> {
    let points = cfg.points()?;
    let fields = points
        .par_iter()
        .map(|p| {
            let sys = ctx.system(p)?;
            let p_ss = dynamics::steady_state(sys.rates())?;
            let st = dynamics::stationary_cavity_state(
                &sys.basis,
                &p_ss,
                &sys.space,
                Some(sys.coherence()),
            )?;
            let field = measures::husimi(
                &st.state,
                &AlphaGrid::square(p.husimi_extent(), p.husimi_points),
            );
            Ok((field, st, sys.dissipator.diagnostics.warnings.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut files = Vec::new();
    let mut all_warnings = Vec::new();
    for (k, (p, (field, st, warn))) in points.iter().zip(fields).enumerate() {
        let mut csv = Csv::new(&["re_alpha", "im_alpha", "Q", "trunc_ok"]);
        for i in 0..field.q.len() {
            let a = field.grid.point(i);
            csv.row(&[
                num(a.re),
                num(a.im),
                num(field.q[i]),
                field.trunc_ok[i].to_string(),
            ]);
        }
        let mut meta = ctx.sidecar("husimi", p, 1);
        meta.warnings = warn
            .into_iter()
            .chain(st.warnings.iter().cloned())
            .collect();
        if !field.all_trunc_ok() {
            meta.warnings
                .push("grid extends beyond |alpha|^2 <= photon_cutoff/2".into());
        }
        meta.notes.push(format!(
            "mean photon number {}",
            num(dynamics::mean_photon_number(&st.state))
        ));
        meta.notes
            .push(format!("normalization {}", num(field.normalization())));
        for m in measures::detect_modes(&field) {
            meta.notes.push(format!(
                "mode alpha = {} {:+}i, Q = {}",
                num(m.alpha.re),
                m.alpha.im,
                num(m.q)
            ));
        }
        let path = ctx.file("husimi", k, points.len());
        output::write_with_sidecar(&path, &csv, &meta)?;
        all_warnings.extend(meta.warnings);
        files.push(path);
    }
    Ok(ctx.finish(files, all_warnings))
}

fn seed_cell(kind: &measures::PairKind) -> String {
    kind.seed().map(|s| s.to_string()).unwrap_or_default()
}

fn unconverged_best(label: &str, r: &MaximizeResult) -> Option<String> {
    let best = r.samples.iter().find(|s| s.value == r.best)?;
    (!best.converged).then(|| format!("{label}: maximal N = {} did not converge", num(r.best)))
}

fn nonmark(cfg: &RunConfig, ctx: &Context) -> Result<RunReport> {
    let points = cfg.points()?;
    let results = points
        .par_iter()
        .map(|p| {
            let sys = ctx.system(p)?;
            measures::maximize_nonmarkovianity(
                &sys,
                p.n_samples,
                p.seed,
                p.pair_sampling,
                &p.grid(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["g", "omega", "N_value", "pair_kind", "seed", "converged"]);
    let mut meta = ctx.sidecar("nonmark", cfg, points.len());
    for (p, r) in points.iter().zip(&results) {
        for s in &r.samples {
            csv.row(&[
                num(p.g),
                num(p.drive_amplitude),
                num(s.value),
                s.kind.label().into(),
                seed_cell(&s.kind),
                s.converged.to_string(),
            ]);
        }
        let open = r.samples.iter().filter(|s| !s.converged).count();
        if open > 0 {
            meta.warnings.push(format!(
                "g={}: {open} of {} pairs not converged",
                p.g,
                r.samples.len()
            ));
        }
        meta.notes.push(format!(
            "g={}: max N = {} ({})",
            p.g,
            num(r.best),
            r.best_pair.kind.label()
        ));
    }
    let failures: Vec<String> = points
        .iter()
        .zip(&results)
        .filter_map(|(p, r)| unconverged_best(&format!("g={}", p.g), r))
        .collect();
    meta.warnings.extend(failures.iter().cloned());
    let path = ctx.out.join("nonmark.csv");
    output::write_with_sidecar(&path, &csv, &meta)?;
    if !failures.is_empty() {
        return Err(Error::Convergence(failures.join("; ")));
    }
    Ok(ctx.finish(vec![path], meta.warnings))
}

fn deltan(cfg: &RunConfig, ctx: &Context) -> Result<RunReport> {
    let points = cfg.points()?;
    let results = points
        .par_iter()
        .map(|p| {
            let mut reference = p.clone();
            reference.drive_amplitude = 0.0;
            let driven = ctx.system(p)?;
            let undriven = ctx.system(&reference)?;
            measures::delta_n(
                &driven,
                &undriven,
                p.n_samples,
                p.seed,
                p.pair_sampling,
                &p.grid(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["g", "delta_N"]);
    let mut meta = ctx.sidecar("deltan", cfg, points.len());
    let mut failures = Vec::new();
    for (p, r) in points.iter().zip(&results) {
        csv.row(&[num(p.g), num(r.value)]);
        meta.notes.push(format!(
            "g={}: N driven {} undriven {}",
            p.g,
            num(r.driven.best),
            num(r.undriven.best)
        ));
        failures.extend(unconverged_best(&format!("g={} driven", p.g), &r.driven));
        failures.extend(unconverged_best(
            &format!("g={} undriven", p.g),
            &r.undriven,
        ));
    }
    meta.warnings.extend(failures.iter().cloned());
    let path = ctx.out.join("deltan.csv");
    output::write_with_sidecar(&path, &csv, &meta)?;
    if !failures.is_empty() {
        return Err(Error::Convergence(failures.join("; ")));
    }
    Ok(ctx.finish(vec![path], meta.warnings))
}

fn semiclassical_run(cfg: &RunConfig, ctx: &Context) -> Result<RunReport> {
    let points = cfg.points()?;
    let runs = points
        .par_iter()
        .map(|p| {
            let sp = p.semiclassical_params();
            let period = std::f64::consts::TAU / p.omega_d;
            let dt = p.sc_dt.unwrap_or_else(|| sp.max_dt().min(period / 256.0));
            semiclassical::integrate(
                &p.semiclassical_initial(),
                &sp,
                p.sc_periods * period,
                dt,
                p.sc_record_every,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.n_emitters;
    let mut header: Vec<String> = ["t", "re_alpha", "im_alpha"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n).map(|j| format!("beta_re_{j}")));
    header.extend((1..=n).map(|j| format!("zeta_{j}")));
    header.push("C".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut files = Vec::new();
    for (k, (p, traj)) in points.iter().zip(&runs).enumerate() {
        let mut csv = Csv::new(&header);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let mut row = vec![num(*t), num(s.alpha.re), num(s.alpha.im)];
            row.extend(s.beta.iter().map(|b| num(b.re)));
            row.extend(s.zeta.iter().map(|z| num(*z)));
            row.push(num(s.total_pseudospin()));
            csv.row(&row);
        }
        let mut meta = ctx.sidecar("semiclassical", p, 1);
        meta.notes.push(format!(
            "max pseudospin length drift {:e}",
            traj.max_length_drift
        ));
        meta.notes
            .push(format!("max C drift {:e}", traj.max_c_drift));
        let c = traj.states[0].total_pseudospin();
        let sp = p.semiclassical_params();
        if let Ok(omega_crit) = semiclassical::critical_amplitude(c, sp.g) {
            meta.notes.push(format!(
                "C = {}, critical amplitude g*sqrt(C) = {}",
                num(c),
                num(omega_crit)
            ));
        }
        let path = ctx.file("semiclassical", k, points.len());
        output::write_with_sidecar(&path, &csv, &meta)?;
        files.push(path);
    }
    Ok(ctx.finish(files, Vec::new()))
}

/// Loads a config file and runs `command` with default options.
pub fn run_file(command: Command, path: &Path, opts: &RunOptions) -> Result<RunReport> {
    run(command, &RunConfig::load(path)?, opts)
}
