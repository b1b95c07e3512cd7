use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dissipator::SpectralModel;
use crate::dynamics::BasisOptions;
use crate::error::{Error, Result};
use crate::measures::{GridSpec, PairSampling};
use crate::model::{ModelParams, SpaceConfig};
use crate::semiclassical::{SemiclassicalParams, SemiclassicalState};

fn one() -> f64 {
    1.0
}
fn d_cutoff() -> usize {
    12
}
fn d_gamma() -> f64 {
    0.01
}
fn d_temperature() -> f64 {
    0.05
}
fn d_hilbert() -> f64 {
    10.0
}
fn d_quadrature() -> usize {
    4000
}
fn d_dt_per_period() -> usize {
    32
}
fn d_t_max_factor() -> f64 {
    20.0
}
fn d_max_periods() -> f64 {
    5000.0
}
fn d_samples() -> usize {
    50
}
fn d_husimi_points() -> usize {
    61
}
fn d_sc_periods() -> f64 {
    1000.0
}
fn d_sc_record() -> usize {
    64
}

/// A parameter sweep: `key` takes each of `values` in ascending order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

/// Everything a run needs. Only `n_emitters` and `g` are required; frequencies
/// are in units of `omega0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_emitters: usize,
    pub g: f64,
    #[serde(default = "one")]
    pub omega_c: f64,
    #[serde(default = "one")]
    pub omega_x: f64,
    #[serde(default = "one")]
    pub omega_d: f64,
    #[serde(default = "one")]
    pub omega0: f64,
    #[serde(default)]
    pub drive_amplitude: f64,
    #[serde(default = "d_cutoff")]
    pub photon_cutoff: usize,

    #[serde(default = "d_gamma")]
    pub gamma: f64,
    #[serde(default = "d_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub lamb_shift_enabled: bool,
    #[serde(default = "d_hilbert")]
    pub hilbert_cutoff: f64,
    #[serde(default = "d_quadrature")]
    pub quadrature_points: usize,

    /// Propagator steps per period; derived from the cutoff when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Largest Fourier index kept; derived from the cutoff when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_max: Option<usize>,
    #[serde(default)]
    pub force_driven: bool,
    #[serde(default = "d_dt_per_period")]
    pub dt_per_period: usize,
    /// Trajectory horizon in units of the inverse spectral gap of W.
    #[serde(default = "d_t_max_factor")]
    pub t_max_factor: f64,
    #[serde(default = "d_max_periods")]
    pub max_periods: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pair_sampling: PairSampling,

    /// Half-width of the square α grid; √(photon_cutoff/2) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub husimi_extent: Option<f64>,
    #[serde(default = "d_husimi_points")]
    pub husimi_points: usize,

    /// Cavity amplitude decay for the mean-field run; γ·ω_c/ω0 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "d_sc_periods")]
    pub sc_periods: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc_dt: Option<f64>,
    #[serde(default = "d_sc_record")]
    pub sc_record_every: usize,
    /// Initial Bloch polar angles (π = ground state for every emitter by default).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc_theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc_phi: Option<Vec<f64>>,
    #[serde(default)]
    pub sc_alpha: [f64; 2],

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter { key, reason } => Error::Config { key, reason },
        other => other,
    }
}

impl RunConfig {
    /// Parses TOML text; unknown keys, type mismatches and missing required
    /// keys are reported with the key name.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<file>".into());
            Error::Config { key, reason: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: "<file>".into(),
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Minimal configuration with every default applied.
    pub fn minimal(n_emitters: usize, g: f64) -> Self {
        Self::parse(&format!("n_emitters = {n_emitters}\ng = {g:?}\n")).expect("defaults are valid")
    }

    /// Canonical TOML form: fields in declaration order, defaults spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form without output and cache locations.
    pub fn content_hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        c.cache_dir = None;
        hex(&Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.model_params().validate().map_err(config_err)?;
        self.spectral().validate().map_err(config_err)?;
        if self.photon_cutoff == 0 {
            return Err(Error::Config {
                key: "photon_cutoff".into(),
                reason: "must be at least 1".into(),
            });
        }
        if let Some(n) = self.n_steps {
            if n < 32 || !n.is_power_of_two() {
                return Err(Error::Config {
                    key: "n_steps".into(),
                    reason: "must be a power of two >= 32".into(),
                });
            }
        }
        if self.dt_per_period == 0 {
            return Err(Error::Config {
                key: "dt_per_period".into(),
                reason: "must be positive".into(),
            });
        }
        for (key, v) in [
            ("t_max_factor", self.t_max_factor),
            ("max_periods", self.max_periods),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config {
                    key: key.into(),
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if let Some(t) = self.t_max {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config {
                    key: "t_max".into(),
                    reason: format!("must be positive, got {t}"),
                });
            }
        }
        if self.husimi_points < 2 {
            return Err(Error::Config {
                key: "husimi_points".into(),
                reason: "must be at least 2".into(),
            });
        }
        if let Some(e) = self.husimi_extent {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::Config {
                    key: "husimi_extent".into(),
                    reason: format!("must be positive, got {e}"),
                });
            }
        }
        for (key, angles) in [("sc_theta", &self.sc_theta), ("sc_phi", &self.sc_phi)] {
            if let Some(a) = angles {
                if a.len() != self.n_emitters {
                    return Err(Error::Config {
                        key: key.into(),
                        reason: format!("needs {} angles, got {}", self.n_emitters, a.len()),
                    });
                }
            }
        }
        self.semiclassical_params().validate().map_err(config_err)?;
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::Config {
                    key: "sweep.values".into(),
                    reason: "must not be empty".into(),
                });
            }
            if matches!(s.key.as_str(), "sweep" | "out_dir" | "cache_dir") {
                return Err(Error::Config {
                    key: "sweep.key".into(),
                    reason: format!("`{}` cannot be swept", s.key),
                });
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            n_emitters: self.n_emitters,
            omega_c: self.omega_c,
            omega_x: self.omega_x,
            omega_d: self.omega_d,
            omega0: self.omega0,
            g: self.g,
            drive_amplitude: self.drive_amplitude,
        }
    }

    pub fn space(&self) -> SpaceConfig {
        SpaceConfig::new(self.photon_cutoff, self.n_emitters)
    }

    pub fn spectral(&self) -> SpectralModel {
        SpectralModel {
            gamma: self.gamma,
            omega0: self.omega0,
            temperature: self.temperature,
            lamb_shift_enabled: self.lamb_shift_enabled,
            hilbert_cutoff: self.hilbert_cutoff,
            quadrature_points: self.quadrature_points,
        }
    }

    pub fn basis_options(&self) -> BasisOptions {
        let mut opts = BasisOptions::for_cutoff(self.photon_cutoff);
        if let Some(n) = self.n_steps {
            opts.propagator.n_steps = n;
        }
        if let Some(nu) = self.nu_max {
            opts.nu_max = nu;
        }
        opts.force_driven = self.force_driven;
        opts
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            steps_per_period: self.dt_per_period,
            horizon_factor: self.t_max_factor,
            max_periods: self.max_periods,
            t_max: self.t_max,
        }
    }

    pub fn husimi_extent(&self) -> f64 {
        self.husimi_extent
            .unwrap_or_else(|| (0.5 * self.photon_cutoff as f64).sqrt())
    }

    pub fn semiclassical_params(&self) -> SemiclassicalParams {
        SemiclassicalParams {
            n_emitters: self.n_emitters,
            g: self.g,
            omega: self.drive_amplitude,
            kappa: self
                .kappa
                .unwrap_or(self.gamma * self.omega_c / self.omega0),
            detuning_c: self.omega_c - self.omega_d,
            detuning_x: self.omega_x - self.omega_d,
        }
    }

    pub fn semiclassical_initial(&self) -> SemiclassicalState {
        let n = self.n_emitters;
        let theta = self
            .sc_theta
            .clone()
            .unwrap_or_else(|| vec![std::f64::consts::PI; n]);
        let phi = self.sc_phi.clone().unwrap_or_else(|| vec![0.0; n]);
        SemiclassicalState::on_bloch_sphere(
            num_complex::Complex64::new(self.sc_alpha[0], self.sc_alpha[1]),
            &theta,
            &phi,
        )
    }

    /// One configuration per sweep value, sorted ascending; a single point
    /// when no sweep is set.
    pub fn points(&self) -> Result<Vec<RunConfig>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![self.clone()]);
        };
        let mut values = sweep.values.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut base = self.clone();
        base.sweep = None;
        let table: toml::Table =
            toml::Table::try_from(&base).expect("config serializes to a table");
        values
            .iter()
            .map(|&v| {
                let mut t = table.clone();
                let value = if v.fract() == 0.0 && is_integer_key(&sweep.key) {
                    toml::Value::Integer(v as i64)
                } else {
                    toml::Value::Float(v)
                };
                t.insert(sweep.key.clone(), value);
                let cfg: RunConfig = t.try_into().map_err(|e: toml::de::Error| Error::Config {
                    key: format!("sweep.key = {}", sweep.key),
                    reason: e.message().to_string(),
                })?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }

    /// Annotated default configuration.
    pub fn reference() -> String {
        let mut s = String::from(
            "# required\n\
             # n_emitters = 1\n\
             # g = 0.1\n\
             #\n\
             # optional, shown with defaults (frequencies in units of omega0)\n",
        );
        let text = Self::minimal(1, 0.1).to_toml();
        for line in text.lines().skip(2) {
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(
            "# n_steps, nu_max: derived from photon_cutoff when absent\n\
             # t_max: overrides t_max_factor / gap\n\
             # husimi_extent = sqrt(photon_cutoff / 2)\n\
             # kappa = gamma * omega_c / omega0\n\
             # sc_dt = min(0.05 / max(kappa, g, Omega), T_d / 256)\n\
             # sc_theta = [pi, ...], sc_phi = [0, ...]\n\
             # [sweep]\n\
             # key = \"g\"\n\
             # values = [0.05, 0.1]\n",
        );
        s
    }
}

fn is_integer_key(key: &str) -> bool {
    matches!(
        key,
        "n_emitters"
            | "photon_cutoff"
            | "quadrature_points"
            | "n_steps"
            | "nu_max"
            | "dt_per_period"
            | "n_samples"
            | "seed"
            | "husimi_points"
            | "sc_record_every"
    )
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
