//! Mean-field equations for the driven Dicke model in the frame rotating at
//! ω_d (rotating-wave approximation):
//!
//! ```text
//! dα/dt   = −(κ + iΔω_c) α − i g Σ_j β_j − iΩ/2
//! dβ_j/dt = −iΔω_x β_j + i g α ζ_j
//! dζ_j/dt = 2i g (α* β_j − α β_j*)
//! ```
//!
//! with α = ⟨a⟩, β_j = ⟨σ_−^{(j)}⟩ and ζ_j = ⟨σ_z^{(j)}⟩. Each pseudospin
//! length 4|β_j|² + ζ_j² and the total C = 4|Σβ_j|² + (Σζ_j)² are conserved.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalParams {
    pub n_emitters: usize,
    pub g: f64,
    pub omega: f64,
    /// Cavity amplitude decay rate.
    pub kappa: f64,
    pub detuning_c: f64,
    pub detuning_x: f64,
}

impl SemiclassicalParams {
    /// Resonant parameters (zero detunings).
    pub fn resonant(n_emitters: usize, g: f64, omega: f64, kappa: f64) -> Self {
        Self {
            n_emitters,
            g,
            omega,
            kappa,
            detuning_c: 0.0,
            detuning_x: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_emitters == 0 {
            return Err(Error::param("n_emitters", "must be at least 1"));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::param(
                "kappa",
                format!("must be positive, got {}", self.kappa),
            ));
        }
        for (key, v) in [
            ("g", self.g),
            ("omega", self.omega),
            ("detuning_c", self.detuning_c),
            ("detuning_x", self.detuning_x),
        ] {
            if !v.is_finite() {
                return Err(Error::param(key, "must be finite"));
            }
        }
        Ok(())
    }

    /// Largest step accepted by [`integrate`].
    pub fn max_dt(&self) -> f64 {
        0.05 / self.kappa.max(self.g.abs()).max(self.omega.abs())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemiclassicalState {
    pub alpha: C64,
    pub beta: Vec<C64>,
    pub zeta: Vec<f64>,
}

impl SemiclassicalState {
    /// Cavity amplitude `alpha`, emitters on the Bloch sphere at polar
    /// angles `theta_j` (ζ = cos θ) and azimuths `phi_j`.
    pub fn on_bloch_sphere(alpha: C64, theta: &[f64], phi: &[f64]) -> Self {
        let beta = theta
            .iter()
            .zip(phi)
            .map(|(&t, &p)| C64::from_polar(0.5 * t.sin(), p))
            .collect();
        let zeta = theta.iter().map(|t| t.cos()).collect();
        Self { alpha, beta, zeta }
    }

    pub fn n_emitters(&self) -> usize {
        self.beta.len()
    }

    /// 4|β_j|² + ζ_j² per emitter.
    pub fn spin_lengths(&self) -> Vec<f64> {
        self.beta
            .iter()
            .zip(&self.zeta)
            .map(|(b, z)| 4.0 * b.norm_sqr() + z * z)
            .collect()
    }

    /// C = 4|Σβ_j|² + (Σζ_j)².
    pub fn total_pseudospin(&self) -> f64 {
        let b: C64 = self.beta.iter().sum();
        let z: f64 = self.zeta.iter().sum();
        4.0 * b.norm_sqr() + z * z
    }

    fn axpy(&self, h: f64, d: &SemiclassicalState) -> SemiclassicalState {
        SemiclassicalState {
            alpha: self.alpha + d.alpha * h,
            beta: self
                .beta
                .iter()
                .zip(&d.beta)
                .map(|(b, db)| b + db * h)
                .collect(),
            zeta: self
                .zeta
                .iter()
                .zip(&d.zeta)
                .map(|(z, dz)| z + dz * h)
                .collect(),
        }
    }

    /// Max-norm over all components.
    pub fn norm_inf(&self) -> f64 {
        self.beta
            .iter()
            .map(|b| b.norm())
            .chain(self.zeta.iter().map(|z| z.abs()))
            .fold(self.alpha.norm(), f64::max)
    }
}

/// Time derivative of the mean-field state.
pub fn rhs(s: &SemiclassicalState, p: &SemiclassicalParams) -> SemiclassicalState {
    let i = C64::new(0.0, 1.0);
    let sum_beta: C64 = s.beta.iter().sum();
    let alpha = -(p.kappa + i * p.detuning_c) * s.alpha - i * p.g * sum_beta - i * 0.5 * p.omega;
    let beta = s
        .beta
        .iter()
        .zip(&s.zeta)
        .map(|(b, z)| -i * p.detuning_x * b + i * p.g * s.alpha * z)
        .collect();
    let zeta = s
        .beta
        .iter()
        .map(|b| (2.0 * i * p.g * (s.alpha.conj() * b - s.alpha * b.conj())).re)
        .collect();
    SemiclassicalState { alpha, beta, zeta }
}

/// Recorded integration output.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiclassicalTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<SemiclassicalState>,
    /// Largest |4|β_j|² + ζ_j² − initial| seen at any step.
    pub max_length_drift: f64,
    /// Largest |C − C(0)| seen at any step.
    pub max_c_drift: f64,
}

/// Classical fourth-order Runge–Kutta with fixed step `dt`; every
/// `record_every`-th step is stored. Conservation laws are checked each
/// step and a drift above 1e−6 aborts.
pub fn integrate(
    state0: &SemiclassicalState,
    p: &SemiclassicalParams,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<SemiclassicalTrajectory> {
    p.validate()?;
    if state0.n_emitters() != p.n_emitters || state0.zeta.len() != p.n_emitters {
        return Err(Error::DimensionMismatch {
            expected: p.n_emitters,
            got: state0.n_emitters(),
        });
    }
    if !(dt > 0.0 && dt <= p.max_dt()) {
        return Err(Error::param(
            "dt",
            format!("must lie in (0, {:e}], got {dt}", p.max_dt()),
        ));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::param(
            "t_end",
            format!("must be finite and >= 0, got {t_end}"),
        ));
    }
    let record_every = record_every.max(1);
    let lengths0 = state0.spin_lengths();
    let c0 = state0.total_pseudospin();
    let n_steps = (t_end / dt).round() as usize;
    let mut s = state0.clone();
    let mut times = vec![0.0];
    let mut states = vec![s.clone()];
    let (mut max_length_drift, mut max_c_drift) = (0.0f64, 0.0f64);
    const LIMIT: f64 = 1e-6;
    for k in 1..=n_steps {
        let k1 = rhs(&s, p);
        let k2 = rhs(&s.axpy(0.5 * dt, &k1), p);
        let k3 = rhs(&s.axpy(0.5 * dt, &k2), p);
        let k4 = rhs(&s.axpy(dt, &k3), p);
        s = s
            .axpy(dt / 6.0, &k1)
            .axpy(dt / 3.0, &k2)
            .axpy(dt / 3.0, &k3)
            .axpy(dt / 6.0, &k4);
        let drift = s
            .spin_lengths()
            .iter()
            .zip(&lengths0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_length_drift = max_length_drift.max(drift);
        max_c_drift = max_c_drift.max((s.total_pseudospin() - c0).abs());
        let worst = max_length_drift.max(max_c_drift);
        if !(worst <= LIMIT) {
            return Err(Error::ConservationDrift {
                drift: worst,
                limit: LIMIT,
            });
        }
        if k % record_every == 0 || k == n_steps {
            times.push(k as f64 * dt);
            states.push(s.clone());
        }
    }
    Ok(SemiclassicalTrajectory {
        times,
        states,
        max_length_drift,
        max_c_drift,
    })
}

/// Allowed total pseudospin values N², (N−2)², …, down to 0 or 1.
pub fn pseudospin_values(n_emitters: usize) -> Vec<f64> {
    (0..=n_emitters / 2)
        .map(|k| ((n_emitters - 2 * k) as f64).powi(2))
        .collect()
}

/// Stationary solution on the α = 0 branch, or the bimodal phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "phase")]
pub enum Branch {
    /// Σβ_j = −Ω/(2g), Σζ_j = √(C − (Ω/g)²). The mirror point with
    /// Σζ_j → −Σζ_j is also stationary and is the one reached under damping.
    Normal { sum_beta: f64, sum_zeta: f64 },
    /// No α = 0 solution: all ζ_j vanish.
    Bimodal,
}

pub fn steady_branch(c: f64, p: &SemiclassicalParams) -> Result<Branch> {
    p.validate()?;
    let allowed = pseudospin_values(p.n_emitters);
    if !allowed.iter().any(|&a| a == c) {
        return Err(Error::param("C", format!("{c} is not one of {allowed:?}")));
    }
    if p.detuning_c != 0.0 || p.detuning_x != 0.0 {
        return Err(Error::param(
            "detuning",
            "branch formulas hold at resonance only",
        ));
    }
    if p.g == 0.0 {
        return Ok(if p.omega == 0.0 {
            Branch::Normal {
                sum_beta: 0.0,
                sum_zeta: c.sqrt(),
            }
        } else {
            Branch::Bimodal
        });
    }
    let ratio = p.omega / p.g;
    let rest = c - ratio * ratio;
    if rest < 0.0 || (rest == 0.0 && c == 0.0 && p.omega > 0.0) {
        return Ok(Branch::Bimodal);
    }
    Ok(Branch::Normal {
        sum_beta: -0.5 * ratio,
        sum_zeta: rest.sqrt(),
    })
}

/// Ω_crit = g√C.
pub fn critical_amplitude(c: f64, g: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::param("C", format!("must be >= 0, got {c}")));
    }
    Ok(g * c.sqrt())
}

/// α(t) for g = 0: α_ss + (α(0) − α_ss) e^{−(κ + iΔω_c)t} with
/// α_ss = −iΩ / (2(κ + iΔω_c)).
pub fn decoupled_cavity(alpha0: C64, p: &SemiclassicalParams, t: f64) -> C64 {
    let rate = C64::new(p.kappa, p.detuning_c);
    let ss = C64::new(0.0, -0.5 * p.omega) / rate;
    ss + (alpha0 - ss) * (-rate * t).exp()
}
