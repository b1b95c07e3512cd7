//! Bath spectral functions and the secular Floquet–Born–Markov coefficients:
//! transition elements X_{m,n,ν}, the population rate matrix W and the
//! coherence decay coefficients Z_{m,n}.

use faer::MatRef;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::FloquetBasis;
use crate::linalg::{self, CMat, RMat};
use crate::model::Operator;

/// Ohmic bath γ(ω) = γ·ω/ω0 at temperature T, shared by all channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub gamma: f64,
    pub omega0: f64,
    pub temperature: f64,
    /// Include ξ (Lamb-shift) terms in Z.
    pub lamb_shift_enabled: bool,
    /// Upper limit ω_cut of the principal-value integral defining ξ.
    pub hilbert_cutoff: f64,
    /// Number of quadrature cells on [0, ω_cut].
    pub quadrature_points: usize,
}

impl Default for SpectralModel {
    fn default() -> Self {
        Self {
            gamma: 0.01,
            omega0: 1.0,
            temperature: 0.05,
            lamb_shift_enabled: false,
            hilbert_cutoff: 10.0,
            quadrature_points: 4000,
        }
    }
}

impl SpectralModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::param("gamma", "must be > 0"));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::param("omega0", "must be > 0"));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::param("temperature", "must be >= 0"));
        }
        if !(self.hilbert_cutoff.is_finite() && self.hilbert_cutoff > 0.0) {
            return Err(Error::param("hilbert_cutoff", "must be > 0"));
        }
        if self.quadrature_points < 2 {
            return Err(Error::param("quadrature_points", "must be at least 2"));
        }
        Ok(())
    }

    fn cell(&self) -> f64 {
        self.hilbert_cutoff / self.quadrature_points as f64
    }
}

/// Ohmic spectral function γ(ω) = γ ω / ω0, defined for ω > 0.
pub fn gamma_fn(omega: f64, s: &SpectralModel) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::param(
            "omega",
            format!("spectral function needs omega > 0, got {omega}"),
        ));
    }
    Ok(s.gamma * omega / s.omega0)
}

/// Bose occupation n(ω, T) = 1/(e^{ω/T} − 1) for ω > 0; zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

/// χ(ω): emission γ(ω)[n+1] for ω > 0, absorption γ(−ω)n(−ω) for ω < 0,
/// and the common limit γT/ω0 at ω = 0.
pub fn chi(omega: f64, s: &SpectralModel) -> f64 {
    if omega > 0.0 {
        s.gamma * omega / s.omega0 * (thermal_occupation(omega, s.temperature) + 1.0)
    } else if omega < 0.0 {
        let w = -omega;
        s.gamma * w / s.omega0 * thermal_occupation(w, s.temperature)
    } else {
        s.gamma * s.temperature / s.omega0
    }
}

/// Re Γ(ω + i0⁺) := (1/π) P∫₀^{ω_cut} γ(ω′)/(ω − ω′) dω′ for ω > 0.
///
/// The pole is removed by subtraction: the smooth remainder
/// [γ(ω′) − γ(ω)]/(ω − ω′) goes to a midpoint rule and the singular part is
/// γ(ω)·ln|ω/(ω − ω_cut)|.
pub fn principal_value_shift(omega: f64, s: &SpectralModel) -> Result<f64> {
    let cell = s.cell();
    if (omega - s.hilbert_cutoff).abs() < cell {
        return Err(Error::CutoffTooSmall {
            omega,
            cutoff: s.hilbert_cutoff,
        });
    }
    let g0 = gamma_fn(omega, s)?;
    let mut regular = 0.0;
    for k in 0..s.quadrature_points {
        let w = (k as f64 + 0.5) * cell;
        let d = omega - w;
        regular += if d.abs() < 1e-12 * omega {
            // limit of the difference quotient: −γ′(ω)
            -s.gamma / s.omega0
        } else {
            (s.gamma * w / s.omega0 - g0) / d
        };
    }
    regular *= cell;
    let singular = g0 * (omega / (omega - s.hilbert_cutoff)).abs().ln();
    Ok((regular + singular) / std::f64::consts::PI)
}

/// ξ(ω) with the thermal factors of χ; zero when Lamb shifts are disabled
/// and at ω = 0.
pub fn xi(omega: f64, s: &SpectralModel) -> Result<f64> {
    if !s.lamb_shift_enabled || omega == 0.0 {
        return Ok(0.0);
    }
    if omega > 0.0 {
        Ok(principal_value_shift(omega, s)? * (thermal_occupation(omega, s.temperature) + 1.0))
    } else {
        let w = -omega;
        Ok(principal_value_shift(w, s)? * thermal_occupation(w, s.temperature))
    }
}

/// X_{m,n,ν} for ν ∈ [−ν_max, ν_max] of one coupling operator.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionTable {
    pub nu_max: usize,
    /// `data[ν + ν_max][(m, n)] = X_{m,n,ν}`
    pub data: Vec<CMat>,
}

impl TransitionTable {
    pub fn get(&self, m: usize, n: usize, nu: i64) -> C64 {
        let idx = nu + self.nu_max as i64;
        if idx < 0 || idx as usize >= self.data.len() {
            return C64::new(0.0, 0.0);
        }
        self.data[idx as usize][(m, n)]
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, &CMat)> {
        let nu_max = self.nu_max as i64;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, m)| (k as i64 - nu_max, m))
    }

    pub fn dim(&self) -> usize {
        self.data[0].nrows()
    }
}

/// X_{m,n,ν} = Σ_μ ⟨φ̃_m(μ−ν)|X|φ̃_n(μ)⟩.
///
/// Evaluated as the ν-th Fourier component of ⟨φ_m(t)|X|φ_n(t)⟩ sampled at
/// 4ν_max + 2 points of the period. The periodic states are band limited to
/// |ν| ≤ ν_max, so the product has no content beyond 2ν_max and the
/// sampled transform reproduces the coefficient sum up to rounding.
pub fn transition_elements(basis: &FloquetBasis, x: &Operator) -> Result<TransitionTable> {
    let dim = basis.dim();
    if x.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.dim(),
        });
    }
    if !basis.driven {
        let v = basis.coeff(0).expect("static basis has a ν = 0 mode");
        let m = v.adjoint() * x.matrix() * v;
        return Ok(TransitionTable {
            nu_max: 0,
            data: vec![m],
        });
    }
    let nu_max = basis.nu_max;
    let n_samples = 4 * nu_max + 2;
    let period = basis.period();
    let mut data = vec![CMat::zeros(dim, dim); 2 * nu_max + 1];
    let inv_n = 1.0 / n_samples as f64;
    for k in 0..n_samples {
        let t = k as f64 * period / n_samples as f64;
        let phi = basis.periodic_states(t);
        let mt = phi.adjoint() * x.matrix() * &phi;
        for (idx, d) in data.iter_mut().enumerate() {
            let nu = idx as f64 - nu_max as f64;
            let w = C64::from_polar(inv_n, nu * basis.omega_d * t);
            for j in 0..dim {
                for i in 0..dim {
                    d[(i, j)] += mt[(i, j)] * w;
                }
            }
        }
    }
    Ok(TransitionTable { nu_max, data })
}

/// ω_{m,n,ν} = ε_m − ε_n + ν ω_d
fn transition_frequency(energies: &[f64], m: usize, n: usize, nu: i64, omega_d: f64) -> f64 {
    energies[m] - energies[n] + nu as f64 * omega_d
}

/// Rate matrix of one channel with dp_n/dt = Σ_k W_{n,k} p_k, plus the
/// part of the total rate carried by the outermost modes |ν| = ν_max.
fn channel_rates(
    basis: &FloquetBasis,
    table: &TransitionTable,
    s: &SpectralModel,
) -> (RMat, f64, f64) {
    let dim = basis.dim();
    let energies = basis.energies();
    let mut w = RMat::zeros(dim, dim);
    let (mut total, mut tail) = (0.0, 0.0);
    for (nu, x) in table.modes() {
        let edge = table.nu_max > 0 && nu.unsigned_abs() as usize == table.nu_max;
        for k in 0..dim {
            for n in 0..dim {
                if n == k {
                    continue;
                }
                // k → n with χ(ω_{k,n,ν}) |X_{n,k,ν}|²
                let r = chi(transition_frequency(&energies, k, n, nu, basis.omega_d), s)
                    * x[(n, k)].norm_sqr();
                w[(n, k)] += r;
                total += r;
                if edge {
                    tail += r;
                }
            }
        }
    }
    for k in 0..dim {
        let out: f64 = (0..dim).filter(|&n| n != k).map(|n| w[(n, k)]).sum();
        w[(k, k)] = -out;
    }
    (w, total, tail)
}

/// Diagnostics gathered while assembling the dissipator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DissipatorDiagnostics {
    /// Fraction of the total transition rate from |ν| = ν_max.
    pub tail_weight: f64,
    /// Most negative Re Z_{m,n} relative to max Re Z (0 if none negative).
    pub min_re_z_relative: f64,
    pub warnings: Vec<String>,
}

/// Rate matrix W summed over channels.
pub fn rate_matrix(
    basis: &FloquetBasis,
    tables: &[TransitionTable],
    s: &SpectralModel,
) -> Result<(RMat, f64)> {
    s.validate()?;
    let dim = basis.dim();
    let mut w = RMat::zeros(dim, dim);
    let (mut total, mut tail) = (0.0, 0.0);
    for table in tables {
        if table.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: table.dim(),
            });
        }
        let (wc, t, tl) = channel_rates(basis, table, s);
        w = &w + &wc;
        total += t;
        tail += tl;
    }
    let tail_weight = if total > 0.0 { tail / total } else { 0.0 };
    Ok((w, tail_weight))
}

/// Z_{m,n} for m ≠ n summed over channels (diagonal left at zero).
///
/// Z_{m,n} = ½ A_m + ½ A_n* − Σ_ν χ(νω_d) X_{m,m,ν} X*_{n,n,ν} with
/// A_m = Σ_{k,ν} [χ(ω_{m,k,ν}) + iξ(ω_{m,k,ν})] |X_{k,m,ν}|².
pub fn coherence_coeffs(
    basis: &FloquetBasis,
    tables: &[TransitionTable],
    s: &SpectralModel,
) -> Result<CMat> {
    s.validate()?;
    let dim = basis.dim();
    let energies = basis.energies();
    let mut z = CMat::zeros(dim, dim);
    for table in tables {
        if table.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: table.dim(),
            });
        }
        let mut a = vec![C64::new(0.0, 0.0); dim];
        for (nu, x) in table.modes() {
            for (m, am) in a.iter_mut().enumerate() {
                for k in 0..dim {
                    let weight = x[(k, m)].norm_sqr();
                    if weight == 0.0 {
                        continue;
                    }
                    let om = transition_frequency(&energies, m, k, nu, basis.omega_d);
                    *am += C64::new(chi(om, s), xi(om, s)?) * weight;
                }
            }
        }
        let mut zc = CMat::zeros(dim, dim);
        for n in 0..dim {
            for m in 0..dim {
                if m != n {
                    zc[(m, n)] = (a[m] + a[n].conj()) * 0.5;
                }
            }
        }
        for (nu, x) in table.modes() {
            let c = chi(nu as f64 * basis.omega_d, s);
            if c == 0.0 {
                continue;
            }
            for n in 0..dim {
                for m in 0..dim {
                    if m != n {
                        zc[(m, n)] -= x[(m, m)] * x[(n, n)].conj() * c;
                    }
                }
            }
        }
        z = &z + &zc;
    }
    Ok(z)
}

/// Everything the secular master equation needs, for all channels.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipatorData {
    pub tables: Vec<TransitionTable>,
    pub rates: RMat,
    pub coherence: CMat,
    pub diagnostics: DissipatorDiagnostics,
}

impl DissipatorData {
    pub fn assemble(
        basis: &FloquetBasis,
        channels: &[Operator],
        s: &SpectralModel,
    ) -> Result<Self> {
        let tables = channels
            .iter()
            .map(|x| transition_elements(basis, x))
            .collect::<Result<Vec<_>>>()?;
        Self::from_tables(basis, tables, s)
    }

    pub fn from_tables(
        basis: &FloquetBasis,
        tables: Vec<TransitionTable>,
        s: &SpectralModel,
    ) -> Result<Self> {
        let (rates, tail_weight) = rate_matrix(basis, &tables, s)?;
        let coherence = coherence_coeffs(basis, &tables, s)?;
        let mut diagnostics = DissipatorDiagnostics {
            tail_weight,
            ..Default::default()
        };
        if tail_weight > 1e-6 {
            let msg =
                format!("Fourier tail carries {tail_weight:e} of the total rate; increase nu_max");
            log::warn!("{msg}");
            diagnostics.warnings.push(msg);
        }
        let dim = basis.dim();
        let max_re = (0..dim)
            .flat_map(|n| (0..dim).map(move |m| (m, n)))
            .filter(|(m, n)| m != n)
            .map(|(m, n)| coherence[(m, n)].re)
            .fold(0.0, f64::max);
        let min_re = (0..dim)
            .flat_map(|n| (0..dim).map(move |m| (m, n)))
            .filter(|(m, n)| m != n)
            .map(|(m, n)| coherence[(m, n)].re)
            .fold(f64::INFINITY, f64::min);
        if max_re > 0.0 && min_re < 0.0 {
            diagnostics.min_re_z_relative = min_re / max_re;
        }
        if min_re < -1e-10 * max_re {
            let msg = format!("negative coherence decay Re Z = {min_re:e}");
            log::warn!("{msg}");
            diagnostics.warnings.push(msg);
        }
        Ok(Self {
            tables,
            rates,
            coherence,
            diagnostics,
        })
    }

    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rates(&self) -> MatRef<'_, f64> {
        self.rates.as_ref()
    }
}

/// max_k |Σ_n W_{n,k}|
pub fn column_sum_deviation(w: MatRef<'_, f64>) -> f64 {
    (0..w.ncols())
        .map(|k| (0..w.nrows()).map(|n| w[(n, k)]).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

pub fn max_abs_real(w: MatRef<'_, f64>) -> f64 {
    (0..w.ncols())
        .flat_map(|j| (0..w.nrows()).map(move |i| (i, j)))
        .map(|(i, j)| w[(i, j)].abs())
        .fold(0.0, f64::max)
}

/// max |Z_{m,n} − conj(Z_{n,m})|
pub fn coherence_hermiticity_deviation(z: MatRef<'_, C64>) -> f64 {
    linalg::hermitian_deviation(z)
}
