//! One-period propagator of H_S(t) = H_D + F cos(ω_d t), quasienergies and
//! Fourier modes of the periodic Floquet states.
//!
//! Floquet states are |ψ_n(t)⟩ = e^{−iε_n t}|φ_n(t)⟩ with T_d-periodic
//! |φ_n(t)⟩ = Σ_ν e^{−iνω_d t}|φ̃_n(ν)⟩. The coefficients are obtained by a
//! discrete Fourier transform of |φ_n(t_k)⟩ = e^{iε_n t_k} U(t_k, 0)|φ_n(0)⟩
//! sampled on the propagation grid.

use std::f64::consts::TAU;

use faer::MatRef;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::Operator;

/// Time-stepping scheme for the period propagator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// exp(−i h H(t + h/2)), second order.
    Midpoint,
    /// Two-exponential commutator-free Magnus scheme on Gauss–Legendre
    /// nodes, fourth order.
    CommutatorFree4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    /// Number of output grid points per period (power of two, ≥ 32).
    pub n_steps: usize,
    /// Integration sub-steps between consecutive output points.
    pub substeps: usize,
    pub scheme: Scheme,
    /// Start of the integration window; U(t_0 + k T/n, t_0) is returned.
    pub origin: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            n_steps: 128,
            substeps: 4,
            scheme: Scheme::CommutatorFree4,
            origin: 0.0,
        }
    }
}

/// U(t_k, t_0) for t_k = t_0 + k·T_d/n_steps, k = 0..=n_steps.
#[derive(Clone, Debug)]
pub struct PeriodPropagators {
    pub omega_d: f64,
    pub origin: f64,
    pub steps: Vec<CMat>,
}

impl PeriodPropagators {
    pub fn n_steps(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega_d
    }

    pub fn one_period(&self) -> MatRef<'_, C64> {
        self.steps[self.n_steps()].as_ref()
    }
}

fn exp_combination(
    h_d: MatRef<'_, C64>,
    drive: MatRef<'_, C64>,
    w_static: f64,
    w_drive: f64,
    h: f64,
) -> Result<CMat> {
    let n = h_d.nrows();
    let gen = CMat::from_fn(n, n, |i, j| {
        h_d[(i, j)] * w_static + drive[(i, j)] * w_drive
    });
    linalg::expm_hermitian(gen.as_ref(), h)
}

/// Time-ordered propagators over one drive period.
pub fn propagate_period(
    h_d: &Operator,
    drive: &Operator,
    omega_d: f64,
    cfg: &PropagatorConfig,
) -> Result<PeriodPropagators> {
    let n = cfg.n_steps;
    if n < 32 || !n.is_power_of_two() {
        return Err(Error::param(
            "n_steps",
            format!("must be a power of two >= 32, got {n}"),
        ));
    }
    if cfg.substeps == 0 {
        return Err(Error::param("substeps", "must be at least 1"));
    }
    if h_d.dim() != drive.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_d.dim(),
            got: drive.dim(),
        });
    }
    let dim = h_d.dim();
    let period = TAU / omega_d;
    let h = period / (n * cfg.substeps) as f64;
    let (hd, f) = (h_d.matrix(), drive.matrix());

    let sqrt3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - sqrt3 / 6.0, 0.5 + sqrt3 / 6.0);
    let (a_big, a_small) = (0.25 + sqrt3 / 6.0, 0.25 - sqrt3 / 6.0);

    let mut steps = Vec::with_capacity(n + 1);
    let mut u = linalg::identity(dim);
    steps.push(u.clone());
    for k in 0..n {
        for s in 0..cfg.substeps {
            let t = cfg.origin + (k * cfg.substeps + s) as f64 * h;
            let step = match cfg.scheme {
                Scheme::Midpoint => {
                    exp_combination(hd, f, 1.0, (omega_d * (t + 0.5 * h)).cos(), h)?
                }
                Scheme::CommutatorFree4 => {
                    let (cos1, cos2) = (
                        (omega_d * (t + c1 * h)).cos(),
                        (omega_d * (t + c2 * h)).cos(),
                    );
                    let early = exp_combination(hd, f, 0.5, a_big * cos1 + a_small * cos2, h)?;
                    let late = exp_combination(hd, f, 0.5, a_small * cos1 + a_big * cos2, h)?;
                    &late * &early
                }
            };
            u = &step * &u;
        }
        if !linalg::all_finite(u.as_ref()) {
            return Err(Error::NonFinite(format!(
                "propagator at grid point {}",
                k + 1
            )));
        }
        let dev = linalg::unitarity_deviation(u.as_ref());
        if dev > 1e-9 {
            return Err(Error::NotUnitary(dev));
        }
        steps.push(u.clone());
    }
    Ok(PeriodPropagators {
        omega_d,
        origin: cfg.origin,
        steps,
    })
}

/// Maps a quasienergy into the zone (−ω_d/2, ω_d/2].
pub fn fold_into_zone(e: f64, omega_d: f64) -> f64 {
    let mut x = e - omega_d * (e / omega_d).round();
    if x <= -0.5 * omega_d {
        x += omega_d;
    }
    if x > 0.5 * omega_d {
        x -= omega_d;
    }
    x
}

/// Quasienergies and Fourier coefficients of the periodic Floquet states.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetBasis {
    pub omega_d: f64,
    pub origin: f64,
    /// ε_n folded into (−ω_d/2, ω_d/2], ascending.
    pub quasienergies: Vec<f64>,
    pub nu_max: usize,
    /// `coeffs[ν + ν_max]` holds |φ̃_n(ν)⟩ as column `n`.
    pub coeffs: Vec<CMat>,
    pub driven: bool,
    /// Unfolded eigenvalues of H_D when the basis is the static eigenbasis.
    pub static_energies: Option<Vec<f64>>,
    /// Groups of states whose quasienergies coincide within the degeneracy
    /// tolerance.
    pub degenerate_blocks: Vec<Vec<usize>>,
}

impl FloquetBasis {
    pub const DEGENERACY_TOL: f64 = 1e-8;

    pub fn dim(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega_d
    }

    pub fn modes(&self) -> std::ops::RangeInclusive<i64> {
        -(self.nu_max as i64)..=self.nu_max as i64
    }

    pub fn coeff(&self, nu: i64) -> Option<MatRef<'_, C64>> {
        let idx = nu + self.nu_max as i64;
        if idx < 0 {
            return None;
        }
        self.coeffs.get(idx as usize).map(|m| m.as_ref())
    }

    /// Energy entering transition frequencies and phases: the static
    /// eigenvalue for the undriven basis, else the quasienergy.
    pub fn energy(&self, n: usize) -> f64 {
        match &self.static_energies {
            Some(e) => e[n],
            None => self.quasienergies[n],
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.energy(n)).collect()
    }

    /// Columns |φ_n(t)⟩ = Σ_ν e^{−iνω_d t}|φ̃_n(ν)⟩.
    pub fn periodic_states(&self, t: f64) -> CMat {
        let dim = self.dim();
        if !self.driven {
            return self.coeffs[self.nu_max].clone();
        }
        let mut out = CMat::zeros(dim, dim);
        for (nu, c) in self.modes().zip(&self.coeffs) {
            let ph = C64::from_polar(1.0, -(nu as f64) * self.omega_d * t);
            for j in 0..dim {
                for i in 0..dim {
                    out[(i, j)] += c[(i, j)] * ph;
                }
            }
        }
        out
    }

    /// Σ_ν ⟨φ̃_n(ν)|φ̃_n(ν)⟩ for each state.
    pub fn completeness(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|n| {
                self.coeffs
                    .iter()
                    .map(|c| (0..dim).map(|i| c[(i, n)].norm_sqr()).sum::<f64>())
                    .sum()
            })
            .collect()
    }

    /// Weight Σ_i |⟨i|φ̃_n(ν)⟩|² per mode, for state `n`.
    pub fn fourier_weights(&self, n: usize) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| (0..self.dim()).map(|i| c[(i, n)].norm_sqr()).sum())
            .collect()
    }

    /// max |Φ(0)†Φ(0) − 1| of the reconstructed states at t = 0.
    pub fn gram_deviation(&self) -> f64 {
        linalg::unitarity_deviation(self.periodic_states(0.0).as_ref())
    }
}

/// Groups sorted quasienergies into blocks closer than `tol`, including
/// wrap-around at the zone boundary.
fn cluster_on_circle(sorted: &[f64], omega_d: f64, tol: f64) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, &e) in sorted.iter().enumerate() {
        match blocks.last_mut() {
            Some(b) if e - sorted[*b.last().unwrap()] < tol => b.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    if blocks.len() > 1 {
        let first = sorted[0];
        let last = sorted[sorted.len() - 1];
        if first + omega_d - last < tol {
            let head = blocks.remove(0);
            blocks.last_mut().unwrap().extend(head);
        }
    }
    blocks
}

/// Splits a degenerate orthonormal block `q` (columns) by diagonalizing the
/// resolvers in turn; groups left degenerate by one resolver are handed to
/// the next.
fn resolve_block(q: CMat, resolvers: &[&Operator]) -> Result<CMat> {
    let Some((first, rest)) = resolvers.split_first() else {
        return Ok(q);
    };
    let k = q.ncols();
    let proj = q.adjoint() * first.matrix() * &q;
    let (vals, rot) = linalg::eigh(linalg::hermitian_part(proj.as_ref()).as_ref())?;
    let rotated = &q * &rot;
    let tol = 1e-9 * linalg::max_abs(first.matrix()).max(1.0);
    let mut out = CMat::zeros(q.nrows(), k);
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && vals[end] - vals[end - 1] < tol {
            end += 1;
        }
        let group = CMat::from_fn(q.nrows(), end - start, |i, j| rotated[(i, start + j)]);
        let group = if end - start > 1 {
            resolve_block(group, rest)?
        } else {
            group
        };
        for j in 0..end - start {
            for i in 0..q.nrows() {
                out[(i, start + j)] = group[(i, j)];
            }
        }
        start = end;
    }
    Ok(out)
}

/// Diagonalizes U(T_d) and builds the Fourier representation of the
/// periodic states. Degenerate blocks are orthonormalized and split by
/// diagonalizing the `resolvers` (typically H_D, then the photon number)
/// within the block at t = 0.
pub fn floquet_states(
    props: &PeriodPropagators,
    nu_max: usize,
    resolvers: &[&Operator],
) -> Result<FloquetBasis> {
    let n_steps = props.n_steps();
    if n_steps < 2 * (2 * nu_max + 1) {
        return Err(Error::param(
            "n_steps",
            format!(
                "{n_steps} steps cannot resolve {} Fourier modes",
                2 * nu_max + 1
            ),
        ));
    }
    let omega_d = props.omega_d;
    let period = props.period();
    let u = props.one_period();
    let dim = u.nrows();

    let evd = u.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let lambdas = evd.S().column_vector();
    for i in 0..dim {
        let m = lambdas[i].norm();
        if (m - 1.0).abs() > 1e-6 {
            return Err(Error::NotUnitary((m - 1.0).abs()));
        }
    }
    let raw_vecs = evd.U().to_owned();
    let raw_eps: Vec<f64> = (0..dim)
        .map(|i| fold_into_zone(-lambdas[i].arg() / period, omega_d))
        .collect();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| raw_eps[a].total_cmp(&raw_eps[b]));
    let sorted_eps: Vec<f64> = order.iter().map(|&i| raw_eps[i]).collect();
    let blocks = cluster_on_circle(&sorted_eps, omega_d, FloquetBasis::DEGENERACY_TOL * omega_d);

    // orthonormalize and resolve each block
    let mut vecs = CMat::zeros(dim, dim);
    let mut col = 0;
    let mut degenerate_blocks = Vec::new();
    for block in &blocks {
        let k = block.len();
        let sub = CMat::from_fn(dim, k, |i, j| raw_vecs[(i, order[block[j]])]);
        let sub = if k == 1 {
            let norm = (0..dim).map(|i| sub[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
            CMat::from_fn(dim, 1, |i, _| sub[(i, 0)] / norm)
        } else {
            let q = linalg::lowdin(sub.as_ref())?;
            degenerate_blocks.push((col..col + k).collect::<Vec<_>>());
            resolve_block(q, resolvers)?
        };
        for j in 0..k {
            for i in 0..dim {
                vecs[(i, col + j)] = sub[(i, j)];
            }
        }
        col += k;
    }
    let vecs = linalg::lowdin(vecs.as_ref())?;
    if !degenerate_blocks.is_empty() {
        log::warn!(
            "{} degenerate quasienergy block(s) (sizes {:?}); secular equations applied regardless",
            degenerate_blocks.len(),
            degenerate_blocks.iter().map(Vec::len).collect::<Vec<_>>()
        );
    }

    // Rayleigh quotients give the final quasienergies
    let uv = u * &vecs;
    let quasienergies: Vec<f64> = (0..dim)
        .map(|n| {
            let lam: C64 = (0..dim).map(|i| vecs[(i, n)].conj() * uv[(i, n)]).sum();
            fold_into_zone(-lam.arg() / period, omega_d)
        })
        .collect();

    let n_modes = 2 * nu_max + 1;
    let mut coeffs = vec![CMat::zeros(dim, dim); n_modes];
    let inv_n = 1.0 / n_steps as f64;
    for k in 0..n_steps {
        let t = props.origin + k as f64 * period / n_steps as f64;
        let mut phi = &props.steps[k] * &vecs;
        for (n, eps) in quasienergies.iter().enumerate() {
            let ph = C64::from_polar(1.0, eps * (t - props.origin));
            for i in 0..dim {
                phi[(i, n)] *= ph;
            }
        }
        for (m, c) in coeffs.iter_mut().enumerate() {
            let nu = m as f64 - nu_max as f64;
            let w = C64::from_polar(inv_n, nu * omega_d * t);
            for j in 0..dim {
                for i in 0..dim {
                    c[(i, j)] += phi[(i, j)] * w;
                }
            }
        }
    }

    Ok(FloquetBasis {
        omega_d,
        origin: props.origin,
        quasienergies,
        nu_max,
        coeffs,
        driven: true,
        static_energies: None,
        degenerate_blocks,
    })
}

/// Eigenbasis of H_D packaged as an undriven Floquet basis (ν = 0 only,
/// unfolded energies). Degenerate levels are split by the `resolvers`.
pub fn static_basis(h_d: &Operator, omega_d: f64, resolvers: &[&Operator]) -> Result<FloquetBasis> {
    let (energies, raw) = linalg::eigh(h_d.matrix())?;
    let dim = energies.len();
    let tol = FloquetBasis::DEGENERACY_TOL * omega_d;
    let mut vecs = CMat::zeros(dim, dim);
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && energies[end] - energies[end - 1] < tol {
            end += 1;
        }
        let block = CMat::from_fn(dim, end - start, |i, j| raw[(i, start + j)]);
        let block = if end - start > 1 {
            resolve_block(block, resolvers)?
        } else {
            block
        };
        for j in 0..end - start {
            for i in 0..dim {
                vecs[(i, start + j)] = block[(i, j)];
            }
        }
        start = end;
    }
    let quasienergies = energies
        .iter()
        .map(|&e| fold_into_zone(e, omega_d))
        .collect();
    Ok(FloquetBasis {
        omega_d,
        origin: 0.0,
        quasienergies,
        nu_max: 0,
        coeffs: vec![vecs],
        driven: false,
        static_energies: Some(energies),
        degenerate_blocks: Vec::new(),
    })
}
