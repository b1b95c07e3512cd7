//! Truncated emitter–cavity Hilbert space, operators, Hamiltonians and
//! partial traces.
//!
//! Basis ordering: the cavity Fock index is the slow (outer) index and the
//! emitter bits are fast (inner), i.e. a basis state is
//! `|n⟩ ⊗ |x_1⟩ ⊗ … ⊗ |x_N⟩` with flat index `n · 2^N + e`, where emitter 1
//! is the most significant bit of `e`. A single emitter uses `0 = |g⟩`,
//! `1 = |e⟩`.

use faer::MatRef;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Physical parameters of the driven Dicke system, in units of `omega0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_emitters: usize,
    pub omega_c: f64,
    pub omega_x: f64,
    pub omega_d: f64,
    pub omega0: f64,
    pub g: f64,
    pub drive_amplitude: f64,
}

impl ModelParams {
    /// Resonant preset ω_c = ω_x = ω_d = ω0 = 1.
    pub fn resonant(n_emitters: usize, g: f64, drive_amplitude: f64) -> Self {
        Self {
            n_emitters,
            omega_c: 1.0,
            omega_x: 1.0,
            omega_d: 1.0,
            omega0: 1.0,
            g,
            drive_amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_emitters == 0 {
            return Err(Error::param("n_emitters", "must be at least 1"));
        }
        for (key, v) in [
            ("omega_c", self.omega_c),
            ("omega_x", self.omega_x),
            ("omega_d", self.omega_d),
            ("omega0", self.omega0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(
                    key,
                    format!("must be a positive frequency, got {v}"),
                ));
            }
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::param("g", format!("must be >= 0, got {}", self.g)));
        }
        if !(self.drive_amplitude.is_finite() && self.drive_amplitude >= 0.0) {
            return Err(Error::param(
                "drive_amplitude",
                format!("must be >= 0, got {}", self.drive_amplitude),
            ));
        }
        Ok(())
    }

    pub fn drive_period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_d
    }

    pub fn is_driven(&self) -> bool {
        self.drive_amplitude > 0.0
    }
}

/// Truncation of the joint space: Fock levels `0..=photon_cutoff` times
/// `2^n_emitters` emitter configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub photon_cutoff: usize,
    pub n_emitters: usize,
}

impl SpaceConfig {
    pub fn new(photon_cutoff: usize, n_emitters: usize) -> Self {
        Self {
            photon_cutoff,
            n_emitters,
        }
    }

    /// A cavity-only space (no emitters), convenient for single-mode checks.
    pub fn cavity_only(photon_cutoff: usize) -> Self {
        Self::new(photon_cutoff, 0)
    }

    pub fn emitter_dim(&self) -> usize {
        1 << self.n_emitters
    }

    pub fn cavity_dim(&self) -> usize {
        self.photon_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.emitter_dim() * self.cavity_dim()
    }

    /// Flat index of `|photons⟩ ⊗ |emitter bits⟩`.
    pub fn index(&self, photons: usize, emitters: usize) -> usize {
        photons * self.emitter_dim() + emitters
    }

    /// Bit mask of emitter `j` (1-based) within the emitter index.
    fn emitter_mask(&self, j: usize) -> usize {
        1 << (self.n_emitters - j)
    }
}

/// Dense complex operator on the joint space (or a subsystem).
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: CMat,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: CMat) -> Self {
        Self {
            matrix,
            hermitian: false,
        }
    }

    /// Wraps a matrix known to be Hermitian, checking it to 1e-12 relative.
    pub fn hermitian(matrix: CMat) -> Result<Self> {
        let dev = linalg::hermitian_deviation(matrix.as_ref());
        let scale = linalg::max_abs(matrix.as_ref()).max(f64::MIN_POSITIVE);
        if dev > 1e-12 * scale {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            matrix,
            hermitian: true,
        })
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}

/// Validated density matrix: Hermitian, unit trace, positive semidefinite
/// (all within 1e-10).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMat,
}

impl DensityMatrix {
    pub const TOL: f64 = 1e-10;

    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let dev = linalg::hermitian_deviation(matrix.as_ref());
        if dev > Self::TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = linalg::trace(matrix.as_ref());
        if (tr - 1.0).norm() > Self::TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = linalg::hermitian_part(matrix.as_ref());
        let min_eig = linalg::eigvalsh(herm.as_ref())?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -Self::TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let n = psi.len();
        let m = CMat::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Ok(Self { matrix: m })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMat) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn purity(&self) -> f64 {
        let sq = &self.matrix * &self.matrix;
        linalg::trace(sq.as_ref()).re
    }

    /// ⟨i|ρ|i⟩
    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }
}

/// Photon annihilation operator `a` on the joint space.
pub fn build_annihilation(space: &SpaceConfig) -> Result<Operator> {
    if space.photon_cutoff < 1 {
        return Err(Error::param("photon_cutoff", "must be at least 1"));
    }
    let dim = space.dim();
    let mut m = CMat::zeros(dim, dim);
    for n in 1..=space.photon_cutoff {
        let amp = (n as f64).sqrt();
        for e in 0..space.emitter_dim() {
            m[(space.index(n - 1, e), space.index(n, e))] = C64::new(amp, 0.0);
        }
    }
    Ok(Operator::new(m))
}

/// Photon number a†a on the joint space.
pub fn build_number_operator(space: &SpaceConfig) -> Result<Operator> {
    let dim = space.dim();
    let m = CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new((i / space.emitter_dim()) as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Operator::hermitian(m)
}

/// σ_−^{(j)} on emitter `j` (1-based), identity elsewhere.
pub fn build_emitter_lowering(j: usize, space: &SpaceConfig) -> Result<Operator> {
    if j == 0 || j > space.n_emitters {
        return Err(Error::EmitterIndex {
            index: j,
            n_emitters: space.n_emitters,
        });
    }
    let dim = space.dim();
    let mask = space.emitter_mask(j);
    let mut m = CMat::zeros(dim, dim);
    for n in 0..space.cavity_dim() {
        for e in 0..space.emitter_dim() {
            if e & mask != 0 {
                m[(space.index(n, e & !mask), space.index(n, e))] = C64::new(1.0, 0.0);
            }
        }
    }
    Ok(Operator::new(m))
}

fn check_space(p: &ModelParams, space: &SpaceConfig) -> Result<()> {
    p.validate()?;
    if p.n_emitters != space.n_emitters {
        return Err(Error::DimensionMismatch {
            expected: p.n_emitters,
            got: space.n_emitters,
        });
    }
    Ok(())
}

/// H_D = ω_c a†a + ω_x Σ_j σ_+σ_− + g (a + a†) Σ_j (σ_− + σ_+), with the
/// counter-rotating terms kept.
pub fn build_dicke_hamiltonian(p: &ModelParams, space: &SpaceConfig) -> Result<Operator> {
    check_space(p, space)?;
    let dim = space.dim();
    let mut h = CMat::zeros(dim, dim);
    for n in 0..space.cavity_dim() {
        for e in 0..space.emitter_dim() {
            let excitations = e.count_ones() as f64;
            let i = space.index(n, e);
            h[(i, i)] = C64::new(p.omega_c * n as f64 + p.omega_x * excitations, 0.0);
        }
    }
    if p.g != 0.0 {
        // g (a + a†) σ_x^{(j)}: flips one emitter bit and changes n by ±1
        for n in 0..space.cavity_dim() {
            for e in 0..space.emitter_dim() {
                for j in 1..=space.n_emitters {
                    let flipped = e ^ space.emitter_mask(j);
                    if n < space.photon_cutoff {
                        let amp = p.g * ((n + 1) as f64).sqrt();
                        let (i, k) = (space.index(n + 1, flipped), space.index(n, e));
                        h[(i, k)] += C64::new(amp, 0.0);
                        h[(k, i)] += C64::new(amp, 0.0);
                    }
                }
            }
        }
    }
    Operator::hermitian(h)
}

/// Time-independent factor Ω (a + a†) of the drive; H_S(t) = H_D + factor·cos(ω_d t).
pub fn build_drive_operator(p: &ModelParams, space: &SpaceConfig) -> Result<Operator> {
    if !(p.drive_amplitude >= 0.0) {
        return Err(Error::param("drive_amplitude", "must be >= 0"));
    }
    let a = build_annihilation(space)?;
    let m = a.matrix();
    let dim = space.dim();
    let f = CMat::from_fn(dim, dim, |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * p.drive_amplitude
    });
    Operator::hermitian(f)
}

/// System operators coupling to the baths, in the order
/// `[cavity, emitter 1, …, emitter N]`: X_c = −i(a − a†),
/// X_j = −i(σ_−^{(j)} − σ_+^{(j)}).
pub fn build_coupling_channels(space: &SpaceConfig) -> Result<Vec<Operator>> {
    let mut lowering = vec![build_annihilation(space)?];
    for j in 1..=space.n_emitters {
        lowering.push(build_emitter_lowering(j, space)?);
    }
    let dim = space.dim();
    lowering
        .into_iter()
        .map(|l| {
            let m = l.matrix();
            let x = CMat::from_fn(dim, dim, |i, j| -linalg::I * (m[(i, j)] - m[(j, i)].conj()));
            Operator::hermitian(x)
        })
        .collect()
}

/// Ascending eigenvalues of a Hermitian operator.
pub fn spectrum(h: &Operator) -> Result<Vec<f64>> {
    let dev = linalg::hermitian_deviation(h.matrix());
    if dev > 1e-12 * linalg::max_abs(h.matrix()).max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    linalg::eigvalsh(h.matrix())
}

/// ρ_x ⊗ ρ_c placed in the global ordering (cavity slow).
pub fn product_operator(emitter: MatRef<'_, C64>, cavity: MatRef<'_, C64>) -> CMat {
    linalg::kron(cavity, emitter)
}

fn check_square(m: MatRef<'_, C64>, space: &SpaceConfig) -> Result<()> {
    if m.nrows() != space.dim() || m.ncols() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: m.nrows(),
        });
    }
    Ok(())
}

/// Tr_c of an arbitrary joint-space matrix (no state validation).
pub fn trace_out_cavity(m: MatRef<'_, C64>, space: &SpaceConfig) -> Result<CMat> {
    check_square(m, space)?;
    let dx = space.emitter_dim();
    let mut out = CMat::zeros(dx, dx);
    for c in 0..space.cavity_dim() {
        let base = c * dx;
        for j in 0..dx {
            for i in 0..dx {
                out[(i, j)] += m[(base + i, base + j)];
            }
        }
    }
    Ok(out)
}

/// Tr_x of an arbitrary joint-space matrix: a contiguous block trace.
pub fn trace_out_emitters(m: MatRef<'_, C64>, space: &SpaceConfig) -> Result<CMat> {
    check_square(m, space)?;
    let dx = space.emitter_dim();
    let dc = space.cavity_dim();
    Ok(CMat::from_fn(dc, dc, |a, b| {
        (0..dx).map(|e| m[(a * dx + e, b * dx + e)]).sum()
    }))
}

/// Reduced emitter state Tr_c ρ.
pub fn partial_trace_cavity(rho: &DensityMatrix, space: &SpaceConfig) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_matrix_unchecked(trace_out_cavity(
        rho.matrix(),
        space,
    )?))
}

/// Reduced cavity state Tr_x ρ.
pub fn partial_trace_emitters(rho: &DensityMatrix, space: &SpaceConfig) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_matrix_unchecked(trace_out_emitters(
        rho.matrix(),
        space,
    )?))
}
