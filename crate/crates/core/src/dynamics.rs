//! Secular Floquet master equation in the Floquet basis: populations follow
//! dp/dt = W p, coherences decay as ρ_{m,n}(t) = e^{−Z_{m,n} t} ρ_{m,n}(0).
//! Lab-frame states are rebuilt from the periodic Floquet states.

use faer::MatRef;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dissipator::{DissipatorData, SpectralModel};
use crate::error::{Error, Result};
use crate::floquet::{self, FloquetBasis, PropagatorConfig};
use crate::linalg::{self, CMat, RMat};
use crate::model::{self, DensityMatrix, ModelParams, SpaceConfig};

/// How the Floquet basis is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisOptions {
    pub propagator: PropagatorConfig,
    pub nu_max: usize,
    /// Use the propagator route even when Ω = 0.
    pub force_driven: bool,
}

impl BasisOptions {
    /// Defaults sized to the spectral width of a cutoff. Fock level n sits
    /// near mode ν ≈ n and the drive spreads it over a few more, so
    /// ν_max = n_max + 8 keeps the discarded weight below ~1e−12.
    pub fn for_cutoff(photon_cutoff: usize) -> Self {
        let nu_max = photon_cutoff + 8;
        let n_steps = (4 * nu_max + 4).next_power_of_two().max(64);
        Self {
            propagator: PropagatorConfig {
                n_steps,
                ..PropagatorConfig::default()
            },
            nu_max,
            force_driven: false,
        }
    }
}

/// Builds the static eigenbasis (Ω = 0) or the Floquet basis of H_S(t).
/// Degeneracies are split by H_D and then by the photon number.
pub fn build_basis(
    params: &ModelParams,
    space: &SpaceConfig,
    opts: &BasisOptions,
) -> Result<FloquetBasis> {
    params.validate()?;
    if params.n_emitters != space.n_emitters {
        return Err(Error::DimensionMismatch {
            expected: params.n_emitters,
            got: space.n_emitters,
        });
    }
    let h = model::build_dicke_hamiltonian(params, space)?;
    let number = model::build_number_operator(space)?;
    if !params.is_driven() && !opts.force_driven {
        return floquet::static_basis(&h, params.omega_d, &[&number]);
    }
    let drive = model::build_drive_operator(params, space)?;
    let props = floquet::propagate_period(&h, &drive, params.omega_d, &opts.propagator)?;
    floquet::floquet_states(&props, opts.nu_max, &[&h, &number])
}

/// A configured open system: parameters, Floquet basis and dissipator.
#[derive(Clone, Debug)]
pub struct OpenSystem {
    pub params: ModelParams,
    pub space: SpaceConfig,
    pub spectral: SpectralModel,
    pub basis: FloquetBasis,
    pub dissipator: DissipatorData,
}

impl OpenSystem {
    pub fn new(
        params: ModelParams,
        space: SpaceConfig,
        spectral: SpectralModel,
        opts: &BasisOptions,
    ) -> Result<Self> {
        let basis = build_basis(&params, &space, opts)?;
        Self::from_basis(params, space, spectral, basis)
    }

    pub fn from_basis(
        params: ModelParams,
        space: SpaceConfig,
        spectral: SpectralModel,
        basis: FloquetBasis,
    ) -> Result<Self> {
        spectral.validate()?;
        if basis.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: basis.dim(),
            });
        }
        let channels = model::build_coupling_channels(&space)?;
        let dissipator = DissipatorData::assemble(&basis, &channels, &spectral)?;
        Ok(Self {
            params,
            space,
            spectral,
            basis,
            dissipator,
        })
    }

    pub fn rates(&self) -> MatRef<'_, f64> {
        self.dissipator.rates()
    }

    pub fn coherence(&self) -> MatRef<'_, C64> {
        self.dissipator.coherence.as_ref()
    }

    /// Time step used for trajectories: T_d/32, or 2π/(32 ω0) when undriven.
    pub fn default_dt(&self) -> f64 {
        let period = if self.params.is_driven() || self.basis.driven {
            self.params.drive_period()
        } else {
            std::f64::consts::TAU / self.params.omega0
        };
        period / 32.0
    }
}

/// Density matrix in the Floquet frame, ρ_{m,n}(t) = ⟨ψ_m(t)|ρ_S(t)|ψ_n(t)⟩
/// with the dynamical phases of ψ removed.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetDensity {
    pub time: f64,
    pub matrix: CMat,
}

impl FloquetDensity {
    pub fn populations(&self) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|n| self.matrix[(n, n)].re)
            .collect()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(self.matrix.as_ref()).re
    }
}

/// ρ_{m,n}(0) = ⟨φ_m(0)|ρ0|φ_n(0)⟩.
pub fn project_initial(rho0: &DensityMatrix, basis: &FloquetBasis) -> Result<FloquetDensity> {
    project_operator(rho0.matrix(), basis)
}

/// Same change of basis for an arbitrary operator (used for differences of
/// states).
pub fn project_operator(op: MatRef<'_, C64>, basis: &FloquetBasis) -> Result<FloquetDensity> {
    if op.nrows() != basis.dim() || op.ncols() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: op.nrows(),
        });
    }
    let phi = basis.periodic_states(0.0);
    let matrix = phi.adjoint() * op * &phi;
    Ok(FloquetDensity { time: 0.0, matrix })
}

/// Propagates populations through `times` by exact exponentials of W over
/// each interval. Equal intervals share one exponential.
pub fn propagate_populations(
    w: MatRef<'_, f64>,
    p0: &[f64],
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if p0.len() != w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            got: p0.len(),
        });
    }
    check_times(times)?;
    let mut out = Vec::with_capacity(times.len());
    let mut p = p0.to_vec();
    let mut cached: Option<(f64, RMat)> = None;
    let mut prev = 0.0;
    for &t in times {
        let dt = t - prev;
        if dt > 0.0 {
            let reuse = matches!(&cached, Some((h, _)) if (*h - dt).abs() <= 1e-12 * dt);
            if !reuse {
                let wdt = RMat::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] * dt);
                cached = Some((dt, linalg::expm_real(wdt.as_ref())));
            }
            let (_, e) = cached.as_ref().expect("exponential cached above");
            p = linalg::matvec_real(e.as_ref(), &p);
        }
        out.push(p.clone());
        prev = t;
    }
    Ok(out)
}

fn check_times(times: &[f64]) -> Result<()> {
    match times.first() {
        Some(&t0) if t0 == 0.0 => {}
        Some(&t0) => return Err(Error::param("times", format!("must start at 0, got {t0}"))),
        None => return Err(Error::param("times", "empty time grid")),
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::param(
            "times",
            "must be finite and strictly ascending",
        ));
    }
    Ok(())
}

/// Populations on a time grid plus what is needed to evaluate coherences at
/// any grid point.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    initial: CMat,
    z: CMat,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Floquet-frame density matrix at grid point `i`.
    pub fn state(&self, i: usize) -> FloquetDensity {
        let t = self.times[i];
        let dim = self.initial.nrows();
        let p = &self.populations[i];
        let matrix = CMat::from_fn(dim, dim, |m, n| {
            if m == n {
                C64::new(p[m], 0.0)
            } else {
                self.initial[(m, n)] * (-self.z[(m, n)] * t).exp()
            }
        });
        FloquetDensity { time: t, matrix }
    }
}

/// Evolves a physical state. Populations below −1e−7 are an error.
pub fn evolve(
    fd: &FloquetDensity,
    w: MatRef<'_, f64>,
    z: MatRef<'_, C64>,
    times: &[f64],
) -> Result<Trajectory> {
    let traj = evolve_linear(fd, w, z, times)?;
    for p in &traj.populations {
        if let Some((index, &value)) = p.iter().enumerate().find(|(_, &x)| x < -1e-7) {
            return Err(Error::NegativePopulation { index, value });
        }
    }
    Ok(traj)
}

/// Evolves any operator in the Floquet frame (no positivity checks).
pub fn evolve_linear(
    fd: &FloquetDensity,
    w: MatRef<'_, f64>,
    z: MatRef<'_, C64>,
    times: &[f64],
) -> Result<Trajectory> {
    let dim = fd.matrix.nrows();
    if w.nrows() != dim || z.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: w.nrows(),
        });
    }
    if fd.time != 0.0 {
        return Err(Error::param("time", "evolution starts from t = 0"));
    }
    let populations = propagate_populations(w, &fd.populations(), times)?;
    Ok(Trajectory {
        times: times.to_vec(),
        populations,
        initial: fd.matrix.clone(),
        z: z.to_owned(),
    })
}

/// Steps a Floquet-frame operator along the uniform grid t_i = i·dt and
/// hands each state to `visit`. Uses one exponential of W·dt and the
/// per-step coherence factors e^{−Z dt}, so nothing but the current state is
/// kept.
pub fn for_each_uniform(
    fd: &FloquetDensity,
    w: MatRef<'_, f64>,
    z: MatRef<'_, C64>,
    dt: f64,
    n_points: usize,
    mut visit: impl FnMut(usize, &FloquetDensity) -> Result<()>,
) -> Result<()> {
    let dim = fd.matrix.nrows();
    if w.nrows() != dim || z.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: w.nrows(),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let wdt = RMat::from_fn(dim, dim, |i, j| w[(i, j)] * dt);
    let step = linalg::expm_real(wdt.as_ref());
    let decay = CMat::from_fn(dim, dim, |m, n| {
        if m == n {
            C64::new(1.0, 0.0)
        } else {
            (-z[(m, n)] * dt).exp()
        }
    });
    let mut state = FloquetDensity {
        time: 0.0,
        matrix: fd.matrix.clone(),
    };
    for i in 0..n_points {
        if i > 0 {
            let p = linalg::matvec_real(step.as_ref(), &state.populations());
            for n in 0..dim {
                for m in 0..dim {
                    if m == n {
                        state.matrix[(m, m)] = C64::new(p[m], 0.0);
                    } else {
                        state.matrix[(m, n)] *= decay[(m, n)];
                    }
                }
            }
            state.time = i as f64 * dt;
        }
        visit(i, &state)?;
    }
    Ok(())
}

/// Floquet-frame matrix with the dynamical phases e^{−i(E_m − E_n)t}
/// restored.
fn phased(fd: &FloquetDensity, basis: &FloquetBasis) -> CMat {
    let e = basis.energies();
    let t = fd.time;
    let dim = fd.matrix.nrows();
    CMat::from_fn(dim, dim, |m, n| {
        if m == n {
            fd.matrix[(m, n)]
        } else {
            fd.matrix[(m, n)] * C64::from_polar(1.0, -(e[m] - e[n]) * t)
        }
    })
}

/// Lab-frame operator Σ_{m,n} ρ_{m,n} e^{−i(E_m−E_n)t} |φ_m(t)⟩⟨φ_n(t)|.
pub fn reconstruct_operator(
    fd: &FloquetDensity,
    basis: &FloquetBasis,
    phi: Option<MatRef<'_, C64>>,
) -> CMat {
    let owned;
    let phi = match phi {
        Some(p) => p,
        None => {
            owned = basis.periodic_states(fd.time);
            owned.as_ref()
        }
    };
    let r = phased(fd, basis);
    phi * &r * phi.adjoint()
}

/// Lab-frame density matrix at `fd.time`, Hermitian-symmetrized.
pub fn reconstruct(fd: &FloquetDensity, basis: &FloquetBasis) -> DensityMatrix {
    let m = reconstruct_operator(fd, basis, None);
    DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(m.as_ref()))
}

/// Periodic states evaluated on a uniform grid, reusing the phases of one
/// period when the grid divides it.
pub struct PhaseTable {
    dt: f64,
    states: Vec<CMat>,
}

impl PhaseTable {
    pub fn new(basis: &FloquetBasis, dt: f64) -> Self {
        if !basis.driven {
            return Self {
                dt,
                states: vec![basis.periodic_states(0.0)],
            };
        }
        let per_period = basis.period() / dt;
        let k = per_period.round();
        if k >= 1.0 && (per_period - k).abs() < 1e-9 * per_period {
            let k = k as usize;
            let states = (0..k)
                .map(|i| basis.periodic_states(i as f64 * dt))
                .collect();
            Self { dt, states }
        } else {
            Self {
                dt,
                states: Vec::new(),
            }
        }
    }

    /// |φ_n(i·dt)⟩ as columns.
    pub fn get(&self, basis: &FloquetBasis, i: usize) -> std::borrow::Cow<'_, CMat> {
        if self.states.is_empty() {
            std::borrow::Cow::Owned(basis.periodic_states(i as f64 * self.dt))
        } else {
            std::borrow::Cow::Borrowed(&self.states[i % self.states.len()])
        }
    }
}

/// Uniform grid t_i = i·dt, i = 0..n_points.
pub fn uniform_grid(dt: f64, n_points: usize) -> Vec<f64> {
    (0..n_points).map(|i| i as f64 * dt).collect()
}

/// Null vector of W, normalized and clipped. Errors if the null space is not
/// one-dimensional.
pub fn steady_state(w: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let dim = w.nrows();
    let svd = w.svd().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let values: Vec<f64> = (0..dim).map(|i| s[i]).collect();
    let scale = values
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(f64::MIN_POSITIVE);
    let zero: Vec<f64> = values
        .iter()
        .copied()
        .filter(|&x| x <= 1e-10 * scale)
        .collect();
    if zero.len() != 1 {
        let tail = values[dim.saturating_sub(3)..].to_vec();
        return Err(Error::DegenerateSteadyState {
            dim: zero.len(),
            values: tail,
        });
    }
    let v = svd.V();
    let mut p: Vec<f64> = (0..dim).map(|i| v[(i, dim - 1)]).collect();
    let sum: f64 = p.iter().sum();
    for x in &mut p {
        *x /= sum;
    }
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 {
        return Err(Error::NegativePopulation {
            index: p.iter().position(|&x| x == min).unwrap_or(0),
            value: min,
        });
    }
    if min < 0.0 {
        log::debug!("clipping steady-state populations down to {min:e}");
        for x in &mut p {
            *x = x.max(0.0);
        }
        let sum: f64 = p.iter().sum();
        for x in &mut p {
            *x /= sum;
        }
    }
    Ok(p)
}

/// Slowest nonzero relaxation rate: min |Re λ| over the eigenvalues of W
/// other than the stationary one.
pub fn gap(w: MatRef<'_, f64>) -> Result<f64> {
    let mut re: Vec<f64> = w
        .eigenvalues()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?
        .into_iter()
        .map(|l| l.re.abs())
        .collect();
    re.sort_by(f64::total_cmp);
    re.get(1)
        .copied()
        .filter(|&g| g > 0.0)
        .ok_or_else(|| Error::Convergence("rate matrix has no relaxation".into()))
}

/// Stroboscopic stationary cavity state Σ_n p_n Tr_x |φ_n(0)⟩⟨φ_n(0)|.
#[derive(Clone, Debug)]
pub struct StationaryCavity {
    pub state: DensityMatrix,
    pub warnings: Vec<String>,
}

pub fn stationary_cavity_state(
    basis: &FloquetBasis,
    p_ss: &[f64],
    space: &SpaceConfig,
    z: Option<MatRef<'_, C64>>,
) -> Result<StationaryCavity> {
    let dim = basis.dim();
    if p_ss.len() != dim || space.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p_ss.len(),
        });
    }
    let phi = basis.periodic_states(0.0);
    let rho = CMat::from_fn(dim, dim, |i, j| {
        (0..dim)
            .map(|n| phi[(i, n)] * phi[(j, n)].conj() * p_ss[n])
            .sum()
    });
    let reduced = model::trace_out_emitters(rho.as_ref(), space)?;
    let mut warnings = Vec::new();
    if let Some(z) = z {
        let min_re = (0..dim)
            .flat_map(|n| (0..dim).filter(move |&m| m != n).map(move |m| (m, n)))
            .map(|(m, n)| z[(m, n)].re)
            .fold(f64::INFINITY, f64::min);
        if min_re <= 0.0 {
            let msg = format!("coherences do not all decay (min Re Z = {min_re:e})");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let state = DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(reduced.as_ref()));
    Ok(StationaryCavity { state, warnings })
}

/// Mean photon number of a cavity state.
pub fn mean_photon_number(rho_c: &DensityMatrix) -> f64 {
    (0..rho_c.dim())
        .map(|n| n as f64 * rho_c.population(n))
        .sum()
}

/// Reduced emitter states along a trajectory, at every grid point.
pub fn emitter_trajectory(
    traj: &Trajectory,
    basis: &FloquetBasis,
    space: &SpaceConfig,
    phases: &PhaseTable,
) -> Result<Vec<DensityMatrix>> {
    (0..traj.len())
        .map(|i| {
            let fd = traj.state(i);
            let phi = phases.get(basis, i);
            let full = reconstruct_operator(&fd, basis, Some(phi.as_ref().as_ref()));
            let red = model::trace_out_cavity(full.as_ref(), space)?;
            Ok(DensityMatrix::from_matrix_unchecked(
                linalg::hermitian_part(red.as_ref()),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::propagate_period;

    fn system(
        g: f64,
        omega: f64,
        cutoff: usize,
        temperature: f64,
        force_driven: bool,
    ) -> OpenSystem {
        let params = ModelParams::resonant(1, g, omega);
        let space = SpaceConfig::new(cutoff, 1);
        let spectral = SpectralModel {
            temperature,
            ..SpectralModel::default()
        };
        let mut opts = BasisOptions::for_cutoff(cutoff);
        opts.force_driven = force_driven;
        OpenSystem::new(params, space, spectral, &opts).unwrap()
    }

    fn product_state(emitter: &[C64], cutoff: usize) -> DensityMatrix {
        let mut psi = vec![C64::new(0.0, 0.0); 2 * (cutoff + 1)];
        psi[0] = emitter[0];
        psi[1] = emitter[1];
        DensityMatrix::pure(&psi).unwrap()
    }

    #[test]
    fn projection_of_floquet_state_is_indicator() {
        let sys = system(0.2, 0.05, 4, 0.05, false);
        let phi = sys.basis.periodic_states(0.0);
        let k = 3;
        let psi: Vec<C64> = (0..phi.nrows()).map(|i| phi[(i, k)]).collect();
        let fd = project_initial(&DensityMatrix::pure(&psi).unwrap(), &sys.basis).unwrap();
        for n in 0..fd.matrix.nrows() {
            for m in 0..fd.matrix.nrows() {
                let target = if m == k && n == k { 1.0 } else { 0.0 };
                assert!((fd.matrix[(m, n)] - target).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn reconstruct_at_zero_roundtrips() {
        let sys = system(0.2, 0.05, 4, 0.05, false);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho0 = product_state(&[C64::new(s, 0.0), C64::new(0.0, s)], 4);
        let fd = project_initial(&rho0, &sys.basis).unwrap();
        assert!((fd.trace() - 1.0).abs() < 1e-12);
        let back = reconstruct(&fd, &sys.basis);
        let diff = &back.into_matrix() - rho0.matrix();
        assert!(linalg::max_abs(diff.as_ref()) < 1e-10);
    }

    #[test]
    fn populations_relax_to_null_vector_with_unit_trace() {
        let sys = system(0.2, 0.05, 4, 0.05, false);
        let rho0 = product_state(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], 4);
        let fd = project_initial(&rho0, &sys.basis).unwrap();
        let g = gap(sys.rates()).unwrap();
        let times = [0.0, 10.0, 25.0 / g, 50.0 / g];
        let traj = evolve(&fd, sys.rates(), sys.coherence(), &times).unwrap();
        assert_eq!(traj.populations[0], fd.populations());
        for p in &traj.populations {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let pss = steady_state(sys.rates()).unwrap();
        let last = traj.populations.last().unwrap();
        let err = last
            .iter()
            .zip(&pss)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn steady_state_ground_at_zero_temperature() {
        let sys = system(0.0, 0.0, 3, 0.0, false);
        let p = steady_state(sys.rates()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1..].iter().all(|&x| x.abs() < 1e-12));
        let cav =
            stationary_cavity_state(&sys.basis, &p, &sys.space, Some(sys.coherence())).unwrap();
        assert!((cav.state.population(0) - 1.0).abs() < 1e-12);
        assert!((linalg::trace(cav.state.matrix()).re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn steady_state_is_gibbs_without_coupling() {
        let t = 0.2;
        let sys = system(0.0, 0.0, 5, t, false);
        let p = steady_state(sys.rates()).unwrap();
        let e = sys.basis.energies();
        let weights: Vec<f64> = e.iter().map(|x| (-x / t).exp()).collect();
        let z: f64 = weights.iter().sum();
        for (pi, wi) in p.iter().zip(&weights) {
            assert!((pi - wi / z).abs() < 1e-8);
        }
    }

    #[test]
    fn steady_state_rejects_disconnected_generator() {
        let w = RMat::zeros(3, 3);
        assert!(matches!(
            steady_state(w.as_ref()),
            Err(Error::DegenerateSteadyState { dim: 3, .. })
        ));
    }

    #[test]
    fn unitary_limit_matches_direct_propagation() {
        // W = 0, Z = 0: the Floquet-frame matrix is frozen and reconstruct
        // must agree with U(t,0) ρ0 U(t,0)†.
        let params = ModelParams::resonant(1, 0.2, 0.1);
        let space = SpaceConfig::new(4, 1);
        let opts = BasisOptions::for_cutoff(4);
        let basis = build_basis(&params, &space, &opts).unwrap();
        let h = model::build_dicke_hamiltonian(&params, &space).unwrap();
        let f = model::build_drive_operator(&params, &space).unwrap();
        let props = propagate_period(&h, &f, 1.0, &opts.propagator).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho0 = product_state(&[C64::new(s, 0.0), C64::new(s, 0.0)], 4);
        let fd = project_initial(&rho0, &basis).unwrap();
        let dim = basis.dim();
        let w = RMat::zeros(dim, dim);
        let z = CMat::zeros(dim, dim);
        let dt = basis.period() / opts.propagator.n_steps as f64;
        let idx = [0usize, 17, 64, 128 + 40];
        let times: Vec<f64> = idx.iter().map(|&k| k as f64 * dt).collect();
        let traj = evolve(&fd, w.as_ref(), z.as_ref(), &times).unwrap();
        let n = opts.propagator.n_steps;
        for (i, &k) in idx.iter().enumerate() {
            let u_period = props.one_period().to_owned();
            let mut u = props.steps[k % n].clone();
            for _ in 0..k / n {
                u = &u * &u_period;
            }
            let direct = &u * rho0.matrix() * u.adjoint();
            let rec = reconstruct(&traj.state(i), &basis);
            let diff = &direct - rec.matrix();
            assert!(
                linalg::max_abs(diff.as_ref()) < 1e-6,
                "k={k}: {}",
                linalg::max_abs(diff.as_ref())
            );
        }
    }

    #[test]
    fn stroboscopic_projector_is_periodic() {
        let sys = system(0.2, 0.1, 4, 0.05, false);
        let phi = sys.basis.periodic_states(0.0);
        let psi: Vec<C64> = (0..phi.nrows()).map(|i| phi[(i, 2)]).collect();
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let fd = project_initial(&rho0, &sys.basis).unwrap();
        let dim = sys.basis.dim();
        let traj = evolve(
            &fd,
            RMat::zeros(dim, dim).as_ref(),
            CMat::zeros(dim, dim).as_ref(),
            &[0.0, sys.basis.period()],
        )
        .unwrap();
        let rec = reconstruct(&traj.state(1), &sys.basis);
        let diff = &rec.into_matrix() - rho0.matrix();
        assert!(linalg::max_abs(diff.as_ref()) < 1e-10);
    }

    #[test]
    fn reduced_emitter_states_stay_physical() {
        let sys = system(0.2, 0.05, 4, 0.05, false);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho0 = product_state(&[C64::new(s, 0.0), C64::new(-s, 0.0)], 4);
        let fd = project_initial(&rho0, &sys.basis).unwrap();
        let dt = sys.default_dt();
        let times = uniform_grid(dt, 400);
        let traj = evolve(&fd, sys.rates(), sys.coherence(), &times).unwrap();
        let phases = PhaseTable::new(&sys.basis, dt);
        for r in emitter_trajectory(&traj, &sys.basis, &sys.space, &phases).unwrap() {
            assert!((linalg::trace(r.matrix()).re - 1.0).abs() < 1e-8);
            let ev = linalg::eigvalsh(r.matrix()).unwrap();
            assert!(ev[0] > -1e-8);
        }
    }

    #[test]
    fn streaming_matches_stored_trajectory() {
        let sys = system(0.2, 0.05, 4, 0.05, false);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho0 = product_state(&[C64::new(s, 0.0), C64::new(0.0, -s)], 4);
        let fd = project_initial(&rho0, &sys.basis).unwrap();
        let dt = sys.default_dt();
        let traj = evolve(&fd, sys.rates(), sys.coherence(), &uniform_grid(dt, 300)).unwrap();
        let mut worst = 0.0f64;
        for_each_uniform(&fd, sys.rates(), sys.coherence(), dt, 300, |i, st| {
            let diff = &st.matrix - &traj.state(i).matrix;
            worst = worst.max(linalg::max_abs(diff.as_ref()));
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn time_grid_validation() {
        let w = RMat::zeros(2, 2);
        assert!(propagate_populations(w.as_ref(), &[1.0, 0.0], &[0.5, 1.0]).is_err());
        assert!(propagate_populations(w.as_ref(), &[1.0, 0.0], &[0.0, 1.0, 1.0]).is_err());
        assert!(propagate_populations(w.as_ref(), &[1.0], &[0.0]).is_err());
    }
}
