use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    canonical_pair, half_trace_norm, random_product_pair, random_pure_pair, PairKind, StatePair,
};
use crate::dynamics::{self, OpenSystem, PhaseTable};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::model;

/// Time grid of a non-Markovianity run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Samples per reference period (drive period, or 2π/ω0 when undriven).
    pub steps_per_period: usize,
    /// t_max = horizon_factor / gap(W) ...
    pub horizon_factor: f64,
    /// ... capped at this many drive periods.
    pub max_periods: f64,
    /// Fixed horizon overriding the two fields above.
    pub t_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            steps_per_period: 32,
            horizon_factor: 20.0,
            max_periods: 5000.0,
            t_max: None,
        }
    }
}

impl GridSpec {
    /// (dt, number of grid points) for a system.
    pub fn resolve(&self, sys: &OpenSystem) -> Result<(f64, usize)> {
        if self.steps_per_period == 0 {
            return Err(Error::param("steps_per_period", "must be at least 1"));
        }
        let dt = sys.default_dt() * 32.0 / self.steps_per_period as f64;
        let t_max = match self.t_max {
            Some(t) if t > 0.0 && t.is_finite() => t,
            Some(t) => return Err(Error::param("t_max", format!("must be positive, got {t}"))),
            None => {
                let gap = dynamics::gap(sys.rates())?;
                (self.horizon_factor / gap).min(self.max_periods * sys.params.drive_period())
            }
        };
        Ok((dt, (t_max / dt).floor() as usize + 1))
    }
}

/// Trace-distance non-Markovianity of one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonMarkovResult {
    pub value: f64,
    pub dt: f64,
    /// D(t_i) on t_i = i·dt.
    pub distances: Vec<f64>,
    /// Same sum over every other grid point.
    pub half_grid_value: f64,
    /// Share of N collected in the last tenth of the horizon.
    pub tail_fraction: f64,
    pub converged: bool,
}

impl NonMarkovResult {
    pub fn t_max(&self) -> f64 {
        (self.distances.len().saturating_sub(1)) as f64 * self.dt
    }

    /// Mask of grid intervals on which D grows.
    pub fn increasing(&self) -> Vec<bool> {
        self.distances.windows(2).map(|w| w[1] > w[0]).collect()
    }
}

/// Σ max(0, D_{i+1} − D_i).
pub fn positive_increments(d: &[f64]) -> f64 {
    d.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

fn summarize(distances: Vec<f64>, dt: f64) -> NonMarkovResult {
    let value = positive_increments(&distances);
    let halved: Vec<f64> = distances.iter().step_by(2).copied().collect();
    let half_grid_value = positive_increments(&halved);
    let tail_start = distances.len() - distances.len() / 10;
    let tail = positive_increments(&distances[tail_start.saturating_sub(1)..]);
    let tail_fraction = if value > 0.0 { tail / value } else { 0.0 };
    let converged =
        tail <= 0.01 * value + 1e-12 && (value - half_grid_value).abs() <= 0.05 * value + 1e-9;
    NonMarkovResult {
        value,
        dt,
        distances,
        half_grid_value,
        tail_fraction,
        converged,
    }
}

/// N = Σ positive increments of D(Tr_c ρ1(t), Tr_c ρ2(t)), both started as
/// (emitter state) ⊗ |0⟩⟨0| at t = 0. Only the difference ρ1 − ρ2 is
/// propagated.
pub fn nonmarkovianity(
    pair: &StatePair,
    sys: &OpenSystem,
    grid: &GridSpec,
) -> Result<NonMarkovResult> {
    let (dt, n_points) = grid.resolve(sys)?;
    let phases = PhaseTable::new(&sys.basis, dt);
    nonmarkovianity_on(pair, sys, dt, n_points, &phases)
}

fn nonmarkovianity_on(
    pair: &StatePair,
    sys: &OpenSystem,
    dt: f64,
    n_points: usize,
    phases: &PhaseTable,
) -> Result<NonMarkovResult> {
    let space = &sys.space;
    let ed = space.emitter_dim();
    if pair.rho1.dim() != ed || pair.rho2.dim() != ed {
        return Err(Error::DimensionMismatch {
            expected: ed,
            got: pair.rho1.dim(),
        });
    }
    let diff = pair.rho1.matrix() - pair.rho2.matrix();
    let mut vacuum = CMat::zeros(space.cavity_dim(), space.cavity_dim());
    vacuum[(0, 0)] = C64::new(1.0, 0.0);
    let full = model::product_operator(diff.as_ref(), vacuum.as_ref());
    let fd = dynamics::project_operator(full.as_ref(), &sys.basis)?;
    let energies = sys.basis.energies();
    let dim = sys.basis.dim();
    let mut distances = Vec::with_capacity(n_points);
    let mut phased = CMat::zeros(dim, dim);
    dynamics::for_each_uniform(&fd, sys.rates(), sys.coherence(), dt, n_points, |i, st| {
        let t = st.time;
        for n in 0..dim {
            for m in 0..dim {
                phased[(m, n)] = if m == n {
                    st.matrix[(m, n)]
                } else {
                    st.matrix[(m, n)] * C64::from_polar(1.0, -(energies[m] - energies[n]) * t)
                };
            }
        }
        let phi = phases.get(&sys.basis, i);
        let phi = phi.as_ref();
        let left = phi * &phased;
        // Tr_c[left · φ†] without forming the full matrix
        let reduced = CMat::from_fn(ed, ed, |a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..space.cavity_dim() {
                let (ra, rb) = (space.index(c, a), space.index(c, b));
                for k in 0..dim {
                    acc += left[(ra, k)] * phi[(rb, k)].conj();
                }
            }
            acc
        });
        distances.push(half_trace_norm(reduced.as_ref())?);
        Ok(())
    })?;
    Ok(summarize(distances, dt))
}

/// Which random pairs the maximizer draws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSampling {
    /// Haar-random pure states on the whole emitter space.
    #[default]
    Haar,
    /// Products of single-emitter Haar states.
    Product,
}

/// One evaluated pair of the maximization sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub kind: PairKind,
    pub value: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct MaximizeResult {
    pub best: f64,
    pub best_pair: StatePair,
    /// Canonical pair first, then random pairs in seed order.
    pub samples: Vec<SampleRecord>,
}

/// Seed of the i-th random pair drawn from a base seed.
pub fn sample_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Evaluates the canonical pair and `n_samples` random pairs (in parallel,
/// collected in order) and returns the largest N.
pub fn maximize_nonmarkovianity(
    sys: &OpenSystem,
    n_samples: usize,
    seed: u64,
    sampling: PairSampling,
    grid: &GridSpec,
) -> Result<MaximizeResult> {
    let (dt, n_points) = grid.resolve(sys)?;
    let phases = PhaseTable::new(&sys.basis, dt);
    let n = sys.params.n_emitters;
    let draw = |i: usize| -> Result<StatePair> {
        if i == 0 {
            return canonical_pair(n);
        }
        let s = sample_seed(seed, i - 1);
        match sampling {
            PairSampling::Haar => random_pure_pair(n, s),
            PairSampling::Product => random_product_pair(n, s),
        }
    };
    let evaluated: Vec<(StatePair, NonMarkovResult)> = (0..=n_samples)
        .into_par_iter()
        .map(|i| {
            let pair = draw(i)?;
            let r = nonmarkovianity_on(&pair, sys, dt, n_points, &phases)?;
            Ok((pair, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, (_, r)) in evaluated.iter().enumerate() {
        if r.value > evaluated[best].1.value {
            best = i;
        }
    }
    let samples: Vec<SampleRecord> = evaluated
        .iter()
        .map(|(p, r)| SampleRecord {
            kind: p.kind,
            value: r.value,
            converged: r.converged,
        })
        .collect();
    let best_value = samples[best].value;
    debug_assert!(samples.iter().all(|s| s.value <= best_value));
    let best_pair = evaluated
        .into_iter()
        .nth(best)
        .map(|(p, _)| p)
        .expect("best index in range");
    Ok(MaximizeResult {
        best: best_value,
        best_pair,
        samples,
    })
}

#[derive(Clone, Debug)]
pub struct DeltaN {
    pub value: f64,
    pub driven: MaximizeResult,
    pub undriven: MaximizeResult,
}

/// ΔN = |N_{Ω>0} − N_{Ω=0}| between two systems that differ only in Ω.
pub fn delta_n(
    driven: &OpenSystem,
    undriven: &OpenSystem,
    n_samples: usize,
    seed: u64,
    sampling: PairSampling,
    grid: &GridSpec,
) -> Result<DeltaN> {
    let (a, b) = (&driven.params, &undriven.params);
    let same = a.n_emitters == b.n_emitters
        && a.g == b.g
        && a.omega_c == b.omega_c
        && a.omega_x == b.omega_x
        && a.omega0 == b.omega0
        && driven.space == undriven.space
        && driven.spectral == undriven.spectral;
    if !same {
        return Err(Error::param(
            "delta_n",
            "setups must share everything except the drive amplitude",
        ));
    }
    if b.drive_amplitude != 0.0 {
        return Err(Error::param(
            "drive_amplitude",
            "reference setup must be undriven",
        ));
    }
    let d = maximize_nonmarkovianity(driven, n_samples, seed, sampling, grid)?;
    let u = maximize_nonmarkovianity(undriven, n_samples, seed, sampling, grid)?;
    Ok(DeltaN {
        value: (d.best - u.best).abs(),
        driven: d,
        undriven: u,
    })
}
