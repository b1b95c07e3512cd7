//! Distinguishability measures on emitter states: trace distance, state-pair
//! generators, the trace-distance non-Markovianity and its maximization, and
//! the Husimi function of cavity states.

mod husimi;
mod nonmark;

pub use husimi::{detect_modes, husimi, AlphaGrid, HusimiField, Mode};
pub use nonmark::{
    delta_n, maximize_nonmarkovianity, nonmarkovianity, DeltaN, GridSpec, MaximizeResult,
    NonMarkovResult, PairSampling, SampleRecord,
};

use faer::MatRef;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::DensityMatrix;

/// ½ tr|A| for a Hermitian matrix.
pub fn half_trace_norm(a: MatRef<'_, C64>) -> Result<f64> {
    if a.nrows() == 2 {
        let half_diff = 0.5 * (a[(0, 0)].re - a[(1, 1)].re);
        let mean = 0.5 * (a[(0, 0)].re + a[(1, 1)].re);
        let r = (half_diff * half_diff + a[(0, 1)].norm_sqr()).sqrt();
        return Ok(0.5 * ((mean + r).abs() + (mean - r).abs()));
    }
    let h = linalg::hermitian_part(a);
    Ok(0.5
        * linalg::eigvalsh(h.as_ref())?
            .iter()
            .map(|x| x.abs())
            .sum::<f64>())
}

/// D(ρ1, ρ2) = ½ tr|ρ1 − ρ2|.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimensionMismatch {
            expected: r1.dim(),
            got: r2.dim(),
        });
    }
    let diff = r1.matrix() - r2.matrix();
    half_trace_norm(diff.as_ref())
}

/// Where a pair of initial emitter states came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PairKind {
    /// Tensor powers of the maximal-coherence pair; `extrapolated` for N > 2.
    Canonical { extrapolated: bool },
    /// Haar-random pure states on the full emitter space.
    Random { seed: u64 },
    /// Products of Haar-random single-emitter pure states.
    RandomProduct { seed: u64 },
}

impl PairKind {
    pub fn label(&self) -> &'static str {
        match self {
            PairKind::Canonical { .. } => "canonical",
            PairKind::Random { .. } => "random",
            PairKind::RandomProduct { .. } => "random_product",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            PairKind::Canonical { .. } => None,
            PairKind::Random { seed } | PairKind::RandomProduct { seed } => Some(seed),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StatePair {
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
    pub kind: PairKind,
}

impl StatePair {
    pub fn n_emitters(&self) -> usize {
        self.rho1.dim().trailing_zeros() as usize
    }
}

fn tensor_power(single: &[C64; 2], n: usize) -> Vec<C64> {
    let mut v = vec![C64::new(1.0, 0.0)];
    for _ in 0..n {
        v = v
            .iter()
            .flat_map(|&a| single.iter().map(move |&b| a * b))
            .collect();
    }
    v
}

/// ρ_± = |±⟩⟨±| with |±⟩ = ⊗_j (|e⟩ ± |g⟩)/√2.
pub fn canonical_pair(n_emitters: usize) -> Result<StatePair> {
    if n_emitters == 0 {
        return Err(Error::param("n_emitters", "must be at least 1"));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // local basis order: index 0 = |g⟩, 1 = |e⟩
    let plus = tensor_power(&[C64::new(s, 0.0), C64::new(s, 0.0)], n_emitters);
    let minus = tensor_power(&[C64::new(-s, 0.0), C64::new(s, 0.0)], n_emitters);
    Ok(StatePair {
        rho1: DensityMatrix::pure(&plus)?,
        rho2: DensityMatrix::pure(&minus)?,
        kind: PairKind::Canonical {
            extrapolated: n_emitters > 2,
        },
    })
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect()
}

/// Two independent Haar-random pure states on 2^N dimensions.
pub fn random_pure_pair(n_emitters: usize, seed: u64) -> Result<StatePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << n_emitters;
    let a = gaussian_vector(&mut rng, dim);
    let b = gaussian_vector(&mut rng, dim);
    Ok(StatePair {
        rho1: DensityMatrix::pure(&a)?,
        rho2: DensityMatrix::pure(&b)?,
        kind: PairKind::Random { seed },
    })
}

/// Two independent products of Haar-random single-emitter pure states.
pub fn random_product_pair(n_emitters: usize, seed: u64) -> Result<StatePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let product = |rng: &mut ChaCha8Rng| {
        let mut v = vec![C64::new(1.0, 0.0)];
        for _ in 0..n_emitters {
            let local = gaussian_vector(rng, 2);
            v = v
                .iter()
                .flat_map(|&a| local.iter().map(move |&b| a * b))
                .collect();
        }
        v
    };
    let a = product(&mut rng);
    let b = product(&mut rng);
    Ok(StatePair {
        rho1: DensityMatrix::pure(&a)?,
        rho2: DensityMatrix::pure(&b)?,
        kind: PairKind::RandomProduct { seed },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;

    #[test]
    fn trace_distance_basics() {
        let g = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let e = DensityMatrix::pure(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        assert_eq!(trace_distance(&g, &g).unwrap(), 0.0);
        assert!((trace_distance(&g, &e).unwrap() - 1.0).abs() < 1e-15);
        let big = DensityMatrix::pure(&[C64::new(1.0, 0.0); 4]).unwrap();
        assert!(trace_distance(&g, &big).is_err());
    }

    #[test]
    fn closed_form_agrees_with_eigenvalues() {
        let a = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(0.3, 0.0),
            (1, 1) => C64::new(-0.1, 0.0),
            (0, 1) => C64::new(0.2, -0.4),
            _ => C64::new(0.2, 0.4),
        });
        let ev = linalg::eigvalsh(a.as_ref()).unwrap();
        let brute = 0.5 * ev.iter().map(|x| x.abs()).sum::<f64>();
        assert!((half_trace_norm(a.as_ref()).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn canonical_pairs_are_orthogonal_and_maximally_coherent() {
        for n in [1, 2] {
            let pair = canonical_pair(n).unwrap();
            assert!((trace_distance(&pair.rho1, &pair.rho2).unwrap() - 1.0).abs() < 1e-14);
            assert!((pair.rho1.purity() - 1.0).abs() < 1e-14);
            assert_eq!(
                pair.kind,
                PairKind::Canonical {
                    extrapolated: false
                }
            );
            assert_eq!(pair.n_emitters(), n);
            let dim = 1 << n;
            for i in 0..dim {
                for j in 0..dim {
                    assert!((pair.rho1.matrix()[(i, j)].norm() - 1.0 / dim as f64).abs() < 1e-15);
                }
            }
        }
        let one = canonical_pair(1).unwrap();
        assert!((one.rho1.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
        assert!((one.rho2.matrix()[(0, 1)].re + 0.5).abs() < 1e-15);
        // two emitters: signs (+,±,±,+) of |++⟩,|+−⟩,|−+⟩,|−−⟩ for ρ_−
        let two = canonical_pair(2).unwrap();
        let r = two.rho2.matrix();
        // index 3 = |ee⟩ = |++⟩, 0 = |gg⟩ = |−−⟩, 1 = |ge⟩, 2 = |eg⟩
        assert!(r[(3, 0)].re > 0.0 && r[(3, 1)].re < 0.0 && r[(3, 2)].re < 0.0);
        assert!(matches!(
            canonical_pair(3).unwrap().kind,
            PairKind::Canonical { extrapolated: true }
        ));
    }

    #[test]
    fn random_pairs_are_pure_and_seeded() {
        let a = random_pure_pair(2, 7).unwrap();
        let b = random_pure_pair(2, 7).unwrap();
        let c = random_pure_pair(2, 8).unwrap();
        assert!((a.rho1.purity() - 1.0).abs() < 1e-12);
        assert_eq!(a.rho1.matrix(), b.rho1.matrix());
        assert_eq!(a.rho2.matrix(), b.rho2.matrix());
        assert_ne!(a.rho1.matrix(), c.rho1.matrix());
        let p = random_product_pair(2, 3).unwrap();
        assert!((p.rho2.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_mean_trace_distance_for_qubits() {
        // |⟨ψ|φ⟩|² is uniform on [0, 1] for Haar qubits and D = √(1 − |⟨ψ|φ⟩|²),
        // so E[D] = ∫₀¹ √(1 − u) du = 2/3
        let n = 1000;
        let mean: f64 = (0..n)
            .map(|s| {
                let p = random_pure_pair(1, s).unwrap();
                trace_distance(&p.rho1, &p.rho2).unwrap()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.02, "{mean}");
    }
}
