use num_complex::Complex64 as C64;
use proptest::prelude::*;

use driven_dicke::dissipator::{self, SpectralModel};
use driven_dicke::dynamics::{self, BasisOptions, OpenSystem};
use driven_dicke::linalg::{self, CMat};
use driven_dicke::measures::{self, AlphaGrid};
use driven_dicke::model::{self, DensityMatrix, ModelParams, SpaceConfig};
use driven_dicke::semiclassical::{self, SemiclassicalParams, SemiclassicalState};

fn state_from(re: &[f64], im: &[f64]) -> DensityMatrix {
    let psi: Vec<C64> = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
    DensityMatrix::pure(&psi).unwrap()
}

fn amplitudes(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-1.0..1.0f64, dim),
        prop::collection::vec(-1.0..1.0f64, dim),
    )
        .prop_filter("nonzero", |(a, b)| {
            a.iter().chain(b).any(|x| x.abs() > 1e-3)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_hermitian(n in 1usize..=3, cutoff in 1usize..6, g in 0.0..1.0f64, om in 0.0..0.5f64, wx in 0.5..1.5f64) {
        let mut p = ModelParams::resonant(n, g, om);
        p.omega_x = wx;
        let space = SpaceConfig::new(cutoff, n);
        let h = model::build_dicke_hamiltonian(&p, &space).unwrap();
        prop_assert!(linalg::hermitian_deviation(h.matrix()) <= 1e-13);
        let v = model::build_drive_operator(&p, &space).unwrap();
        prop_assert!(linalg::hermitian_deviation(v.matrix()) <= 1e-13);
    }

    #[test]
    fn partial_trace_of_product((xr, xi) in amplitudes(4), (cr, ci) in amplitudes(4)) {
        let space = SpaceConfig::new(3, 2);
        let rx = state_from(&xr, &xi);
        let rc = state_from(&cr, &ci);
        let joint = DensityMatrix::new(model::product_operator(rx.matrix(), rc.matrix())).unwrap();
        let bx = model::partial_trace_cavity(&joint, &space).unwrap();
        let bc = model::partial_trace_emitters(&joint, &space).unwrap();
        prop_assert!(linalg::max_abs((bx.matrix() - rx.matrix()).as_ref()) <= 1e-12);
        prop_assert!(linalg::max_abs((bc.matrix() - rc.matrix()).as_ref()) <= 1e-12);
    }

    #[test]
    fn trace_distance_is_a_metric((ar, ai) in amplitudes(3), (br, bi) in amplitudes(3), (cr, ci) in amplitudes(3)) {
        let (a, b, c) = (state_from(&ar, &ai), state_from(&br, &bi), state_from(&cr, &ci));
        let ab = measures::trace_distance(&a, &b).unwrap();
        let ba = measures::trace_distance(&b, &a).unwrap();
        let ac = measures::trace_distance(&a, &c).unwrap();
        let cb = measures::trace_distance(&c, &b).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!(measures::trace_distance(&a, &a).unwrap() <= 1e-12);
    }

    #[test]
    fn rates_conserve_probability(g in 0.0..0.4f64, om in 0.0..0.05f64, t in 0.0..0.5f64) {
        let spectral = SpectralModel { temperature: t, ..SpectralModel::default() };
        let sys = OpenSystem::new(ModelParams::resonant(1, g, om), SpaceConfig::new(3, 1), spectral, &BasisOptions::for_cutoff(3)).unwrap();
        let w = sys.rates();
        prop_assert!(dissipator::column_sum_deviation(w) <= 1e-12);
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                if i != j {
                    prop_assert!(w[(i, j)] >= 0.0);
                }
            }
        }
        prop_assert!(dissipator::coherence_hermiticity_deviation(sys.coherence()) <= 1e-12);
        let p = dynamics::steady_state(w).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn detailed_balance(w in 0.01..3.0f64, t in 0.02..2.0f64) {
        let s = SpectralModel { temperature: t, ..SpectralModel::default() };
        let ratio = dissipator::chi(-w, &s) / dissipator::chi(w, &s);
        let boltzmann = (-w / t).exp();
        prop_assert!((ratio - boltzmann).abs() <= 1e-12 * boltzmann.max(1e-300));
    }

    #[test]
    fn husimi_is_nonnegative((r, i) in amplitudes(6)) {
        let rho = state_from(&r, &i);
        let field = measures::husimi(&rho, &AlphaGrid::square(2.5, 9));
        prop_assert!(field.q.iter().all(|&q| q >= -1e-15));
    }

    #[test]
    fn semiclassical_invariants(th in prop::collection::vec(0.0..std::f64::consts::PI, 2), ph in prop::collection::vec(0.0..6.3f64, 2), ar in -0.5..0.5f64, ai in -0.5..0.5f64, om in 0.0..0.2f64) {
        let p = SemiclassicalParams::resonant(2, 0.1, om, 0.01);
        let s0 = SemiclassicalState::on_bloch_sphere(C64::new(ar, ai), &th, &ph);
        let traj = semiclassical::integrate(&s0, &p, 200.0, 0.01, 1000).unwrap();
        prop_assert!(traj.max_length_drift <= 1e-8, "{}", traj.max_length_drift);
        prop_assert!(traj.max_c_drift <= 1e-8);
    }
}

#[test]
fn reconstruction_preserves_trace() {
    let sys = OpenSystem::new(
        ModelParams::resonant(1, 0.2, 0.02),
        SpaceConfig::new(3, 1),
        SpectralModel::default(),
        &BasisOptions::for_cutoff(3),
    )
    .unwrap();
    let dim = sys.space.dim();
    let psi: Vec<C64> = (0..dim)
        .map(|k| C64::new(1.0 + k as f64, 0.5 - k as f64))
        .collect();
    let fd = dynamics::project_initial(&DensityMatrix::pure(&psi).unwrap(), &sys.basis).unwrap();
    let dt = sys.default_dt();
    let mut worst = 0.0f64;
    dynamics::for_each_uniform(&fd, sys.rates(), sys.coherence(), dt, 200, |_, st| {
        let m: CMat = dynamics::reconstruct_operator(st, &sys.basis, None);
        worst = worst.max((linalg::trace(m.as_ref()).re - 1.0).abs());
        Ok(())
    })
    .unwrap();
    assert!(worst <= 1e-10, "{worst}");
}
