use num_complex::Complex64;
use proptest::prelude::*;

use dissipative_gates::dfs::{dfs_basis, DfsOptions};
use dissipative_gates::evolve::{p0_trace, propagator, rk4_evolve};
use dissipative_gates::gates::{gate_metrics, GateSpec, QubitInput};
use dissipative_gates::hamiltonian::{build_h_cond, build_h_total, decay_operator, RabiMatrix, SystemParams};
use dissipative_gates::hilbert::{HilbertSpace, State};
use dissipative_gates::linalg::max_abs;
use dissipative_gates::trajectory::JumpConfig;

fn state(re: &[f64], im: &[f64]) -> State {
    State::from_iterator(re.len(), re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b))).normalize()
}

fn params() -> impl Strategy<Value = SystemParams> {
    (0.2f64..5.0, 0.5f64..30.0).prop_map(|(g3, gamma3)| SystemParams::new(g3, gamma3, RabiMatrix::zero()).unwrap())
}

fn rabi() -> impl Strategy<Value = RabiMatrix> {
    prop::array::uniform4(-0.1f64..0.1).prop_map(|v| RabiMatrix::real([[v[0], v[1]], [v[2], v[3]]]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn p0_is_non_increasing(
        p in params(),
        w in rabi(),
        re in prop::collection::vec(-1.0f64..1.0, 48),
        im in prop::collection::vec(-1.0f64..1.0, 48),
    ) {
        let s = HilbertSpace::new(2).unwrap();
        let h = build_h_total(&s, &p.with_omega(w));
        let psi = state(&re, &im);
        let (_, p0) = p0_trace(&h, &psi, 20.0, 40).unwrap();
        prop_assert!(p0[0] <= 1.0 + 1e-12);
        for pair in p0.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn decay_is_the_only_non_hermitian_part(p in params(), w in rabi(), n_max in 1usize..4) {
        let s = HilbertSpace::new(n_max).unwrap();
        let h = build_h_total(&s, &p.with_omega(w));
        let anti = (&h - h.adjoint()) * Complex64::new(0.0, 0.5);
        let expected = decay_operator(&s) * Complex64::new(p.gamma3 / 2.0, 0.0);
        prop_assert!(max_abs(&(anti - expected)) < 1e-14);
    }

    #[test]
    fn standard_jumps_unravel_the_decay(p in params(), d in 0usize..3) {
        let s = HilbertSpace::new(2).unwrap();
        let cfg = JumpConfig::standard(&s, &p, d, 1, 0, 1.0).unwrap();
        prop_assert!(cfg.check_consistency(&build_h_cond(&s, &p)).is_ok());
    }

    #[test]
    fn gate_metrics_are_probabilities(w in 0.001f64..0.5, k in 0usize..5) {
        let s = HilbertSpace::new(2).unwrap();
        let input = QubitInput::reporting_set().swap_remove(k);
        let r = gate_metrics(&GateSpec::cnot(&SystemParams::default(), w).unwrap(), &s, &input).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.p0));
        prop_assert!((0.0..=1.0).contains(&r.fidelity));
    }

    #[test]
    fn propagator_matches_rk4(
        w in rabi(),
        t in 0.1f64..2.0,
        re in prop::collection::vec(-1.0f64..1.0, 32),
        im in prop::collection::vec(-1.0f64..1.0, 32),
    ) {
        let s = HilbertSpace::new(1).unwrap();
        let p = SystemParams::default().with_omega(w);
        let h = build_h_total(&s, &p);
        let psi = state(&re, &im);
        let a = propagator(&h, t).unwrap() * &psi;
        let b = rk4_evolve(&h, &psi, t, 1e-3 / p.gamma3);
        prop_assert!((a - b).norm() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn dfs_inventory_does_not_depend_on_rates(p in params(), n_max in 1usize..4) {
        let s = HilbertSpace::new(n_max).unwrap();
        let d = dfs_basis(&build_h_cond(&s, &p), &s, &DfsOptions::default()).unwrap();
        prop_assert_eq!(d.dfs_basis.len(), n_max + 5);
        let psi = s.antisymmetric_state(0).unwrap();
        prop_assert!(((&d.projector * &psi) - &psi).norm() < 1e-10);
    }
}
