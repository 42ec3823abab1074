mod common;

use common::*;
use proptest::prelude::*;
use qcrb::qfi::{finite_time_qfi, qfi_rate, qfi_rate_matrix, StencilConfig};
use qcrb::model::two_level;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn diagonal_rates_nonnegative(seed in any::<u64>(), dim in 2usize..4, jumps in 1usize..3) {
        let m = random_model(seed, dim, jumps);
        let th = m.parameters().clone();
        for a in 0..th.len() {
            let v = qfi_rate(&m, &th, a, a, &StencilConfig::default()).unwrap().value;
            prop_assert!(v >= -1e-8, "I[{a}] = {v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn slot_symmetry(delta in -3.0f64..3.0, omega in 0.3f64..2.0, kappa in 0.2f64..1.5) {
        let m = two_level(delta, omega, kappa).unwrap();
        let th = m.parameters().clone();
        let s = StencilConfig::default();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let ab = qfi_rate(&m, &th, a, b, &s).unwrap().value;
            let ba = qfi_rate(&m, &th, b, a, &s).unwrap().value;
            let scale = qfi_rate(&m, &th, a, a, &s).unwrap().value.max(qfi_rate(&m, &th, b, b, &s).unwrap().value);
            prop_assert!((ab - ba).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn matrix_symmetric_positive_semidefinite(seed in any::<u64>()) {
        let m = random_model(seed, 3, 2);
        let th = m.parameters().clone();
        let f = qfi_rate_matrix(&m, &th, &[0, 1], &StencilConfig::default()).unwrap();
        let v = f.values();
        prop_assert_eq!(v[0][1], v[1][0]);
        let ev = f.eigenvalues().unwrap();
        prop_assert!(ev[0] >= -1e-8 * ev[1].abs().max(1.0));
    }
}

#[test]
fn stencil_halving_is_stable_on_the_grid() {
    let s = StencilConfig::default();
    let half = StencilConfig { h_rel: s.h_rel / 2.0, h_min: s.h_min / 2.0 };
    for delta in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let m = two_level(delta, 1.0, 0.5).unwrap();
        let th = m.parameters().clone();
        for a in 0..3 {
            let full = qfi_rate(&m, &th, a, a, &s).unwrap();
            let fine = qfi_rate(&m, &th, a, a, &half).unwrap().value;
            assert!((full.value - fine).abs() <= 1e-3 * full.value, "Δ={delta} a={a}: {} vs {fine}", full.value);
            assert!(!full.flagged("richardson"));
        }
    }
}

#[test]
fn finite_time_total_grows_linearly_for_the_atom() {
    let m = two_level(0.5, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let rho = m.initial_density(&th).unwrap();
    let s = StencilConfig::default();
    let rate = qfi_rate(&m, &th, 1, 1, &s).unwrap().value;
    let i1 = finite_time_qfi(&m, &th, &rho, 200.0, 1, 1, &s).unwrap();
    let i2 = finite_time_qfi(&m, &th, &rho, 400.0, 1, 1, &s).unwrap();
    assert!(((i2.value - i1.value) / 200.0 - rate).abs() <= 1e-3 * rate);
    // the steady state is mixed, so the totals carry the heuristic marker
    assert!(i1.flagged("heuristic"));
}
