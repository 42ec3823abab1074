mod common;

use common::*;
use proptest::prelude::*;
use qcrb::algebra::{propagate, ComplexMatrix, C64};
use qcrb::liouvillian::{build_generalized, build_lindblad, leading_eigenvalue, spectral_gap, steady_state};
use qcrb::model::{two_level, ParameterVector};

fn perturbed(th: &ParameterVector, eps: &[f64]) -> ParameterVector {
    let mut out = th.clone();
    for (i, e) in eps.iter().enumerate() {
        out = out.with_value(i, th.values()[i] * (1.0 + e));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trace_preserved_at_coincidence(seed in any::<u64>()) {
        let m = random_model(seed, 3, 2);
        let th = m.parameters().clone();
        let rho = random_density(&mut rng(seed ^ 1), 3);
        let out = build_generalized(&m, &th, &th).unwrap().apply(&rho);
        prop_assert!(out.trace().norm() <= 1e-11 * rho.frobenius_norm());
    }

    #[test]
    fn evolution_keeps_a_density_matrix(seed in any::<u64>(), t in 0.0f64..20.0) {
        let m = random_model(seed, 3, 2);
        let th = m.parameters().clone();
        let rho = random_density(&mut rng(seed ^ 2), 3);
        let gen = build_lindblad(&m, &th).unwrap();
        let out = ComplexMatrix::unvectorize(&propagate(gen.matrix(), &rho.vectorize(), t).unwrap(), 3);
        prop_assert!(out.hermitian_deviation() <= 1e-9);
        prop_assert!((out.trace() - C64::new(1.0, 0.0)).norm() <= 1e-9);
        prop_assert!(min_eigenvalue(&out) >= -1e-8);
    }

    #[test]
    fn leading_eigenvalue_invariants(seed in any::<u64>(), e1 in prop::array::uniform2(-0.01f64..0.01), e2 in prop::array::uniform2(-0.01f64..0.01)) {
        let m = random_model(seed, 3, 2);
        let th = m.parameters().clone();
        prop_assert!(leading_eigenvalue(&m, &th, &th).unwrap().lambda_s.norm() <= 1e-10);
        let (t1, t2) = (perturbed(&th, &e1), perturbed(&th, &e2));
        let l12 = leading_eigenvalue(&m, &t1, &t2).unwrap().lambda_s;
        let l21 = leading_eigenvalue(&m, &t2, &t1).unwrap().lambda_s;
        prop_assert!(l12.re <= 1e-12, "Re λ_s = {}", l12.re);
        prop_assert!((l21 - l12.conj()).norm() <= 1e-10 * l12.norm().max(1e-6));
    }
}

#[test]
fn two_level_steady_state_and_gap() {
    let m = two_level(0.0, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let rho = steady_state(&m, &th).unwrap();
    assert!((rho[(1, 1)].re - 4.0 / 9.0).abs() <= 1e-10);
    // decay rates κ/2 and 3κ/4 at resonance with Ω ≫ κ/4
    assert!((spectral_gap(&m, &th).unwrap() - 0.25).abs() <= 1e-10);
}

#[test]
fn kappa_perturbation_is_contractive_and_symmetric() {
    let m = two_level(0.0, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let (p, q) = (th.with_value(2, 0.501), th.with_value(2, 0.499));
    let a = leading_eigenvalue(&m, &p, &q).unwrap().lambda_s;
    let b = leading_eigenvalue(&m, &q, &p).unwrap().lambda_s;
    assert!(a.re < 0.0);
    assert!((a - b.conj()).norm() <= 1e-14);
}
