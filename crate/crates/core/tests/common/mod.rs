//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use qcrb::algebra::{ComplexMatrix, C64};
use qcrb::model::{InitialState, ModelSpec, ParamEntry, ParamMatrix, ParameterVector, Term, Transform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c(r: &mut ChaCha8Rng) -> C64 {
    let z: f64 = r.sample(rand_distr::StandardNormal);
    let w: f64 = r.sample(rand_distr::StandardNormal);
    C64::new(z, w)
}

pub fn random_matrix(r: &mut ChaCha8Rng, dim: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| gaussian_c(r) * scale)
}

pub fn random_hermitian(r: &mut ChaCha8Rng, dim: usize, scale: f64) -> ComplexMatrix {
    let a = random_matrix(r, dim, scale);
    (&a + &a.adjoint()).scale_real(0.5)
}

/// Random density matrix of full rank.
pub fn random_density(r: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let a = random_matrix(r, dim, 1.0);
    let rho = &a * &a.adjoint();
    let t = rho.trace();
    rho.scale(C64::new(1.0, 0.0) / t)
}

fn affine(constant: &ComplexMatrix, slope: &ComplexMatrix, param: usize) -> ParamMatrix {
    let dim = constant.rows();
    let mut m = ParamMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            *m.entry_mut(i, j) = ParamEntry {
                constant: constant[(i, j)],
                terms: vec![Term { param, coeff: slope[(i, j)], transform: Transform::Linear }],
            };
        }
    }
    m
}

/// H = H₀ + a·H₁ and L_c = C_c + b·D_c with Gaussian entries; parameters
/// `a` and `b` drawn from [0.5, 1.5].
pub fn random_model(seed: u64, dim: usize, n_jumps: usize) -> ModelSpec {
    let mut r = rng(seed);
    let a: f64 = r.random_range(0.5..1.5);
    let b: f64 = r.random_range(0.5..1.5);
    let params = ParameterVector::new(["a", "b"], vec![a, b]).unwrap();
    let h0 = random_hermitian(&mut r, dim, 1.0);
    let h1 = random_hermitian(&mut r, dim, 0.5);
    let h = affine(&h0, &h1, 0);
    let jumps = (0..n_jumps)
        .map(|_| {
            let c = random_matrix(&mut r, dim, 0.5);
            let d = random_matrix(&mut r, dim, 0.3);
            affine(&c, &d, 1)
        })
        .collect();
    ModelSpec::new(params, h, jumps, InitialState::Steady).unwrap()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(rho: &ComplexMatrix) -> f64 {
    qcrb::algebra::eig_general(rho).unwrap().eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
}

pub fn ground_state() -> Vec<C64> {
    vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}
