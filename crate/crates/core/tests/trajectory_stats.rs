mod common;

use common::*;
use qcrb::algebra::{propagate, ComplexMatrix, C64};
use qcrb::liouvillian::{build_lindblad, steady_state};
use qcrb::model::{two_level, InitialState, ModelSpec, ParamEntry, ParamMatrix, ParameterVector, Transform};
use qcrb::trajectories::*;

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn excited() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]])
}

#[test]
fn single_decay_waits_are_exponential() {
    // Ω = 0: one photon, emitted after an Exp(κ) wait
    let m = two_level(0.0, 0.0, 1.0).unwrap();
    let th = m.parameters().clone();
    let waits: Vec<f64> = (0..2000)
        .map(|k| {
            let rec = simulate_counting(&m, &th, &excited(), 60.0, 0.0, k).unwrap();
            assert_eq!(rec.jump_times.len(), 1);
            rec.jump_times[0]
        })
        .collect();
    let (mean, se) = mean_se(&waits);
    assert!((mean - 1.0).abs() <= 3.0 * se, "{mean} ± {se}");
    let over_two = waits.iter().filter(|&&w| w > 2.0).count() as f64 / 2000.0;
    let p = (-2.0f64).exp();
    assert!((over_two - p).abs() <= 3.0 * (p * (1.0 - p) / 2000.0).sqrt());
}

#[test]
fn steady_jump_rate() {
    let m = two_level(0.0, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let rho = steady_state(&m, &th).unwrap();
    let rates: Vec<f64> = (0..100)
        .map(|k| simulate_counting(&m, &th, &rho, 300.0, 0.0, 77 + k).unwrap().jump_times.len() as f64 / 300.0)
        .collect();
    let (mean, se) = mean_se(&rates);
    assert!((mean - 2.0 / 9.0).abs() <= 3.0 * se, "{mean} ± {se}");
}

#[test]
fn interval_histogram_follows_waiting_time_density() {
    let m = two_level(0.0, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let rho = steady_state(&m, &th).unwrap();
    let mut intervals = Vec::new();
    for k in 0..20 {
        let rec = simulate_counting(&m, &th, &rho, 2000.0, 0.0, 500 + k).unwrap();
        intervals.extend(rec.jump_times.windows(2).map(|w| w[1] - w[0]));
    }
    let n = intervals.len() as f64;
    // closed form at resonance: w(τ) = (κΩ²/Ω′²) e^{−κτ/2} sin²(Ω′τ/2)
    let (o, kappa) = (1.0f64, 0.5f64);
    let op = (o * o - kappa * kappa / 4.0).sqrt();
    let w = |t: f64| kappa * o * o / (op * op) * (-kappa * t / 2.0).exp() * (op * t / 2.0).sin().powi(2);
    let width = 1.0;
    for b in 0..15 {
        let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
        let steps = 200;
        let p: f64 = (0..steps).map(|i| w(lo + (i as f64 + 0.5) * width / steps as f64)).sum::<f64>() * width / steps as f64;
        let expected = n * p;
        let observed = intervals.iter().filter(|&&t| t >= lo && t < hi).count() as f64;
        assert!((observed - expected).abs() <= 4.0 * expected.sqrt() + 2.0, "bin {b}: {observed} vs {expected}");
    }
}

#[test]
fn renewal_oracle_on_five_points() {
    let opts = WtdOptions { n_grid: 32768, ..WtdOptions::default() };
    for delta in [-2.0, -1.0, 0.0, 0.5, 1.5] {
        let m = two_level(delta, 1.0, 0.5).unwrap();
        let th = m.parameters().clone();
        let cfg = CfiConfig::new(Scheme::Counting, 500.0, 2000, 1234);
        let est = cfi_rates(&m, &th, &[0, 1, 2], &cfg).unwrap();
        for (a, e) in est.iter().enumerate() {
            let w = wtd_fisher_oracle(delta, 1.0, 0.5, a, &opts).unwrap().value;
            assert!((e.value - w).abs() <= (3.0 * e.std_error).max(1e-12), "Δ={delta} a={a}: {} ± {} vs {w}", e.value, e.std_error);
        }
    }
}

/// Qubit with zero jump operator: homodyne output is pure noise.
fn null_model() -> ModelSpec {
    let params = ParameterVector::from_pairs(&[("theta", 1.0)]).unwrap();
    let mut h = ParamMatrix::zeros(2);
    *h.entry_mut(1, 1) = ParamEntry::term(0, C64::new(1.0, 0.0), Transform::Linear);
    ModelSpec::new(params, h, vec![ParamMatrix::zeros(2)], InitialState::Pure(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])).unwrap()
}

#[test]
fn null_model_increments_are_wiener() {
    let m = null_model();
    let th = m.parameters().clone();
    let dt = 1e-4;
    let rho0 = m.initial_density(&th).unwrap();
    let rec = simulate_homodyne(&m, &th, &rho0, 10.0, 0.0, dt, 0.0, 3).unwrap();
    assert_eq!(rec.increments.len(), 100_000);
    let var = rec.increments.iter().map(|x| x * x).sum::<f64>() / rec.increments.len() as f64;
    assert!((var / dt - 1.0).abs() <= 0.02, "{}", var / dt);
}

#[test]
fn mean_homodyne_signal_matches_steady_state() {
    // off resonance, so that Re ρ_ge and the φ = 0 signal are nonzero
    let m = two_level(0.8, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let rho = steady_state(&m, &th).unwrap();
    let expected = 0.5f64.sqrt() * 2.0 * rho[(0, 1)].re;
    let dt = default_homodyne_step(&m, &th, 500.0).unwrap();
    let means: Vec<f64> = (0..16)
        .map(|k| {
            let rec = simulate_homodyne(&m, &th, &rho, 500.0, 0.0, dt, 0.0, 40 + k).unwrap();
            rec.increments.iter().sum::<f64>() / 500.0
        })
        .collect();
    let (mean, se) = mean_se(&means);
    assert!(expected.abs() > 0.05, "{expected}");
    assert!((mean - expected).abs() <= 4.0 * se, "{mean} ± {se} vs {expected}");
}

#[test]
fn averaged_conditional_state_follows_master_equation() {
    let m = two_level(0.3, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let g = ground_state();
    let rho0 = ComplexMatrix::outer(&g, &g);
    let (t, dt, n) = (2.0, 1e-3, 400);
    let kernel = HomodyneKernel::new(&m, &th, dt, 0.0).unwrap();
    let samples: Vec<ComplexMatrix> = (0..n)
        .map(|k| {
            let rec = simulate_homodyne(&m, &th, &rho0, t, 0.0, dt, 0.0, 900 + k).unwrap();
            let mut f = HomodyneFilter::new(kernel.coordinates(&rho0), 2, 0);
            for &dy in &rec.increments {
                f.advance(&kernel, dy);
            }
            let rho = kernel.density(f.state());
            let tr = rho.trace();
            rho.scale(C64::new(1.0, 0.0) / tr)
        })
        .collect();
    let exact = ComplexMatrix::unvectorize(&propagate(build_lindblad(&m, &th).unwrap().matrix(), &rho0.vectorize(), t).unwrap(), 2);
    for (i, j) in [(1, 1), (0, 1)] {
        for part in [0, 1] {
            let pick = |z: C64| if part == 0 { z.re } else { z.im };
            let xs: Vec<f64> = samples.iter().map(|r| pick(r[(i, j)])).collect();
            let (mean, se) = mean_se(&xs);
            let target = pick(exact[(i, j)]);
            assert!((mean - target).abs() <= 4.0 * se + 5e-3, "ρ[{i}{j}] part {part}: {mean} ± {se} vs {target}");
        }
    }
}

#[test]
fn records_reproducible_and_likelihoods_finite() {
    let m = two_level(0.5, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let rho = steady_state(&m, &th).unwrap();
    let a = simulate_counting(&m, &th, &rho, 100.0, 10.0, 5).unwrap();
    assert_eq!(a, simulate_counting(&m, &th, &rho, 100.0, 10.0, 5).unwrap());
    assert_ne!(a, simulate_counting(&m, &th, &rho, 100.0, 10.0, 6).unwrap());
    assert!(log_likelihood_counting(&a, &m, &th.with_value(0, 0.6)).unwrap().is_finite());
    let h = simulate_homodyne(&m, &th, &rho, 20.0, 2.0, 1e-3, 0.0, 5).unwrap();
    assert_eq!(h, simulate_homodyne(&m, &th, &rho, 20.0, 2.0, 1e-3, 0.0, 5).unwrap());
    assert!(log_likelihood_homodyne(&h, &m, &th).unwrap().is_finite());
    let text = Record::Homodyne(h.clone()).to_json();
    assert_eq!(Record::from_json(&text).unwrap(), Record::Homodyne(h));
}

#[test]
fn homodyne_step_bound_enforced() {
    let m = two_level(3.0, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let rho = steady_state(&m, &th).unwrap();
    let bound = homodyne_step_bound(&m, &th).unwrap();
    let r = simulate_homodyne(&m, &th, &rho, 1.0, 0.0, 2.0 * bound, 0.0, 1);
    assert!(matches!(r, Err(qcrb::Error::StepTooLarge { .. })));
}

#[test]
fn estimates_repeat_exactly() {
    let m = two_level(1.0, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    for scheme in [Scheme::Counting, Scheme::Homodyne { phi: 0.0, dt: None }] {
        let cfg = CfiConfig::new(scheme, 30.0, 16, 99);
        let a = cfi_rate(&m, &th, 1, &cfg).unwrap();
        let b = cfi_rate(&m, &th, 1, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }
}

#[test]
fn homodyne_cfi_stable_under_step_halving() {
    let m = two_level(0.5, 1.0, 0.5).unwrap();
    let th = m.parameters().clone();
    let dt = 1e-3;
    assert!(dt <= homodyne_step_bound(&m, &th).unwrap());
    let est = |dt: f64| {
        let cfg = CfiConfig::new(Scheme::Homodyne { phi: 0.0, dt: Some(dt) }, 50.0, 300, 17);
        cfi_rate(&m, &th, 0, &cfg).unwrap()
    };
    let (a, b) = (est(dt), est(0.5 * dt));
    let tol = 3.0 * a.std_error.hypot(b.std_error);
    assert!((a.value - b.value).abs() <= tol, "{} vs {} (tol {tol})", a.value, b.value);
}
