//! Independent cross-checks.
//!
//! The waiting-time oracle uses the renewal structure of the two-level atom:
//! every click resets it to |g⟩, so the record is a sequence of i.i.d.
//! intervals with density w(τ) = κ|⟨e|e^{−iH_eff τ}|g⟩|² and the counting CFI
//! rate equals the per-interval information divided by E[τ].
//!
//! The brute-force oracle sums the joint-state overlap over every string of
//! first-order effect operators.

use crate::qfi::{FisherEstimate, FisherMeta, Method};
use crate::algebra::{expm, inner, ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::model::{effect_operators, two_level, EffectOperators, ModelSpec, ParameterVector};

pub const MAX_BRUTE_FORCE_STEPS: usize = 12;

/// Survival below which the interval density is truncated.
const TAIL_SURVIVAL: f64 = 1e-12;
const GRID_TOLERANCE: f64 = 1e-4;
const BRUTE_FORCE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WtdOptions {
    /// `None` extends the grid until the survival probability is negligible.
    pub tau_max: Option<f64>,
    /// Simpson intervals; rounded up to even.
    pub n_grid: usize,
    /// Central-difference step in the parameter.
    pub fd_step: f64,
}

impl Default for WtdOptions {
    fn default() -> Self {
        WtdOptions { tau_max: None, n_grid: 8192, fd_step: 1e-5 }
    }
}

fn no_jump_generator(theta: &ParameterVector) -> Result<ComplexMatrix> {
    let v = theta.values();
    let m = two_level(v[0], v[1], v[2])?;
    Ok(m.effective_hamiltonian(theta)?.scale(C64::new(0.0, -1.0)))
}

/// κ|⟨e|e^{−iH_eff τ}|g⟩|² at each τ.
fn density_on_grid(theta: &ParameterVector, taus: &[f64]) -> Result<Vec<f64>> {
    let gen = no_jump_generator(theta)?;
    let kappa = theta.values()[2];
    taus.iter()
        .map(|&t| {
            let u = expm(&gen.scale_real(t))?;
            Ok(kappa * u[(1, 0)].norm_sqr())
        })
        .collect()
}

fn survival(gen: &ComplexMatrix, t: f64) -> Result<f64> {
    let u = expm(&gen.scale_real(t))?;
    Ok(u[(0, 0)].norm_sqr() + u[(1, 0)].norm_sqr())
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    let mut s = values[0] + values[n];
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

fn check_point(delta: f64, omega: f64, kappa: f64) -> Result<ParameterVector> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("waiting-time oracle needs Ω > 0, got {omega}")));
    }
    Ok(two_level(delta, omega, kappa)?.parameters().clone())
}

fn resolve_tau_max(theta: &ParameterVector, opts: &WtdOptions) -> Result<f64> {
    if let Some(t) = opts.tau_max {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("tau_max must be > 0, got {t}")));
        }
        return Ok(t);
    }
    let gen = no_jump_generator(theta)?;
    let mut t = 10.0 / theta.values()[2];
    for _ in 0..60 {
        if survival(&gen, t)? < TAIL_SURVIVAL {
            return Ok(t);
        }
        t *= 1.5;
    }
    Err(Error::NoConvergence { iterations: 60 })
}

fn grid(tau_max: f64, n: usize) -> (Vec<f64>, f64) {
    let h = tau_max / n as f64;
    ((0..=n).map(|k| k as f64 * h).collect(), h)
}

/// ∫w dτ and E[τ] = ∫τ w dτ of the interval density.
pub fn waiting_time_moments(delta: f64, omega: f64, kappa: f64, opts: &WtdOptions) -> Result<(f64, f64)> {
    let theta = check_point(delta, omega, kappa)?;
    let tau_max = resolve_tau_max(&theta, opts)?;
    let n = opts.n_grid.max(2).next_multiple_of(2);
    let (taus, h) = grid(tau_max, n);
    let w = density_on_grid(&theta, &taus)?;
    let tw: Vec<f64> = taus.iter().zip(&w).map(|(t, w)| t * w).collect();
    Ok((simpson(&w, h), simpson(&tw, h)))
}

fn information_per_interval(theta: &ParameterVector, alpha: usize, tau_max: f64, n: usize, step: f64) -> Result<(f64, f64)> {
    let (taus, h) = grid(tau_max, n);
    let w = density_on_grid(theta, &taus)?;
    let wp = density_on_grid(&theta.shifted(alpha, step), &taus)?;
    let wm = density_on_grid(&theta.shifted(alpha, -step), &taus)?;
    let integrand: Vec<f64> = (0..=n)
        .map(|k| {
            if w[k] <= f64::MIN_POSITIVE {
                0.0
            } else {
                let d = (wp[k] - wm[k]) / (2.0 * step);
                d * d / w[k]
            }
        })
        .collect();
    let tw: Vec<f64> = taus.iter().zip(&w).map(|(t, w)| t * w).collect();
    Ok((simpson(&integrand, h), simpson(&tw, h)))
}

/// Counting CFI rate of the two-level atom from the renewal property.
/// `alpha` indexes (Δ, Ω, κ).
pub fn wtd_fisher_oracle(delta: f64, omega: f64, kappa: f64, alpha: usize, opts: &WtdOptions) -> Result<FisherEstimate> {
    let theta = check_point(delta, omega, kappa)?;
    if alpha >= 3 {
        return Err(Error::InvalidParameter(format!("parameter index {alpha} out of range for (Δ, Ω, κ)")));
    }
    if !(opts.fd_step > 0.0) {
        return Err(Error::InvalidParameter("finite-difference step must be > 0".into()));
    }
    let tau_max = resolve_tau_max(&theta, opts)?;
    let n = opts.n_grid.max(2).next_multiple_of(2);
    let (coarse, _) = information_per_interval(&theta, alpha, tau_max, n, opts.fd_step)?;
    let (fine, mean) = information_per_interval(&theta, alpha, tau_max, 2 * n, opts.fd_step)?;
    let change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if change > GRID_TOLERANCE && (fine - coarse).abs() > 1e-14 {
        return Err(Error::GridTooCoarse { change });
    }
    Ok(FisherEstimate {
        value: fine / mean,
        params: (alpha, alpha),
        method: Method::WtdOracle,
        std_error: 0.0,
        meta: FisherMeta { h: Some(opts.fd_step), ..Default::default() },
    })
}

fn string_sum(e1: &EffectOperators, e2: &EffectOperators, a1: &[C64], a2: &[C64], depth: usize) -> C64 {
    if depth == 0 {
        return inner(a2, a1);
    }
    e1.all()
        .zip(e2.all())
        .map(|(w1, w2)| string_sum(e1, e2, &w1.mul_vec(a1), &w2.mul_vec(a2), depth - 1))
        .sum()
}

/// ⟨ψ;θ₂|ψ;θ₁⟩ after `n_steps` effect-operator steps, by explicit summation
/// over all outcome strings; cross-checked against the discrete two-sided map.
pub fn brute_force_overlap(
    m: &ModelSpec,
    theta1: &ParameterVector,
    theta2: &ParameterVector,
    psi0: &[C64],
    n_steps: usize,
    dt: f64,
) -> Result<C64> {
    if n_steps > MAX_BRUTE_FORCE_STEPS {
        return Err(Error::TooManySteps { steps: n_steps, max: MAX_BRUTE_FORCE_STEPS });
    }
    if psi0.len() != m.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, model dimension is {}",
            psi0.len(),
            m.dimension()
        )));
    }
    let e1 = effect_operators(m, theta1, dt)?;
    let e2 = effect_operators(m, theta2, dt)?;
    let brute = string_sum(&e1, &e2, psi0, psi0, n_steps);

    let mut rho = ComplexMatrix::outer(psi0, psi0);
    for _ in 0..n_steps {
        let mut next = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for (w1, w2) in e1.all().zip(e2.all()) {
            next += &(&(w1 * &rho) * &w2.adjoint());
        }
        rho = next;
    }
    let mapped = rho.trace();
    if (brute - mapped).norm() > BRUTE_FORCE_TOLERANCE * mapped.norm().max(1.0) {
        return Err(Error::OracleMismatch(format!("string sum {brute} vs two-sided map {mapped}")));
    }
    Ok(mapped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_density_normalized_with_mean_rate() {
        let (norm, mean) = waiting_time_moments(0.0, 1.0, 0.5, &WtdOptions::default()).unwrap();
        assert!((norm - 1.0).abs() < 1e-8, "{norm}");
        assert!((mean - 4.5).abs() < 1e-6, "{mean}");
    }

    #[test]
    fn closed_form_density() {
        // w(τ) = (κΩ²/Ω′²) e^{−κτ/2} sin²(Ω′τ/2) at resonance
        let (o, k) = (1.0f64, 0.5f64);
        let op = (o * o - k * k / 4.0).sqrt();
        let theta = two_level(0.0, o, k).unwrap().parameters().clone();
        let taus = [0.3, 1.7, 6.0, 13.0];
        let w = density_on_grid(&theta, &taus).unwrap();
        for (t, w) in taus.iter().zip(w) {
            let exact = k * o * o / (op * op) * (-k * t / 2.0).exp() * (op * t / 2.0).sin().powi(2);
            assert!((w - exact).abs() < 1e-14, "{t}: {w} vs {exact}");
        }
    }

    #[test]
    fn resonance_information() {
        let o = WtdOptions::default();
        let d = wtd_fisher_oracle(0.0, 1.0, 0.5, 0, &o).unwrap();
        let om = wtd_fisher_oracle(0.0, 1.0, 0.5, 1, &o).unwrap();
        let ka = wtd_fisher_oracle(0.0, 1.0, 0.5, 2, &o).unwrap();
        assert!(d.value.abs() < 1e-9, "{}", d.value);
        assert!((om.value - 8.0).abs() < 1e-4, "{}", om.value);
        assert!((ka.value - 8.0 / 9.0).abs() < 1e-5, "{}", ka.value);
    }

    #[test]
    fn brute_force_trivial_cases() {
        let m = two_level(0.0, 1.0, 0.5).unwrap();
        let g = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let th = m.parameters();
        assert_eq!(brute_force_overlap(&m, th, th, &g, 0, 0.05).unwrap(), C64::new(1.0, 0.0));
        let same = brute_force_overlap(&m, th, th, &g, 10, 0.05).unwrap();
        assert!((same - C64::new(1.0, 0.0)).norm() < 10.0 * 0.05 * 0.05);
        assert!(matches!(brute_force_overlap(&m, th, th, &g, 13, 0.05), Err(Error::TooManySteps { .. })));
    }
}
