//! Quantum Fisher information of the joint emitter-plus-field state.
//!
//! Long-time rate: I_αβ/T → 4 ∂¹_α ∂²_β Re λ_s(θ₁,θ₂) at θ₁ = θ₂ = θ.
//! Finite time:    I_αβ(T) = 4 ∂¹_α ∂²_β log|Tr ρ_{θ₁,θ₂}(T)|.
//!
//! Both derivatives use the same four-point mixed central stencil with the
//! α displacement applied to the first slot and the β displacement to the
//! second, followed by a step-halving self-check.

use serde::{Deserialize, Serialize};

use crate::algebra::{propagate, ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::liouvillian::{build_generalized, leading_eigenvalue_with_reference, spectral_gap};
use crate::model::{ModelSpec, ParameterVector};

/// Relative disagreement between the h and h/2 stencils above which an
/// estimate is flagged.
pub const RICHARDSON_TOL: f64 = 1e-3;

/// Stencil shrink attempts after a gap collapse.
const MAX_HALVINGS: usize = 3;

/// Overlaps below this magnitude cannot be differentiated reliably.
pub const OVERLAP_FLOOR: f64 = 1e-250;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilConfig {
    pub h_rel: f64,
    pub h_min: f64,
}

impl Default for StencilConfig {
    fn default() -> Self {
        StencilConfig { h_rel: 1e-4, h_min: 1e-6 }
    }
}

impl StencilConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_rel > 0.0 && self.h_min > 0.0) || !self.h_rel.is_finite() || !self.h_min.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "stencil steps must be positive, got h_rel={} h_min={}",
                self.h_rel, self.h_min
            )));
        }
        Ok(())
    }

    /// max(h_rel·|θ|, h_min)
    pub fn step(&self, value: f64) -> f64 {
        (self.h_rel * value.abs()).max(self.h_min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Eigenvalue,
    FiniteTime,
    CountingMc,
    HomodyneMc,
    WtdOracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Eigenvalue => "eigenvalue",
            Method::FiniteTime => "finite_time",
            Method::CountingMc => "counting_mc",
            Method::HomodyneMc => "homodyne_mc",
            Method::WtdOracle => "wtd_oracle",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FisherMeta {
    /// Finite-difference step for the first parameter.
    pub h: Option<f64>,
    /// Measurement time (finite-time total, or Monte-Carlo window length).
    pub t: Option<f64>,
    pub n_traj: Option<usize>,
    pub burn_in: Option<f64>,
    pub flags: Vec<String>,
}

/// A Fisher-information value with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FisherEstimate {
    /// Per unit time for rates, total for finite-time values.
    pub value: f64,
    pub params: (usize, usize),
    pub method: Method,
    /// Zero for deterministic methods.
    pub std_error: f64,
    pub meta: FisherMeta,
}

impl FisherEstimate {
    pub fn flagged(&self, flag: &str) -> bool {
        self.meta.flags.iter().any(|f| f == flag)
    }
}

/// Symmetric Fisher matrix over a set of parameter indices.
#[derive(Clone, Debug)]
pub struct FisherMatrix {
    pub indices: Vec<usize>,
    /// Row-major, `indices.len()²` entries.
    pub entries: Vec<FisherEstimate>,
}

impl FisherMatrix {
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &FisherEstimate {
        &self.entries[i * self.size() + j]
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        (0..n).map(|i| (0..n).map(|j| self.entry(i, j).value).collect()).collect()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.size();
        let m = ComplexMatrix::from_fn(n, n, |i, j| C64::new(self.entry(i, j).value, 0.0));
        let mut ev: Vec<f64> = crate::algebra::eig_general(&m)?.eigenvalues.iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Cramér-Rao covariance bound [K·I]⁻¹ for K repetitions (or, for rates,
    /// K = total measurement time).
    pub fn covariance_bound(&self, k: f64) -> Result<Vec<Vec<f64>>> {
        let n = self.size();
        let m = ComplexMatrix::from_fn(n, n, |i, j| C64::new(k * self.entry(i, j).value, 0.0));
        let lu = crate::algebra::Lu::factor(&m)?;
        let inv = lu.solve_matrix(&ComplexMatrix::identity(n));
        Ok((0..n).map(|i| (0..n).map(|j| inv[(i, j)].re).collect()).collect())
    }
}

fn mixed_stencil<F>(h_a: f64, h_b: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let pp = f(h_a, h_b)?;
    let pm = f(h_a, -h_b)?;
    let mp = f(-h_a, h_b)?;
    let mm = f(-h_a, -h_b)?;
    Ok((pp - pm - mp + mm) / (4.0 * h_a * h_b))
}

fn displaced(theta: &ParameterVector, index: usize, d: f64) -> ParameterVector {
    theta.shifted(index, d)
}

fn richardson_ok(coarse: f64, fine: f64) -> bool {
    (coarse - fine).abs() <= RICHARDSON_TOL * coarse.abs().max(fine.abs()) + 1e-12
}

fn check_index(m: &ModelSpec, index: usize) -> Result<()> {
    if index >= m.parameters().len() {
        return Err(Error::InvalidParameter(format!(
            "parameter index {index} out of range for {} parameters",
            m.parameters().len()
        )));
    }
    Ok(())
}

/// Long-time QFI rate I_αβ/T from the leading eigenvalue of 𝓛_{θ₁,θ₂}.
pub fn qfi_rate(m: &ModelSpec, theta: &ParameterVector, alpha: usize, beta: usize, s: &StencilConfig) -> Result<FisherEstimate> {
    m.check(theta)?;
    check_index(m, alpha)?;
    check_index(m, beta)?;
    s.validate()?;
    let gap = spectral_gap(m, theta)?;

    let eval = |h_a: f64, h_b: f64| {
        mixed_stencil(h_a, h_b, |a, b| {
            let t1 = displaced(theta, alpha, a);
            let t2 = displaced(theta, beta, b);
            Ok(leading_eigenvalue_with_reference(m, &t1, &t2, Some(gap))?.lambda_s.re)
        })
    };

    let mut h_a = s.step(theta.values()[alpha]);
    let mut h_b = s.step(theta.values()[beta]);
    let mut flags = Vec::new();
    let mut halvings = 0;
    let coarse = loop {
        match eval(h_a, h_b) {
            Ok(v) => break v,
            Err(Error::GapCollapse { .. }) if halvings < MAX_HALVINGS => {
                halvings += 1;
                h_a *= 0.5;
                h_b *= 0.5;
                flags.push("stencil_shrunk".to_string());
            }
            Err(e) => return Err(e),
        }
    };
    let fine = eval(0.5 * h_a, 0.5 * h_b)?;
    if !richardson_ok(coarse, fine) {
        flags.push("richardson".into());
    }
    Ok(FisherEstimate {
        value: 4.0 * coarse,
        params: (alpha, beta),
        method: Method::Eigenvalue,
        std_error: 0.0,
        meta: FisherMeta { h: Some(h_a), flags, ..Default::default() },
    })
}

/// QFI rate matrix over `indices`; the lower triangle mirrors the upper.
pub fn qfi_rate_matrix(m: &ModelSpec, theta: &ParameterVector, indices: &[usize], s: &StencilConfig) -> Result<FisherMatrix> {
    let n = indices.len();
    let mut entries: Vec<Option<FisherEstimate>> = vec![None; n * n];
    for i in 0..n {
        for j in i..n {
            let e = qfi_rate(m, theta, indices[i], indices[j], s)?;
            if i != j {
                let mut mirrored = e.clone();
                mirrored.params = (indices[j], indices[i]);
                entries[j * n + i] = Some(mirrored);
            }
            entries[i * n + j] = Some(e);
        }
    }
    Ok(FisherMatrix { indices: indices.to_vec(), entries: entries.into_iter().map(Option::unwrap).collect() })
}

/// Tr ρ_{θ₁,θ₂}(T) for ρ₀ evolved under the generalized master equation; this
/// is the overlap ⟨ψ;T,θ₂|ψ;T,θ₁⟩ of the joint states.
pub fn finite_time_overlap(
    m: &ModelSpec,
    theta1: &ParameterVector,
    theta2: &ParameterVector,
    rho0: &ComplexMatrix,
    t: f64,
) -> Result<C64> {
    let n = m.dimension();
    if rho0.rows() != n || rho0.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state is {}x{}, model dimension is {n}",
            rho0.rows(),
            rho0.cols()
        )));
    }
    let op = build_generalized(m, theta1, theta2)?;
    let v = propagate(op.matrix(), &rho0.vectorize(), t)?;
    Ok((0..n).map(|i| v[i + n * i]).sum())
}

fn purity(rho: &ComplexMatrix) -> f64 {
    (rho * rho).trace().re
}

/// Total QFI accumulated over [0, T] from the log-overlap. Exact for a pure
/// initial state; a mixed ρ₀ is processed identically and flagged `heuristic`.
pub fn finite_time_qfi(
    m: &ModelSpec,
    theta: &ParameterVector,
    rho0: &ComplexMatrix,
    t: f64,
    alpha: usize,
    beta: usize,
    s: &StencilConfig,
) -> Result<FisherEstimate> {
    m.check(theta)?;
    check_index(m, alpha)?;
    check_index(m, beta)?;
    s.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("measurement time must be finite and ≥ 0, got {t}")));
    }
    let mut flags = Vec::new();
    let trace = rho0.trace().re;
    if (purity(rho0) / (trace * trace) - 1.0).abs() > 1e-10 {
        flags.push("heuristic".to_string());
    }

    let eval = |h_a: f64, h_b: f64| {
        mixed_stencil(h_a, h_b, |a, b| {
            let t1 = displaced(theta, alpha, a);
            let t2 = displaced(theta, beta, b);
            let overlap = finite_time_overlap(m, &t1, &t2, rho0, t)?;
            let magnitude = overlap.norm();
            if !(magnitude >= OVERLAP_FLOOR) {
                return Err(Error::OverlapUnderflow { magnitude });
            }
            Ok(magnitude.ln())
        })
    };
    let h_a = s.step(theta.values()[alpha]);
    let h_b = s.step(theta.values()[beta]);
    let coarse = eval(h_a, h_b)?;
    let fine = eval(0.5 * h_a, 0.5 * h_b)?;
    if !richardson_ok(coarse, fine) {
        flags.push("richardson".into());
    }
    Ok(FisherEstimate {
        value: 4.0 * coarse,
        params: (alpha, beta),
        method: Method::FiniteTime,
        std_error: 0.0,
        meta: FisherMeta { h: Some(h_a), t: Some(t), flags, ..Default::default() },
    })
}

/// Long-time rate from finite-time totals, (I(T₂) − I(T₁))/(T₂ − T₁); the
/// O(1) initial-state contribution cancels in the difference.
pub fn finite_time_slope(
    m: &ModelSpec,
    theta: &ParameterVector,
    rho0: &ComplexMatrix,
    t1: f64,
    t2: f64,
    alpha: usize,
    beta: usize,
    s: &StencilConfig,
) -> Result<FisherEstimate> {
    if !(t2 > t1) {
        return Err(Error::InvalidParameter(format!("slope needs T₂ > T₁, got {t1}, {t2}")));
    }
    let a = finite_time_qfi(m, theta, rho0, t1, alpha, beta, s)?;
    let b = finite_time_qfi(m, theta, rho0, t2, alpha, beta, s)?;
    let mut flags = b.meta.flags.clone();
    for f in a.meta.flags {
        if !flags.contains(&f) {
            flags.push(f);
        }
    }
    flags.push("slope".into());
    Ok(FisherEstimate {
        value: (b.value - a.value) / (t2 - t1),
        params: (alpha, beta),
        method: Method::FiniteTime,
        std_error: 0.0,
        meta: FisherMeta { h: b.meta.h, t: Some(t2), flags, ..Default::default() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::steady_state;
    use crate::model::{dephasing_qubit, two_level};

    #[test]
    fn dark_atom_carries_no_decay_information() {
        let m = two_level(0.0, 0.0, 0.5).unwrap();
        let e = qfi_rate(&m, m.parameters(), 2, 2, &StencilConfig::default()).unwrap();
        assert!(e.value.abs() < 1e-12, "{}", e.value);
    }

    #[test]
    fn two_level_rates_at_resonance() {
        let m = two_level(0.0, 1.0, 0.5).unwrap();
        let s = StencilConfig::default();
        let omega = qfi_rate(&m, m.parameters(), 1, 1, &s).unwrap();
        let kappa = qfi_rate(&m, m.parameters(), 2, 2, &s).unwrap();
        let delta = qfi_rate(&m, m.parameters(), 0, 0, &s).unwrap();
        // independent dense-eigensolver prototype values
        assert!((omega.value - 8.0).abs() < 1e-5, "{}", omega.value);
        assert!((kappa.value - 8.0 / 9.0).abs() < 1e-6, "{}", kappa.value);
        assert!(delta.value > 0.5 && delta.value < 0.55, "{}", delta.value);
        assert!(omega.meta.flags.is_empty() && delta.meta.flags.is_empty());
    }

    #[test]
    fn slot_symmetry() {
        let m = two_level(0.5, 1.0, 0.5).unwrap();
        let s = StencilConfig::default();
        let a = qfi_rate(&m, m.parameters(), 1, 2, &s).unwrap().value;
        let b = qfi_rate(&m, m.parameters(), 2, 1, &s).unwrap().value;
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn closed_qubit_has_no_rate() {
        let m = dephasing_qubit(0.3).unwrap();
        assert!(matches!(
            qfi_rate(&m, m.parameters(), 0, 0, &StencilConfig::default()),
            Err(Error::DegenerateSteadyState { .. })
        ));
    }

    #[test]
    fn closed_qubit_quadratic_in_time() {
        let m = dephasing_qubit(0.4).unwrap();
        let rho0 = m.initial_density(m.parameters()).unwrap();
        for &t in &[1.0, 3.0, 10.0] {
            let e = finite_time_qfi(&m, m.parameters(), &rho0, t, 0, 0, &StencilConfig::default()).unwrap();
            assert!((e.value / (t * t) - 1.0).abs() < 1e-6, "T={t}: {}", e.value);
            assert!(!e.flagged("heuristic"));
        }
    }

    #[test]
    fn zero_time_zero_information() {
        let m = two_level(0.0, 1.0, 0.5).unwrap();
        let rho0 = steady_state(&m, m.parameters()).unwrap();
        let e = finite_time_qfi(&m, m.parameters(), &rho0, 0.0, 1, 1, &StencilConfig::default()).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.flagged("heuristic"));
    }

    #[test]
    fn overlap_unity_at_coincidence() {
        let m = two_level(0.2, 1.0, 0.5).unwrap();
        let rho0 = steady_state(&m, m.parameters()).unwrap();
        for &t in &[0.0, 1.0, 50.0] {
            let o = finite_time_overlap(&m, m.parameters(), m.parameters(), &rho0, t).unwrap();
            assert!((o - C64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn matrix_is_symmetric_and_psd() {
        let m = two_level(0.0, 1.0, 0.5).unwrap();
        let fm = qfi_rate_matrix(&m, m.parameters(), &[1, 2], &StencilConfig::default()).unwrap();
        let v = fm.values();
        assert_eq!(v[0][1], v[1][0]);
        let ev = fm.eigenvalues().unwrap();
        assert!(ev[0] >= -1e-8 * ev[1]);
    }
}
