//! Vectorized Lindblad generators, including the two-sided generator
//!
//! 𝓛_{θ₁,θ₂}(ρ) = −iH₁ρ + iρH₂ + Σ_c [L_{c,1} ρ L_{c,2}† − ½L_{c,1}†L_{c,1}ρ − ½ρL_{c,2}†L_{c,2}]
//!
//! whose trace after time T is the overlap between the joint system and
//! environment states at θ₁ and θ₂. Vectorization is column-major, so
//! A ρ B ↦ (Bᵀ ⊗ A)·vec(ρ).

use crate::algebra::{eig_general, solve_linear, ComplexMatrix, EigenDecomposition, C64, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParameterVector};

/// Eigenvalues within this fraction of ‖𝓛‖ of zero count as zero modes.
const ZERO_MODE_TOL: f64 = 1e-9;

/// The continued eigenvalue must stay this fraction of the reference gap
/// above the rest of the spectrum.
pub const SEPARATION_FRACTION: f64 = 0.1;

/// Superoperator acting on column-major vectorized L×L matrices.
#[derive(Clone, Debug)]
pub struct SuperOp {
    dim: usize,
    matrix: ComplexMatrix,
}

impl SuperOp {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::unvectorize(&self.matrix.mul_vec(&rho.vectorize()), self.dim)
    }
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    /// Leading eigenvalue, per unit time.
    pub lambda_s: C64,
    /// −max Re of the rest of the spectrum of this generator.
    pub gap: f64,
    /// Right eigenmatrix of λ_s, normalized to unit trace.
    pub eigenmatrix: ComplexMatrix,
    /// Re λ_s − max Re of the remaining eigenvalues.
    pub separation: f64,
    /// Set when the θ₁=θ₂ reference has more than one non-decaying mode.
    pub degenerate: bool,
}

fn kron_terms(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    l1: &[ComplexMatrix],
    l2: &[ComplexMatrix],
) -> ComplexMatrix {
    let n = h1.rows();
    let id = ComplexMatrix::identity(n);
    let mut out = id.kron(h1).scale(-I);
    out += &h2.transpose().kron(&id).scale(I);
    for (a, b) in l1.iter().zip(l2) {
        out += &b.conj().kron(a);
        out += &id.kron(&(&a.adjoint() * a)).scale_real(-0.5);
        out += &(&b.adjoint() * b).transpose().kron(&id).scale_real(-0.5);
    }
    out
}

/// Generalized two-sided Liouvillian 𝓛_{θ₁,θ₂}.
pub fn build_generalized(m: &ModelSpec, theta1: &ParameterVector, theta2: &ParameterVector) -> Result<SuperOp> {
    let h1 = m.hamiltonian(theta1)?;
    let h2 = m.hamiltonian(theta2)?;
    let l1 = m.jumps(theta1)?;
    let l2 = m.jumps(theta2)?;
    Ok(SuperOp { dim: m.dimension(), matrix: kron_terms(&h1, &h2, &l1, &l2) })
}

/// Trace-preserving Lindblad generator 𝓛_θ.
pub fn build_lindblad(m: &ModelSpec, theta: &ParameterVector) -> Result<SuperOp> {
    build_generalized(m, theta, theta)
}

/// Operator G with Tr 𝓛_{θ₁,θ₂}(ρ) = Tr(G ρ), assembled from parameter
/// differences so that it vanishes identically at θ₁ = θ₂:
///
/// G = −iΔH + Σ_c [−½ΔL†ΔL + ½(L₂†ΔL − ΔL†L₂)],  ΔX = X(θ₁) − X(θ₂).
pub fn trace_rate_operator(m: &ModelSpec, theta1: &ParameterVector, theta2: &ParameterVector) -> Result<ComplexMatrix> {
    let dh = &m.hamiltonian(theta1)? - &m.hamiltonian(theta2)?;
    let mut g = dh.scale(-I);
    for (a, b) in m.jumps(theta1)?.iter().zip(m.jumps(theta2)?) {
        let dl = a - &b;
        let dl_dag = dl.adjoint();
        g += &(&dl_dag * &dl).scale_real(-0.5);
        g += &(&(&b.adjoint() * &dl) - &(&dl_dag * &b)).scale_real(0.5);
    }
    Ok(g)
}

struct SpectrumSummary {
    eig: EigenDecomposition,
    lead: usize,
    rest_max_re: f64,
    zero_modes: usize,
}

fn summarize(op: &SuperOp) -> Result<SpectrumSummary> {
    let eig = eig_general(&op.matrix)?;
    let lead = eig.index_of_max_real().expect("non-empty spectrum");
    let rest_max_re = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != lead)
        .map(|(_, z)| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = ZERO_MODE_TOL * op.matrix.frobenius_norm().max(f64::MIN_POSITIVE);
    let zero_modes = eig.eigenvalues.iter().filter(|z| z.norm() <= tol).count();
    Ok(SpectrumSummary { eig, lead, rest_max_re, zero_modes })
}

/// Spectral gap of 𝓛_θ: distance from the imaginary axis of the slowest
/// decaying non-stationary mode. Infinite for a one-dimensional system.
pub fn spectral_gap(m: &ModelSpec, theta: &ParameterVector) -> Result<f64> {
    let op = build_lindblad(m, theta)?;
    let s = summarize(&op)?;
    if s.zero_modes > 1 {
        return Err(Error::DegenerateSteadyState { zero_modes: s.zero_modes });
    }
    let gap = -s.rest_max_re;
    let tol = ZERO_MODE_TOL * op.matrix.frobenius_norm();
    if gap <= tol {
        // purely oscillating modes never relax either
        let zero_modes = s.eig.eigenvalues.iter().filter(|z| z.re.abs() <= tol).count();
        return Err(Error::DegenerateSteadyState { zero_modes });
    }
    Ok(gap)
}

/// 1 / gap.
pub fn relaxation_time(m: &ModelSpec, theta: &ParameterVector) -> Result<f64> {
    Ok(1.0 / spectral_gap(m, theta)?)
}

/// Unique stationary state of 𝓛_θ, solved from the linear system in which
/// one population equation is replaced by the trace condition Tr ρ = 1.
pub fn steady_state(m: &ModelSpec, theta: &ParameterVector) -> Result<ComplexMatrix> {
    let op = build_lindblad(m, theta)?;
    let s = summarize(&op)?;
    if s.zero_modes != 1 {
        return Err(Error::DegenerateSteadyState { zero_modes: s.zero_modes });
    }
    let n = m.dimension();
    let mut a = op.matrix.clone();
    for j in 0..n * n {
        a[(0, j)] = ZERO;
    }
    for i in 0..n {
        a[(0, i + n * i)] = ONE;
    }
    let mut rhs = vec![ZERO; n * n];
    rhs[0] = ONE;
    let x = solve_linear(&a, &rhs).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::DegenerateSteadyState { zero_modes: 2 },
        other => other,
    })?;
    let rho = ComplexMatrix::unvectorize(&x, n);
    Ok((&rho + &rho.adjoint()).scale_real(0.5))
}

/// Leading eigenvalue λ_s(θ₁,θ₂) of the generalized Liouvillian, continued
/// from the stationary eigenvalue at θ₁ = θ₂. The reference gap is evaluated
/// at the midpoint (θ₁ + θ₂)/2.
pub fn leading_eigenvalue(m: &ModelSpec, theta1: &ParameterVector, theta2: &ParameterVector) -> Result<SpectralResult> {
    let mid = ParameterVector::new(
        theta1.names().iter().cloned(),
        theta1.values().iter().zip(theta2.values()).map(|(a, b)| 0.5 * (a + b)).collect(),
    )?;
    let reference_gap = match spectral_gap(m, &mid) {
        Ok(g) => Some(g),
        Err(Error::DegenerateSteadyState { .. }) => None,
        Err(e) => return Err(e),
    };
    leading_eigenvalue_with_reference(m, theta1, theta2, reference_gap)
}

/// As [`leading_eigenvalue`] with a precomputed reference gap (`None` when
/// the reference spectrum is degenerate).
pub(crate) fn leading_eigenvalue_with_reference(
    m: &ModelSpec,
    theta1: &ParameterVector,
    theta2: &ParameterVector,
    reference_gap: Option<f64>,
) -> Result<SpectralResult> {
    let op = build_generalized(m, theta1, theta2)?;
    let s = summarize(&op)?;
    let raw = s.eig.eigenvalues[s.lead];
    let separation = raw.re - s.rest_max_re;
    let degenerate = reference_gap.is_none();
    if let Some(gap) = reference_gap {
        let required = SEPARATION_FRACTION * gap;
        if !(separation >= required) {
            return Err(Error::GapCollapse { separation, required });
        }
    }

    let n = m.dimension();
    let mut v = ComplexMatrix::unvectorize(&s.eig.vector(s.lead), n);
    let tr = v.trace();
    let lambda_s = if tr.norm() > 1e-8 * v.frobenius_norm() {
        v = v.scale(ONE / tr);
        // Tr(G v)/Tr(v) is exact for an exact eigenpair and avoids the
        // cancellation in the O(1) generator entries.
        let g = trace_rate_operator(m, theta1, theta2)?;
        (&g * &v).trace()
    } else {
        raw
    };
    Ok(SpectralResult { lambda_s, gap: -s.rest_max_re, eigenmatrix: v, separation, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dephasing_qubit, two_level};

    fn contains(vals: &[C64], target: C64, tol: f64) -> bool {
        vals.iter().any(|v| (v - target).norm() < tol)
    }

    #[test]
    fn pure_decay_spectrum() {
        let m = two_level(0.0, 0.0, 1.0).unwrap();
        let op = build_lindblad(&m, m.parameters()).unwrap();
        let eig = eig_general(op.matrix()).unwrap();
        for t in [0.0, -1.0, -0.5, -0.5] {
            assert!(contains(&eig.eigenvalues, C64::new(t, 0.0), 1e-12), "{:?}", eig.eigenvalues);
        }
    }

    #[test]
    fn optical_bloch_steady_state() {
        let m = two_level(0.0, 1.0, 0.5).unwrap();
        let rho = steady_state(&m, m.parameters()).unwrap();
        assert!((rho[(1, 1)].re - 4.0 / 9.0).abs() < 1e-12);
        assert!((rho.trace() - ONE).norm() < 1e-14);
        let op = build_lindblad(&m, m.parameters()).unwrap();
        assert!(op.apply(&rho).max_abs() < 1e-12);
    }

    #[test]
    fn closed_form_excited_population() {
        for &(d, o, k) in &[(1.0, 1.0, 0.5), (-2.0, 0.3, 1.7), (0.5, 2.0, 0.1)] {
            let m = two_level(d, o, k).unwrap();
            let rho = steady_state(&m, m.parameters()).unwrap();
            let expected = (o * o / 4.0) / (d * d + k * k / 4.0 + o * o / 2.0);
            assert!((rho[(1, 1)].re - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_decay_steady_state_is_ground() {
        let m = two_level(0.0, 0.0, 1.0).unwrap();
        let rho = steady_state(&m, m.parameters()).unwrap();
        assert!(rho.max_abs_diff(&ComplexMatrix::diagonal(&[ONE, ZERO])) < 1e-14);
    }

    #[test]
    fn closed_system_is_degenerate() {
        let m = dephasing_qubit(0.7).unwrap();
        assert!(matches!(steady_state(&m, m.parameters()), Err(Error::DegenerateSteadyState { .. })));
        assert!(matches!(spectral_gap(&m, m.parameters()), Err(Error::DegenerateSteadyState { .. })));
    }

    #[test]
    fn generalized_reduces_to_lindblad() {
        let m = two_level(0.3, 1.0, 0.5).unwrap();
        let a = build_generalized(&m, m.parameters(), m.parameters()).unwrap();
        let b = build_lindblad(&m, m.parameters()).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn dark_ground_state_insensitive_to_decay() {
        let m = two_level(0.0, 0.0, 0.5).unwrap();
        let t1 = m.parameters().with_value(2, 0.4);
        let t2 = m.parameters().with_value(2, 0.6);
        let op = build_generalized(&m, &t1, &t2).unwrap();
        let g = ComplexMatrix::diagonal(&[ONE, ZERO]);
        assert!(op.apply(&g).max_abs() < 1e-16);
    }

    #[test]
    fn trace_rate_operator_matches_generator() {
        let m = two_level(0.4, 0.9, 0.6).unwrap();
        let t1 = m.parameters().shifted(0, 0.1).shifted(2, -0.05);
        let t2 = m.parameters().shifted(1, 0.2);
        let op = build_generalized(&m, &t1, &t2).unwrap();
        let g = trace_rate_operator(&m, &t1, &t2).unwrap();
        let rho = ComplexMatrix::from_rows(&[
            vec![C64::new(0.3, 0.0), C64::new(0.1, 0.2)],
            vec![C64::new(-0.4, 0.05), C64::new(0.7, 0.1)],
        ]);
        let lhs = op.apply(&rho).trace();
        let rhs = (&g * &rho).trace();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn leading_eigenvalue_at_coincidence_is_zero() {
        let m = two_level(0.0, 1.0, 0.5).unwrap();
        let r = leading_eigenvalue(&m, m.parameters(), m.parameters()).unwrap();
        assert!(r.lambda_s.norm() <= 1e-10);
        assert!(r.gap > 0.0 && !r.degenerate);
        let rho = steady_state(&m, m.parameters()).unwrap();
        assert!(r.eigenmatrix.max_abs_diff(&rho) < 1e-10);
    }

    #[test]
    fn leading_eigenvalue_swap_conjugates() {
        let m = two_level(0.0, 1.0, 0.5).unwrap();
        let t1 = m.parameters().shifted(2, 5e-4);
        let t2 = m.parameters().shifted(2, -5e-4);
        let a = leading_eigenvalue(&m, &t1, &t2).unwrap().lambda_s;
        let b = leading_eigenvalue(&m, &t2, &t1).unwrap().lambda_s;
        assert!(a.re < 0.0);
        assert!((a - b.conj()).norm() < 1e-9);
        // quadratic in the separation: doubling it multiplies Re λ_s by ~4
        let t1b = m.parameters().shifted(2, 1e-3);
        let t2b = m.parameters().shifted(2, -1e-3);
        let c = leading_eigenvalue(&m, &t1b, &t2b).unwrap().lambda_s;
        assert!((c.re / a.re - 4.0).abs() < 1e-3);
    }

    #[test]
    fn gap_collapse_for_large_separation() {
        let m = two_level(0.0, 1.0, 0.5).unwrap();
        let t1 = m.parameters().with_value(1, 30.0);
        let t2 = m.parameters().with_value(1, -30.0);
        assert!(matches!(leading_eigenvalue(&m, &t1, &t2), Err(Error::GapCollapse { .. })));
    }
}
