//! Homodyne detection: Euler–Maruyama diffusive unraveling and its filter.
//!
//! Per step Δy = ⟨e^{−iφ}L + e^{iφ}L†⟩δt + ΔW and the state is updated by
//! K(Δy) = 𝟙 − (iH + ½L†L)δt + e^{−iφ}L·Δy. The map ρ ↦ KρK† is quadratic in
//! Δy, so on real Hermitian coordinates r it reads r ← M₀r + Δy(M₁r + Δy·M₂r).
//! Likelihoods are relative to the Wiener reference measure.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{rng_from, HomodyneRecord};
use crate::algebra::{ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParameterVector};

/// δt ≤ HOMODYNE_STEP_FACTOR / max(‖H‖, ‖L†L‖).
pub const HOMODYNE_STEP_FACTOR: f64 = 1e-3;

/// Steps between renormalizations of the unnormalized filter state.
const RENORM_INTERVAL: usize = 32;

/// Largest admissible homodyne step at `theta`.
pub fn homodyne_step_bound(m: &ModelSpec, theta: &ParameterVector) -> Result<f64> {
    let h = m.hamiltonian(theta)?.operator_norm();
    let l = single_jump(m, theta)?;
    let ll = (&l.adjoint() * &l).operator_norm();
    let scale = h.max(ll);
    Ok(if scale == 0.0 { f64::INFINITY } else { HOMODYNE_STEP_FACTOR / scale })
}

/// Largest step ≤ the bound that divides `t` into whole steps.
pub fn default_homodyne_step(m: &ModelSpec, theta: &ParameterVector, t: f64) -> Result<f64> {
    let bound = homodyne_step_bound(m, theta)?;
    if !bound.is_finite() {
        return Ok(t.min(1e-3));
    }
    Ok(t / (t / bound).ceil())
}

fn single_jump(m: &ModelSpec, theta: &ParameterVector) -> Result<ComplexMatrix> {
    match m.n_jumps() {
        0 => Err(Error::NoJumpOperators),
        1 => Ok(m.jumps(theta)?.remove(0)),
        c => Err(Error::MultiChannelUnsupported { channels: c }),
    }
}

/// Real coordinates of a Hermitian L×L matrix: diagonal first, then
/// (Re ρ_ij, Im ρ_ij) for i < j.
fn coordinate_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut basis = Vec::with_capacity(n * n);
    for k in 0..n {
        let mut b = ComplexMatrix::zeros(n, n);
        b[(k, k)] = C64::new(1.0, 0.0);
        basis.push(b);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut re = ComplexMatrix::zeros(n, n);
            re[(i, j)] = C64::new(1.0, 0.0);
            re[(j, i)] = C64::new(1.0, 0.0);
            let mut im = ComplexMatrix::zeros(n, n);
            im[(i, j)] = C64::new(0.0, 1.0);
            im[(j, i)] = C64::new(0.0, -1.0);
            basis.push(re);
            basis.push(im);
        }
    }
    basis
}

fn to_coordinates(rho: &ComplexMatrix) -> Vec<f64> {
    let n = rho.rows();
    let mut r: Vec<f64> = (0..n).map(|k| rho[(k, k)].re).collect();
    for i in 0..n {
        for j in i + 1..n {
            // average the two triangles so slightly non-Hermitian input is symmetrized
            let z = (rho[(i, j)] + rho[(j, i)].conj()) * 0.5;
            r.push(z.re);
            r.push(z.im);
        }
    }
    r
}

fn from_coordinates(r: &[f64], n: usize) -> ComplexMatrix {
    let mut rho = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        rho[(k, k)] = C64::new(r[k], 0.0);
    }
    let mut idx = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(r[idx], r[idx + 1]);
            rho[(i, j)] = z;
            rho[(j, i)] = z.conj();
            idx += 2;
        }
    }
    rho
}

/// Real-coordinate form of the homodyne Kraus map at one parameter point.
#[derive(Clone, Debug)]
pub struct HomodyneKernel {
    dim: usize,
    n: usize,
    m0: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
    /// r ↦ Tr(Xρ) with X = e^{−iφ}L + e^{iφ}L†.
    signal: Vec<f64>,
    initial: Vec<f64>,
    dt: f64,
    phi: f64,
}

impl HomodyneKernel {
    /// Builds the kernel without checking the step bound (likelihoods may be
    /// evaluated off the simulation point).
    pub fn new(m: &ModelSpec, theta: &ParameterVector, dt: f64, phi: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
        }
        let l = single_jump(m, theta)?;
        let dim = m.dimension();
        let h = m.hamiltonian(theta)?;
        let ld = l.adjoint();
        let a = &ComplexMatrix::identity(dim) - &(&h.scale(C64::new(0.0, dt)) + &(&ld * &l).scale_real(0.5 * dt));
        let rot = C64::from_polar(1.0, -phi);
        let b = l.scale(rot);
        let x = &b + &b.adjoint();
        let (ad, bd) = (a.adjoint(), b.adjoint());

        let basis = coordinate_basis(dim);
        let n = basis.len();
        let mut m0 = vec![0.0; n * n];
        let mut m1 = vec![0.0; n * n];
        let mut m2 = vec![0.0; n * n];
        let mut signal = vec![0.0; n];
        for (k, e) in basis.iter().enumerate() {
            let c0 = to_coordinates(&(&(&a * e) * &ad));
            let c1 = to_coordinates(&(&(&(&a * e) * &bd) + &(&(&b * e) * &ad)));
            let c2 = to_coordinates(&(&(&b * e) * &bd));
            // column-major: column k is the image of basis element k
            m0[k * n..(k + 1) * n].copy_from_slice(&c0);
            m1[k * n..(k + 1) * n].copy_from_slice(&c1);
            m2[k * n..(k + 1) * n].copy_from_slice(&c2);
            signal[k] = (&x * e).trace().re;
        }
        let initial = to_coordinates(&m.initial_density(theta)?);
        Ok(HomodyneKernel { dim, n, m0, m1, m2, signal, initial, dt, phi })
    }

    /// Real coordinates of the model's initial state at this parameter point.
    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn coordinates(&self, rho: &ComplexMatrix) -> Vec<f64> {
        to_coordinates(rho)
    }

    pub fn density(&self, r: &[f64]) -> ComplexMatrix {
        from_coordinates(r, self.dim)
    }

    /// ⟨X⟩ of the normalized state.
    fn mean_signal(&self, r: &[f64]) -> f64 {
        let s: f64 = self.signal.iter().zip(r).map(|(a, b)| a * b).sum();
        s / r[..self.dim].iter().sum::<f64>()
    }

    #[inline]
    fn apply(&self, r: &mut [f64], dy: f64) {
        match self.n {
            #[cfg(target_arch = "x86_64")]
            4 if avx::available() => {
                assert!(r.len() >= 4 && self.m0.len() >= 16 && self.m1.len() >= 16 && self.m2.len() >= 16);
                // SAFETY: features checked at runtime; lengths asserted above.
                unsafe { avx::apply4(&self.m0, &self.m1, &self.m2, r, dy) }
            }
            4 => apply_fixed::<4>(&self.m0, &self.m1, &self.m2, r, dy),
            9 => apply_fixed::<9>(&self.m0, &self.m1, &self.m2, r, dy),
            _ => apply_dynamic(self.n, &self.m0, &self.m1, &self.m2, r, dy),
        }
    }
}

// Column-oriented: each product is a sum of scaled columns, which vectorizes
// across output rows.
#[inline(always)]
fn apply_fixed<const N: usize>(m0: &[f64], m1: &[f64], m2: &[f64], r: &mut [f64], dy: f64) {
    let (m0, m1, m2) = (&m0[..N * N], &m1[..N * N], &m2[..N * N]);
    let x: [f64; N] = r[..N].try_into().expect("state length");
    let (mut a, mut b, mut c) = ([0.0; N], [0.0; N], [0.0; N]);
    for j in 0..N {
        let col = j * N;
        for i in 0..N {
            a[i] += m0[col + i] * x[j];
            b[i] += m1[col + i] * x[j];
            c[i] += m2[col + i] * x[j];
        }
    }
    for i in 0..N {
        r[i] = a[i] + dy * (b[i] + dy * c[i]);
    }
}

// Two-level models dominate run time. FMA changes rounding relative to the
// portable path, so results are reproducible per host, not across hosts.
#[cfg(target_arch = "x86_64")]
mod avx {
    use std::arch::x86_64::*;
    use std::sync::OnceLock;

    pub(super) fn available() -> bool {
        static FLAG: OnceLock<bool> = OnceLock::new();
        *FLAG.get_or_init(|| is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma"))
    }

    /// Caller guarantees avx2+fma, `r.len() >= 4` and 16 entries per matrix.
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn apply4(m0: &[f64], m1: &[f64], m2: &[f64], r: &mut [f64], dy: f64) {
        let (p0, p1, p2) = (m0.as_ptr(), m1.as_ptr(), m2.as_ptr());
        let x0 = _mm256_set1_pd(r[0]);
        let mut a = _mm256_mul_pd(_mm256_loadu_pd(p0), x0);
        let mut b = _mm256_mul_pd(_mm256_loadu_pd(p1), x0);
        let mut c = _mm256_mul_pd(_mm256_loadu_pd(p2), x0);
        for j in 1..4 {
            let xj = _mm256_set1_pd(r[j]);
            a = _mm256_fmadd_pd(_mm256_loadu_pd(p0.add(4 * j)), xj, a);
            b = _mm256_fmadd_pd(_mm256_loadu_pd(p1.add(4 * j)), xj, b);
            c = _mm256_fmadd_pd(_mm256_loadu_pd(p2.add(4 * j)), xj, c);
        }
        let vdy = _mm256_set1_pd(dy);
        _mm256_storeu_pd(r.as_mut_ptr(), _mm256_fmadd_pd(vdy, _mm256_fmadd_pd(vdy, c, b), a));
    }
}

fn apply_dynamic(n: usize, m0: &[f64], m1: &[f64], m2: &[f64], r: &mut [f64], dy: f64) {
    let x = r.to_vec();
    let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (j, &xj) in x.iter().enumerate() {
        let col = j * n;
        for i in 0..n {
            a[i] += m0[col + i] * xj;
            b[i] += m1[col + i] * xj;
            c[i] += m2[col + i] * xj;
        }
    }
    for i in 0..n {
        r[i] = a[i] + dy * (b[i] + dy * c[i]);
    }
}

/// Unnormalized conditional state with a log-normalization accumulator.
#[derive(Clone, Debug)]
pub struct HomodyneFilter {
    r: Vec<f64>,
    dim: usize,
    log_acc: f64,
    steps: usize,
    burn_steps: usize,
    burn_log: Option<f64>,
}

impl HomodyneFilter {
    /// Starts from real coordinates of an L×L state; `burn_steps` marks the
    /// window start.
    pub fn new(initial: Vec<f64>, dim: usize, burn_steps: usize) -> Self {
        let mut f = HomodyneFilter { r: initial, dim, log_acc: 0.0, steps: 0, burn_steps, burn_log: None };
        f.renormalize();
        if burn_steps == 0 {
            f.burn_log = Some(f.log_acc);
        }
        f
    }

    fn trace(&self) -> f64 {
        self.r[..self.dim].iter().sum()
    }

    fn renormalize(&mut self) {
        let tr = self.trace();
        self.log_acc += tr.ln();
        let inv = 1.0 / tr;
        self.r.iter_mut().for_each(|x| *x *= inv);
    }

    fn log_trace(&self) -> f64 {
        self.log_acc + self.trace().ln()
    }

    pub fn state(&self) -> &[f64] {
        &self.r
    }

    /// One increment under `k`; renormalizes on a fixed schedule.
    #[inline]
    pub fn advance(&mut self, k: &HomodyneKernel, dy: f64) {
        k.apply(&mut self.r, dy);
        self.steps += 1;
        if self.steps == self.burn_steps {
            self.renormalize();
            self.burn_log = Some(self.log_acc);
        } else if self.steps.is_multiple_of(RENORM_INTERVAL) {
            self.renormalize();
        }
    }

    pub fn mean_signal(&self, k: &HomodyneKernel) -> f64 {
        k.mean_signal(&self.r)
    }

    /// log Tr ρ̃(T) − log Tr ρ̃(burn_in).
    pub fn log_likelihood(&self) -> f64 {
        self.log_trace() - self.burn_log.unwrap_or(f64::NAN)
    }
}

pub(crate) struct FusedOutput {
    pub increments: Option<Vec<f64>>,
    pub log_likelihoods: Vec<f64>,
}

/// Simulates one record under `sim` while filtering it under every kernel in
/// `filters`. Each filter performs exactly the operations a separate
/// likelihood pass over the stored record would.
pub(crate) fn run_fused(
    sim: &HomodyneKernel,
    rho0: &[f64],
    filters: &[&HomodyneKernel],
    n_steps: usize,
    burn_steps: usize,
    seed: u64,
    store: bool,
) -> FusedOutput {
    let mut rng = rng_from(seed);
    let sqrt_dt = sim.dt.sqrt();
    let mut state = HomodyneFilter::new(rho0.to_vec(), sim.dim, burn_steps);
    let mut states: Vec<HomodyneFilter> = filters.iter().map(|k| HomodyneFilter::new(k.initial.clone(), k.dim, burn_steps)).collect();
    let mut increments = if store { Vec::with_capacity(n_steps) } else { Vec::new() };
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let dy = state.mean_signal(sim) * sim.dt + sqrt_dt * z;
        state.advance(sim, dy);
        for (f, k) in states.iter_mut().zip(filters) {
            f.advance(k, dy);
        }
        if store {
            increments.push(dy);
        }
    }
    FusedOutput {
        increments: store.then_some(increments),
        log_likelihoods: states.iter().map(HomodyneFilter::log_likelihood).collect(),
    }
}

fn steps_for(t: f64, burn_in: f64, dt: f64) -> Result<(usize, usize)> {
    if !(t > 0.0) || !t.is_finite() || !(burn_in >= 0.0) || burn_in >= t {
        return Err(Error::InvalidParameter(format!("need 0 ≤ burn_in < T, got burn_in={burn_in}, T={t}")));
    }
    let n = (t / dt).round() as usize;
    let b = (burn_in / dt).round() as usize;
    if n == 0 || b >= n {
        return Err(Error::InvalidParameter(format!("T={t} and burn_in={burn_in} leave no window at dt={dt}")));
    }
    Ok((n, b))
}

/// Samples a homodyne record on [0, t] from `rho0`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_homodyne(
    m: &ModelSpec,
    theta: &ParameterVector,
    rho0: &ComplexMatrix,
    t: f64,
    burn_in: f64,
    dt: f64,
    phi: f64,
    seed: u64,
) -> Result<HomodyneRecord> {
    let bound = homodyne_step_bound(m, theta)?;
    if dt > bound {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let kernel = HomodyneKernel::new(m, theta, dt, phi)?;
    let (n_steps, burn_steps) = steps_for(t, burn_in, dt)?;
    let out = run_fused(&kernel, &to_coordinates(rho0), &[], n_steps, burn_steps, seed, true);
    Ok(HomodyneRecord {
        t,
        burn_in,
        dt,
        phi,
        increments: out.increments.unwrap_or_default(),
        theta_sim: theta.clone(),
        seed,
    })
}

/// Conditional log-likelihood of the record window under `theta`.
pub fn log_likelihood_homodyne(record: &HomodyneRecord, m: &ModelSpec, theta: &ParameterVector) -> Result<f64> {
    record.validate()?;
    if !record.theta_sim.same_layout(theta) {
        return Err(Error::DimensionMismatch("record parameters do not match the model".into()));
    }
    let kernel = HomodyneKernel::new(m, theta, record.dt, record.phi)?;
    let mut f = HomodyneFilter::new(kernel.initial.clone(), kernel.dim, record.burn_in_steps());
    for &dy in &record.increments {
        f.advance(&kernel, dy);
    }
    Ok(f.log_likelihood())
}
