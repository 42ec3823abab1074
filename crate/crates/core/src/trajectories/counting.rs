//! Photon counting: exact jump-process sampling and record likelihoods.
//!
//! Between clicks the unnormalized state follows ρ̃ ↦ e^{−iH_eff t} ρ̃ e^{iH_eff† t}.
//! Waiting times invert the survival S(t) = Tr ρ̃(t) directly, so there is no
//! time-step bias.

use rand::Rng;

use super::{rng_from, CountingRecord};
use crate::algebra::{expm, ComplexMatrix, Lu, C64};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParameterVector};

/// Eigenvector bases worse conditioned than this fall back to dense exponentials.
const MAX_BASIS_CONDITION: f64 = 1e6;
const MAX_ROOT_ITERATIONS: usize = 200;

#[derive(Clone, Debug)]
enum NoJump {
    /// H_eff = V diag(d) V⁻¹; `gram` = V†V.
    Eigen { v: ComplexMatrix, v_adj: ComplexMatrix, v_inv: ComplexMatrix, v_inv_adj: ComplexMatrix, d: Vec<C64>, gram: ComplexMatrix },
    /// −iH_eff, exponentiated on demand near exceptional points.
    Dense { generator: ComplexMatrix },
}

impl NoJump {
    fn new(h_eff: &ComplexMatrix) -> Self {
        let n = h_eff.rows();
        let dense = || NoJump::Dense { generator: h_eff.scale(C64::new(0.0, -1.0)) };
        let Ok(eig) = crate::algebra::eig_general(h_eff) else {
            return dense();
        };
        let v = eig.vectors;
        let Ok(lu) = Lu::factor(&v) else {
            return dense();
        };
        let v_inv = lu.solve_matrix(&ComplexMatrix::identity(n));
        if v.frobenius_norm() * v_inv.frobenius_norm() > MAX_BASIS_CONDITION || !v_inv.is_finite() {
            return dense();
        }
        let v_adj = v.adjoint();
        let gram = &v_adj * &v;
        NoJump::Eigen { v_inv_adj: v_inv.adjoint(), v, v_adj, v_inv, d: eig.eigenvalues, gram }
    }

    fn phases(d: &[C64], t: f64) -> Vec<C64> {
        d.iter().map(|&di| (di * C64::new(0.0, -t)).exp()).collect()
    }

    fn evolve(&self, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        match self {
            NoJump::Eigen { v, v_adj, v_inv, v_inv_adj, d, .. } => {
                let e = Self::phases(d, t);
                let mut x = &(v_inv * rho) * v_inv_adj;
                let n = x.rows();
                for i in 0..n {
                    for j in 0..n {
                        x[(i, j)] *= e[i] * e[j].conj();
                    }
                }
                Ok(&(v * &x) * v_adj)
            }
            NoJump::Dense { generator } => {
                let u = expm(&generator.scale_real(t))?;
                Ok(&(&u * rho) * &u.adjoint())
            }
        }
    }
}

/// Survival function of a fixed starting state.
enum Survival<'a> {
    Eigen { x: ComplexMatrix, d: &'a [C64], gram: &'a ComplexMatrix },
    Dense { rho: &'a ComplexMatrix, evo: &'a NoJump },
}

impl Survival<'_> {
    fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Survival::Eigen { x, d, gram } => {
                let e = NoJump::phases(d, t);
                let n = x.rows();
                let mut s = C64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        s += x[(i, j)] * e[i] * e[j].conj() * gram[(j, i)];
                    }
                }
                Ok(s.re)
            }
            Survival::Dense { rho, evo } => Ok(evo.evolve(rho, t)?.trace().re),
        }
    }
}

/// Per-parameter-point data for counting simulation and likelihoods.
#[derive(Clone, Debug)]
pub struct CountingModel {
    theta: ParameterVector,
    jumps: Vec<ComplexMatrix>,
    jumps_adj: Vec<ComplexMatrix>,
    evolution: NoJump,
    rho0: ComplexMatrix,
    /// Characteristic waiting time 1/‖ΣL†L‖, seeds the root bracket.
    time_scale: f64,
}

impl CountingModel {
    pub fn new(m: &ModelSpec, theta: &ParameterVector) -> Result<Self> {
        if m.n_jumps() == 0 {
            return Err(Error::NoJumpOperators);
        }
        let jumps = m.jumps(theta)?;
        let jumps_adj: Vec<_> = jumps.iter().map(|l| l.adjoint()).collect();
        let n = m.dimension();
        let mut total = ComplexMatrix::zeros(n, n);
        for (l, la) in jumps.iter().zip(&jumps_adj) {
            total += &(la * l);
        }
        let rate = total.operator_norm();
        Ok(CountingModel {
            theta: theta.clone(),
            evolution: NoJump::new(&m.effective_hamiltonian(theta)?),
            rho0: m.initial_density(theta)?,
            jumps,
            jumps_adj,
            time_scale: if rate > 0.0 { 1.0 / rate } else { 1.0 },
        })
    }

    pub fn theta(&self) -> &ParameterVector {
        &self.theta
    }

    pub fn initial_density(&self) -> &ComplexMatrix {
        &self.rho0
    }

    fn survival<'a>(&'a self, rho: &'a ComplexMatrix) -> Survival<'a> {
        match &self.evolution {
            NoJump::Eigen { v_inv, v_inv_adj, d, gram, .. } => {
                Survival::Eigen { x: &(v_inv * rho) * v_inv_adj, d, gram }
            }
            evo @ NoJump::Dense { .. } => Survival::Dense { rho, evo },
        }
    }

    /// Waiting time τ ∈ (lo, horizon] with S(τ) = target, or None if S(horizon) > target.
    fn invert_survival(&self, s: &Survival, target: f64, horizon: f64) -> Result<Option<f64>> {
        if s.eval(horizon)? > target {
            return Ok(None);
        }
        let (mut lo, mut g_lo) = (0.0, 1.0 - target);
        let mut hi = self.time_scale.min(horizon);
        let mut g_hi = s.eval(hi)? - target;
        while g_hi > 0.0 {
            lo = hi;
            g_lo = g_hi;
            hi = (2.0 * hi).min(horizon);
            g_hi = s.eval(hi)? - target;
        }
        // Illinois false position on g(τ) = S(τ) − target, g(lo) > 0 ≥ g(hi)
        let mut side = 0i8;
        for _ in 0..MAX_ROOT_ITERATIONS {
            if hi - lo <= 1e-13 * hi.max(1.0) || g_hi == 0.0 {
                break;
            }
            let mut mid = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let g_mid = s.eval(mid)? - target;
            if g_mid > 0.0 {
                lo = mid;
                g_lo = g_mid;
                if side == -1 {
                    g_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = mid;
                g_hi = g_mid;
                if side == 1 {
                    g_lo *= 0.5;
                }
                side = 1;
            }
        }
        Ok(Some(hi))
    }

    /// Samples a record on [0, t] starting from `rho0`.
    pub fn simulate(&self, rho0: &ComplexMatrix, t: f64, burn_in: f64, seed: u64) -> Result<CountingRecord> {
        if !(t > 0.0) || !t.is_finite() || !(burn_in >= 0.0) || burn_in >= t {
            return Err(Error::InvalidParameter(format!("need 0 ≤ burn_in < T, got burn_in={burn_in}, T={t}")));
        }
        let mut rng = rng_from(seed);
        let mut rho = rho0.scale_real(1.0 / rho0.trace().re);
        let mut now = 0.0;
        let mut jump_times = Vec::new();
        let mut channels = Vec::new();
        loop {
            let target = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            let survival = self.survival(&rho);
            let Some(tau) = self.invert_survival(&survival, target, t - now)? else {
                break;
            };
            let evolved = self.evolution.evolve(&rho, tau)?;
            now += tau;
            let weights: Vec<f64> = self
                .jumps
                .iter()
                .zip(&self.jumps_adj)
                .map(|(l, la)| (&(l * &evolved) * la).trace().re.max(0.0))
                .collect();
            let total: f64 = weights.iter().sum();
            let pick = rng.random::<f64>() * total;
            let mut c = 0;
            let mut acc = weights[0];
            while c + 1 < weights.len() && pick >= acc {
                c += 1;
                acc += weights[c];
            }
            rho = (&(&self.jumps[c] * &evolved) * &self.jumps_adj[c]).scale_real(1.0 / weights[c]);
            jump_times.push(now);
            channels.push(c);
        }
        Ok(CountingRecord { t, burn_in, jump_times, channels, theta_sim: self.theta.clone(), seed })
    }

    /// Log-density of the window given the burn-in prefix, relative to the
    /// Poisson-point reference measure.
    pub fn log_likelihood(&self, record: &CountingRecord) -> Result<f64> {
        record.validate()?;
        if !record.theta_sim.same_layout(&self.theta) {
            return Err(Error::DimensionMismatch("record parameters do not match the model".into()));
        }
        let mut rho = self.rho0.clone();
        let mut log_acc = 0.0;
        let mut now = 0.0;
        let mut burn_log = if record.burn_in == 0.0 { Some(0.0) } else { None };

        let advance = |rho: &mut ComplexMatrix, log_acc: &mut f64, dt: f64| -> Result<()> {
            let evolved = self.evolution.evolve(rho, dt)?;
            let tr = evolved.trace().re;
            *log_acc += tr.ln();
            *rho = evolved.scale_real(1.0 / tr);
            Ok(())
        };

        for (&tj, &c) in record.jump_times.iter().zip(&record.channels) {
            if c >= self.jumps.len() {
                return Err(Error::SchemaError(format!("jump channel {c} but model has {}", self.jumps.len())));
            }
            if burn_log.is_none() && tj > record.burn_in {
                advance(&mut rho, &mut log_acc, record.burn_in - now)?;
                now = record.burn_in;
                burn_log = Some(log_acc);
            }
            advance(&mut rho, &mut log_acc, tj - now)?;
            now = tj;
            let jumped = &(&self.jumps[c] * &rho) * &self.jumps_adj[c];
            let tr = jumped.trace().re;
            if !(tr > 0.0) {
                return Ok(f64::NEG_INFINITY);
            }
            log_acc += tr.ln();
            rho = jumped.scale_real(1.0 / tr);
        }
        if burn_log.is_none() {
            advance(&mut rho, &mut log_acc, record.burn_in - now)?;
            now = record.burn_in;
            burn_log = Some(log_acc);
        }
        advance(&mut rho, &mut log_acc, record.t - now)?;
        Ok(log_acc - burn_log.unwrap_or(0.0))
    }
}

/// Samples a counting record on [0, t] from `rho0`; the first `burn_in` time
/// units are excluded from later likelihoods.
pub fn simulate_counting(
    m: &ModelSpec,
    theta: &ParameterVector,
    rho0: &ComplexMatrix,
    t: f64,
    burn_in: f64,
    seed: u64,
) -> Result<CountingRecord> {
    CountingModel::new(m, theta)?.simulate(rho0, t, burn_in, seed)
}

/// Conditional log-likelihood of the record window under `theta`.
pub fn log_likelihood_counting(record: &CountingRecord, m: &ModelSpec, theta: &ParameterVector) -> Result<f64> {
    CountingModel::new(m, theta)?.log_likelihood(record)
}
