//! Monte-Carlo classical Fisher information rates.
//!
//! Each trajectory contributes a common-record central-difference score
//! s = [ℓ(θ+h e_α) − ℓ(θ−h e_α)]/(2h). The rate estimate is mean(s²)/T with a
//! batch-means standard error. With step doubling the ±2h score is also
//! formed and mean|s_h² − s_2h²|/T is added in quadrature as a
//! finite-difference error floor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counting::CountingModel;
use super::homodyne::{default_homodyne_step, homodyne_step_bound, run_fused, HomodyneKernel};
use super::trajectory_seed;
use crate::error::{Error, Result};
use crate::liouvillian::relaxation_time;
use crate::model::{ModelSpec, ParameterVector};
use crate::qfi::{FisherEstimate, FisherMeta, Method};

/// Default burn-in, in relaxation times 1/gap.
pub const DEFAULT_BURN_IN_RELAXATIONS: f64 = 20.0;
/// Windows shorter than this many relaxation times are flagged `short_window`.
pub const MIN_WINDOW_RELAXATIONS: f64 = 100.0;
const MAX_BATCHES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scheme {
    Counting,
    /// `dt = None` picks the largest admissible step.
    Homodyne { phi: f64, dt: Option<f64> },
}

impl Scheme {
    pub fn method(&self) -> Method {
        match self {
            Scheme::Counting => Method::CountingMc,
            Scheme::Homodyne { .. } => Method::HomodyneMc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfiConfig {
    pub scheme: Scheme,
    /// Likelihood window length (excludes burn-in).
    #[serde(rename = "T")]
    pub t: f64,
    pub n_traj: usize,
    /// `None` means DEFAULT_BURN_IN_RELAXATIONS relaxation times.
    pub burn_in: Option<f64>,
    pub seed: u64,
    pub h_rel: f64,
    pub h_min: f64,
    /// `None`: on for counting, off for homodyne.
    pub step_doubling: Option<bool>,
}

impl CfiConfig {
    pub fn new(scheme: Scheme, t: f64, n_traj: usize, seed: u64) -> Self {
        CfiConfig { scheme, t, n_traj, burn_in: None, seed, h_rel: 1e-4, h_min: 1e-5, step_doubling: None }
    }

    pub fn step(&self, value: f64) -> f64 {
        (self.h_rel * value.abs()).max(self.h_min)
    }

    fn doubling(&self) -> bool {
        self.step_doubling.unwrap_or(matches!(self.scheme, Scheme::Counting))
    }

    fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidParameter(format!("window T must be > 0, got {}", self.t)));
        }
        if self.n_traj < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 trajectories, got {}", self.n_traj)));
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("burn_in must be ≥ 0, got {b}")));
            }
        }
        if !(self.h_rel > 0.0 && self.h_min > 0.0) {
            return Err(Error::InvalidParameter("score steps must be positive".into()));
        }
        Ok(())
    }
}

/// Per-trajectory scores for several parameters on common records.
#[derive(Clone, Debug)]
pub struct ScoreSamples {
    pub params: Vec<usize>,
    pub steps: Vec<f64>,
    /// `scores[i][k]`: parameter `params[i]`, trajectory `k`, step h.
    pub scores: Vec<Vec<f64>>,
    /// Same with step 2h, when step doubling is on.
    pub coarse_scores: Option<Vec<Vec<f64>>>,
    pub window: f64,
    pub burn_in: f64,
    pub method: Method,
    pub flags: Vec<String>,
}

fn batch_standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    let b = n.min(MAX_BATCHES);
    let means: Vec<f64> = (0..b)
        .map(|i| {
            let (lo, hi) = (i * n / b, (i + 1) * n / b);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let grand = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

impl ScoreSamples {
    pub fn n_traj(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }

    /// Fisher-rate estimate for the `i`-th requested parameter.
    pub fn estimate(&self, i: usize) -> FisherEstimate {
        let n = self.n_traj() as f64;
        let info: Vec<f64> = self.scores[i].iter().map(|s| s * s / self.window).collect();
        let value = info.iter().sum::<f64>() / n;
        let mut se = batch_standard_error(&info);
        if let Some(coarse) = &self.coarse_scores {
            let floor = self.scores[i]
                .iter()
                .zip(&coarse[i])
                .map(|(a, b)| (a * a - b * b).abs())
                .sum::<f64>()
                / (n * self.window);
            se = se.hypot(floor);
        }
        FisherEstimate {
            value,
            params: (self.params[i], self.params[i]),
            method: self.method,
            std_error: se,
            meta: FisherMeta {
                h: Some(self.steps[i]),
                t: Some(self.window),
                n_traj: Some(self.n_traj()),
                burn_in: Some(self.burn_in),
                flags: self.flags.clone(),
            },
        }
    }

    /// Mean score and its standard error for the `i`-th parameter.
    pub fn score_mean(&self, i: usize) -> (f64, f64) {
        let s = &self.scores[i];
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}

/// Simulates `cfg.n_traj` records at `theta` and scores each under
/// displacements of every parameter in `params`.
pub fn cfi_scores(m: &ModelSpec, theta: &ParameterVector, params: &[usize], cfg: &CfiConfig) -> Result<ScoreSamples> {
    cfg.validate()?;
    m.check(theta)?;
    for &a in params {
        if a >= theta.len() {
            return Err(Error::InvalidParameter(format!("parameter index {a} out of range")));
        }
    }
    let relax = relaxation_time(m, theta)?;
    let burn_in = cfg.burn_in.unwrap_or(DEFAULT_BURN_IN_RELAXATIONS * relax);
    let total = burn_in + cfg.t;
    let mut flags = Vec::new();
    if cfg.t < MIN_WINDOW_RELAXATIONS * relax {
        flags.push("short_window".to_string());
    }
    let doubling = cfg.doubling();
    let steps: Vec<f64> = params.iter().map(|&a| cfg.step(theta.values()[a])).collect();

    // shifted points: per parameter +h, −h, then +2h, −2h when doubling
    let per_param = if doubling { 4 } else { 2 };
    let mut shifted = Vec::with_capacity(params.len() * per_param);
    for (&a, &h) in params.iter().zip(&steps) {
        shifted.push(theta.shifted(a, h));
        shifted.push(theta.shifted(a, -h));
        if doubling {
            shifted.push(theta.shifted(a, 2.0 * h));
            shifted.push(theta.shifted(a, -2.0 * h));
        }
    }

    let mut burn_used = burn_in;
    let (window, lls): (f64, Vec<Vec<f64>>) = match cfg.scheme {
        Scheme::Counting => {
            let sim = CountingModel::new(m, theta)?;
            let models = shifted.iter().map(|p| CountingModel::new(m, p)).collect::<Result<Vec<_>>>()?;
            let lls = (0..cfg.n_traj)
                .into_par_iter()
                .map(|k| {
                    let rec = sim.simulate(sim.initial_density(), total, burn_in, trajectory_seed(cfg.seed, k as u64))?;
                    models.iter().map(|cm| cm.log_likelihood(&rec)).collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            (cfg.t, lls)
        }
        Scheme::Homodyne { phi, dt } => {
            let dt = match dt {
                Some(d) => d,
                None => default_homodyne_step(m, theta, cfg.t)?,
            };
            let bound = homodyne_step_bound(m, theta)?;
            if dt > bound {
                return Err(Error::StepTooLarge { dt, bound });
            }
            // window on the step grid; burn-in rounds up to whole steps
            let window_steps = (cfg.t / dt).round() as usize;
            if window_steps == 0 {
                return Err(Error::InvalidParameter(format!("window T={} shorter than dt={dt}", cfg.t)));
            }
            let burn_steps = (burn_in / dt - 1e-9).ceil().max(0.0) as usize;
            let n_steps = burn_steps + window_steps;
            let snapped = window_steps as f64 * dt;
            let window = if (snapped - cfg.t).abs() <= 1e-9 * cfg.t { cfg.t } else { snapped };
            burn_used = burn_steps as f64 * dt;
            let sim = HomodyneKernel::new(m, theta, dt, phi)?;
            let kernels = shifted.iter().map(|p| HomodyneKernel::new(m, p, dt, phi)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&HomodyneKernel> = kernels.iter().collect();
            let lls = (0..cfg.n_traj)
                .into_par_iter()
                .map(|k| {
                    run_fused(&sim, sim.initial(), &refs, n_steps, burn_steps, trajectory_seed(cfg.seed, k as u64), false)
                        .log_likelihoods
                })
                .collect::<Vec<_>>();
            (window, lls)
        }
    };

    let mut scores = vec![Vec::with_capacity(cfg.n_traj); params.len()];
    let mut coarse = vec![Vec::with_capacity(cfg.n_traj); params.len()];
    for ll in &lls {
        for (i, &h) in steps.iter().enumerate() {
            let o = i * per_param;
            scores[i].push((ll[o] - ll[o + 1]) / (2.0 * h));
            if doubling {
                coarse[i].push((ll[o + 2] - ll[o + 3]) / (4.0 * h));
            }
        }
    }
    if scores.iter().flatten().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("record has zero likelihood under a displaced parameter".into()));
    }
    Ok(ScoreSamples {
        params: params.to_vec(),
        steps,
        scores,
        coarse_scores: doubling.then_some(coarse),
        window,
        burn_in: burn_used,
        method: cfg.scheme.method(),
        flags,
    })
}

/// CFI rates for several parameters, all scored on the same records.
pub fn cfi_rates(m: &ModelSpec, theta: &ParameterVector, params: &[usize], cfg: &CfiConfig) -> Result<Vec<FisherEstimate>> {
    let s = cfi_scores(m, theta, params, cfg)?;
    Ok((0..params.len()).map(|i| s.estimate(i)).collect())
}

/// CFI rate for one parameter.
pub fn cfi_rate(m: &ModelSpec, theta: &ParameterVector, alpha: usize, cfg: &CfiConfig) -> Result<FisherEstimate> {
    Ok(cfi_rates(m, theta, &[alpha], cfg)?.remove(0))
}
