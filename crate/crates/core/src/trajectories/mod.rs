//! Continuous-measurement records: simulation, likelihoods, Monte-Carlo
//! classical Fisher information, and two independent oracles.
//!
//! Records span `[0, T]` and carry a `burn_in` prefix. Likelihoods are
//! conditional on the prefix: ℓ = log Tr ρ̃(T) − log Tr ρ̃(burn_in), so only
//! the window `[burn_in, T]` contributes information.

mod cfi;
mod counting;
mod homodyne;
mod oracle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParameterVector;

pub use cfi::{cfi_rate, cfi_rates, cfi_scores, CfiConfig, Scheme, ScoreSamples, DEFAULT_BURN_IN_RELAXATIONS, MIN_WINDOW_RELAXATIONS};
pub use counting::{log_likelihood_counting, simulate_counting, CountingModel};
pub use homodyne::{
    default_homodyne_step, homodyne_step_bound, log_likelihood_homodyne, simulate_homodyne, HomodyneFilter,
    HomodyneKernel, HOMODYNE_STEP_FACTOR,
};
pub use oracle::{brute_force_overlap, waiting_time_moments, wtd_fisher_oracle, WtdOptions, MAX_BRUTE_FORCE_STEPS};

/// Jump record from direct photodetection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingRecord {
    #[serde(rename = "T")]
    pub t: f64,
    pub burn_in: f64,
    /// Strictly increasing, all in (0, T].
    pub jump_times: Vec<f64>,
    /// Jump-operator index per jump.
    pub channels: Vec<usize>,
    pub theta_sim: ParameterVector,
    pub seed: u64,
}

/// Diffusive record from homodyne detection; one increment per step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneRecord {
    #[serde(rename = "T")]
    pub t: f64,
    pub burn_in: f64,
    pub dt: f64,
    pub phi: f64,
    pub increments: Vec<f64>,
    pub theta_sim: ParameterVector,
    pub seed: u64,
}

impl CountingRecord {
    pub fn window(&self) -> f64 {
        self.t - self.burn_in
    }

    pub fn validate(&self) -> Result<()> {
        check_span(self.t, self.burn_in)?;
        if self.jump_times.len() != self.channels.len() {
            return Err(Error::SchemaError(format!(
                "{} jump times but {} channel labels",
                self.jump_times.len(),
                self.channels.len()
            )));
        }
        let mut prev = 0.0;
        for &tj in &self.jump_times {
            if !(tj > prev) || tj > self.t {
                return Err(Error::SchemaError(format!("jump time {tj} out of order or beyond T={}", self.t)));
            }
            prev = tj;
        }
        Ok(())
    }
}

impl HomodyneRecord {
    pub fn window(&self) -> f64 {
        self.t - self.burn_in
    }

    /// Index of the first step inside the window.
    pub fn burn_in_steps(&self) -> usize {
        (self.burn_in / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        check_span(self.t, self.burn_in)?;
        if !(self.dt > 0.0) {
            return Err(Error::SchemaError(format!("dt must be > 0, got {}", self.dt)));
        }
        let expected = (self.t / self.dt).round() as usize;
        if self.increments.len() != expected {
            return Err(Error::SchemaError(format!(
                "{} increments for T/dt = {expected}",
                self.increments.len()
            )));
        }
        if self.increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::SchemaError("non-finite increment".into()));
        }
        Ok(())
    }
}

fn check_span(t: f64, burn_in: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() || !(burn_in >= 0.0) || burn_in >= t {
        return Err(Error::SchemaError(format!("record needs 0 ≤ burn_in < T, got burn_in={burn_in}, T={t}")));
    }
    Ok(())
}

/// On-disk record: `{"type": "counting" | "homodyne", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Counting(CountingRecord),
    Homodyne(HomodyneRecord),
}

impl Record {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Record = serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))?;
        match &r {
            Record::Counting(c) => c.validate()?,
            Record::Homodyne(h) => h.validate()?,
        }
        Ok(r)
    }
}

/// SplitMix64 finalizer of (master, index); decorrelates neighbouring streams.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
