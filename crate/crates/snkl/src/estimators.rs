//! Online sufficient statistics for plain, episodically-observed, and
//! discounted self-normalized averages.
//!
//! Observation indicators must be decided before the observation itself is
//! revealed (they may depend on everything seen strictly earlier); the
//! library cannot verify this, it is a caller obligation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running statistics of an episodically observed stream: the clock `t`, the
/// sum of observed values and the number of observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamState {
    t: u64,
    sum: f64,
    count: u64,
}

impl StreamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advances the clock; accumulates `x` only when `observed` is set.
    pub fn update(&mut self, observed: bool, x: f64) {
        self.t += 1;
        if observed {
            self.sum += x;
            self.count += 1;
        }
    }

    /// The self-normalized average; `None` before the first observation.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Exponentially discounted statistics. Every stored sum is anchored at the
/// current time `n`: each update rescales by the discount, then adds the new
/// term, so weights are `gamma^(n-t)` regardless of the observation pattern.
///
/// `mean_track` accumulates the discounted sum of the true means and exists
/// for simulation oracles only; estimation never needs it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountedState {
    gamma: f64,
    t: u64,
    weighted_sum: f64,
    weighted_count: f64,
    weighted_count_sq: f64,
    mean_track: f64,
    total_weight: f64,
}

impl DiscountedState {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param("gamma", format!("{gamma} must lie in (0, 1)")));
        }
        Ok(Self {
            gamma,
            t: 0,
            weighted_sum: 0.0,
            weighted_count: 0.0,
            weighted_count_sq: 0.0,
            mean_track: 0.0,
            total_weight: 0.0,
        })
    }

    /// Scale-then-add update. `true_mean` feeds only the oracle track and may
    /// be 0 when unknown.
    pub fn update(&mut self, observed: bool, x: f64, true_mean: f64) {
        self.t += 1;
        let g = self.gamma;
        self.weighted_sum *= g;
        self.weighted_count *= g;
        self.weighted_count_sq *= g * g;
        self.mean_track *= g;
        self.total_weight = self.total_weight * g + 1.0;
        if observed {
            self.weighted_sum += x;
            self.weighted_count += 1.0;
            self.weighted_count_sq += 1.0;
            self.mean_track += true_mean;
        }
    }

    /// Discounted average `S_g / N_g`; `None` before the first observation.
    pub fn mean(&self) -> Option<f64> {
        (self.weighted_count > 0.0).then(|| self.weighted_sum / self.weighted_count)
    }

    /// One-sided fluctuation statistic `(S_g - M_g) / sqrt(N_{g^2})`, using
    /// the oracle mean track; `None` before the first observation.
    pub fn fluctuation(&self) -> Option<f64> {
        (self.weighted_count_sq > 0.0)
            .then(|| (self.weighted_sum - self.mean_track) / self.weighted_count_sq.sqrt())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// `S_g(n) = sum gamma^(n-t) eps_t x_t`.
    pub fn weighted_sum(&self) -> f64 {
        self.weighted_sum
    }

    /// `N_g(n) = sum gamma^(n-t) eps_t`.
    pub fn weighted_count(&self) -> f64 {
        self.weighted_count
    }

    /// `N_{g^2}(n) = sum gamma^(2(n-t)) eps_t`.
    pub fn weighted_count_sq(&self) -> f64 {
        self.weighted_count_sq
    }

    /// `M_g(n) = sum gamma^(n-t) eps_t mu_t` (simulation oracle).
    pub fn mean_track(&self) -> f64 {
        self.mean_track
    }

    /// `nu_g(n) = sum gamma^(n-t) = (1 - gamma^n) / (1 - gamma)`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }
}

/// Empirical distribution over a finite alphabet, kept as exact counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalDistribution {
    pub fn new(alphabet_size: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::param("alphabet_size", "must be at least 1"));
        }
        Ok(Self {
            counts: vec![0; alphabet_size],
            total: 0,
        })
    }

    pub fn observe(&mut self, symbol: usize) -> Result<()> {
        if symbol >= self.counts.len() {
            return Err(Error::domain(format!(
                "symbol {symbol} outside alphabet of size {}",
                self.counts.len()
            )));
        }
        self.counts[symbol] += 1;
        self.total += 1;
        Ok(())
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Per-symbol frequencies `count / total`.
    pub fn probs(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::EmptySample("empirical law of an empty sequence"));
        }
        let t = self.total as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / t).collect())
    }
}

/// Empirical distribution of a symbol sequence over `{0, ..., alphabet_size-1}`.
pub fn multinomial_counts(symbols: &[usize], alphabet_size: usize) -> Result<EmpiricalDistribution> {
    if symbols.is_empty() {
        return Err(Error::EmptySample("empirical law of an empty sequence"));
    }
    let mut dist = EmpiricalDistribution::new(alphabet_size)?;
    for &s in symbols {
        dist.observe(s)?;
    }
    Ok(dist)
}
