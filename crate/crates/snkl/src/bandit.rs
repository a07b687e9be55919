//! UCB-style bandit policies whose indices are upper confidence edges, with a
//! discounted variant for drifting means, and a paired-replication runner
//! reporting cumulative pseudo-regret.
//!
//! Each replication pre-draws one table of uniforms shared by every policy
//! run with the same seed, so policies can be compared on common random
//! numbers. Replication `r` uses stream `r + 1` of a ChaCha generator seeded
//! with the configured seed; aggregation folds replications in index order,
//! making traces independent of the parallel schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::upper_conf;
use crate::error::{Error, Result};
use crate::estimators::{DiscountedState, StreamState};
use crate::rate::RateFamily;

/// Threshold schedule `delta(t)` used by the index policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "threshold", rename_all = "snake_case")]
pub enum ThresholdSpec {
    /// `log t + factor * max(0, loglog t)`.
    LogPlusLoglog { loglog_factor: f64 },
    /// Time-independent threshold.
    Constant { value: f64 },
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec::LogPlusLoglog { loglog_factor: 3.0 }
    }
}

impl ThresholdSpec {
    pub fn eval(&self, t: u64) -> f64 {
        match *self {
            ThresholdSpec::LogPlusLoglog { loglog_factor } => {
                let log_t = (t.max(1) as f64).ln();
                log_t + loglog_factor * log_t.ln().max(0.0)
            }
            ThresholdSpec::Constant { value } => value,
        }
    }
}

/// Index policy to run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Index = upper edge of `{mu : N * I(mean; mu) <= delta(t)}` with the
    /// binary-kl rate.
    #[serde(rename = "klucb")]
    KlUcb,
    /// Index = `mean + sqrt(delta(t) / (2 N))`.
    HoeffdingUcb,
    /// Index on discounted statistics,
    /// `mean_g + b * sqrt(xi * log nu_g(t) / (2 (1 - eta^2/16))) * sqrt(N_{g^2}) / N_g`,
    /// obtained by inverting the discounted deviation bound's exponent; `xi`
    /// scales the exploration term.
    DiscountedUcb { gamma: f64, eta: f64, b: f64, xi: f64 },
}

impl PolicyKind {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::KlUcb => "klucb",
            PolicyKind::HoeffdingUcb => "hoeffding_ucb",
            PolicyKind::DiscountedUcb { .. } => "discounted_ucb",
        }
    }

    fn validate(&self) -> Result<()> {
        if let PolicyKind::DiscountedUcb { gamma, eta, b, xi } = *self {
            if !(gamma.is_finite() && gamma > 0.0 && gamma < 1.0) {
                return Err(Error::param("gamma", format!("{gamma} must lie in (0, 1)")));
            }
            if !(eta.is_finite() && eta > 0.0 && eta < 4.0) {
                return Err(Error::param("eta", format!("{eta} must lie in (0, 4)")));
            }
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::param("b", format!("{b} must be positive")));
            }
            if !(xi.is_finite() && xi > 0.0) {
                return Err(Error::param("xi", format!("{xi} must be positive")));
            }
        }
        Ok(())
    }
}

/// Bernoulli bandit instance: initial arm means, optional piecewise-constant
/// switches `(time, new means)`, and run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditConfig {
    pub arms: Vec<f64>,
    #[serde(default)]
    pub switches: Vec<(u64, Vec<f64>)>,
    pub horizon: u64,
    #[serde(flatten)]
    pub policy: PolicyKind,
    #[serde(default)]
    pub threshold: Option<ThresholdSpec>,
    pub replications: u64,
    pub seed: u64,
    /// Record the regret curve every this many rounds (the final round is
    /// always recorded).
    pub checkpoint_every: u64,
}

impl BanditConfig {
    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.arms.len() < 2 {
            return Err(Error::config("need at least 2 arms"));
        }
        if self.horizon < self.arms.len() as u64 {
            return Err(Error::config(format!(
                "horizon {} is smaller than the number of arms {}",
                self.horizon,
                self.arms.len()
            )));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::config("checkpoint_every must be at least 1"));
        }
        let check_means = |means: &[f64]| -> Result<()> {
            for &m in means {
                if !(m.is_finite() && (0.0..=1.0).contains(&m)) {
                    return Err(Error::config(format!("arm mean {m} outside [0, 1]")));
                }
            }
            Ok(())
        };
        check_means(&self.arms)?;
        let mut prev = 1;
        for (t, means) in &self.switches {
            if *t <= prev {
                return Err(Error::config("switch times must be increasing and > 1"));
            }
            if means.len() != self.arms.len() {
                return Err(Error::config(format!(
                    "switch at t = {t} has {} means for {} arms",
                    means.len(),
                    self.arms.len()
                )));
            }
            check_means(means)?;
            prev = *t;
        }
        Ok(())
    }

    fn means_at(&self, t: u64) -> &[f64] {
        let mut current = self.arms.as_slice();
        for (start, means) in &self.switches {
            if *start <= t {
                current = means;
            } else {
                break;
            }
        }
        current
    }
}

/// Upper-confidence index of one arm: `+inf` for an unplayed arm (forced
/// exploration), else the upper edge of the kl-neighborhood at `delta(t)`.
pub fn klucb_index(
    state: &StreamState,
    t: u64,
    delta_fn: impl Fn(u64) -> f64,
    family: &RateFamily,
) -> Result<f64> {
    match state.mean() {
        None => Ok(f64::INFINITY),
        Some(mean) => Ok(upper_conf(mean, state.count(), delta_fn(t), family)?.value),
    }
}

/// Hoeffding index `mean + sqrt(delta(t) / (2 N))`; `+inf` for an unplayed arm.
pub fn hoeffding_index(state: &StreamState, t: u64, delta_fn: impl Fn(u64) -> f64) -> f64 {
    match state.mean() {
        None => f64::INFINITY,
        Some(mean) => mean + (delta_fn(t) / (2.0 * state.count() as f64)).sqrt(),
    }
}

/// One point of the aggregated regret curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretPoint {
    pub t: u64,
    pub mean_regret: f64,
    pub std_error: f64,
}

/// Aggregated outcome of a policy over paired replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanditOutcome {
    pub policy: PolicyKind,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    pub mean_final_regret: f64,
    pub std_error_final_regret: f64,
    pub mean_arm_pulls: Vec<f64>,
    pub curve: Vec<RegretPoint>,
}

impl BanditOutcome {
    /// Plot-ready CSV: `t,mean_regret,stderr,policy`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "t,mean_regret,stderr,policy")?;
        for p in &self.curve {
            writeln!(
                w,
                "{},{:.12e},{:.12e},{}",
                p.t,
                p.mean_regret,
                p.std_error,
                self.policy.label()
            )?;
        }
        Ok(())
    }
}

struct RepTrace {
    checkpoints: Vec<f64>,
    final_regret: f64,
    pulls: Vec<u64>,
}

/// Runs the configured policy over paired replications and aggregates
/// per-checkpoint pseudo-regret `sum_t max_a mu_a(t) - mu_{A_t}(t)`.
pub fn run_policy(config: &BanditConfig) -> Result<BanditOutcome> {
    config.validate()?;
    let threshold = config.threshold.unwrap_or_default();
    let k = config.arms.len();
    let horizon = config.horizon;
    let checkpoint_count = horizon.div_ceil(config.checkpoint_every) as usize;

    let traces: Vec<RepTrace> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(rep + 1);
            // One shared table of uniforms per (seed, rep): policies compared
            // under the same seed see the same potential rewards.
            let uniforms: Vec<f64> = (0..horizon as usize * k).map(|_| rng.random()).collect();
            simulate_rep(config, threshold, &uniforms)
        })
        .collect();

    // Sequential fold in replication order keeps the aggregation exact and
    // schedule-independent.
    let mut sum = vec![0.0f64; checkpoint_count];
    let mut sum_sq = vec![0.0f64; checkpoint_count];
    let mut pulls = vec![0.0f64; k];
    let mut final_sum = 0.0;
    let mut final_sum_sq = 0.0;
    for trace in &traces {
        for (i, &r) in trace.checkpoints.iter().enumerate() {
            sum[i] += r;
            sum_sq[i] += r * r;
        }
        for (i, &p) in trace.pulls.iter().enumerate() {
            pulls[i] += p as f64;
        }
        final_sum += trace.final_regret;
        final_sum_sq += trace.final_regret * trace.final_regret;
    }
    let reps = config.replications as f64;
    let stderr = |s: f64, s2: f64| {
        if config.replications < 2 {
            0.0
        } else {
            let var = ((s2 - s * s / reps) / (reps - 1.0)).max(0.0);
            (var / reps).sqrt()
        }
    };
    let curve: Vec<RegretPoint> = (0..checkpoint_count)
        .map(|i| RegretPoint {
            t: ((i as u64 + 1) * config.checkpoint_every).min(horizon),
            mean_regret: sum[i] / reps,
            std_error: stderr(sum[i], sum_sq[i]),
        })
        .collect();
    Ok(BanditOutcome {
        policy: config.policy,
        horizon,
        replications: config.replications,
        seed: config.seed,
        mean_final_regret: final_sum / reps,
        std_error_final_regret: stderr(final_sum, final_sum_sq),
        mean_arm_pulls: pulls.iter().map(|p| p / reps).collect(),
        curve,
    })
}

fn simulate_rep(config: &BanditConfig, threshold: ThresholdSpec, uniforms: &[f64]) -> RepTrace {
    let k = config.arms.len();
    let horizon = config.horizon;
    let family = RateFamily::BoundedKl;
    let mut plain: Vec<StreamState> = vec![StreamState::new(); k];
    let mut discounted: Vec<DiscountedState> = match config.policy {
        PolicyKind::DiscountedUcb { gamma, .. } => {
            vec![DiscountedState::new(gamma).expect("validated gamma"); k]
        }
        _ => Vec::new(),
    };
    let mut pulls = vec![0u64; k];
    let mut regret = 0.0;
    let mut checkpoints = Vec::with_capacity(horizon.div_ceil(config.checkpoint_every) as usize);

    for t in 1..=horizon {
        let means = config.means_at(t);
        let choice = match config.policy {
            PolicyKind::KlUcb => argmax_by(k, |a| {
                klucb_index(&plain[a], t, |t| threshold.eval(t), &family)
                    .expect("bernoulli rewards stay in [0, 1]")
            }),
            PolicyKind::HoeffdingUcb => {
                argmax_by(k, |a| hoeffding_index(&plain[a], t, |t| threshold.eval(t)))
            }
            PolicyKind::DiscountedUcb { eta, b, xi, .. } => argmax_by(k, |a| {
                let s = &discounted[a];
                match s.mean() {
                    None => f64::INFINITY,
                    Some(mean) => {
                        let nu = s.total_weight();
                        let radius = b
                            * (xi * nu.ln().max(0.0) / (2.0 * (1.0 - eta * eta / 16.0))).sqrt()
                            * s.weighted_count_sq().sqrt()
                            / s.weighted_count();
                        mean + radius
                    }
                }
            }),
        };
        let u = uniforms[(t - 1) as usize * k + choice];
        let reward = if u < means[choice] { 1.0 } else { 0.0 };
        pulls[choice] += 1;
        match config.policy {
            PolicyKind::DiscountedUcb { .. } => {
                for (a, s) in discounted.iter_mut().enumerate() {
                    let played = a == choice;
                    s.update(played, if played { reward } else { 0.0 }, means[a]);
                }
            }
            _ => plain[choice].update(true, reward),
        }
        let best = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        regret += best - means[choice];
        if t.is_multiple_of(config.checkpoint_every) {
            checkpoints.push(regret);
        }
    }
    if !horizon.is_multiple_of(config.checkpoint_every) {
        checkpoints.push(regret);
    }
    RepTrace {
        checkpoints,
        final_regret: regret,
        pulls,
    }
}

/// Argmax over arm indices, ties broken by the lowest index.
fn argmax_by(k: usize, mut index: impl FnMut(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for a in 0..k {
        let v = index(a);
        if v > best_value {
            best_value = v;
            best = a;
        }
    }
    best
}
