//! Monte Carlo estimation of exceedance probabilities for the self-normalized
//! statistics, used to check that every closed-form bound dominates its
//! empirical counterpart.
//!
//! Replications are independent: replication `r` draws from a dedicated
//! counter-based stream (`seed`, stream `r + 1`) of a ChaCha generator, and
//! results are aggregated by an exact integer reduction, so a report is
//! bit-identical for a given `(config, seed)` whatever the parallel schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::bounds::{bound_thm3, bound_thm3_opt, BoundKind, BoundQuery, BoundValue};
use crate::error::{Error, Result};
use crate::estimators::DiscountedState;
use crate::rate::RateFamily;

/// Which exceedance event is simulated.
///
/// * `SupFixedHorizon`: `exists t <= n : t * I(mean_t; mu) >= delta`.
/// * `Anytime`: `exists t in [3, n] : t * I(mean_t; mu) >= coef * loglog t + delta`
///   (finite truncation of an unbounded-time event; truncation only lowers
///   the empirical frequency, and is recorded in the report).
/// * `Discounted`: `(S_g(n) - M_g(n)) / sqrt(N_{g^2}(n)) >= delta`, one-sided.
/// * `MultinomialKl`: `exists t <= n : KL(empirical_t; P0) >= delta / t`.
/// * `HoeffdingAbs`: `exists t <= n : |mean_t - mu| >= delta / sqrt(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    SupFixedHorizon,
    Anytime,
    Discounted,
    MultinomialKl,
    HoeffdingAbs,
}

/// Sampling law of the simulated increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SampleLaw {
    Bernoulli { mean: f64 },
    Beta { alpha: f64, beta: f64 },
    Gaussian { mean: f64, sd: f64 },
    Constant { value: f64 },
    Categorical { probs: Vec<f64> },
}

impl SampleLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            SampleLaw::Bernoulli { mean } => {
                if !(mean.is_finite() && (0.0..=1.0).contains(mean)) {
                    return Err(Error::param("mean", format!("{mean} outside [0, 1]")));
                }
            }
            SampleLaw::Beta { alpha, beta } => {
                if !(alpha.is_finite() && *alpha > 0.0 && beta.is_finite() && *beta > 0.0) {
                    return Err(Error::param(
                        "beta_shape",
                        format!("({alpha}, {beta}) must be positive"),
                    ));
                }
            }
            SampleLaw::Gaussian { mean, sd } => {
                if !mean.is_finite() || !(sd.is_finite() && *sd > 0.0) {
                    return Err(Error::param(
                        "gaussian",
                        format!("mean {mean}, sd {sd} invalid"),
                    ));
                }
            }
            SampleLaw::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::param("value", "must be finite"));
                }
            }
            SampleLaw::Categorical { probs } => {
                if probs.len() < 2 {
                    return Err(Error::param("probs", "need at least 2 symbols"));
                }
                let mut sum = 0.0;
                for &p in probs {
                    if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                        return Err(Error::param("probs", format!("entry {p} outside [0, 1]")));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::param("probs", format!("sum to {sum}, expected 1")));
                }
            }
        }
        Ok(())
    }

    /// Expectation of a scalar law; categorical laws have no scalar mean.
    pub fn mean(&self) -> Result<f64> {
        match self {
            SampleLaw::Bernoulli { mean } => Ok(*mean),
            SampleLaw::Beta { alpha, beta } => Ok(alpha / (alpha + beta)),
            SampleLaw::Gaussian { mean, .. } => Ok(*mean),
            SampleLaw::Constant { value } => Ok(*value),
            SampleLaw::Categorical { .. } => Err(Error::config(
                "categorical laws have no scalar mean; use the multinomial_kl statistic",
            )),
        }
    }

    fn is_unit_interval(&self) -> bool {
        match self {
            SampleLaw::Bernoulli { .. } | SampleLaw::Beta { .. } => true,
            SampleLaw::Constant { value } => (0.0..=1.0).contains(value),
            _ => false,
        }
    }
}

/// Piecewise-constant schedule of true means for non-stationary runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case")]
pub enum MeanSchedule {
    Constant { value: f64 },
    /// `(start_time, mean)` segments; the first must start at 1, times
    /// strictly increasing.
    Piecewise { segments: Vec<(u64, f64)> },
}

impl MeanSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            MeanSchedule::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::param("schedule", "mean must be finite"));
                }
            }
            MeanSchedule::Piecewise { segments } => {
                if segments.first().map(|s| s.0) != Some(1) {
                    return Err(Error::param("schedule", "first segment must start at t = 1"));
                }
                for w in segments.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::param("schedule", "segment times must increase"));
                    }
                }
                if segments.iter().any(|s| !s.1.is_finite()) {
                    return Err(Error::param("schedule", "means must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn mean_at(&self, t: u64) -> f64 {
        match self {
            MeanSchedule::Constant { value } => *value,
            MeanSchedule::Piecewise { segments } => segments
                .iter()
                .take_while(|(start, _)| *start <= t)
                .last()
                .map(|(_, m)| *m)
                .unwrap_or(segments[0].1),
        }
    }
}

/// Full description of one exceedance experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub statistic: StatisticKind,
    #[serde(flatten)]
    pub law: SampleLaw,
    /// Rate family of the statistic; defaults to the kl rate for laws on
    /// `[0, 1]` and the matching quadratic rate for gaussian laws.
    pub family: Option<RateFamily>,
    /// True-mean schedule for discounted runs; defaults to the law's mean.
    pub mean_schedule: Option<MeanSchedule>,
    /// Horizon `n`; for `Anytime` this is the truncation time of the
    /// unbounded-time event.
    pub horizon: u64,
    pub delta: f64,
    /// Bound compared against the empirical exceedance frequency.
    pub bound: BoundKind,
    pub replications: u64,
    pub seed: u64,
}

/// Outcome of an experiment: empirical exceedance frequency with its Monte
/// Carlo error, the theoretical bound, and the domination verdict
/// (`Dominated` when `p_hat - 3 * std_error <= bound.clamped`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub statistic: StatisticKind,
    pub bound_kind: BoundKind,
    pub delta: f64,
    pub horizon: u64,
    pub replications: u64,
    pub exceedances: u64,
    pub empirical_rate: f64,
    pub std_error: f64,
    pub bound: BoundValue,
    pub verdict: Verdict,
    /// `p_hat / bound.raw`: sharpness telemetry, reported but never asserted.
    pub sharpness_ratio: Option<f64>,
    /// Set for `Anytime` runs: the event was truncated at this time, which
    /// can only lower the empirical frequency.
    pub truncated_at: Option<u64>,
    pub seed: u64,
    pub wall_clock_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dominated,
    Violated,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        self.bound.validate()?;
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(Error::config(format!("delta {} must be >= 0", self.delta)));
        }
        match self.statistic {
            StatisticKind::SupFixedHorizon => {
                let fam = self.resolved_family()?;
                match self.bound {
                    BoundKind::Thm1
                    | BoundKind::Thm1Eta { .. }
                    | BoundKind::Thm2 { .. }
                    | BoundKind::Thm2Opt
                    | BoundKind::Subgaussian { .. }
                    | BoundKind::UnionBaseline => {}
                    other => {
                        return Err(Error::config(format!(
                            "bound {other:?} does not control the sup_fixed_horizon statistic"
                        )))
                    }
                }
                if matches!(self.bound, BoundKind::Subgaussian { .. })
                    && !matches!(fam, RateFamily::Quadratic { .. })
                {
                    return Err(Error::config(
                        "the subgaussian bound applies to quadratic rates only",
                    ));
                }
            }
            StatisticKind::Anytime => {
                if !matches!(self.bound, BoundKind::Thm3 { .. } | BoundKind::Thm3Opt) {
                    return Err(Error::config(
                        "anytime runs need a horizon-free bound kind",
                    ));
                }
                if self.delta.is_nan() || self.delta <= 1.0 {
                    return Err(Error::config("anytime thresholds require delta > 1"));
                }
                self.resolved_family()?;
            }
            StatisticKind::Discounted => {
                let BoundKind::Discounted { b, .. } = self.bound else {
                    return Err(Error::config(
                        "discounted runs need the discounted bound kind",
                    ));
                };
                if matches!(
                    self.law,
                    SampleLaw::Gaussian { .. } | SampleLaw::Categorical { .. }
                ) {
                    return Err(Error::config(
                        "discounted runs need a bounded scalar law (bernoulli, beta or constant)",
                    ));
                }
                let schedule = self.resolved_schedule()?;
                schedule.validate()?;
                for t in 1..=self.horizon {
                    let m = schedule.mean_at(t);
                    if !(0.0..=b).contains(&m) {
                        return Err(Error::config(format!(
                            "scheduled mean {m} at t = {t} is outside [0, {b}]"
                        )));
                    }
                }
            }
            StatisticKind::MultinomialKl => {
                let SampleLaw::Categorical { probs } = &self.law else {
                    return Err(Error::config(
                        "the multinomial_kl statistic needs a categorical law",
                    ));
                };
                let BoundKind::Multinomial { alphabet_size } = self.bound else {
                    return Err(Error::config(
                        "the multinomial_kl statistic needs the multinomial bound",
                    ));
                };
                if alphabet_size as usize != probs.len() {
                    return Err(Error::config(format!(
                        "alphabet size {alphabet_size} does not match {} symbols",
                        probs.len()
                    )));
                }
            }
            StatisticKind::HoeffdingAbs => {
                if !matches!(self.bound, BoundKind::HoeffdingSn) {
                    return Err(Error::config(
                        "the hoeffding_abs statistic needs the hoeffding_sn bound",
                    ));
                }
                if !self.law.is_unit_interval() {
                    return Err(Error::config(
                        "the hoeffding_abs statistic needs a law on [0, 1]",
                    ));
                }
            }
        }
        Ok(())
    }

    /// The rate family of the statistic, defaulted from the law. An explicit
    /// family must genuinely dominate the law: a quadratic rate needs
    /// `range >= 2 sd` for gaussian increments and `range >= 1` on `[0, 1]`.
    pub fn resolved_family(&self) -> Result<RateFamily> {
        if let Some(fam) = &self.family {
            fam.validate()?;
            let compatible = match (&self.law, fam) {
                (SampleLaw::Gaussian { sd, .. }, RateFamily::Quadratic { range }) => {
                    *range >= 2.0 * sd - 1e-12
                }
                (SampleLaw::Gaussian { .. }, _) => false,
                (law, RateFamily::Bernoulli | RateFamily::BoundedKl) => law.is_unit_interval(),
                (law, RateFamily::Quadratic { range }) => {
                    law.is_unit_interval() && *range >= 1.0 - 1e-12
                }
                _ => false,
            };
            if !compatible {
                return Err(Error::config(format!(
                    "family {} does not dominate the configured law",
                    fam.name()
                )));
            }
            return Ok(fam.clone());
        }
        match &self.law {
            SampleLaw::Gaussian { sd, .. } => Ok(RateFamily::Quadratic { range: 2.0 * sd }),
            law if law.is_unit_interval() => Ok(RateFamily::BoundedKl),
            law => Err(Error::config(format!(
                "no default rate family for law {law:?}"
            ))),
        }
    }

    fn resolved_schedule(&self) -> Result<MeanSchedule> {
        if let Some(s) = &self.mean_schedule {
            return Ok(s.clone());
        }
        Ok(MeanSchedule::Constant {
            value: self.law.mean()?,
        })
    }

    fn bound_query(&self) -> BoundQuery {
        BoundQuery {
            kind: self.bound,
            delta: self.delta,
            horizon: if self.bound.is_horizon_free() {
                None
            } else {
                Some(self.horizon)
            },
        }
    }
}

#[derive(Clone, Copy)]
enum RateKernel {
    Kl { mu: f64 },
    Quadratic { mu: f64, two_over_k2: f64 },
}

impl RateKernel {
    fn for_family(family: &RateFamily, mu: f64) -> Result<Self> {
        match family {
            RateFamily::Bernoulli | RateFamily::BoundedKl => {
                family.check_mean(mu)?;
                Ok(RateKernel::Kl { mu })
            }
            RateFamily::Quadratic { range } => Ok(RateKernel::Quadratic {
                mu,
                two_over_k2: 2.0 / (range * range),
            }),
            other => Err(Error::config(format!(
                "family {} is not supported by the simulation kernels",
                other.name()
            ))),
        }
    }

    #[inline]
    fn eval(&self, xbar: f64) -> f64 {
        match *self {
            RateKernel::Kl { mu } => crate::rate::kl_raw(xbar.clamp(0.0, 1.0), mu),
            RateKernel::Quadratic { mu, two_over_k2 } => {
                let d = xbar - mu;
                d * d * two_over_k2
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Sampler {
    Bernoulli(f64),
    Beta(rand_distr::Beta<f64>),
    Gaussian(rand_distr::Normal<f64>),
    Constant(f64),
}

impl Sampler {
    fn for_law(law: &SampleLaw) -> Result<Self> {
        Ok(match law {
            SampleLaw::Bernoulli { mean } => Sampler::Bernoulli(*mean),
            SampleLaw::Beta { alpha, beta } => Sampler::Beta(
                rand_distr::Beta::new(*alpha, *beta)
                    .map_err(|e| Error::config(format!("beta law: {e}")))?,
            ),
            SampleLaw::Gaussian { mean, sd } => Sampler::Gaussian(
                rand_distr::Normal::new(*mean, *sd)
                    .map_err(|e| Error::config(format!("gaussian law: {e}")))?,
            ),
            SampleLaw::Constant { value } => Sampler::Constant(*value),
            SampleLaw::Categorical { .. } => {
                return Err(Error::config("categorical laws use the symbol sampler"))
            }
        })
    }

    #[inline]
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Bernoulli(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Beta(d) => d.sample(rng),
            Sampler::Gaussian(d) => d.sample(rng),
            Sampler::Constant(v) => *v,
        }
    }
}

/// Runs the configured experiment and reports the empirical exceedance
/// frequency against the theoretical bound.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let bound = config.bound_query().evaluate()?;

    let exceedances: u64 = match config.statistic {
        StatisticKind::SupFixedHorizon => {
            let mu = config.law.mean()?;
            let kernel = RateKernel::for_family(&config.resolved_family()?, mu)?;
            let sampler = Sampler::for_law(&config.law)?;
            let (n, delta) = (config.horizon, config.delta);
            run_replications(config, move |rng| {
                let mut sum = 0.0;
                for t in 1..=n {
                    sum += sampler.draw(rng);
                    let tf = t as f64;
                    if tf * kernel.eval(sum / tf) >= delta {
                        return true;
                    }
                }
                false
            })
        }
        StatisticKind::HoeffdingAbs => {
            let mu = config.law.mean()?;
            let sampler = Sampler::for_law(&config.law)?;
            let (n, delta) = (config.horizon, config.delta);
            run_replications(config, move |rng| {
                let mut sum = 0.0;
                for t in 1..=n {
                    sum += sampler.draw(rng);
                    let tf = t as f64;
                    if (sum - tf * mu).abs() >= delta * tf.sqrt() {
                        return true;
                    }
                }
                false
            })
        }
        StatisticKind::Anytime => {
            let mu = config.law.mean()?;
            let kernel = RateKernel::for_family(&config.resolved_family()?, mu)?;
            let sampler = Sampler::for_law(&config.law)?;
            let anytime = match config.bound {
                BoundKind::Thm3 { c } => bound_thm3(config.delta, c)?,
                BoundKind::Thm3Opt => bound_thm3_opt(config.delta)?,
                _ => unreachable!("validated above"),
            };
            // Threshold at integer times; below t = 3 the loglog threshold is
            // not positive and those times are skipped.
            let thresholds: Vec<f64> = (0..=config.horizon)
                .map(|t| {
                    if t < 3 {
                        f64::INFINITY
                    } else {
                        anytime.threshold(t as f64).unwrap_or(f64::INFINITY)
                    }
                })
                .collect();
            let n = config.horizon;
            run_replications(config, move |rng| {
                let mut sum = 0.0;
                for t in 1..=n {
                    sum += sampler.draw(rng);
                    let tf = t as f64;
                    if tf * kernel.eval(sum / tf) >= thresholds[t as usize] {
                        return true;
                    }
                }
                false
            })
        }
        StatisticKind::Discounted => {
            let BoundKind::Discounted { gamma, b, .. } = config.bound else {
                unreachable!("validated above")
            };
            let schedule = config.resolved_schedule()?;
            let law = config.law.clone();
            let (n, delta) = (config.horizon, config.delta);
            run_replications(config, move |rng| {
                let mut state = DiscountedState::new(gamma).expect("validated gamma");
                let mut current_mean = f64::NAN;
                let mut sampler = Sampler::Constant(0.0);
                for t in 1..=n {
                    let m = schedule.mean_at(t);
                    if m != current_mean {
                        current_mean = m;
                        sampler = bounded_sampler(&law, m, b);
                    }
                    let x = sampler.draw(rng) * b;
                    state.update(true, x, m);
                }
                state.fluctuation().map(|f| f >= delta).unwrap_or(false)
            })
        }
        StatisticKind::MultinomialKl => {
            let SampleLaw::Categorical { probs } = &config.law else {
                unreachable!("validated above")
            };
            let probs = probs.clone();
            let mut cdf = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for &p in &probs {
                acc += p;
                cdf.push(acc);
            }
            let log_probs: Vec<f64> = probs
                .iter()
                .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
                .collect();
            let (n, delta) = (config.horizon, config.delta);
            run_replications(config, move |rng| {
                let mut counts = vec![0u64; cdf.len()];
                // t * KL(P_hat_t; P0) = sum c_a log c_a - sum c_a log p_a - t log t,
                // maintained incrementally (one count changes per step).
                let mut count_entropy = 0.0; // sum c_a log c_a
                let mut cross = 0.0; // sum c_a log p_a
                for t in 1..=n {
                    let u: f64 = rng.random();
                    let sym = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                    let c = counts[sym];
                    counts[sym] = c + 1;
                    let c0 = c as f64;
                    let c1 = (c + 1) as f64;
                    count_entropy += c1 * c1.ln() - if c > 0 { c0 * c0.ln() } else { 0.0 };
                    if log_probs[sym].is_infinite() {
                        // Impossible under the law, kept for completeness.
                        return true;
                    }
                    cross += log_probs[sym];
                    let tf = t as f64;
                    let t_kl = count_entropy - cross - tf * tf.ln();
                    if t_kl >= delta {
                        return true;
                    }
                }
                false
            })
        }
    };

    let r = config.replications as f64;
    let p_hat = exceedances as f64 / r;
    let std_error = (p_hat * (1.0 - p_hat) / r).sqrt();
    let verdict = if p_hat - 3.0 * std_error <= bound.clamped {
        Verdict::Dominated
    } else {
        Verdict::Violated
    };
    Ok(ExperimentReport {
        statistic: config.statistic,
        bound_kind: config.bound,
        delta: config.delta,
        horizon: config.horizon,
        replications: config.replications,
        exceedances,
        empirical_rate: p_hat,
        std_error,
        bound,
        verdict,
        sharpness_ratio: (bound.raw > 0.0).then(|| p_hat / bound.raw),
        truncated_at: (config.statistic == StatisticKind::Anytime).then_some(config.horizon),
        seed: config.seed,
        wall_clock_ms: started.elapsed().as_millis() as u64,
    })
}

/// Sampler on `[0, 1]` with mean `m / b`; the caller rescales draws by `b`.
/// Degenerate means collapse to point masses. Config validation guarantees
/// `m` is in `[0, b]` and the law is a bounded scalar one.
fn bounded_sampler(law: &SampleLaw, m: f64, b: f64) -> Sampler {
    let p = m / b;
    match law {
        SampleLaw::Bernoulli { .. } => Sampler::Bernoulli(p),
        SampleLaw::Beta { alpha, beta } if p > 0.0 && p < 1.0 => {
            let kappa = alpha + beta;
            Sampler::Beta(
                rand_distr::Beta::new(kappa * p, kappa * (1.0 - p)).expect("positive shapes"),
            )
        }
        SampleLaw::Beta { .. } => Sampler::Constant(p),
        SampleLaw::Constant { .. } => Sampler::Constant(p),
        _ => unreachable!("rejected by config validation"),
    }
}

fn run_replications(
    config: &ExperimentConfig,
    simulate: impl Fn(&mut ChaCha8Rng) -> bool + Sync,
) -> u64 {
    (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(rep + 1);
            u64::from(simulate(&mut rng))
        })
        .sum()
}
