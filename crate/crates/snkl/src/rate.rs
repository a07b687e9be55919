//! Rate functions `I(x; mu)` for one-parameter families.
//!
//! Each family is defined through a convex log-moment-generating function
//! `phi` with `phi'(0) = mu`; the rate function is its Legendre transform
//! `I(x; mu) = sup_lambda { lambda*x - phi(lambda) }`. Closed forms are used
//! wherever they exist; `ExplicitPhi` falls back to a safeguarded 1-D solver.
//!
//! `+inf` is represented as `f64::INFINITY`, never as a large sentinel value.

use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary relative entropy `kl(p, q)` between Bernoulli(p) and Bernoulli(q),
/// in nats, with the conventions `0*log 0 = 0`, `kl(p, 0) = +inf` for `p > 0`
/// and `kl(p, 1) = +inf` for `p < 1`.
pub fn kl(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(kl_raw(p, q))
}

/// `kl` without input validation; callers must guarantee `p, q` lie in [0, 1].
#[inline]
pub(crate) fn kl_raw(p: f64, q: f64) -> f64 {
    let mut acc = 0.0;
    if p > 0.0 {
        if q == 0.0 {
            return f64::INFINITY;
        }
        acc += p * (p / q).ln();
    }
    if p < 1.0 {
        if q == 1.0 {
            return f64::INFINITY;
        }
        acc += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    acc.max(0.0)
}

/// Kullback-Leibler divergence between two distributions on a finite alphabet,
/// with `0*log 0 = 0`; `+inf` as soon as `q` puts no mass on a `p`-positive
/// symbol.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::EmptySample("distribution has no symbols"));
    }
    if p.len() != q.len() {
        return Err(Error::domain(format!(
            "alphabet mismatch: {} vs {} symbols",
            p.len(),
            q.len()
        )));
    }
    for (name, v) in [("p", p), ("q", q)] {
        let mut sum = 0.0;
        for &w in v {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::param(
                    "distribution",
                    format!("{name} has an entry {w} outside [0, 1]"),
                ));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "distribution",
                format!("{name} sums to {sum}, expected 1"),
            ));
        }
    }
    Ok(kl_divergence_raw(p, q))
}

#[inline]
pub(crate) fn kl_divergence_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi == 0.0 {
                return f64::INFINITY;
            }
            acc += pi * (pi / qi).ln();
        }
    }
    acc.max(0.0)
}

fn check_probability(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::param(name, format!("{v} is outside [0, 1]")));
    }
    Ok(())
}

/// A log-mgf supplied as a pair of evaluators on an open interval
/// `(lambda_min, lambda_max)` containing 0. The implied mean is `phi'(0)`.
#[derive(Clone)]
pub struct ExplicitPhi {
    lambda_min: f64,
    lambda_max: f64,
    phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    phi_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    mean: f64,
}

impl fmt::Debug for ExplicitPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExplicitPhi")
            .field("lambda_min", &self.lambda_min)
            .field("lambda_max", &self.lambda_max)
            .field("mean", &self.mean)
            .finish()
    }
}

impl ExplicitPhi {
    pub fn new(
        lambda_min: f64,
        lambda_max: f64,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lambda_min < 0.0 && lambda_max > 0.0) {
            return Err(Error::param(
                "lambda_domain",
                format!("({lambda_min}, {lambda_max}) must contain 0"),
            ));
        }
        let mean = phi_prime(0.0);
        if !mean.is_finite() {
            return Err(Error::param("phi_prime", "phi'(0) is not finite"));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
            phi: Arc::new(phi),
            phi_prime: Arc::new(phi_prime),
            mean,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn lambda_domain(&self) -> (f64, f64) {
        (self.lambda_min, self.lambda_max)
    }

    fn phi_at(&self, lambda: f64) -> f64 {
        if lambda <= self.lambda_min || lambda >= self.lambda_max {
            return f64::INFINITY;
        }
        (self.phi)(lambda)
    }

    /// Solves `phi'(lambda) = x` by safeguarded Newton iterations with a
    /// bisection fallback; `None` when `x` is outside the attainable slopes.
    fn solve_slope(&self, x: f64) -> Option<f64> {
        let atol = 1e-12 * x.abs().max(1.0);
        let g = |l: f64| (self.phi_prime)(l) - x;
        let g0 = g(0.0);
        if g0.abs() <= atol {
            return Some(0.0);
        }
        // Expand a bracket from 0 toward the relevant endpoint.
        let (mut lo, mut hi);
        if g0 < 0.0 {
            lo = 0.0;
            hi = f64::NAN;
            for k in 1..=60 {
                let cand = if self.lambda_max.is_finite() {
                    self.lambda_max * (1.0 - 0.5f64.powi(k))
                } else {
                    2.0f64.powi(k - 1)
                };
                if g(cand) >= 0.0 {
                    hi = cand;
                    break;
                }
                lo = cand;
            }
            if hi.is_nan() {
                return None;
            }
        } else {
            hi = 0.0;
            lo = f64::NAN;
            for k in 1..=60 {
                let cand = if self.lambda_min.is_finite() {
                    self.lambda_min * (1.0 - 0.5f64.powi(k))
                } else {
                    -(2.0f64.powi(k - 1))
                };
                if g(cand) <= 0.0 {
                    lo = cand;
                    break;
                }
                hi = cand;
            }
            if lo.is_nan() {
                return None;
            }
        }
        let mut lambda = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gl = g(lambda);
            if gl.abs() <= atol {
                return Some(lambda);
            }
            if gl < 0.0 {
                lo = lambda;
            } else {
                hi = lambda;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
                return Some(lambda);
            }
            // Newton step with a numeric slope, clipped back into the bracket.
            let h = (1e-7 * lambda.abs().max(1.0))
                .min((self.lambda_max - lambda) / 2.0)
                .min((lambda - self.lambda_min) / 2.0);
            let slope = ((self.phi_prime)(lambda + h) - (self.phi_prime)(lambda - h)) / (2.0 * h);
            let next = lambda - gl / slope;
            lambda = if slope > 0.0 && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        Some(lambda)
    }

    fn rate(&self, x: f64) -> f64 {
        match self.solve_slope(x) {
            Some(lambda) => (lambda * x - self.phi_at(lambda)).max(0.0),
            None => f64::INFINITY,
        }
    }
}

/// One-parameter family with a closed-form (or explicitly supplied) rate
/// function. `Quadratic { range }` is the sub-gaussian rate
/// `2 (x - mu)^2 / range^2` of a variable spanning `range`; `BoundedKl` is the
/// binary-kl rate that dominates every `[0, 1]`-valued variable.
#[derive(Clone, Debug)]
pub enum RateFamily {
    Bernoulli,
    BoundedKl,
    Quadratic { range: f64 },
    Exponential,
    Poisson,
    GammaFixedShape { shape: f64 },
    ExplicitPhi(ExplicitPhi),
}

impl RateFamily {
    pub fn name(&self) -> &'static str {
        match self {
            RateFamily::Bernoulli => "bernoulli",
            RateFamily::BoundedKl => "bounded_kl",
            RateFamily::Quadratic { .. } => "quadratic",
            RateFamily::Exponential => "exponential",
            RateFamily::Poisson => "poisson",
            RateFamily::GammaFixedShape { .. } => "gamma_fixed_shape",
            RateFamily::ExplicitPhi(_) => "explicit_phi",
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            RateFamily::Quadratic { range } if !(range.is_finite() && *range > 0.0) => Err(
                Error::param("range", format!("{range} must be positive and finite")),
            ),
            RateFamily::GammaFixedShape { shape } if !(shape.is_finite() && *shape > 0.0) => Err(
                Error::param("shape", format!("{shape} must be positive and finite")),
            ),
            _ => Ok(()),
        }
    }

    /// Interval of admissible expectations. `ExplicitPhi` is pinned to the
    /// single mean `phi'(0)`.
    pub fn mu_support(&self) -> (f64, f64) {
        match self {
            RateFamily::Bernoulli | RateFamily::BoundedKl => (0.0, 1.0),
            RateFamily::Quadratic { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            RateFamily::Exponential | RateFamily::Poisson | RateFamily::GammaFixedShape { .. } => {
                (0.0, f64::INFINITY)
            }
            RateFamily::ExplicitPhi(p) => (p.mean, p.mean),
        }
    }

    /// Closure of the interval where `I(.; mu)` is finite; for `ExplicitPhi`
    /// this is the range of attainable slopes `phi'`.
    pub fn rate_support(&self, mu: f64) -> Result<(f64, f64)> {
        self.validate()?;
        self.check_mean(mu)?;
        Ok(match self {
            RateFamily::Bernoulli | RateFamily::BoundedKl => (0.0, 1.0),
            RateFamily::Quadratic { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            RateFamily::Exponential | RateFamily::GammaFixedShape { .. } => (0.0, f64::INFINITY),
            RateFamily::Poisson => (0.0, f64::INFINITY),
            RateFamily::ExplicitPhi(p) => {
                let inset = |edge: f64, sign: f64| {
                    if edge.is_finite() {
                        edge - sign * 1e-9 * edge.abs().max(1.0)
                    } else {
                        sign * 700.0
                    }
                };
                (
                    (p.phi_prime)(inset(p.lambda_min, -1.0)),
                    (p.phi_prime)(inset(p.lambda_max, 1.0)),
                )
            }
        })
    }

    pub(crate) fn check_mean(&self, mu: f64) -> Result<()> {
        let ok = match self {
            RateFamily::Bernoulli | RateFamily::BoundedKl => {
                mu.is_finite() && (0.0..=1.0).contains(&mu)
            }
            RateFamily::Quadratic { .. } => mu.is_finite(),
            RateFamily::Exponential | RateFamily::Poisson | RateFamily::GammaFixedShape { .. } => {
                mu.is_finite() && mu > 0.0
            }
            RateFamily::ExplicitPhi(p) => {
                mu.is_finite() && (mu - p.mean).abs() <= 1e-9 * p.mean.abs().max(1.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "mean {mu} is outside the {} family's expectation domain",
                self.name()
            )))
        }
    }

    /// The rate function `I(x; mu)`; `+inf` outside the finite-rate domain.
    pub fn rate(&self, x: f64, mu: f64) -> Result<f64> {
        self.validate()?;
        self.check_mean(mu)?;
        if x.is_nan() {
            return Err(Error::param("x", "NaN"));
        }
        Ok(self.rate_raw(x, mu))
    }

    #[inline]
    pub(crate) fn rate_raw(&self, x: f64, mu: f64) -> f64 {
        match self {
            RateFamily::Bernoulli | RateFamily::BoundedKl => {
                if (0.0..=1.0).contains(&x) {
                    kl_raw(x, mu)
                } else {
                    f64::INFINITY
                }
            }
            RateFamily::Quadratic { range } => {
                let d = x - mu;
                2.0 * d * d / (range * range)
            }
            RateFamily::Exponential => exp_like_rate(x, mu, 1.0),
            RateFamily::Poisson => {
                if x < 0.0 {
                    f64::INFINITY
                } else if x == 0.0 {
                    mu
                } else {
                    (mu - x + x * (x / mu).ln()).max(0.0)
                }
            }
            RateFamily::GammaFixedShape { shape } => exp_like_rate(x, mu, *shape),
            RateFamily::ExplicitPhi(p) => p.rate(x),
        }
    }

    /// The unique `lambda(x)` with `phi'(lambda) = x`, for `x` in the open
    /// finite-rate interval; satisfies `I(x; mu) = lambda*x - phi(lambda)`.
    pub fn lambda_of_x(&self, x: f64, mu: f64) -> Result<f64> {
        self.validate()?;
        self.check_mean(mu)?;
        let err = || {
            Error::domain(format!(
                "x = {x} is outside the open finite-rate interval of the {} family",
                self.name()
            ))
        };
        match self {
            RateFamily::Bernoulli | RateFamily::BoundedKl => {
                if !(x > 0.0 && x < 1.0) {
                    return Err(err());
                }
                if !(mu > 0.0 && mu < 1.0) {
                    return Err(Error::domain(format!(
                        "mean {mu} must be interior to (0, 1) for lambda(x)"
                    )));
                }
                Ok((x / (1.0 - x)).ln() - (mu / (1.0 - mu)).ln())
            }
            RateFamily::Quadratic { range } => {
                if !x.is_finite() {
                    return Err(err());
                }
                Ok(4.0 * (x - mu) / (range * range))
            }
            RateFamily::Exponential => {
                if !(x.is_finite() && x > 0.0) {
                    return Err(err());
                }
                Ok(1.0 / mu - 1.0 / x)
            }
            RateFamily::Poisson => {
                if !(x.is_finite() && x > 0.0) {
                    return Err(err());
                }
                Ok((x / mu).ln())
            }
            RateFamily::GammaFixedShape { shape } => {
                if !(x.is_finite() && x > 0.0) {
                    return Err(err());
                }
                Ok(shape * (1.0 / mu - 1.0 / x))
            }
            RateFamily::ExplicitPhi(p) => p.solve_slope(x).ok_or_else(err),
        }
    }

    /// The log-mgf dominator `phi(lambda)` of the family; `+inf` where the
    /// moment-generating function diverges.
    pub fn phi(&self, lambda: f64, mu: f64) -> Result<f64> {
        self.validate()?;
        self.check_mean(mu)?;
        if lambda.is_nan() {
            return Err(Error::param("lambda", "NaN"));
        }
        Ok(match self {
            RateFamily::Bernoulli | RateFamily::BoundedKl => bernoulli_phi(lambda, mu),
            RateFamily::Quadratic { range } => {
                lambda * mu + range * range * lambda * lambda / 8.0
            }
            RateFamily::Exponential => scaled_neg_log1m(lambda, mu, 1.0),
            RateFamily::Poisson => mu * lambda.exp_m1(),
            RateFamily::GammaFixedShape { shape } => scaled_neg_log1m(lambda, mu, *shape),
            RateFamily::ExplicitPhi(p) => p.phi_at(lambda),
        })
    }
}

/// `k * (x/mu - 1 - log(x/mu))`: rate shared by Exponential (`k = 1`) and
/// Gamma with fixed shape `k` and mean `mu`.
#[inline]
fn exp_like_rate(x: f64, mu: f64, k: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        let r = x / mu;
        (k * (r - 1.0 - r.ln())).max(0.0)
    }
}

/// `-k * log(1 - lambda * mu / k)` for `lambda < k / mu`, else `+inf`.
#[inline]
fn scaled_neg_log1m(lambda: f64, mu: f64, k: f64) -> f64 {
    if lambda < k / mu {
        -k * (1.0 - lambda * mu / k).ln()
    } else {
        f64::INFINITY
    }
}

#[inline]
fn bernoulli_phi(lambda: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    if mu == 1.0 {
        return lambda;
    }
    if lambda >= 0.0 {
        // log(1 - mu + mu e^l) = l + log(mu + (1 - mu) e^-l), overflow-safe.
        lambda + (mu + (1.0 - mu) * (-lambda).exp()).ln()
    } else {
        (1.0 - mu + mu * lambda.exp()).ln()
    }
}

/// A canonical one-parameter exponential model given by its log-partition
/// function `b` on an open interval of natural parameters; the mean map is
/// `mu(theta) = b'(theta)`.
#[derive(Clone)]
pub struct ExpFamilyModel {
    name: &'static str,
    theta_min: f64,
    theta_max: f64,
    log_partition: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    mean_map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    mean_inverse: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for ExpFamilyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpFamilyModel")
            .field("name", &self.name)
            .field("theta_min", &self.theta_min)
            .field("theta_max", &self.theta_max)
            .finish()
    }
}

impl ExpFamilyModel {
    pub fn custom(
        name: &'static str,
        theta_domain: (f64, f64),
        log_partition: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mean_map: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if theta_domain.0.is_nan() || theta_domain.1.is_nan() || theta_domain.0 >= theta_domain.1 {
            return Err(Error::param("theta_domain", "empty interval"));
        }
        Ok(Self {
            name,
            theta_min: theta_domain.0,
            theta_max: theta_domain.1,
            log_partition: Arc::new(log_partition),
            mean_map: Arc::new(mean_map),
            mean_inverse: None,
        })
    }

    pub fn bernoulli() -> Self {
        Self {
            name: "bernoulli",
            theta_min: f64::NEG_INFINITY,
            theta_max: f64::INFINITY,
            // log(1 + e^t), overflow-safe.
            log_partition: Arc::new(|t| if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() }),
            mean_map: Arc::new(|t| 1.0 / (1.0 + (-t).exp())),
            mean_inverse: Some(Arc::new(|m| (m / (1.0 - m)).ln())),
        }
    }

    pub fn poisson() -> Self {
        Self {
            name: "poisson",
            theta_min: f64::NEG_INFINITY,
            theta_max: f64::INFINITY,
            log_partition: Arc::new(f64::exp),
            mean_map: Arc::new(f64::exp),
            mean_inverse: Some(Arc::new(f64::ln)),
        }
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::param("variance", "must be positive and finite"));
        }
        Ok(Self {
            name: "gaussian",
            theta_min: f64::NEG_INFINITY,
            theta_max: f64::INFINITY,
            log_partition: Arc::new(move |t| 0.5 * variance * t * t),
            mean_map: Arc::new(move |t| variance * t),
            mean_inverse: Some(Arc::new(move |m| m / variance)),
        })
    }

    pub fn exponential() -> Self {
        Self {
            name: "exponential",
            theta_min: f64::NEG_INFINITY,
            theta_max: 0.0,
            log_partition: Arc::new(|t| -(-t).ln()),
            mean_map: Arc::new(|t| -1.0 / t),
            mean_inverse: Some(Arc::new(|m| -1.0 / m)),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn theta_domain(&self) -> (f64, f64) {
        (self.theta_min, self.theta_max)
    }

    pub fn contains_theta(&self, theta: f64) -> bool {
        theta > self.theta_min && theta < self.theta_max && !theta.is_nan()
    }

    /// Log-partition `b(theta)`.
    pub fn log_partition(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok((self.log_partition)(theta))
    }

    /// Mean map `mu(theta) = b'(theta)`.
    pub fn mean(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok((self.mean_map)(theta))
    }

    /// Inverse of the (increasing) mean map; closed form when available,
    /// otherwise an expanding-bracket bisection.
    pub fn theta_of_mean(&self, mean: f64) -> Result<f64> {
        if !mean.is_finite() {
            return Err(Error::param("mean", "must be finite"));
        }
        if let Some(inv) = &self.mean_inverse {
            let theta = inv(mean);
            if !self.contains_theta(theta) {
                return Err(Error::domain(format!(
                    "mean {mean} has no parameter in the {} model",
                    self.name
                )));
            }
            return Ok(theta);
        }
        // The mean map is increasing; expand a bracket from a point strictly
        // inside the domain, halving the distance to any finite edge.
        let g = |t: f64| (self.mean_map)(t) - mean;
        let start = match (self.theta_min.is_finite(), self.theta_max.is_finite()) {
            (true, true) => 0.5 * (self.theta_min + self.theta_max),
            (true, false) => self.theta_min + 1.0,
            (false, true) => self.theta_max - 1.0,
            (false, false) => 0.0,
        };
        let (mut lo, mut hi) = (start, start);
        let mut found_lo = g(lo) <= 0.0;
        let mut found_hi = g(hi) >= 0.0;
        for k in 1..=80 {
            if found_lo && found_hi {
                break;
            }
            if !found_lo {
                lo = if self.theta_min.is_finite() {
                    self.theta_min + (lo - self.theta_min) * 0.5
                } else {
                    start - 2.0f64.powi(k)
                };
                found_lo = g(lo) <= 0.0;
            }
            if !found_hi {
                hi = if self.theta_max.is_finite() {
                    self.theta_max - (self.theta_max - hi) * 0.5
                } else {
                    start + 2.0f64.powi(k)
                };
                found_hi = g(hi) >= 0.0;
            }
        }
        if !(found_lo && found_hi) {
            return Err(Error::RootFinding(format!(
                "mean {mean} not bracketed in the {} model",
                self.name
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if self.contains_theta(theta) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "parameter {theta} is outside the {} model's domain",
                self.name
            )))
        }
    }
}

/// Bregman divergence of the log-partition function:
/// `b(theta) - b(beta) - b'(beta) (theta - beta)`. For a canonical
/// exponential model this equals `KL(P_beta; P_theta)` and
/// `I(mu(beta); mu(theta))`.
pub fn bregman_kl(model: &ExpFamilyModel, beta: f64, theta: f64) -> Result<f64> {
    let b_theta = model.log_partition(theta)?;
    let b_beta = model.log_partition(beta)?;
    let grad = model.mean(beta)?;
    Ok((b_theta - b_beta - grad * (theta - beta)).max(0.0))
}

impl Serialize for RateFamily {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RateFamily::Quadratic { range } => {
                let mut s = serializer.serialize_struct("RateFamily", 2)?;
                s.serialize_field("family", self.name())?;
                s.serialize_field("range", range)?;
                s.end()
            }
            RateFamily::GammaFixedShape { shape } => {
                let mut s = serializer.serialize_struct("RateFamily", 2)?;
                s.serialize_field("family", self.name())?;
                s.serialize_field("shape", shape)?;
                s.end()
            }
            RateFamily::ExplicitPhi(p) => {
                let mut s = serializer.serialize_struct("RateFamily", 3)?;
                s.serialize_field("family", self.name())?;
                s.serialize_field("lambda_min", &p.lambda_min)?;
                s.serialize_field("lambda_max", &p.lambda_max)?;
                s.end()
            }
            _ => {
                let mut s = serializer.serialize_struct("RateFamily", 1)?;
                s.serialize_field("family", self.name())?;
                s.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for RateFamily {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct FamilyVisitor;

        impl<'de> Visitor<'de> for FamilyVisitor {
            type Value = RateFamily;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rate-family descriptor")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<RateFamily, A::Error> {
                let mut family: Option<String> = None;
                let mut range: Option<f64> = None;
                let mut shape: Option<f64> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "family" => family = Some(map.next_value()?),
                        "range" => range = Some(map.next_value()?),
                        "shape" => shape = Some(map.next_value()?),
                        _ => {
                            let _: de::IgnoredAny = map.next_value()?;
                        }
                    }
                }
                let family = family.ok_or_else(|| de::Error::missing_field("family"))?;
                match family.as_str() {
                    "bernoulli" => Ok(RateFamily::Bernoulli),
                    "bounded_kl" => Ok(RateFamily::BoundedKl),
                    "quadratic" => Ok(RateFamily::Quadratic {
                        range: range.ok_or_else(|| de::Error::missing_field("range"))?,
                    }),
                    "exponential" => Ok(RateFamily::Exponential),
                    "poisson" => Ok(RateFamily::Poisson),
                    "gamma_fixed_shape" => Ok(RateFamily::GammaFixedShape {
                        shape: shape.ok_or_else(|| de::Error::missing_field("shape"))?,
                    }),
                    "explicit_phi" => Err(de::Error::custom(
                        "explicit_phi families cannot be built from a config; construct them in code",
                    )),
                    other => Err(de::Error::custom(format!("unknown family `{other}`"))),
                }
            }
        }

        deserializer.deserialize_map(FamilyVisitor)
    }
}
