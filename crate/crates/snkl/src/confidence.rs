//! Confidence sets built by inverting a rate function: scalar intervals
//! `{mu : N * I(mean; mu) <= delta}`, canonical-parameter regions for
//! exponential models, and KL-ball regions on the simplex.
//!
//! The rate is monotone on each side of the empirical mean, so every endpoint
//! is found by an unconditionally convergent bisection (200 iteration cap,
//! rate residual driven to 1e-10 or to the floating-point grid limit). Toward
//! a finite domain edge the root can sit exponentially close to it, so those
//! sides bisect the log-distance to the edge instead of the mean itself.
//! Where the set reaches the edge of the expectation domain the closed edge is
//! returned with a `clipped` flag rather than an error: downstream UCB indices
//! need a total function.

use serde::Serialize;

use crate::bounds::{calibrate_delta, BoundKind};
use crate::error::{Error, Result};
use crate::estimators::EmpiricalDistribution;
use crate::rate::{kl_divergence, ExpFamilyModel, RateFamily};

const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITER: usize = 200;
/// Smallest positive distance-to-edge probed before declaring an endpoint
/// clipped.
const EDGE_DISTANCE: f64 = 1e-300;

/// One edge of a confidence interval; `clipped` marks endpoints that hit the
/// expectation domain's boundary before the rate reached `delta / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEndpoint {
    pub value: f64,
    pub clipped: bool,
}

/// Risk certificate attached to an interval calibrated from `(kind, alpha, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskCertificate {
    pub kind: BoundKind,
    pub horizon: u64,
    pub alpha: f64,
    pub delta: f64,
}

/// Scalar confidence set `{mu : N * I(center; mu) <= delta}`.
#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceSet {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_clipped: bool,
    pub upper_clipped: bool,
    pub delta: f64,
    pub count: u64,
    pub family: RateFamily,
    pub certificate: Option<RiskCertificate>,
}

fn check_center(family: &RateFamily, xbar: f64) -> Result<()> {
    family.validate()?;
    if !xbar.is_finite() {
        return Err(Error::param("xbar", format!("{xbar} must be finite")));
    }
    let ok = match family {
        RateFamily::Bernoulli | RateFamily::BoundedKl => (0.0..=1.0).contains(&xbar),
        RateFamily::Quadratic { .. } => true,
        // At 0 the exponential-type rate is infinite for every mean: no
        // interval exists there.
        RateFamily::Exponential | RateFamily::GammaFixedShape { .. } => xbar > 0.0,
        RateFamily::Poisson => xbar >= 0.0,
        RateFamily::ExplicitPhi(_) => {
            return Err(Error::domain(
                "explicit-phi families are pinned to a single expectation; \
                 no interval over means exists",
            ))
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "empirical mean {xbar} is outside the closure of the {} family's domain",
            family.name()
        )))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::param("delta", format!("{delta} must be >= 0")));
    }
    Ok(())
}

/// Largest `mu >= xbar` with `N * I(xbar; mu) <= delta`, by bisection; the
/// domain's upper edge, flagged clipped, when the inequality holds there.
pub fn upper_conf(xbar: f64, count: u64, delta: f64, family: &RateFamily) -> Result<IntervalEndpoint> {
    check_center(family, xbar)?;
    check_delta(delta)?;
    let (_, hi_edge) = family.mu_support();
    if count == 0 || delta.is_infinite() {
        return Ok(IntervalEndpoint {
            value: hi_edge,
            clipped: true,
        });
    }
    if delta == 0.0 {
        return Ok(IntervalEndpoint {
            value: xbar,
            clipped: false,
        });
    }
    if xbar >= hi_edge {
        return Ok(IntervalEndpoint {
            value: hi_edge,
            clipped: true,
        });
    }
    let nf = count as f64;
    let g = |mu: f64| nf * family.rate_raw(xbar, mu) - delta;

    if hi_edge.is_finite() {
        // Bisect the distance to the edge on a log scale: the root may be
        // exponentially close to it.
        let r = |d: f64| g(hi_edge - d);
        if r(EDGE_DISTANCE) <= 0.0 {
            return Ok(IntervalEndpoint {
                value: hi_edge,
                clipped: true,
            });
        }
        let d = bisect_geometric(&r, EDGE_DISTANCE, hi_edge - xbar);
        return Ok(IntervalEndpoint {
            value: hi_edge - d,
            clipped: false,
        });
    }
    // The rate grows without bound away from xbar: double the width.
    let mut width = xbar.abs().max(1.0);
    let hi = loop {
        let cand = xbar + width;
        if g(cand) >= 0.0 {
            break cand;
        }
        width *= 2.0;
        if !width.is_finite() {
            return Ok(IntervalEndpoint {
                value: f64::INFINITY,
                clipped: true,
            });
        }
    };
    Ok(IntervalEndpoint {
        value: bisect_endpoint(&g, xbar, hi),
        clipped: false,
    })
}

/// Smallest `mu <= xbar` with `N * I(xbar; mu) <= delta`; mirror of
/// [`upper_conf`].
pub fn lower_conf(xbar: f64, count: u64, delta: f64, family: &RateFamily) -> Result<IntervalEndpoint> {
    check_center(family, xbar)?;
    check_delta(delta)?;
    let (lo_edge, _) = family.mu_support();
    if count == 0 || delta.is_infinite() {
        return Ok(IntervalEndpoint {
            value: lo_edge,
            clipped: true,
        });
    }
    if delta == 0.0 {
        return Ok(IntervalEndpoint {
            value: xbar,
            clipped: false,
        });
    }
    if xbar <= lo_edge {
        return Ok(IntervalEndpoint {
            value: lo_edge,
            clipped: true,
        });
    }
    let nf = count as f64;
    let g = |mu: f64| nf * family.rate_raw(xbar, mu) - delta;

    if lo_edge.is_finite() {
        // The mean at the edge itself may be outside the expectation domain
        // (Poisson, exponential): probe strictly inside.
        let r = |d: f64| g(lo_edge + d);
        if r(EDGE_DISTANCE) <= 0.0 {
            return Ok(IntervalEndpoint {
                value: lo_edge,
                clipped: true,
            });
        }
        let d = bisect_geometric(&r, EDGE_DISTANCE, xbar - lo_edge);
        return Ok(IntervalEndpoint {
            value: lo_edge + d,
            clipped: false,
        });
    }
    let mut width = xbar.abs().max(1.0);
    let lo = loop {
        let cand = xbar - width;
        if g(cand) >= 0.0 {
            break cand;
        }
        width *= 2.0;
        if !width.is_finite() {
            return Ok(IntervalEndpoint {
                value: f64::NEG_INFINITY,
                clipped: true,
            });
        }
    };
    // On [lo, xbar] the residual decreases in mu: bisect the mirrored axis.
    let h = |m: f64| g(lo + xbar - m);
    let root = bisect_endpoint(&h, lo, xbar);
    Ok(IntervalEndpoint {
        value: lo + xbar - root,
        clipped: false,
    })
}

/// Bisection for the root of an increasing residual on `[lo, hi]` with
/// `g(lo) <= 0 <= g(hi)`. Runs until the residual tolerance or the floating
/// grid limit; on exhaustion returns the inside (`g <= 0`) end.
fn bisect_endpoint(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm.abs() <= RESIDUAL_TOL {
            return mid;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Log-scale bisection for a decreasing residual on `[lo, hi]`, `0 < lo < hi`,
/// with `r(lo) > 0 >= r(hi)`; resolves roots spread across hundreds of orders
/// of magnitude. On exhaustion returns the inside (`r <= 0`) end.
fn bisect_geometric(r: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_ITER {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let rm = r(mid);
        if rm.abs() <= RESIDUAL_TOL {
            return mid;
        }
        if rm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Two-sided interval at an explicit threshold `delta`.
pub fn interval(xbar: f64, count: u64, delta: f64, family: &RateFamily) -> Result<ConfidenceSet> {
    let lo = lower_conf(xbar, count, delta, family)?;
    let hi = upper_conf(xbar, count, delta, family)?;
    Ok(ConfidenceSet {
        center: xbar,
        lower: lo.value,
        upper: hi.value,
        lower_clipped: lo.clipped,
        upper_clipped: hi.clipped,
        delta,
        count,
        family: family.clone(),
        certificate: None,
    })
}

/// Interval whose threshold is calibrated so the whole sequence of intervals
/// over `t <= horizon` is jointly valid at level `alpha` under the chosen
/// bound.
pub fn interval_with_certificate(
    xbar: f64,
    count: u64,
    horizon: u64,
    alpha: f64,
    family: &RateFamily,
    kind: BoundKind,
) -> Result<ConfidenceSet> {
    let n = if kind.is_horizon_free() {
        None
    } else {
        Some(horizon)
    };
    let cal = calibrate_delta(kind, alpha, n)?;
    let mut set = interval(xbar, count, cal.delta, family)?;
    set.certificate = Some(RiskCertificate {
        kind,
        horizon,
        alpha,
        delta: cal.delta,
    });
    Ok(set)
}

/// Interval of canonical parameters `{theta : N * KL(P_that; P_theta) <= delta}`
/// where `that` is the parameter matching the empirical mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamInterval {
    pub theta_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_clipped: bool,
    pub upper_clipped: bool,
}

/// Canonical-parameter confidence region of an exponential model, obtained by
/// bisecting the Bregman divergence of the log-partition function on each
/// side of `theta_hat = mean^{-1}(xbar)`.
pub fn exp_family_region(
    xbar: f64,
    count: u64,
    delta: f64,
    model: &ExpFamilyModel,
) -> Result<ParamInterval> {
    check_delta(delta)?;
    let theta_hat = model.theta_of_mean(xbar)?;
    let (theta_min, theta_max) = model.theta_domain();
    if count == 0 || delta.is_infinite() {
        return Ok(ParamInterval {
            theta_hat,
            lower: theta_min,
            upper: theta_max,
            lower_clipped: true,
            upper_clipped: true,
        });
    }
    if delta == 0.0 {
        return Ok(ParamInterval {
            theta_hat,
            lower: theta_hat,
            upper: theta_hat,
            lower_clipped: false,
            upper_clipped: false,
        });
    }
    let nf = count as f64;
    let b_hat = model.log_partition(theta_hat)?;
    let grad_hat = model.mean(theta_hat)?;
    let g = move |theta: f64| {
        let breg = (model.log_partition(theta).unwrap_or(f64::INFINITY)
            - b_hat
            - grad_hat * (theta - theta_hat))
            .max(0.0);
        nf * breg - delta
    };

    let upper = directed_param_endpoint(&g, theta_hat, theta_max, 1.0);
    let lower = directed_param_endpoint(&g, theta_hat, theta_min, -1.0);
    Ok(ParamInterval {
        theta_hat,
        lower: lower.value,
        upper: upper.value,
        lower_clipped: lower.clipped,
        upper_clipped: upper.clipped,
    })
}

/// Endpoint search from `start` toward `edge` (direction +1 up, -1 down) for
/// an increasing-away-from-start residual `g`.
fn directed_param_endpoint(g: &dyn Fn(f64) -> f64, start: f64, edge: f64, dir: f64) -> IntervalEndpoint {
    // Expand toward the edge until the residual turns nonnegative.
    let mut prev = start;
    let mut bracket = None;
    for k in 1..=200 {
        let cand = if edge.is_finite() {
            edge - (edge - prev) * 0.5
        } else {
            start + dir * 2.0f64.powi(k - 1) * start.abs().max(1.0)
        };
        if g(cand) >= 0.0 {
            bracket = Some((prev, cand));
            break;
        }
        prev = cand;
        if edge.is_finite() && (edge - cand).abs() <= f64::EPSILON * edge.abs().max(1.0) {
            break;
        }
    }
    let Some((near, far)) = bracket else {
        return IntervalEndpoint {
            value: edge,
            clipped: true,
        };
    };
    // Bisect on the segment [near, far]; map to an increasing axis first.
    let root = if dir > 0.0 {
        bisect_endpoint(g, near, far)
    } else {
        let h = |m: f64| g(far + near - m);
        let r = bisect_endpoint(&h, far, near);
        far + near - r
    };
    IntervalEndpoint {
        value: root,
        clipped: false,
    }
}

/// KL ball `{Q : KL(center; Q) <= radius}` around an empirical distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexRegion {
    center: Vec<f64>,
    radius: f64,
}

impl SimplexRegion {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::EmptySample("simplex region with no symbols"));
        }
        let mut sum = 0.0;
        for &p in &center {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::param("center", format!("entry {p} outside [0, 1]")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("center", format!("sums to {sum}, expected 1")));
        }
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::param("radius", format!("{radius} must be >= 0")));
        }
        Ok(Self { center, radius })
    }

    /// Region `{Q : KL(P_hat; Q) <= delta / t}` for an empirical law on `t`
    /// observations.
    pub fn from_empirical(dist: &EmpiricalDistribution, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let t = dist.total();
        if t == 0 {
            return Err(Error::EmptySample("empirical law of an empty sequence"));
        }
        Self::new(dist.probs()?, delta / t as f64)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Full divergence `KL(center; q)`, `+inf` if `q` misses a center-positive
    /// symbol.
    pub fn divergence_to(&self, q: &[f64]) -> Result<f64> {
        kl_divergence(&self.center, q)
    }

    pub fn contains(&self, q: &[f64]) -> Result<bool> {
        Ok(self.divergence_to(q)? <= self.radius)
    }
}
