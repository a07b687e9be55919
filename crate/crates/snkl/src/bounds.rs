//! Closed-form evaluators for the deviation bounds of the peeling family, and
//! inverse calibration from a risk level to a threshold.
//!
//! All bounds control events of the form
//! `exists t <= n : t * I(mean_t; mu) >= delta` (or a variant thereof) and are
//! evaluated exactly as displayed, in nats. Values >= 1 are returned flagged
//! as vacuous, never rejected: callers compare regimes.
//!
//! Horizon `n = 1` makes the peeling slice count `ceil(delta * log n)` vanish;
//! in that case the horizon-based bounds fall back to the single-time Chernoff
//! bound `2 exp(-delta)` (or its analogue in the statistic's own scale).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of evaluating a bound: the formula's raw value (possibly above 1),
/// its clamp to [0, 1], and a vacuousness flag (`raw >= 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub raw: f64,
    pub clamped: f64,
    pub vacuous: bool,
}

impl BoundValue {
    pub fn from_raw(raw: f64) -> Self {
        BoundValue {
            raw,
            clamped: raw.min(1.0),
            vacuous: raw >= 1.0,
        }
    }
}

/// Which deviation bound to evaluate, together with its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundKind {
    /// `2 e ceil(delta log n) exp(-delta)`.
    Thm1,
    /// Slice-growth variant `2 ceil(log n / log(1+eta)) exp(-delta / (1+eta))`,
    /// read off the peeling construction rather than a displayed closed form.
    Thm1Eta { eta: f64 },
    /// `2 ceil(log n / log(1+eta)) exp(-(1 - eta^2/8) delta)`; requires the
    /// caller to assert log-concavity of the rate in use.
    Thm2 { eta: f64 },
    /// The `eta = 2/sqrt(delta)` display: `2 sqrt(e) ceil(sqrt(delta)/2 log n) exp(-delta)`.
    Thm2Opt,
    /// Quadratic-rate refinement `2 ceil(log n / log(1+eta)) exp(-(1 - eta^2/16) delta)`.
    Subgaussian { eta: f64 },
    /// Horizon-free bound with threshold `delta*c/(delta-1) loglog t + delta`.
    Thm3 { c: f64 },
    /// The `c = 1 + 1/log(delta)` display: bound `2 e^2 delta exp(-delta)`.
    Thm3Opt,
    /// Self-normalized Hoeffding: `4 e ceil(delta^2 log n) exp(-2 delta^2)`.
    HoeffdingSn,
    /// `2 e (delta log n + |A|) exp(-delta / |A|)` for alphabets of size |A|.
    Multinomial { alphabet_size: u32 },
    /// Discounted fluctuation bound
    /// `ceil(log nu / log(1+eta)) exp(-(2 delta^2 / B^2)(1 - eta^2/16))`.
    Discounted { gamma: f64, b: f64, eta: f64 },
    /// Naive union bound over times: `2 n exp(-delta)`.
    UnionBaseline,
}

impl BoundKind {
    /// Thm3-style bounds are horizon-free; everything else needs `n`.
    pub fn is_horizon_free(&self) -> bool {
        matches!(self, BoundKind::Thm3 { .. } | BoundKind::Thm3Opt)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundKind::Thm1Eta { eta } | BoundKind::Thm2 { eta } => check_eta(eta, f64::INFINITY),
            BoundKind::Subgaussian { eta } => check_eta(eta, f64::INFINITY),
            BoundKind::Thm3 { c } => {
                if c.is_finite() && c > 1.0 {
                    Ok(())
                } else {
                    Err(Error::param("c", format!("{c} must be > 1")))
                }
            }
            BoundKind::Multinomial { alphabet_size } => {
                if alphabet_size >= 2 {
                    Ok(())
                } else {
                    Err(Error::param(
                        "alphabet_size",
                        format!("{alphabet_size} must be at least 2"),
                    ))
                }
            }
            BoundKind::Discounted { gamma, b, eta } => {
                if !(gamma.is_finite() && gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::param("gamma", format!("{gamma} must lie in (0, 1)")));
                }
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::param("b", format!("{b} must be positive")));
                }
                check_eta(eta, 4.0)
            }
            _ => Ok(()),
        }
    }
}

fn check_eta(eta: f64, upper: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta < upper {
        Ok(())
    } else if upper.is_finite() {
        Err(Error::param("eta", format!("{eta} must lie in (0, {upper})")))
    } else {
        Err(Error::param("eta", format!("{eta} must be positive")))
    }
}

/// A fully parameterized bound request. `horizon` is required exactly for the
/// horizon-based kinds and ignored by the horizon-free ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    #[serde(flatten)]
    pub kind: BoundKind,
    pub delta: f64,
    pub horizon: Option<u64>,
}

impl BoundQuery {
    pub fn evaluate(&self) -> Result<BoundValue> {
        self.kind.validate()?;
        let n = || {
            self.horizon.ok_or_else(|| {
                Error::param("horizon", "required for horizon-based bounds".to_string())
            })
        };
        match self.kind {
            BoundKind::Thm1 => bound_thm1(self.delta, n()?),
            BoundKind::Thm1Eta { eta } => bound_thm1_eta(self.delta, n()?, eta),
            BoundKind::Thm2 { eta } => bound_thm2(self.delta, n()?, eta),
            BoundKind::Thm2Opt => bound_thm2_opt(self.delta, n()?),
            BoundKind::Subgaussian { eta } => bound_subgaussian(self.delta, n()?, eta),
            BoundKind::Thm3 { c } => Ok(bound_thm3(self.delta, c)?.bound),
            BoundKind::Thm3Opt => Ok(bound_thm3_opt(self.delta)?.bound),
            BoundKind::HoeffdingSn => bound_hoeffding_sn(self.delta, n()?),
            BoundKind::Multinomial { alphabet_size } => {
                bound_multinomial(self.delta, n()?, alphabet_size)
            }
            BoundKind::Discounted { gamma, b, eta } => {
                bound_discounted(self.delta, gamma, n()?, b, eta)
            }
            BoundKind::UnionBaseline => bound_union_baseline(self.delta, n()?),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::param("delta", format!("{delta} must be >= 0")));
    }
    Ok(())
}

fn check_horizon(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("horizon", "must be at least 1".to_string()));
    }
    Ok(())
}

/// Number of peeling slices: the ceiling, kept at >= 1 so a degenerate
/// argument (`delta = 0`) still counts one slice.
#[inline]
fn slices(arg: f64) -> f64 {
    arg.ceil().max(1.0)
}

const TWO_E: f64 = 2.0 * std::f64::consts::E;

/// `2 e ceil(delta log n) exp(-delta)`; `2 exp(-delta)` at `n = 1`.
pub fn bound_thm1(delta: f64, n: u64) -> Result<BoundValue> {
    check_delta(delta)?;
    check_horizon(n)?;
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    let raw = if n == 1 {
        2.0 * (-delta).exp()
    } else {
        TWO_E * slices(delta * (n as f64).ln()) * (-delta).exp()
    };
    Ok(BoundValue::from_raw(raw))
}

/// `2 ceil(log n / log(1+eta)) exp(-delta/(1+eta))`; `2 exp(-delta)` at `n = 1`.
pub fn bound_thm1_eta(delta: f64, n: u64, eta: f64) -> Result<BoundValue> {
    check_delta(delta)?;
    check_horizon(n)?;
    check_eta(eta, f64::INFINITY)?;
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    let raw = if n == 1 {
        2.0 * (-delta).exp()
    } else {
        2.0 * slices((n as f64).ln() / eta.ln_1p()) * (-delta / (1.0 + eta)).exp()
    };
    Ok(BoundValue::from_raw(raw))
}

/// `2 ceil(log n / log(1+eta)) exp(-(1 - eta^2/8) delta)`; `2 exp(-delta)` at
/// `n = 1`. Valid when the rate function in use is log-concave; this is a
/// caller assertion, not checked here.
pub fn bound_thm2(delta: f64, n: u64, eta: f64) -> Result<BoundValue> {
    check_delta(delta)?;
    check_horizon(n)?;
    check_eta(eta, f64::INFINITY)?;
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    let raw = if n == 1 {
        2.0 * (-delta).exp()
    } else {
        2.0 * slices((n as f64).ln() / eta.ln_1p()) * (-(1.0 - eta * eta / 8.0) * delta).exp()
    };
    Ok(BoundValue::from_raw(raw))
}

/// `2 sqrt(e) ceil(sqrt(delta)/2 log n) exp(-delta)`; `2 exp(-delta)` at `n = 1`.
pub fn bound_thm2_opt(delta: f64, n: u64) -> Result<BoundValue> {
    check_delta(delta)?;
    check_horizon(n)?;
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    let raw = if n == 1 {
        2.0 * (-delta).exp()
    } else {
        2.0 * std::f64::consts::E.sqrt()
            * slices(0.5 * delta.sqrt() * (n as f64).ln())
            * (-delta).exp()
    };
    Ok(BoundValue::from_raw(raw))
}

/// Quadratic-rate case: `2 ceil(log n / log(1+eta)) exp(-(1 - eta^2/16) delta)`.
pub fn bound_subgaussian(delta: f64, n: u64, eta: f64) -> Result<BoundValue> {
    check_delta(delta)?;
    check_horizon(n)?;
    check_eta(eta, f64::INFINITY)?;
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    let raw = if n == 1 {
        2.0 * (-delta).exp()
    } else {
        2.0 * slices((n as f64).ln() / eta.ln_1p()) * (-(1.0 - eta * eta / 16.0) * delta).exp()
    };
    Ok(BoundValue::from_raw(raw))
}

/// A horizon-free bound: the event `exists t : t I >= threshold(t)` with
/// `threshold(t) = coefficient * loglog t + offset` has probability at most
/// `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnytimeBound {
    pub coefficient: f64,
    pub offset: f64,
    pub bound: BoundValue,
}

impl AnytimeBound {
    /// Threshold at (real-valued) time `t`; requires `t > 1` so that
    /// `loglog t` is finite. Positive thresholds need `t >= 3`.
    pub fn threshold(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 1.0 {
            return Err(Error::domain(format!(
                "threshold undefined at t = {t}: loglog requires t > 1"
            )));
        }
        Ok(self.coefficient * t.ln().ln() + self.offset)
    }
}

/// Threshold `delta*c/(delta-1) loglog t + delta`, bound
/// `2 e c delta^c / (c-1) exp(-delta)`; requires `delta > 1`, `c > 1`.
pub fn bound_thm3(delta: f64, c: f64) -> Result<AnytimeBound> {
    if delta.is_nan() || delta <= 1.0 {
        return Err(Error::param("delta", format!("{delta} must be > 1")));
    }
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::param("c", format!("{c} must be > 1")));
    }
    if delta.is_infinite() {
        return Ok(AnytimeBound {
            coefficient: c,
            offset: delta,
            bound: BoundValue::from_raw(0.0),
        });
    }
    let raw = TWO_E * c * delta.powf(c) / (c - 1.0) * (-delta).exp();
    Ok(AnytimeBound {
        coefficient: delta * c / (delta - 1.0),
        offset: delta,
        bound: BoundValue::from_raw(raw),
    })
}

/// The `c = 1 + 1/log(delta)` specialization: threshold coefficient
/// `delta (1 + log delta) / ((delta - 1) log delta)`, bound `2 e^2 delta exp(-delta)`.
pub fn bound_thm3_opt(delta: f64) -> Result<AnytimeBound> {
    if delta.is_nan() || delta <= 1.0 {
        return Err(Error::param("delta", format!("{delta} must be > 1")));
    }
    if delta.is_infinite() {
        return Ok(AnytimeBound {
            coefficient: 1.0,
            offset: delta,
            bound: BoundValue::from_raw(0.0),
        });
    }
    let log_delta = delta.ln();
    let raw = 2.0 * std::f64::consts::E.powi(2) * delta * (-delta).exp();
    Ok(AnytimeBound {
        coefficient: delta * (1.0 + log_delta) / ((delta - 1.0) * log_delta),
        offset: delta,
        bound: BoundValue::from_raw(raw),
    })
}

/// Self-normalized Hoeffding bound `4 e ceil(delta^2 log n) exp(-2 delta^2)`
/// for the event `sup_t |mean_t - mu| >= delta / sqrt(t)`;
/// `2 exp(-2 delta^2)` at `n = 1`.
pub fn bound_hoeffding_sn(delta: f64, n: u64) -> Result<BoundValue> {
    check_delta(delta)?;
    check_horizon(n)?;
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    let raw = if n == 1 {
        2.0 * (-2.0 * delta * delta).exp()
    } else {
        2.0 * TWO_E * slices(delta * delta * (n as f64).ln()) * (-2.0 * delta * delta).exp()
    };
    Ok(BoundValue::from_raw(raw))
}

/// `2 e (delta log n + |A|) exp(-delta/|A|)` for the event
/// `exists t <= n : KL(empirical_t; P0) >= delta / t` on an alphabet of size
/// `|A| >= 2`.
pub fn bound_multinomial(delta: f64, n: u64, alphabet_size: u32) -> Result<BoundValue> {
    check_delta(delta)?;
    check_horizon(n)?;
    if alphabet_size < 2 {
        return Err(Error::param(
            "alphabet_size",
            format!("{alphabet_size} must be at least 2"),
        ));
    }
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    let a = f64::from(alphabet_size);
    let raw = TWO_E * (delta * (n as f64).ln() + a) * (-delta / a).exp();
    Ok(BoundValue::from_raw(raw))
}

/// Geometric weight mass `nu_gamma(n) = (1 - gamma^n) / (1 - gamma)`.
pub fn nu_gamma(gamma: f64, n: u64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("{gamma} must lie in (0, 1)")));
    }
    check_horizon(n)?;
    Ok((1.0 - gamma.powf(n as f64)) / (1.0 - gamma))
}

/// Discounted fluctuation bound
/// `ceil(log nu_gamma(n) / log(1+eta)) exp(-(2 delta^2 / B^2)(1 - eta^2/16))`
/// for the one-sided event `(S_g - M_g)/sqrt(N_{g^2}) >= delta` on variables
/// bounded by `B` in absolute value. Requires `0 < eta < 4`.
pub fn bound_discounted(delta: f64, gamma: f64, n: u64, b: f64, eta: f64) -> Result<BoundValue> {
    check_delta(delta)?;
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::param("b", format!("{b} must be positive")));
    }
    check_eta(eta, 4.0)?;
    let nu = nu_gamma(gamma, n)?;
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    let raw = slices(nu.ln() / eta.ln_1p())
        * (-(2.0 * delta * delta / (b * b)) * (1.0 - eta * eta / 16.0)).exp();
    Ok(BoundValue::from_raw(raw))
}

/// Union bound over all times: `2 n exp(-delta)`.
pub fn bound_union_baseline(delta: f64, n: u64) -> Result<BoundValue> {
    check_delta(delta)?;
    check_horizon(n)?;
    if delta.is_infinite() {
        return Ok(BoundValue::from_raw(0.0));
    }
    Ok(BoundValue::from_raw(2.0 * n as f64 * (-delta).exp()))
}

/// Result of calibrating a threshold from a risk level: the returned `delta`
/// satisfies `envelope(delta) <= alpha`, hence the raw bound is at most
/// `alpha` as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub delta: f64,
    pub envelope_risk: f64,
    pub forward: BoundValue,
}

/// Smallest `delta` (to tolerance 1e-9, on the decreasing branch) such that
/// the smooth envelope of the bound is at most `alpha`.
///
/// Ceilings `ceil(x)` are majorized by `x + 1`, which restores strict
/// monotonicity without invalidating the certificate; the multinomial and
/// union formulas have no ceiling and are used as-is.
pub fn calibrate_delta(kind: BoundKind, alpha: f64, horizon: Option<u64>) -> Result<Calibration> {
    kind.validate()?;
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("{alpha} must lie in (0, 1)")));
    }
    let n = if kind.is_horizon_free() {
        None
    } else {
        let n = horizon.ok_or_else(|| {
            Error::param("horizon", "required for horizon-based bounds".to_string())
        })?;
        check_horizon(n)?;
        Some(n)
    };
    let log_n = n.map(|n| (n as f64).ln()).unwrap_or(0.0);

    let envelope: Box<dyn Fn(f64) -> f64> = match kind {
        BoundKind::Thm1 => Box::new(move |d| {
            if log_n == 0.0 {
                2.0 * (-d).exp()
            } else {
                TWO_E * (d * log_n + 1.0) * (-d).exp()
            }
        }),
        BoundKind::Thm1Eta { eta } => Box::new(move |d| {
            let factor = if log_n == 0.0 {
                1.0
            } else {
                log_n / eta.ln_1p() + 1.0
            };
            2.0 * factor * (-d / (1.0 + eta)).exp()
        }),
        BoundKind::Thm2 { eta } => {
            if eta * eta / 8.0 >= 1.0 {
                return Err(Error::param(
                    "eta",
                    format!("{eta} makes the exponent nonnegative; cannot calibrate"),
                ));
            }
            Box::new(move |d| {
                let factor = if log_n == 0.0 {
                    1.0
                } else {
                    log_n / eta.ln_1p() + 1.0
                };
                2.0 * factor * (-(1.0 - eta * eta / 8.0) * d).exp()
            })
        }
        BoundKind::Thm2Opt => Box::new(move |d| {
            if log_n == 0.0 {
                2.0 * (-d).exp()
            } else {
                2.0 * std::f64::consts::E.sqrt() * (0.5 * d.sqrt() * log_n + 1.0) * (-d).exp()
            }
        }),
        BoundKind::Subgaussian { eta } => {
            if eta * eta / 16.0 >= 1.0 {
                return Err(Error::param(
                    "eta",
                    format!("{eta} makes the exponent nonnegative; cannot calibrate"),
                ));
            }
            Box::new(move |d| {
                let factor = if log_n == 0.0 {
                    1.0
                } else {
                    log_n / eta.ln_1p() + 1.0
                };
                2.0 * factor * (-(1.0 - eta * eta / 16.0) * d).exp()
            })
        }
        BoundKind::Thm3 { c } => {
            Box::new(move |d| TWO_E * c * d.powf(c) / (c - 1.0) * (-d).exp())
        }
        BoundKind::Thm3Opt => {
            Box::new(move |d| 2.0 * std::f64::consts::E.powi(2) * d * (-d).exp())
        }
        BoundKind::HoeffdingSn => Box::new(move |d| {
            if log_n == 0.0 {
                2.0 * (-2.0 * d * d).exp()
            } else {
                2.0 * TWO_E * (d * d * log_n + 1.0) * (-2.0 * d * d).exp()
            }
        }),
        BoundKind::Multinomial { alphabet_size } => {
            let a = f64::from(alphabet_size);
            Box::new(move |d| TWO_E * (d * log_n + a) * (-d / a).exp())
        }
        BoundKind::Discounted { gamma, b, eta } => {
            let nu = nu_gamma(gamma, n.unwrap_or(1))?;
            let factor = (nu.ln() / eta.ln_1p()).max(0.0) + 1.0;
            let scale = 2.0 * (1.0 - eta * eta / 16.0) / (b * b);
            Box::new(move |d| factor * (-scale * d * d).exp())
        }
        BoundKind::UnionBaseline => {
            let n = n.unwrap_or(1) as f64;
            Box::new(move |d| 2.0 * n * (-d).exp())
        }
    };

    // Lower edge of the decreasing branch of each envelope.
    let delta_lo = match kind {
        BoundKind::Thm3 { c } => c.max(1.0 + 1e-9),
        BoundKind::Thm3Opt => 1.0 + 1e-9,
        BoundKind::Multinomial { alphabet_size } => f64::from(alphabet_size).max(1.0),
        BoundKind::Discounted { .. } | BoundKind::UnionBaseline => 0.0,
        _ => 1.0,
    };

    if envelope(delta_lo) <= alpha {
        return finish_calibration(kind, delta_lo, alpha, &envelope, horizon);
    }
    let mut lo = delta_lo;
    let mut hi = f64::NAN;
    let mut step = 1.0;
    let mut probe = delta_lo;
    while probe < 1e6 {
        probe += step;
        step *= 2.0;
        if envelope(probe) <= alpha {
            hi = probe;
            break;
        }
        lo = probe;
    }
    if hi.is_nan() {
        return Err(Error::UnreachableRisk {
            alpha,
            min_risk: envelope(probe),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if envelope(mid) <= alpha {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-10 {
            break;
        }
    }
    // Nudge above the crossing so the certificate survives later rounding.
    finish_calibration(kind, hi + 1e-9, alpha, &envelope, horizon)
}

fn finish_calibration(
    kind: BoundKind,
    delta: f64,
    alpha: f64,
    envelope: &dyn Fn(f64) -> f64,
    horizon: Option<u64>,
) -> Result<Calibration> {
    let forward = BoundQuery {
        kind,
        delta,
        horizon,
    }
    .evaluate()?;
    debug_assert!(forward.raw <= alpha + 1e-12);
    Ok(Calibration {
        delta,
        envelope_risk: envelope(delta),
        forward,
    })
}
