//! Deviation bounds for self-normalized averages, the confidence sets they
//! induce, and simulation harnesses that validate them empirically.
//!
//! The crate is organized around the statistic `sup_{t<=n} t * I(mean_t; mu)`,
//! where `I` is a convex rate function: [`bounds`] evaluates closed-form tail
//! bounds for it (and calibrates thresholds from risk levels), [`confidence`]
//! inverts the rate by bisection into anytime-valid confidence sets,
//! [`estimators`] maintains the plain and discounted running statistics,
//! [`monte_carlo`] estimates exceedance probabilities to check that every
//! bound dominates them, and [`bandit`] runs UCB-style policies whose indices
//! are the upper confidence edges.
//!
//! All logarithms are natural; thresholds and divergences are in nats.

#![forbid(unsafe_code)]

pub mod bandit;
pub mod bounds;
pub mod confidence;
mod error;
pub mod estimators;
pub mod monte_carlo;
pub mod rate;

pub use error::{Error, Result};
pub use rate::{bregman_kl, kl, kl_divergence, ExpFamilyModel, ExplicitPhi, RateFamily};
