//! Cross-module scenarios: streams feeding certified intervals, calibrated
//! thresholds validated by simulation, and index/interval consistency.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snkl::bandit::klucb_index;
use snkl::bounds::{calibrate_delta, BoundKind};
use snkl::confidence::{interval_with_certificate, upper_conf, SimplexRegion};
use snkl::estimators::{EmpiricalDistribution, StreamState};
use snkl::monte_carlo::{run, ExperimentConfig, SampleLaw, StatisticKind, Verdict};
use snkl::RateFamily;

#[test]
fn calibrated_threshold_holds_under_simulation() {
    // The calibrated delta certifies the whole interval sequence at level
    // alpha, so the simulated exceedance frequency must stay below alpha.
    let alpha = 0.1;
    let n = 500;
    let cal = calibrate_delta(BoundKind::Thm1, alpha, Some(n)).unwrap();
    assert!(cal.forward.raw <= alpha);
    let config = ExperimentConfig {
        statistic: StatisticKind::SupFixedHorizon,
        law: SampleLaw::Bernoulli { mean: 0.35 },
        family: None,
        mean_schedule: None,
        horizon: n,
        delta: cal.delta,
        bound: BoundKind::Thm1,
        replications: 20_000,
        seed: 2,
    };
    let report = run(&config).unwrap();
    assert_eq!(report.verdict, Verdict::Dominated);
    assert!(report.empirical_rate <= alpha);
}

#[test]
fn episodic_stream_feeds_certified_interval() {
    let mu = 0.6;
    let n = 400u64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut state = StreamState::new();
    for t in 0..n {
        // Observe only every other step: the indicator depends on the clock,
        // never on the value about to be revealed.
        let observed = t % 2 == 0;
        let x = if rng.random::<f64>() < mu { 1.0 } else { 0.0 };
        state.update(observed, x);
    }
    assert_eq!(state.count(), n / 2);
    let xbar = state.mean().unwrap();
    let set = interval_with_certificate(
        xbar,
        state.count(),
        n,
        0.05,
        &RateFamily::Bernoulli,
        BoundKind::Thm1,
    )
    .unwrap();
    assert!(set.lower <= mu && mu <= set.upper, "{set:?} misses {mu}");
    let cert = set.certificate.unwrap();
    let residual =
        state.count() as f64 * snkl::kl(xbar, set.upper).unwrap() - cert.delta;
    assert!(residual.abs() <= 1e-9);
}

#[test]
fn klucb_index_is_the_interval_upper_edge() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let mut state = StreamState::new();
        let mu: f64 = rng.random();
        let count = 1 + rng.random::<u64>() % 300;
        for _ in 0..count {
            state.update(true, if rng.random::<f64>() < mu { 1.0 } else { 0.0 });
        }
        let t = state.t().max(2);
        let delta_fn = |t: u64| (t as f64).ln() + 1.0;
        let index = klucb_index(&state, t, delta_fn, &RateFamily::BoundedKl).unwrap();
        let edge = upper_conf(
            state.mean().unwrap(),
            state.count(),
            delta_fn(t),
            &RateFamily::BoundedKl,
        )
        .unwrap();
        assert_eq!(index, edge.value);
    }
}

#[test]
fn empirical_law_to_sanov_region() {
    let mut dist = EmpiricalDistribution::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p0 = [0.5, 0.3, 0.2];
    for _ in 0..2000 {
        let u: f64 = rng.random();
        let sym = if u < p0[0] {
            0
        } else if u < p0[0] + p0[1] {
            1
        } else {
            2
        };
        dist.observe(sym).unwrap();
    }
    let cal = calibrate_delta(
        BoundKind::Multinomial { alphabet_size: 3 },
        0.05,
        Some(2000),
    )
    .unwrap();
    let region = SimplexRegion::from_empirical(&dist, cal.delta).unwrap();
    // The center is always a member, and at this sample size the true law is
    // well inside the calibrated radius.
    assert!(region.contains(region.center()).unwrap());
    assert!(region.contains(&p0).unwrap());
    // A distant law is not.
    assert!(!region.contains(&[0.05, 0.05, 0.9]).unwrap());
}
