//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (run with `--nocapture` to see them).
//!
//! 1. Bound domination: designated Monte Carlo configs for every bound.
//! 2. Formula oracles: evaluators vs independent re-evaluations, 1e-12 rel.
//! 3. Root finding: endpoint residuals below 1e-9 on random cases.
//! 4. Inequalities: Pinsker, the per-symbol KL decomposition, and the
//!    subgaussian/log-concave bound ordering.
//! 5. Calibration round trip: forward bound at the calibrated threshold.
//! 6. Peeling-vs-union gap growing with the horizon.
//! 7. Bandit directional check on paired replications.
//! 8. Byte-identical reports across reruns and thread counts.

use std::process::{Command, Output};

use snkl::bandit::{run_policy, BanditConfig, PolicyKind};
use snkl::bounds::{
    bound_discounted, bound_hoeffding_sn, bound_multinomial, bound_subgaussian, bound_thm1,
    bound_thm1_eta, bound_thm2, bound_thm2_opt, bound_thm3, bound_thm3_opt,
    bound_union_baseline, calibrate_delta, BoundKind,
};
use snkl::confidence::{lower_conf, upper_conf};
use snkl::monte_carlo::{run, ExperimentConfig, SampleLaw, StatisticKind, Verdict};
use snkl::{kl, kl_divergence, RateFamily};

const E: f64 = std::f64::consts::E;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn uniform(state: &mut u64) -> f64 {
    (splitmix(state) >> 11) as f64 / (1u64 << 53) as f64
}

fn base_config() -> ExperimentConfig {
    ExperimentConfig {
        statistic: StatisticKind::SupFixedHorizon,
        law: SampleLaw::Bernoulli { mean: 0.3 },
        family: None,
        mean_schedule: None,
        horizon: 200,
        delta: 8.0,
        bound: BoundKind::Thm1,
        replications: 100_000,
        seed: 20_260_809,
    }
}

#[test]
fn criterion_1_bound_domination() {
    let mut configs: Vec<(&str, ExperimentConfig)> = Vec::new();

    // Anchor: Bernoulli(0.3), n = 200, delta = 8 under the basic bound.
    configs.push(("thm1", base_config()));

    let mut thm2_opt = base_config();
    thm2_opt.law = SampleLaw::Bernoulli { mean: 0.5 };
    thm2_opt.delta = 5.0;
    thm2_opt.bound = BoundKind::Thm2Opt;
    configs.push(("thm2_opt", thm2_opt));

    let mut subg = base_config();
    subg.law = SampleLaw::Gaussian { mean: 0.5, sd: 0.5 };
    subg.bound = BoundKind::Subgaussian { eta: 1.0 };
    configs.push(("subgaussian", subg));

    let mut thm3 = base_config();
    thm3.statistic = StatisticKind::Anytime;
    thm3.law = SampleLaw::Bernoulli { mean: 0.5 };
    thm3.horizon = 100_000;
    thm3.bound = BoundKind::Thm3Opt;
    thm3.replications = 10_000;
    configs.push(("thm3_opt", thm3));

    let mut hoeffding = base_config();
    hoeffding.statistic = StatisticKind::HoeffdingAbs;
    hoeffding.law = SampleLaw::Beta {
        alpha: 2.0,
        beta: 2.0,
    };
    hoeffding.horizon = 100;
    hoeffding.delta = 2.0;
    hoeffding.bound = BoundKind::HoeffdingSn;
    configs.push(("hoeffding_sn", hoeffding));

    let mut multinomial = base_config();
    multinomial.statistic = StatisticKind::MultinomialKl;
    multinomial.law = SampleLaw::Categorical {
        probs: vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    };
    multinomial.horizon = 1000;
    multinomial.delta = 30.0;
    multinomial.bound = BoundKind::Multinomial { alphabet_size: 3 };
    configs.push(("multinomial", multinomial));

    let mut discounted = base_config();
    discounted.statistic = StatisticKind::Discounted;
    discounted.law = SampleLaw::Bernoulli { mean: 0.5 };
    discounted.horizon = 10_000;
    discounted.delta = 3.0;
    discounted.bound = BoundKind::Discounted {
        gamma: 0.99,
        b: 1.0,
        eta: 1.0,
    };
    discounted.replications = 10_000;
    configs.push(("discounted", discounted));

    for (name, config) in &configs {
        let report = run(config).expect("config is valid");
        assert_eq!(
            report.verdict,
            Verdict::Dominated,
            "{name}: p_hat {} - 3se {} exceeds bound {}",
            report.empirical_rate,
            report.std_error,
            report.bound.clamped
        );
        if *name == "thm1" {
            // The anchor additionally pins the bound value itself.
            assert!((report.bound.raw - 0.078421849037688).abs() < 1e-12);
            assert!(report.empirical_rate <= report.bound.raw);
        }
        println!(
            "criterion 1 ({name}): PASS  p_hat = {:.6e}  bound = {:.6e}  ratio = {:.3e}",
            report.empirical_rate,
            report.bound.raw,
            report.sharpness_ratio.unwrap_or(f64::NAN)
        );
    }
}

#[test]
fn criterion_2_formula_oracles() {
    let mut state = 0xfeed_beef_u64;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let delta = 0.5 + 19.5 * uniform(&mut state);
        let n = 2 + splitmix(&mut state) % 99_999;
        let nf = n as f64;
        let eta = 0.05 + 3.0 * uniform(&mut state);
        let c = 1.05 + 3.0 * uniform(&mut state);
        let a = 2 + (splitmix(&mut state) % 7) as u32;
        let gamma = 0.5 + 0.499 * uniform(&mut state);
        let b = 0.3 + 2.7 * uniform(&mut state);
        let eta4 = 0.05 + 3.9 * uniform(&mut state);
        let hdelta = 0.3 + 2.7 * uniform(&mut state);

        // Independent re-evaluations of each displayed formula.
        let checks = [
            (
                bound_thm1(delta, n).unwrap().raw,
                2.0 * E * (delta * nf.ln()).ceil() * (-delta).exp(),
            ),
            (
                bound_thm1_eta(delta, n, eta).unwrap().raw,
                2.0 * (nf.ln() / (1.0 + eta).ln()).ceil() * (-delta / (1.0 + eta)).exp(),
            ),
            (
                bound_thm2(delta, n, eta).unwrap().raw,
                2.0 * (nf.ln() / (1.0 + eta).ln()).ceil()
                    * (-(1.0 - eta * eta / 8.0) * delta).exp(),
            ),
            (
                bound_thm2_opt(delta, n).unwrap().raw,
                2.0 * E.sqrt() * (delta.sqrt() / 2.0 * nf.ln()).ceil() * (-delta).exp(),
            ),
            (
                bound_subgaussian(delta, n, eta).unwrap().raw,
                2.0 * (nf.ln() / (1.0 + eta).ln()).ceil()
                    * (-(1.0 - eta * eta / 16.0) * delta).exp(),
            ),
            (
                bound_thm3(delta + 1.0, c).unwrap().bound.raw,
                2.0 * E * c * (delta + 1.0).powf(c) / (c - 1.0) * (-(delta + 1.0)).exp(),
            ),
            (
                bound_thm3_opt(delta + 1.0).unwrap().bound.raw,
                2.0 * E * E * (delta + 1.0) * (-(delta + 1.0)).exp(),
            ),
            (
                bound_hoeffding_sn(hdelta, n).unwrap().raw,
                4.0 * E * (hdelta * hdelta * nf.ln()).ceil() * (-2.0 * hdelta * hdelta).exp(),
            ),
            (
                bound_multinomial(delta, n, a).unwrap().raw,
                2.0 * E * (delta * nf.ln() + f64::from(a)) * (-delta / f64::from(a)).exp(),
            ),
            (
                bound_discounted(delta, gamma, n, b, eta4).unwrap().raw,
                ((((1.0 - gamma.powf(nf)) / (1.0 - gamma)).ln() / (1.0 + eta4).ln()).ceil())
                    .max(1.0)
                    * (-(2.0 * delta * delta / (b * b)) * (1.0 - eta4 * eta4 / 16.0)).exp(),
            ),
            (
                bound_union_baseline(delta, n).unwrap().raw,
                nf * 2.0 * (-delta).exp(),
            ),
        ];
        for (i, (got, want)) in checks.iter().enumerate() {
            let r = rel(*got, *want);
            assert!(r <= 1e-12, "formula {i}: {got} vs {want} (rel {r:.2e})");
            worst = worst.max(r);
        }
        // Thm3 threshold shape.
        let anytime = bound_thm3(delta + 1.0, c).unwrap();
        let t = 3.0 + 100.0 * uniform(&mut state);
        let want = (delta + 1.0) * c / (delta + 1.0 - 1.0) * t.ln().ln() + (delta + 1.0);
        assert!(rel(anytime.threshold(t).unwrap(), want) <= 1e-12);
    }
    println!("criterion 2 (formula oracles): PASS  100-point grid, worst rel err {worst:.2e}");
}

#[test]
fn criterion_3_root_finding() {
    let mut state = 0x0dd_ba11_u64;
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let family = match i % 6 {
            0 => RateFamily::Bernoulli,
            1 => RateFamily::BoundedKl,
            2 => RateFamily::Quadratic {
                range: 0.5 + 2.5 * uniform(&mut state),
            },
            3 => RateFamily::Exponential,
            4 => RateFamily::Poisson,
            _ => RateFamily::GammaFixedShape {
                shape: 0.5 + 3.5 * uniform(&mut state),
            },
        };
        let xbar = match family {
            RateFamily::Bernoulli | RateFamily::BoundedKl => 0.01 + 0.98 * uniform(&mut state),
            RateFamily::Quadratic { .. } => -5.0 + 10.0 * uniform(&mut state),
            _ => 0.05 + 9.95 * uniform(&mut state),
        };
        let count = 1 + (splitmix(&mut state) % 10_000);
        let delta = 1e-3 + 25.0 * uniform(&mut state);
        for side in 0..2 {
            let endpoint = if side == 0 {
                upper_conf(xbar, count, delta, &family).unwrap()
            } else {
                lower_conf(xbar, count, delta, &family).unwrap()
            };
            if endpoint.clipped {
                continue;
            }
            let residual =
                (count as f64 * family.rate(xbar, endpoint.value).unwrap() - delta).abs();
            assert!(
                residual <= 1e-9,
                "{} xbar={xbar} N={count} delta={delta}: residual {residual:.2e}",
                family.name()
            );
            worst = worst.max(residual);
            checked += 1;
        }
        // Quadratic endpoints also match the closed-form inversion.
        if let RateFamily::Quadratic { range } = family {
            let radius = range * (delta / (2.0 * count as f64)).sqrt();
            let up = upper_conf(xbar, count, delta, &family).unwrap().value;
            let lo = lower_conf(xbar, count, delta, &family).unwrap().value;
            assert!((up - (xbar + radius)).abs() <= 1e-9);
            assert!((lo - (xbar - radius)).abs() <= 1e-9);
        }
    }
    println!(
        "criterion 3 (root finding): PASS  {checked} endpoints, worst residual {worst:.2e}"
    );
}

#[test]
fn criterion_4_inequalities() {
    // Pinsker on a 100 x 100 grid.
    for i in 1..=100 {
        for j in 1..=100 {
            let p = i as f64 / 101.0;
            let q = j as f64 / 101.0;
            let d = kl(p, q).unwrap();
            assert!(
                d + 1e-15 >= 2.0 * (p - q) * (p - q),
                "pinsker fails at ({p}, {q})"
            );
        }
    }

    // Per-symbol decomposition on 10^4 random simplex pairs, |A| in 2..=6.
    let mut state = 0xdec0de_u64;
    for i in 0..10_000 {
        let a = 2 + i % 5;
        let draw = |state: &mut u64| {
            let raw: Vec<f64> = (0..a).map(|_| 1e-3 + uniform(state)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let p = draw(&mut state);
        let q = draw(&mut state);
        let full = kl_divergence(&p, &q).unwrap();
        let split: f64 = p
            .iter()
            .zip(&q)
            .map(|(&pi, &qi)| kl(pi, qi).unwrap())
            .sum();
        assert!(full <= split + 1e-12, "decomposition fails: {full} > {split}");
    }

    // The quadratic-case refinement never exceeds the log-concave bound.
    let mut state = 0x5eed_u64;
    for _ in 0..500 {
        let delta = 0.2 + 25.0 * uniform(&mut state);
        let n = 2 + splitmix(&mut state) % 99_999;
        let eta = 0.05 + 3.5 * uniform(&mut state);
        let sg = bound_subgaussian(delta, n, eta).unwrap().raw;
        let t2 = bound_thm2(delta, n, eta).unwrap().raw;
        assert!(sg <= t2 * (1.0 + 1e-12), "{sg} > {t2}");
    }
    println!("criterion 4 (inequalities): PASS  pinsker 10^4 grid, decomposition 10^4 pairs");
}

#[test]
fn criterion_5_calibration_round_trip() {
    let kinds = [
        BoundKind::Thm1,
        BoundKind::Thm2Opt,
        BoundKind::HoeffdingSn,
        BoundKind::Multinomial { alphabet_size: 3 },
        BoundKind::UnionBaseline,
    ];
    for kind in kinds {
        for alpha in [0.2, 0.1, 0.05, 0.01] {
            for n in [100u64, 1000, 100_000] {
                let cal = calibrate_delta(kind, alpha, Some(n)).unwrap();
                assert!(
                    cal.forward.raw <= alpha,
                    "{kind:?} alpha={alpha} n={n}: forward {} > alpha",
                    cal.forward.raw
                );
            }
        }
    }

    // Independent envelope-bisection oracle for (thm1, alpha = 0.05, n = 1000):
    // smallest delta with 2e (delta ln n + 1) e^-delta <= alpha.
    let oracle = {
        let log_n = 1000f64.ln();
        let envelope = |d: f64| 2.0 * E * (d * log_n + 1.0) * (-d).exp();
        let (mut lo, mut hi) = (1.0f64, 50.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if envelope(mid) > 0.05 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let cal = calibrate_delta(BoundKind::Thm1, 0.05, Some(1000)).unwrap();
    assert!(
        (cal.delta - oracle).abs() <= 0.05,
        "calibrated {} vs oracle {oracle}",
        cal.delta
    );
    assert!((cal.delta - oracle).abs() <= 1e-6);
    println!(
        "criterion 5 (calibration round trip): PASS  delta(thm1, 0.05, 1000) = {:.6} (oracle {:.6})",
        cal.delta, oracle
    );
}

#[test]
fn criterion_6_peeling_vs_union_gap() {
    let delta = 8.0;
    let mut prev = f64::INFINITY;
    let mut ratios = Vec::new();
    for n in [1_000u64, 10_000, 100_000] {
        let t1 = bound_thm1(delta, n).unwrap().raw;
        let union = bound_union_baseline(delta, n).unwrap().raw;
        let ratio = t1 / union;
        assert!(
            ratio < prev,
            "ratio not decreasing at n = {n}: {ratio} vs {prev}"
        );
        prev = ratio;
        ratios.push(format!("n=10^{}: {ratio:.4e}", (n as f64).log10() as u32));
    }
    println!(
        "criterion 6 (peeling vs union gap): PASS  thm1/union {}",
        ratios.join(", ")
    );
}

#[test]
fn criterion_7_bandit_directional_check() {
    let config = |policy: PolicyKind| BanditConfig {
        arms: vec![0.1, 0.2],
        switches: vec![],
        horizon: 10_000,
        policy,
        threshold: None,
        replications: 200,
        seed: 424_242,
        checkpoint_every: 1_000,
    };
    // Same seed: paired replications share the reward uniforms.
    let kl_outcome = run_policy(&config(PolicyKind::KlUcb)).unwrap();
    let hoeffding_outcome = run_policy(&config(PolicyKind::HoeffdingUcb)).unwrap();
    assert!(
        kl_outcome.mean_final_regret <= hoeffding_outcome.mean_final_regret,
        "klucb regret {} > hoeffding regret {}",
        kl_outcome.mean_final_regret,
        hoeffding_outcome.mean_final_regret
    );
    println!(
        "criterion 7 (bandit directional): PASS  klucb = {:.2} (se {:.2})  hoeffding_ucb = {:.2} (se {:.2})",
        kl_outcome.mean_final_regret,
        kl_outcome.std_error_final_regret,
        hoeffding_outcome.mean_final_regret,
        hoeffding_outcome.std_error_final_regret
    );
}

fn snkl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snkl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn strip_wall_clock(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.contains("wall_clock_ms"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_8_deterministic_reports() {
    let coverage_args = [
        "coverage", "--law", "bernoulli", "--mu", "0.3", "--n", "100", "--delta", "6", "--reps",
        "20000", "--seed", "9",
    ];
    let single = {
        let mut a = coverage_args.to_vec();
        a.extend(["--threads", "1"]);
        snkl(&a)
    };
    let multi = {
        let mut a = coverage_args.to_vec();
        a.extend(["--threads", "2"]);
        snkl(&a)
    };
    let rerun = {
        let mut a = coverage_args.to_vec();
        a.extend(["--threads", "2"]);
        snkl(&a)
    };
    assert_eq!(strip_wall_clock(&single), strip_wall_clock(&multi));
    assert_eq!(strip_wall_clock(&multi), strip_wall_clock(&rerun));

    let bandit_args = [
        "bandit", "--arms", "0.3,0.5", "--horizon", "3000", "--policy", "klucb", "--reps", "50",
        "--seed", "11", "--checkpoint-every", "100",
    ];
    let single = {
        let mut a = bandit_args.to_vec();
        a.extend(["--threads", "1"]);
        snkl(&a)
    };
    let multi = {
        let mut a = bandit_args.to_vec();
        a.extend(["--threads", "2"]);
        snkl(&a)
    };
    assert!(single.status.success() && multi.status.success());
    assert_eq!(single.stdout, multi.stdout);
    println!("criterion 8 (determinism): PASS  byte-identical across reruns and thread counts");
}
