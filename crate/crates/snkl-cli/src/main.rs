//! Command-line surface for the deviation-bound library: bound evaluation,
//! threshold calibration, confidence intervals, Monte Carlo coverage runs and
//! bandit simulations, all emitting machine-readable reports with an embedded
//! run manifest.
//!
//! Numeric fields in JSON outputs are rounded to 12 significant digits;
//! infinite interval endpoints serialize as JSON `null` (the `clipped` flags
//! carry the information). Wall-clock fields are excluded from any
//! determinism guarantee.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use snkl::bandit::{run_policy, BanditConfig, PolicyKind, ThresholdSpec};
use snkl::bounds::{calibrate_delta, BoundKind, BoundQuery};
use snkl::confidence::{interval, interval_with_certificate};
use snkl::monte_carlo::{self, ExperimentConfig, MeanSchedule, SampleLaw, StatisticKind, Verdict};
use snkl::RateFamily;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "snkl", version, about = "Self-normalized KL deviation bounds, confidence sets and simulation harnesses")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report to this path instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format (bandit defaults to csv, everything else to json)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Cap the worker thread count (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a deviation bound at an explicit threshold
    Bound(BoundArgs),
    /// Calibrate the smallest threshold meeting a risk level
    Calibrate(CalibrateArgs),
    /// Build a confidence interval by rate inversion
    Interval(IntervalArgs),
    /// Estimate an exceedance probability by Monte Carlo and compare it to
    /// the bound
    Coverage(CoverageArgs),
    /// Run a UCB-style bandit policy and emit regret curves
    Bandit(BanditArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// One of: thm1, thm1_eta, thm2, thm2_opt, subgaussian, thm3, thm3_opt,
    /// hoeffding_sn, multinomial, discounted, union
    #[arg(long)]
    kind: String,
    #[arg(long)]
    delta: f64,
    /// Horizon (required by every kind except thm3/thm3_opt)
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alphabet_size: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Range bound B of the discounted increments
    #[arg(long)]
    b: Option<f64>,
    /// Also evaluate this kind and report the ratio
    #[arg(long)]
    compare: Option<String>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    kind: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alphabet_size: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args)]
struct IntervalArgs {
    /// One of: bernoulli, bounded_kl, quadratic, exponential, poisson,
    /// gamma_fixed_shape
    #[arg(long)]
    family: String,
    #[arg(long)]
    xbar: f64,
    /// Effective sample size N
    #[arg(long)]
    count: u64,
    /// Explicit threshold; mutually exclusive with --alpha/--n
    #[arg(long)]
    delta: Option<f64>,
    /// Risk level; needs --n, calibrates delta through --kind
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    /// Bound kind used for calibration (default thm1)
    #[arg(long)]
    kind: Option<String>,
    /// Range K of the quadratic family
    #[arg(long)]
    range: Option<f64>,
    /// Shape of the gamma family
    #[arg(long)]
    shape: Option<f64>,
}

#[derive(Args, Default)]
struct CoverageArgs {
    /// Flat TOML file with the keys below; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of: sup_fixed_horizon, anytime, discounted, multinomial_kl,
    /// hoeffding_abs
    #[arg(long)]
    statistic: Option<String>,
    /// One of: bernoulli, beta, gaussian, constant, categorical
    #[arg(long)]
    law: Option<String>,
    /// Mean of a bernoulli/gaussian law, or the constant value
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    law_alpha: Option<f64>,
    #[arg(long)]
    law_beta: Option<f64>,
    #[arg(long)]
    sd: Option<f64>,
    /// Comma-separated symbol probabilities of a categorical law
    #[arg(long)]
    probs: Option<String>,
    /// Rate family of the statistic (default: kl for laws on the unit
    /// interval, quadratic for gaussian ones)
    #[arg(long)]
    family: Option<String>,
    /// Range K of an explicit quadratic family
    #[arg(long)]
    range: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Bound kind compared against the run (default thm1)
    #[arg(long)]
    bound: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alphabet_size: Option<u32>,
    /// Piecewise mean schedule "1:0.5,5000:0.8" for discounted runs
    #[arg(long)]
    mean_schedule: Option<String>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exit nonzero unless the verdict is `dominated`
    #[arg(long, default_value_t = false)]
    assert: bool,
}

#[derive(Args, Default)]
struct BanditArgs {
    /// Flat TOML file with the keys below; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated Bernoulli arm means, e.g. "0.1,0.2"
    #[arg(long)]
    arms: Option<String>,
    /// Mean switch "t:m1,m2"; repeatable for several change points
    #[arg(long = "switch")]
    switches: Vec<String>,
    #[arg(long)]
    horizon: Option<u64>,
    /// One of: klucb, hoeffding_ucb, discounted_ucb
    #[arg(long)]
    policy: Option<String>,
    /// Threshold schedule: "loglog:FACTOR" or "constant:VALUE"
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    if let Err(err) = dispatch(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Bound(args) => cmd_bound(cli, args),
        Command::Calibrate(args) => cmd_calibrate(cli, args),
        Command::Interval(args) => cmd_interval(cli, args),
        Command::Coverage(args) => cmd_coverage(cli, args),
        Command::Bandit(args) => cmd_bandit(cli, args),
    }
}

fn manifest(cli: &Cli, subcommand: &str, seed: Option<u64>, params: Value) -> Value {
    json!({
        "subcommand": subcommand,
        "schema_version": SCHEMA_VERSION,
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "out": cli.out.as_ref().map(|p| p.display().to_string()),
        "params": params,
    })
}

/// Rounds every finite float in the tree to 12 significant digits.
fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig(x)) {
                        *value = Value::Number(rounded);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor();
    let factor = 10f64.powf(11.0 - magnitude);
    (x * factor).round() / factor
}

fn emit(cli: &Cli, content: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn emit_json(cli: &Cli, mut value: Value) -> anyhow::Result<()> {
    round_floats(&mut value);
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    emit(cli, &text)
}

fn emit_table(cli: &Cli, value: &Value) -> anyhow::Result<()> {
    let mut lines = String::new();
    flatten_table("", value, &mut lines);
    emit(cli, &lines)
}

fn flatten_table(prefix: &str, value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_table(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_table(&format!("{prefix}[{i}]"), v, out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push_str(" = ");
            out.push_str(&other.to_string());
            out.push('\n');
        }
    }
}

fn emit_structured(cli: &Cli, value: Value) -> anyhow::Result<()> {
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(cli, value),
        Format::Table => {
            let mut v = value;
            round_floats(&mut v);
            emit_table(cli, &v)
        }
        Format::Csv => bail!("csv output is only available for the bandit subcommand"),
    }
}

struct KindParams {
    eta: Option<f64>,
    c: Option<f64>,
    alphabet_size: Option<u32>,
    gamma: Option<f64>,
    b: Option<f64>,
}

fn parse_bound_kind(name: &str, p: &KindParams) -> anyhow::Result<BoundKind> {
    let need = |opt: Option<f64>, flag: &str| {
        opt.ok_or_else(|| anyhow!("kind `{name}` requires --{flag}"))
    };
    Ok(match name {
        "thm1" => BoundKind::Thm1,
        "thm1_eta" => BoundKind::Thm1Eta {
            eta: need(p.eta, "eta")?,
        },
        "thm2" => BoundKind::Thm2 {
            eta: need(p.eta, "eta")?,
        },
        "thm2_opt" => BoundKind::Thm2Opt,
        "subgaussian" => BoundKind::Subgaussian {
            eta: need(p.eta, "eta")?,
        },
        "thm3" => BoundKind::Thm3 {
            c: need(p.c, "c")?,
        },
        "thm3_opt" => BoundKind::Thm3Opt,
        "hoeffding_sn" => BoundKind::HoeffdingSn,
        "multinomial" => BoundKind::Multinomial {
            alphabet_size: p
                .alphabet_size
                .ok_or_else(|| anyhow!("kind `multinomial` requires --alphabet-size"))?,
        },
        "discounted" => BoundKind::Discounted {
            gamma: need(p.gamma, "gamma")?,
            b: need(p.b, "b")?,
            eta: need(p.eta, "eta")?,
        },
        "union" | "union_baseline" => BoundKind::UnionBaseline,
        other => bail!("unknown bound kind `{other}`"),
    })
}

fn cmd_bound(cli: &Cli, args: &BoundArgs) -> anyhow::Result<()> {
    let params = KindParams {
        eta: args.eta,
        c: args.c,
        alphabet_size: args.alphabet_size,
        gamma: args.gamma,
        b: args.b,
    };
    let kind = parse_bound_kind(&args.kind, &params)?;
    let query = BoundQuery {
        kind,
        delta: args.delta,
        horizon: args.n,
    };
    let value = query.evaluate()?;
    let mut report = json!({
        "manifest": manifest(cli, "bound", None, serde_json::to_value(query)?),
        "bound": value,
    });
    if let Some(compare) = &args.compare {
        let other_kind = parse_bound_kind(compare, &params)?;
        let other = BoundQuery {
            kind: other_kind,
            delta: args.delta,
            horizon: args.n,
        }
        .evaluate()?;
        report["comparison"] = json!({
            "kind": compare,
            "bound": other,
            "ratio": value.raw / other.raw,
        });
    }
    emit_structured(cli, report)
}

fn cmd_calibrate(cli: &Cli, args: &CalibrateArgs) -> anyhow::Result<()> {
    let params = KindParams {
        eta: args.eta,
        c: args.c,
        alphabet_size: args.alphabet_size,
        gamma: args.gamma,
        b: args.b,
    };
    let kind = parse_bound_kind(&args.kind, &params)?;
    let cal = calibrate_delta(kind, args.alpha, args.n)?;
    let report = json!({
        "manifest": manifest(cli, "calibrate", None, json!({
            "kind": kind,
            "alpha": args.alpha,
            "n": args.n,
        })),
        "calibration": cal,
    });
    emit_structured(cli, report)
}

fn parse_family(name: &str, range: Option<f64>, shape: Option<f64>) -> anyhow::Result<RateFamily> {
    Ok(match name {
        "bernoulli" => RateFamily::Bernoulli,
        "bounded_kl" => RateFamily::BoundedKl,
        "quadratic" => RateFamily::Quadratic {
            range: range.ok_or_else(|| anyhow!("family `quadratic` requires --range"))?,
        },
        "exponential" => RateFamily::Exponential,
        "poisson" => RateFamily::Poisson,
        "gamma_fixed_shape" | "gamma" => RateFamily::GammaFixedShape {
            shape: shape.ok_or_else(|| anyhow!("family `gamma_fixed_shape` requires --shape"))?,
        },
        other => bail!("unknown family `{other}`"),
    })
}

fn cmd_interval(cli: &Cli, args: &IntervalArgs) -> anyhow::Result<()> {
    let family = parse_family(&args.family, args.range, args.shape)?;
    let set = match (args.delta, args.alpha) {
        (Some(delta), None) => interval(args.xbar, args.count, delta, &family)?,
        (None, Some(alpha)) => {
            let n = args
                .n
                .ok_or_else(|| anyhow!("--alpha needs --n to calibrate the threshold"))?;
            let params = KindParams {
                eta: None,
                c: None,
                alphabet_size: None,
                gamma: None,
                b: None,
            };
            let kind = match &args.kind {
                Some(k) => parse_bound_kind(k, &params)?,
                None => BoundKind::Thm1,
            };
            interval_with_certificate(args.xbar, args.count, n, alpha, &family, kind)?
        }
        (Some(_), Some(_)) => bail!("--delta and --alpha are mutually exclusive"),
        (None, None) => bail!("either --delta or --alpha/--n is required"),
    };
    let report = json!({
        "manifest": manifest(cli, "interval", None, json!({
            "family": family,
            "xbar": args.xbar,
            "count": args.count,
            "delta": args.delta,
            "alpha": args.alpha,
            "n": args.n,
        })),
        "interval": set,
    });
    emit_structured(cli, report)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CoverageFile {
    statistic: Option<String>,
    law: Option<String>,
    mu: Option<f64>,
    law_alpha: Option<f64>,
    law_beta: Option<f64>,
    sd: Option<f64>,
    probs: Option<String>,
    family: Option<String>,
    range: Option<f64>,
    n: Option<u64>,
    delta: Option<f64>,
    bound: Option<String>,
    eta: Option<f64>,
    gamma: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    alphabet_size: Option<u32>,
    mean_schedule: Option<String>,
    reps: Option<u64>,
    seed: Option<u64>,
}

fn load_toml<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn parse_probs(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad probability `{s}`: {e}")))
        .collect()
}

fn parse_schedule(text: &str) -> anyhow::Result<MeanSchedule> {
    let mut segments = Vec::new();
    for part in text.split(',') {
        let (t, m) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("bad schedule segment `{part}`, expected t:mean"))?;
        segments.push((t.trim().parse::<u64>()?, m.trim().parse::<f64>()?));
    }
    Ok(MeanSchedule::Piecewise { segments })
}

fn cmd_coverage(cli: &Cli, args: &CoverageArgs) -> anyhow::Result<()> {
    let file: CoverageFile = load_toml(&args.config)?;
    let statistic = match args
        .statistic
        .clone()
        .or(file.statistic)
        .unwrap_or_else(|| "sup_fixed_horizon".to_string())
        .as_str()
    {
        "sup_fixed_horizon" => StatisticKind::SupFixedHorizon,
        "anytime" => StatisticKind::Anytime,
        "discounted" => StatisticKind::Discounted,
        "multinomial_kl" => StatisticKind::MultinomialKl,
        "hoeffding_abs" => StatisticKind::HoeffdingAbs,
        other => bail!("unknown statistic `{other}`"),
    };
    let law_name = args
        .law
        .clone()
        .or(file.law)
        .unwrap_or_else(|| "bernoulli".to_string());
    let mu = args.mu.or(file.mu);
    let law = match law_name.as_str() {
        "bernoulli" => SampleLaw::Bernoulli {
            mean: mu.ok_or_else(|| anyhow!("law `bernoulli` requires --mu"))?,
        },
        "beta" => SampleLaw::Beta {
            alpha: args
                .law_alpha
                .or(file.law_alpha)
                .ok_or_else(|| anyhow!("law `beta` requires --law-alpha"))?,
            beta: args
                .law_beta
                .or(file.law_beta)
                .ok_or_else(|| anyhow!("law `beta` requires --law-beta"))?,
        },
        "gaussian" => SampleLaw::Gaussian {
            mean: mu.ok_or_else(|| anyhow!("law `gaussian` requires --mu"))?,
            sd: args
                .sd
                .or(file.sd)
                .ok_or_else(|| anyhow!("law `gaussian` requires --sd"))?,
        },
        "constant" => SampleLaw::Constant {
            value: mu.ok_or_else(|| anyhow!("law `constant` requires --mu"))?,
        },
        "categorical" => SampleLaw::Categorical {
            probs: parse_probs(
                &args
                    .probs
                    .clone()
                    .or(file.probs)
                    .ok_or_else(|| anyhow!("law `categorical` requires --probs"))?,
            )?,
        },
        other => bail!("unknown law `{other}`"),
    };
    let params = KindParams {
        eta: args.eta.or(file.eta),
        c: args.c.or(file.c),
        alphabet_size: args.alphabet_size.or(file.alphabet_size),
        gamma: args.gamma.or(file.gamma),
        b: args.b.or(file.b),
    };
    let bound = parse_bound_kind(
        &args
            .bound
            .clone()
            .or(file.bound)
            .unwrap_or_else(|| "thm1".to_string()),
        &params,
    )?;
    let mean_schedule = match args.mean_schedule.clone().or(file.mean_schedule) {
        Some(text) => Some(parse_schedule(&text)?),
        None => None,
    };
    let family = match args.family.clone().or(file.family) {
        Some(name) => Some(parse_family(&name, args.range.or(file.range), None)?),
        None => None,
    };
    let config = ExperimentConfig {
        statistic,
        law,
        family,
        mean_schedule,
        horizon: args
            .n
            .or(file.n)
            .ok_or_else(|| anyhow!("--n is required"))?,
        delta: args
            .delta
            .or(file.delta)
            .ok_or_else(|| anyhow!("--delta is required"))?,
        bound,
        replications: args.reps.or(file.reps).unwrap_or(10_000),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    let report = monte_carlo::run(&config)?;
    let verdict = report.verdict;
    let out = json!({
        "manifest": manifest(
            cli,
            "coverage",
            Some(config.seed),
            serde_json::to_value(&config)?,
        ),
        "report": report,
    });
    emit_structured(cli, out)?;
    if args.assert && verdict != Verdict::Dominated {
        bail!("assertion failed: empirical exceedance is not dominated by the bound");
    }
    Ok(())
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BanditFile {
    arms: Option<String>,
    switches: Option<Vec<String>>,
    horizon: Option<u64>,
    policy: Option<String>,
    threshold: Option<String>,
    gamma: Option<f64>,
    eta: Option<f64>,
    b: Option<f64>,
    xi: Option<f64>,
    reps: Option<u64>,
    seed: Option<u64>,
    checkpoint_every: Option<u64>,
}

fn parse_switches(parts: &[String]) -> anyhow::Result<Vec<(u64, Vec<f64>)>> {
    let mut switches = Vec::new();
    for part in parts {
        let (t, means) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("bad switch `{part}`, expected t:m1,m2,..."))?;
        switches.push((t.trim().parse::<u64>()?, parse_probs(means)?));
    }
    Ok(switches)
}

fn parse_threshold(text: &str) -> anyhow::Result<ThresholdSpec> {
    if let Some(factor) = text.strip_prefix("loglog:") {
        return Ok(ThresholdSpec::LogPlusLoglog {
            loglog_factor: factor.parse()?,
        });
    }
    if let Some(value) = text.strip_prefix("constant:") {
        return Ok(ThresholdSpec::Constant {
            value: value.parse()?,
        });
    }
    bail!("unknown threshold spec `{text}`, expected loglog:FACTOR or constant:VALUE")
}

fn cmd_bandit(cli: &Cli, args: &BanditArgs) -> anyhow::Result<()> {
    let file: BanditFile = load_toml(&args.config)?;
    let policy_name = args
        .policy
        .clone()
        .or(file.policy)
        .ok_or_else(|| anyhow!("--policy is required"))?;
    let policy = match policy_name.as_str() {
        "klucb" => PolicyKind::KlUcb,
        "hoeffding_ucb" => PolicyKind::HoeffdingUcb,
        "discounted_ucb" => PolicyKind::DiscountedUcb {
            gamma: args.gamma.or(file.gamma).unwrap_or(0.99),
            eta: args.eta.or(file.eta).unwrap_or(1.0),
            b: args.b.or(file.b).unwrap_or(1.0),
            xi: args.xi.or(file.xi).unwrap_or(2.0),
        },
        other => bail!("unknown policy `{other}`"),
    };
    let arms = parse_probs(
        &args
            .arms
            .clone()
            .or(file.arms)
            .ok_or_else(|| anyhow!("--arms is required"))?,
    )?;
    let switch_specs = if args.switches.is_empty() {
        file.switches.unwrap_or_default()
    } else {
        args.switches.clone()
    };
    let threshold = match args.threshold.clone().or(file.threshold) {
        Some(text) => Some(parse_threshold(&text)?),
        None => None,
    };
    let horizon = args
        .horizon
        .or(file.horizon)
        .ok_or_else(|| anyhow!("--horizon is required"))?;
    let config = BanditConfig {
        arms,
        switches: parse_switches(&switch_specs)?,
        horizon,
        policy,
        threshold,
        replications: args.reps.or(file.reps).unwrap_or(100),
        seed: args.seed.or(file.seed).unwrap_or(0),
        checkpoint_every: args
            .checkpoint_every
            .or(file.checkpoint_every)
            .unwrap_or_else(|| (horizon / 1000).max(1)),
    };
    let outcome = run_policy(&config)?;
    let manifest_value = manifest(
        cli,
        "bandit",
        Some(config.seed),
        serde_json::to_value(&config)?,
    );
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut manifest_line = manifest_value;
            round_floats(&mut manifest_line);
            let mut buf = Vec::new();
            writeln!(buf, "# manifest: {}", serde_json::to_string(&manifest_line)?)?;
            outcome.write_csv(&mut buf)?;
            emit(cli, &String::from_utf8(buf)?)
        }
        Format::Json => emit_json(
            cli,
            json!({
                "manifest": manifest_value,
                "outcome": outcome,
            }),
        ),
        Format::Table => bail!("bandit output supports csv or json"),
    }
}
