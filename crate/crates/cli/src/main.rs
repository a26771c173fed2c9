mod args;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::json;

use dpamp::amplification::{self, Direction};
use dpamp::experiments::{self, ExperimentSpec, MSE_CURVE_SCHEMA};
use dpamp::mechanisms::{privatize_global, privatize_smooth_median, SampleMeta};
use dpamp::rng::tags;
use dpamp::sensitivity::{self, SmoothSearch};
use dpamp::{oracle, popgen, sampling, Bounds, Error, Population, PrivacyBudget, RngStream, SamplingRate, Statistic};

use args::*;

enum Failure {
    Lib(Error),
    /// A check ran and failed.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type Outcome = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        Error::GuardExceeded(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Amplify(a) => amplify(a),
        Command::Bounds(a) => bounds(a),
        Command::Sensitivity(a) => sensitivity_cmd(a),
        Command::Privatize(a) => privatize(a),
        Command::Popgen(a) => popgen_cmd(a),
        Command::Simulate(a) => simulate(a, false),
        Command::MseCurve(a) => simulate(a, true),
        Command::CriticalEps(a) => critical(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn param(msg: impl Into<String>) -> Failure {
    Failure::Lib(Error::InvalidParameter(msg.into()))
}

fn resolve_rate(r: &RateArgs) -> Result<Option<SamplingRate>, Failure> {
    match (r.rate, r.n, r.big_n) {
        (Some(rate), _, _) => Ok(Some(SamplingRate::new(rate)?)),
        (None, Some(n), Some(big_n)) => Ok(Some(SamplingRate::from_counts(n, big_n)?)),
        _ => Ok(None),
    }
}

fn amplify(a: AmplifyArgs) -> Outcome {
    let rate = resolve_rate(&a.rate)?.ok_or_else(|| param("give --rate or --n with --N"))?;
    let budget = PrivacyBudget::new(a.eps, a.delta)?;
    let direction = match a.direction {
        DirectionArg::ToSample => Direction::SampleFromTarget,
        DirectionArg::ToEffective => Direction::EffectiveFromSample,
    };
    let r = amplification::amplify(budget, rate, direction)?;
    let output = match direction {
        Direction::SampleFromTarget => r.sample_budget,
        Direction::EffectiveFromSample => r.target,
    };
    print_json(&json!({
        "direction": direction,
        "rate": rate.value(),
        "n": a.rate.n,
        "N": a.rate.big_n,
        "input": budget,
        "output": output,
        "eps_n": r.sample_budget.epsilon(),
        "delta_n": r.sample_budget.delta(),
        "target": r.target,
    }))
}

fn grid_linear(spec: &str) -> Result<Vec<f64>, Failure> {
    let (start, stop, count) = parse_grid(spec).map_err(param)?;
    Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect())
}

fn grid_log(spec: &str) -> Result<Vec<f64>, Failure> {
    let (start, stop, count) = parse_grid(spec).map_err(param)?;
    if !(start > 0.0 && stop > 0.0) {
        return Err(param("log grid endpoints must be positive"));
    }
    let (a, b) = (start.ln(), stop.ln());
    Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
}

#[derive(Serialize)]
struct BoundsRow {
    rate: f64,
    eps_n: f64,
    q_bound: f64,
    q_bound_small_eps: f64,
    noise_ratio_mean: f64,
    no_gain_threshold: f64,
}

fn bounds_row(eps: f64, rate: SamplingRate, sens: Option<f64>) -> Result<BoundsRow, Failure> {
    Ok(BoundsRow {
        rate: rate.value(),
        eps_n: amplification::amplified_epsilon(eps, rate.value()),
        q_bound: amplification::q_bound(eps, rate)?,
        q_bound_small_eps: amplification::q_bound_small_eps(rate),
        noise_ratio_mean: amplification::noise_ratio_mean(eps, rate)?,
        no_gain_threshold: match sens {
            Some(d) => amplification::no_gain_threshold(d, eps, rate)?,
            None => f64::NAN,
        },
    })
}

fn bounds(a: BoundsArgs) -> Outcome {
    if let Some(grid) = &a.rate_grid {
        let rows = grid_linear(grid)?
            .into_iter()
            .map(|r| bounds_row(a.eps, SamplingRate::new(r)?, a.sensitivity))
            .collect::<Result<Vec<_>, _>>()?;
        let prov = [("eps", a.eps.to_string())];
        experiments::write_csv_to(&mut std::io::stdout().lock(), "dpamp/bounds-curve/v1", &prov, &rows)?;
        return Ok(());
    }
    let mut out = serde_json::Map::new();
    out.insert("eps".into(), json!(a.eps));
    if let Some(q) = a.q {
        out.insert("q".into(), json!(q));
        out.insert("rate_for_q".into(), json!(amplification::rate_for_q_bound(a.eps, q)?.value()));
    }
    let rate = resolve_rate(&a.rate)?;
    if rate.is_none() && a.q.is_none() {
        return Err(param("give --rate, --n with --N, --rate-grid or --q"));
    }
    if let Some(rate) = rate {
        let row = bounds_row(a.eps, rate, a.sensitivity)?;
        out.insert("rate".into(), json!(row.rate));
        out.insert("eps_n".into(), json!(row.eps_n));
        out.insert("q_bound".into(), json!(row.q_bound));
        out.insert("q_bound_small_eps".into(), json!(row.q_bound_small_eps));
        out.insert("noise_ratio_mean".into(), json!(row.noise_ratio_mean));
        if a.sensitivity.is_some() {
            out.insert("no_gain_threshold".into(), json!(row.no_gain_threshold));
        }
        if let (Some(range), Some(s2), Some(n), Some(big_n)) = (a.range, a.s2, a.rate.n, a.rate.big_n) {
            let vn = amplification::mean_variance_population(range, big_n, a.eps)?;
            let vs = amplification::mean_variance_sample(range, big_n, n, s2, a.eps)?;
            out.insert("mean_variance_population".into(), json!(vn));
            out.insert("mean_variance_sample".into(), json!(vs));
        }
    }
    print_json(&out)
}

fn load_population(p: &PopulationArgs) -> Result<Population, Failure> {
    let bounds = p.bounds.map(|(lo, hi)| Bounds::new(lo, hi)).transpose()?;
    Ok(Population::load_csv(&p.input, bounds)?)
}

fn statistic(s: StatisticArg) -> Statistic {
    match s {
        StatisticArg::Mean => Statistic::Mean,
        StatisticArg::Median => Statistic::Median,
    }
}

fn smooth_budget(eps: Option<f64>, delta: Option<f64>) -> Result<PrivacyBudget, Failure> {
    let eps = eps.ok_or_else(|| param("smooth sensitivity needs --eps"))?;
    let delta = delta.ok_or_else(|| param("smooth sensitivity needs --delta"))?;
    Ok(PrivacyBudget::new(eps, delta)?)
}

fn sensitivity_cmd(a: SensitivityArgs) -> Outcome {
    let pop = load_population(&a.population)?;
    let stat = statistic(a.statistic);
    let report = match a.kind {
        KindArg::Global => sensitivity::global_sensitivity(&pop, stat)?,
        KindArg::Local => sensitivity::local_sensitivity(&pop, stat)?,
        KindArg::Smooth => {
            let search = if a.no_prune {
                SmoothSearch::Exhaustive
            } else {
                match a.search {
                    SearchArg::Exhaustive => SmoothSearch::Exhaustive,
                    SearchArg::Pruned => SmoothSearch::Pruned,
                    SearchArg::Monotone => SmoothSearch::Monotone,
                }
            };
            sensitivity::smooth_sensitivity(&pop, stat, smooth_budget(a.eps, a.delta)?, search)?
        }
    };
    print_json(&report)
}

fn privatize(a: PrivatizeArgs) -> Outcome {
    let pop = load_population(&a.population)?;
    let big_n = pop.len();
    let stat = statistic(a.statistic);
    let delta = match (a.delta, a.mechanism) {
        (Some(d), _) => d,
        (None, MechanismArg::Smooth) => 1.0 / (2.0 * big_n as f64),
        (None, MechanismArg::Global) => 0.0,
    };
    let target = PrivacyBudget::new(a.eps, delta)?;
    let root = RngStream::new(a.seed, a.stream);
    let mut noise_rng = root.substream(tags::NOISE);
    let (data, spent, meta) = match a.sample_size {
        Some(n) => {
            let rate = SamplingRate::from_counts(n, big_n)?;
            let (_, sample) = sampling::srswor(&pop, n, &mut root.substream(tags::SAMPLING))?;
            let spent = amplification::amplified_budget(target, rate)?;
            (sample, spent, Some(SampleMeta { n, population_size: big_n, amplified: !rate.is_full() }))
        }
        None => (pop.clone(), target, None),
    };
    let mut est = match a.mechanism {
        MechanismArg::Global => {
            let sens = sensitivity::global_sensitivity(&data, stat)?;
            privatize_global(stat.evaluate(data.values()), sens, spent, &mut noise_rng)?
        }
        MechanismArg::Smooth => {
            if stat != Statistic::Median {
                return Err(Failure::Lib(Error::Unsupported("the smooth mechanism releases the median only".into())));
            }
            privatize_smooth_median(&data, spent, &mut noise_rng)?
        }
    };
    if let Some(m) = meta {
        est = est.with_sample(m);
    }
    if a.clamp {
        let b = pop.bounds().ok_or_else(|| param("--clamp needs --bounds"))?;
        est = est.clamp_into(b);
    }
    print_json(&est)
}

fn popgen_cmd(a: PopgenArgs) -> Outcome {
    let mut rng = experiments::pop_rng(a.seed);
    let (pop, generator) = match a.kind {
        GeneratorArg::Beta => (popgen::gen_beta(a.big_n, a.a, a.b, &mut rng)?, format!("beta a={} b={}", a.a, a.b)),
        GeneratorArg::Lognormal => (
            popgen::gen_lognormal(a.big_n, a.mu, a.sigma, &mut rng)?,
            format!("lognormal mu={} sigma={}", a.mu, a.sigma),
        ),
        GeneratorArg::Bimodal => (popgen::gen_bimodal_beta_mix(a.big_n, &mut rng)?, "bimodal-beta-mix".to_owned()),
    };
    let mut text = format!("# generator: {generator}\n# N: {}\n# seed: {}\n", a.big_n, a.seed);
    if let Some(b) = pop.bounds() {
        text.push_str(&format!("# bounds: {},{}\n", b.lower, b.upper));
    }
    text.push_str("value\n");
    for v in pop.values() {
        text.push_str(&format!("{v}\n"));
    }
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn simulate(a: RunArgs, curve: bool) -> Outcome {
    let mut spec = ExperimentSpec::load(&a.spec)?;
    if let Some(t) = a.replicates {
        spec.replicates = t;
    }
    if a.seed.is_none() && spec.master_seed.is_none() {
        return Err(param("no seed: pass --seed (or set master_seed in the spec)"));
    }
    let resolved = spec.resolve(a.seed)?;
    let start = Instant::now();
    let result = experiments::run_protocol(&resolved, a.threads)?;
    let paths = result.write(&a.out)?;
    let wall = start.elapsed().as_secs_f64();
    if curve {
        let rows = experiments::mse_table(&result);
        let prov = [("experiment", result.name.clone()), ("master_seed", result.master_seed.to_string())];
        let curve_path = a.out.join("mse_curve.csv");
        experiments::write_csv(&curve_path, MSE_CURVE_SCHEMA, &prov, &rows)?;
        experiments::write_csv_to(&mut std::io::stdout().lock(), MSE_CURVE_SCHEMA, &prov, &rows)?;
        eprintln!("T={} wall={wall:.2}s curve={}", resolved.spec.replicates, curve_path.display());
    } else {
        println!(
            "T={} replicates={} aggregates={}",
            resolved.spec.replicates,
            paths.replicates.display(),
            paths.aggregates.display()
        );
        eprintln!("wall={wall:.2}s");
    }
    Ok(())
}

fn critical(a: CriticalArgs) -> Outcome {
    let solve = |rate: f64| -> Result<amplification::CriticalEps, Failure> {
        match a.arithmetic {
            ArithmeticArg::Stable => Ok(amplification::critical_eps_for_unit_ratio(SamplingRate::new(rate)?)?),
            ArithmeticArg::Naive => amplification::naive_unit_ratio_crossing(rate, 200_001)
                .ok_or_else(|| param(format!("naive ratio never reaches 1 at rate {rate}"))),
        }
    };
    match (&a.rate_grid, a.rate) {
        (Some(grid), _) => {
            let rows = grid_log(grid)?.into_iter().map(solve).collect::<Result<Vec<_>, _>>()?;
            let prov = [("arithmetic", format!("{:?}", a.arithmetic).to_lowercase())];
            experiments::write_csv_to(&mut std::io::stdout().lock(), "dpamp/critical-eps/v1", &prov, &rows)?;
            Ok(())
        }
        (None, Some(rate)) => print_json(&solve(rate)?),
        (None, None) => Err(param("give --rate or --rate-grid")),
    }
}

fn verify(a: VerifyArgs) -> Outcome {
    let bounds = Bounds::new(0.0, 1.0)?;
    let budget = PrivacyBudget::new(a.eps, a.delta)?;
    let stat = statistic(a.statistic);
    if a.grid_points < 2 {
        return Err(param("--grid-points must be at least 2"));
    }
    let grid: Vec<f64> = (0..a.grid_points).map(|k| -5.0 + 11.0 * k as f64 / (a.grid_points - 1) as f64).collect();
    let sizes: Vec<usize> = match a.n {
        Some(n) => vec![n],
        None => (1..=a.big_n).collect(),
    };
    let mut pairs = Vec::with_capacity(a.pairs + 1);
    let mut worst_b = vec![0.0; a.big_n];
    if let Some(last) = worst_b.last_mut() {
        *last = 1.0;
    }
    pairs.push((
        Population::new(vec![0.0; a.big_n], Some(bounds), "all at the lower bound")?,
        Population::new(worst_b, Some(bounds), "one record at the upper bound")?,
    ));
    let mut rng = RngStream::new(a.seed, tags::ORACLE);
    for _ in 0..a.pairs {
        pairs.push(oracle::random_neighbor_pair(a.big_n, bounds, &mut rng)?);
    }
    let (mut checks, mut worst) = (0usize, f64::NEG_INFINITY);
    for (pa, pb) in &pairs {
        for &n in &sizes {
            let r = oracle::verify_amplification(pa, pb, n, stat, budget, &grid)?;
            checks += r.checks;
            worst = worst.max(r.max_violation);
        }
    }
    let passed = worst <= oracle::VIOLATION_TOLERANCE;
    print_json(&json!({
        "N": a.big_n,
        "sample_sizes": sizes,
        "sample_budget": budget,
        "statistic": stat,
        "pairs": pairs.len(),
        "checks": checks,
        "max_violation": worst,
        "tolerance": oracle::VIOLATION_TOLERANCE,
        "passed": passed,
    }))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("max violation {worst:e}")))
    }
}
