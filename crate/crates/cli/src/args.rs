use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "dpamp",
    version,
    about = "Private means and medians, amplification by subsampling, and accuracy studies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a budget between the population and the sample level.
    Amplify(AmplifyArgs),
    /// Closed-form accuracy bounds: q-bound, noise ratio, no-gain threshold,
    /// mean variances.
    Bounds(BoundsArgs),
    /// Sensitivity of the mean or median of a population file.
    Sensitivity(SensitivityArgs),
    /// Release one privatized statistic.
    Privatize(PrivatizeArgs),
    /// Generate a synthetic population as single-column CSV.
    Popgen(PopgenArgs),
    /// Run a replication study and write replicates.csv and aggregates.csv.
    Simulate(RunArgs),
    /// Run a study and print the log-MSE-versus-rate table.
    MseCurve(RunArgs),
    /// Where the noise ratio of the mean reaches one.
    CriticalEps(CriticalArgs),
    /// Check the amplification inequality exactly on small populations.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RateArgs {
    /// Sampling rate n/N in (0, 1].
    #[arg(long, conflicts_with_all = ["n", "big_n"])]
    pub rate: Option<f64>,
    /// Sample size (with --N); the rate is the exact ratio n/N.
    #[arg(long, requires = "big_n")]
    pub n: Option<usize>,
    /// Population size (with --n).
    #[arg(long = "N", requires = "n")]
    pub big_n: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionArg {
    /// Target budget in, sample budget out.
    ToSample,
    /// Sample budget in, population-level budget out.
    ToEffective,
}

#[derive(Args, Debug)]
pub struct AmplifyArgs {
    /// Privacy parameter ε (> 0).
    #[arg(long)]
    pub eps: f64,
    /// Privacy parameter δ in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[command(flatten)]
    pub rate: RateArgs,
    #[arg(long, value_enum, default_value_t = DirectionArg::ToSample)]
    pub direction: DirectionArg,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Target ε (> 0).
    #[arg(long)]
    pub eps: f64,
    #[command(flatten)]
    pub rate: RateArgs,
    /// Rate grid START:STOP:COUNT (linear); prints a CSV curve instead of JSON.
    #[arg(long, conflicts_with_all = ["rate", "n", "big_n", "q"])]
    pub rate_grid: Option<String>,
    /// Solve for the rate whose q-bound equals this value.
    #[arg(long)]
    pub q: Option<f64>,
    /// Population-level global sensitivity Δ for the no-gain threshold.
    #[arg(long)]
    pub sensitivity: Option<f64>,
    /// Range R for the mean variance formulas (needs --n, --N and --s2).
    #[arg(long)]
    pub range: Option<f64>,
    /// Population variance S² (N − 1 denominator).
    #[arg(long)]
    pub s2: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticArg {
    Mean,
    Median,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindArg {
    Global,
    Local,
    Smooth,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchArg {
    Exhaustive,
    Pruned,
    Monotone,
}

#[derive(Args, Debug, Clone)]
pub struct PopulationArgs {
    /// Single-column CSV; `#` lines are comments, a non-numeric first row is a
    /// header.
    #[arg(long)]
    pub input: PathBuf,
    /// Range bounds LO,HI of the data domain.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub bounds: Option<(f64, f64)>,
}

#[derive(Args, Debug)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, value_enum)]
    pub statistic: StatisticArg,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// ε for smooth sensitivity.
    #[arg(long)]
    pub eps: Option<f64>,
    /// δ for smooth sensitivity (> 0).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Smooth-sensitivity evaluation strategy.
    #[arg(long, value_enum, default_value_t = SearchArg::Monotone)]
    pub search: SearchArg,
    /// Evaluate every (k, t) pair; same as --search exhaustive.
    #[arg(long)]
    pub no_prune: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismArg {
    /// Laplace(0, Δ^G/ε); pure ε-DP.
    Global,
    /// Laplace(0, 2Δ^S/ε); (ε, δ)-DP, median only.
    Smooth,
}

#[derive(Args, Debug)]
pub struct PrivatizeArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, value_enum)]
    pub statistic: StatisticArg,
    #[arg(long, value_enum)]
    pub mechanism: MechanismArg,
    /// Target ε.
    #[arg(long)]
    pub eps: f64,
    /// Target δ (0 for the global mechanism; default 1/(2N) for smooth).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Release from a simple random sample of this size at the amplified
    /// budget instead of from the whole population.
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: u64,
    /// Stream id within the seed.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Clamp the noisy value into the bounds (post-processing).
    #[arg(long)]
    pub clamp: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorArg {
    Beta,
    Lognormal,
    Bimodal,
}

#[derive(Args, Debug)]
pub struct PopgenArgs {
    #[arg(long, value_enum)]
    pub kind: GeneratorArg,
    /// Number of records.
    #[arg(long = "N", default_value_t = 10_001)]
    pub big_n: usize,
    /// Beta shape a.
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// Beta shape b.
    #[arg(long, default_value_t = 10.0)]
    pub b: f64,
    /// Log-normal location of the log.
    #[arg(long, default_value_t = 5.0)]
    pub mu: f64,
    /// Log-normal scale of the log.
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed; overrides the spec. Required unless the spec sets one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Override the spec's replicate count T (default in specs: 1000).
    #[arg(long)]
    pub replicates: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithmeticArg {
    /// ln1p/expm1 forms.
    Stable,
    /// Textbook exp(ε) − 1 and ln(1 + x); diagnostic.
    Naive,
}

#[derive(Args, Debug)]
pub struct CriticalArgs {
    /// Sampling rate in (0, 1).
    #[arg(long, conflicts_with = "rate_grid")]
    pub rate: Option<f64>,
    /// Log-spaced rate grid START:STOP:COUNT; prints CSV.
    #[arg(long)]
    pub rate_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = ArithmeticArg::Stable)]
    pub arithmetic: ArithmeticArg,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Population size (at most 8 is practical).
    #[arg(long = "N", default_value_t = 5)]
    pub big_n: usize,
    /// Sample size; all sizes 1..=N when absent.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample-level ε.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Sample-level δ.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = StatisticArg::Mean)]
    pub statistic: StatisticArg,
    /// Random neighbouring pairs in (0, 1); the worst-case pair is always added.
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    /// Points of the ω grid over [−5, 6].
    #[arg(long, default_value_t = 1001)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

/// Parses START:STOP:COUNT.
pub fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected START:STOP:COUNT, got {s:?}"));
    }
    let start = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let stop = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let count = parts[2].parse::<usize>().map_err(|e| e.to_string())?;
    if count < 2 {
        return Err("grid COUNT must be at least 2".into());
    }
    Ok((start, stop, count))
}
