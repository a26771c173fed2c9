//! Amplification by simple random sampling without replacement, and the
//! closed-form variance bounds that follow from it.
//!
//! A mechanism that is `(ε, δ)`-DP on a sample drawn at rate `n/N` is
//! `(ln(1 + (n/N)(e^ε − 1)), (n/N) δ)`-DP with respect to the population.
//! Running that in reverse gives the sample-level budget that meets a target:
//! `ε_n = ln(1 + (N/n)(e^ε − 1))`, `δ_n = (N/n) δ`.
//!
//! Every formula here is evaluated with `ln_1p`/`exp_m1` or an equivalent
//! rearrangement, so results stay accurate from `ε = 1e-30` up to `ε`
//! values whose exponential overflows.

use serde::{Deserialize, Serialize};

use crate::budget::PrivacyBudget;
use crate::error::{Error, Result};
use crate::roots::bisect;

/// A sampling rate in `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SamplingRate(f64);

impl SamplingRate {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::param(format!("sampling rate must lie in (0, 1], got {rate}")));
        }
        Ok(SamplingRate(rate))
    }

    /// `n / N` for `1 <= n <= N`.
    pub fn from_counts(n: usize, population_size: usize) -> Result<Self> {
        if n == 0 || n > population_size {
            return Err(Error::param(format!(
                "sample size must satisfy 1 <= n <= N, got n = {n}, N = {population_size}"
            )));
        }
        Ok(SamplingRate(n as f64 / population_size as f64))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_full(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for SamplingRate {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        SamplingRate::new(v)
    }
}

impl From<SamplingRate> for f64 {
    fn from(r: SamplingRate) -> f64 {
        r.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Sample budget in, population-level guarantee out.
    EffectiveFromSample,
    /// Population-level target in, sample budget out.
    SampleFromTarget,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationResult {
    /// Population-level guarantee.
    pub target: PrivacyBudget,
    /// Budget spent on the sample.
    pub sample_budget: PrivacyBudget,
    pub rate: SamplingRate,
    pub direction: Direction,
}

pub fn amplify(budget: PrivacyBudget, rate: SamplingRate, direction: Direction) -> Result<AmplificationResult> {
    Ok(match direction {
        Direction::SampleFromTarget => {
            AmplificationResult { target: budget, sample_budget: amplified_budget(budget, rate)?, rate, direction }
        }
        Direction::EffectiveFromSample => {
            AmplificationResult { target: effective_budget(budget, rate)?, sample_budget: budget, rate, direction }
        }
    })
}

/// `ln(1 + rate (e^ε − 1))`.
pub fn effective_epsilon(eps: f64, rate: f64) -> f64 {
    if rate == 1.0 {
        return eps;
    }
    if eps > 1.0 {
        // ε + ln(rate + (1 − rate) e^{−ε}) avoids overflowing e^ε
        eps + (rate + (1.0 - rate) * (-eps).exp()).ln()
    } else {
        (rate * eps.exp_m1()).ln_1p()
    }
}

/// `ln(1 + (e^ε − 1) / rate)`.
pub fn amplified_epsilon(eps: f64, rate: f64) -> f64 {
    if rate == 1.0 {
        return eps;
    }
    if eps > 1.0 {
        eps - rate.ln() + (-(1.0 - rate) * (-eps).exp()).ln_1p()
    } else {
        (eps.exp_m1() / rate).ln_1p()
    }
}

/// The population-level guarantee of a release that spends `sample_budget`
/// on a sample drawn at `rate`.
pub fn effective_budget(sample_budget: PrivacyBudget, rate: SamplingRate) -> Result<PrivacyBudget> {
    if rate.is_full() {
        return Ok(sample_budget);
    }
    let r = rate.value();
    PrivacyBudget::new(effective_epsilon(sample_budget.epsilon(), r), r * sample_budget.delta())
}

/// The budget a sample drawn at `rate` may spend while the release still
/// meets `target` at the population level.
pub fn amplified_budget(target: PrivacyBudget, rate: SamplingRate) -> Result<PrivacyBudget> {
    if rate.is_full() {
        return Ok(target);
    }
    let r = rate.value();
    let delta_n = target.delta() / r;
    if delta_n >= 1.0 {
        return Err(Error::InvalidAmplifiedDelta(delta_n));
    }
    let eps_n = amplified_epsilon(target.epsilon(), r);
    if !eps_n.is_finite() {
        return Err(Error::param(format!("amplified epsilon overflows: {eps_n}")));
    }
    PrivacyBudget::new(eps_n, delta_n)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param(format!("epsilon must be positive and finite, got {eps}")));
    }
    Ok(())
}

/// Largest share of the population-release variance that sampling variance
/// may take before a sample release can no longer be more accurate:
/// `1 − (ε / ε_n)^2`.
pub fn q_bound(eps: f64, rate: SamplingRate) -> Result<f64> {
    check_eps(eps)?;
    let eps_n = amplified_epsilon(eps, rate.value());
    Ok((eps_n - eps) * (eps_n + eps) / (eps_n * eps_n))
}

/// Small-ε limit of [`q_bound`]: `1 − rate^2`.
pub fn q_bound_small_eps(rate: SamplingRate) -> f64 {
    let r = rate.value();
    (1.0 - r) * (1.0 + r)
}

/// The sampling rate at which [`q_bound`] equals `q`. `q_bound` falls from
/// 1 to 0 as the rate rises to 1, so the answer is unique for `q` in (0, 1).
pub fn rate_for_q_bound(eps: f64, q: f64) -> Result<SamplingRate> {
    check_eps(eps)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param(format!("q must lie in (0, 1), got {q}")));
    }
    let g = |r: f64| {
        let eps_n = amplified_epsilon(eps, r);
        (eps_n - eps) * (eps_n + eps) / (eps_n * eps_n) - q
    };
    let (a, b) = bisect(g, 1e-15, 1.0, 1e-15, 200)?;
    SamplingRate::new(0.5 * (a + b))
}

/// Sampling variance at or above which no gain is possible:
/// `2 Δ^2 (ε^{-2} − ε_n^{-2})`, with `Δ` the population-level global
/// sensitivity.
pub fn no_gain_threshold(global_sensitivity: f64, eps: f64, rate: SamplingRate) -> Result<f64> {
    check_eps(eps)?;
    if !(global_sensitivity >= 0.0 && global_sensitivity.is_finite()) {
        return Err(Error::param(format!("sensitivity must be finite and nonnegative, got {global_sensitivity}")));
    }
    let eps_n = amplified_epsilon(eps, rate.value());
    let d = global_sensitivity;
    Ok(2.0 * d * d * (eps_n - eps) * (eps_n + eps) / (eps * eps * eps_n * eps_n))
}

/// Variance of the privatized population mean, `2 (R / (ε N))^2`.
pub fn mean_variance_population(range: f64, population_size: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    check_range(range)?;
    if population_size == 0 {
        return Err(Error::param("population size must be at least 1"));
    }
    let s = range / (eps * population_size as f64);
    Ok(2.0 * s * s)
}

fn check_range(range: f64) -> Result<()> {
    if !(range >= 0.0 && range.is_finite()) {
        return Err(Error::param(format!("range must be finite and nonnegative, got {range}")));
    }
    Ok(())
}

/// Variance of a privatized sample mean and its two parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanVariance {
    pub total: f64,
    /// `(1 − n/N) S^2 / n`.
    pub sampling: f64,
    /// `2 (R / (ε_n n))^2`.
    pub noise: f64,
}

/// Variance of the privatized mean of a simple random sample of size `n`
/// whose noise is calibrated to the amplified budget for `target_eps`.
pub fn mean_variance_sample(
    range: f64,
    population_size: usize,
    n: usize,
    s2: f64,
    target_eps: f64,
) -> Result<MeanVariance> {
    let rate = SamplingRate::from_counts(n, population_size)?;
    mean_variance_at(range, population_size as f64, n as f64, rate, s2, target_eps)
}

fn mean_variance_at(range: f64, big_n: f64, n: f64, rate: SamplingRate, s2: f64, eps: f64) -> Result<MeanVariance> {
    check_eps(eps)?;
    check_range(range)?;
    if !(s2 >= 0.0 && s2.is_finite()) {
        return Err(Error::param(format!("S^2 must be finite and nonnegative, got {s2}")));
    }
    let sampling = if rate.is_full() { 0.0 } else { (1.0 - n / big_n) * s2 / n };
    let eps_n = amplified_epsilon(eps, rate.value());
    let s = range / (eps_n * n);
    let noise = 2.0 * s * s;
    Ok(MeanVariance { total: sampling + noise, sampling, noise })
}

/// Ratio of the population-release noise variance to the sample-release
/// noise variance for the mean, `(rate · ε_n / ε)^2`. Values above one would
/// mean the sample release carries less noise.
pub fn noise_ratio_mean(eps: f64, rate: SamplingRate) -> Result<f64> {
    check_eps(eps)?;
    let x = rate.value() * amplified_epsilon(eps, rate.value()) / eps;
    Ok(x * x)
}

/// [`noise_ratio_mean`] evaluated with the textbook `exp(ε) − 1` and
/// `ln(1 + x)`. Diagnostic only: below `ε ≈ 1e-8` cancellation makes the
/// result meaningless, and it can exceed one.
pub fn noise_ratio_mean_naive(eps: f64, rate: f64) -> f64 {
    let eps_n = (1.0 + (eps.exp() - 1.0) / rate).ln();
    let x = rate * eps_n / eps;
    x * x
}

/// Residual bound for the unit-ratio solver.
pub const UNIT_RATIO_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEps {
    pub rate: f64,
    pub eps: f64,
    /// Amplified budget at `eps`.
    pub eps_n: f64,
    /// `r(eps, rate) − 1`.
    pub residual: f64,
}

/// Where the noise ratio of the mean reaches one.
///
/// `r(ε, rate)` rises to one only as `ε → 0`: for every positive `ε` it sits
/// strictly below one, by roughly `(1 − rate) ε_n`. The solver therefore
/// returns the largest `ε` on the bisection grid over `ln ε ∈ [ln 1e-30,
/// ln 1e3]` at which `|r − 1|` is within half of [`UNIT_RATIO_TOLERANCE`],
/// to relative precision `1e-12` in `ε`.
pub fn critical_eps_for_unit_ratio(rate: SamplingRate) -> Result<CriticalEps> {
    let r = rate.value();
    if r >= 1.0 {
        return Err(Error::param("critical epsilon needs a sampling rate below 1"));
    }
    let target = 1.0 - 0.5 * UNIT_RATIO_TOLERANCE;
    let g = |ln_eps: f64| {
        let eps = ln_eps.exp();
        let x = r * amplified_epsilon(eps, r) / eps;
        x * x - target
    };
    let (a, _) = bisect(g, 1e-30f64.ln(), 1e3f64.ln(), 1e-12, 400)?;
    let eps = a.exp();
    let ratio = noise_ratio_mean(eps, rate)?;
    Ok(CriticalEps { rate: r, eps, eps_n: amplified_epsilon(eps, r), residual: ratio - 1.0 })
}

/// Largest `ε` on a log-spaced grid over `[1e-30, 7e2]` at which
/// [`noise_ratio_mean_naive`] is at least one. Reproduces the crossing that
/// appears when the ratio is evaluated without the stable forms.
pub fn naive_unit_ratio_crossing(rate: f64, grid_points: usize) -> Option<CriticalEps> {
    let (lo, hi) = (1e-30f64.ln(), 7e2f64.ln());
    let step = (hi - lo) / (grid_points.max(2) - 1) as f64;
    (0..grid_points).rev().map(|i| (lo + step * i as f64).exp()).find(|&e| noise_ratio_mean_naive(e, rate) >= 1.0).map(
        |eps| {
            let eps_n = (1.0 + (eps.exp() - 1.0) / rate).ln();
            CriticalEps { rate, eps, eps_n, residual: noise_ratio_mean_naive(eps, rate) - 1.0 }
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCurvePoint {
    pub rate: f64,
    pub variance: MeanVariance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalRate {
    pub best_rate: f64,
    pub best_variance: f64,
    /// One point per grid rate, plus rate 1 if the grid lacks it, sorted by
    /// rate.
    pub curve: Vec<RateCurvePoint>,
}

/// Grid search for the rate minimising the privatized-mean variance. Rates
/// are treated as real numbers, with `n = rate · N`.
pub fn optimal_rate_mean(
    range: f64,
    population_size: usize,
    s2: f64,
    target_eps: f64,
    rate_grid: &[f64],
) -> Result<OptimalRate> {
    if rate_grid.is_empty() {
        return Err(Error::param("rate grid is empty"));
    }
    if population_size == 0 {
        return Err(Error::param("population size must be at least 1"));
    }
    let big_n = population_size as f64;
    let mut rates = rate_grid.iter().map(|&r| SamplingRate::new(r)).collect::<Result<Vec<_>>>()?;
    if !rates.iter().any(|r| r.is_full()) {
        rates.push(SamplingRate(1.0));
    }
    rates.sort_by(|a, b| a.0.total_cmp(&b.0));
    rates.dedup();
    let curve = rates
        .into_iter()
        .map(|rate| {
            let variance = mean_variance_at(range, big_n, rate.0 * big_n, rate, s2, target_eps)?;
            Ok(RateCurvePoint { rate: rate.0, variance })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = curve.iter().min_by(|a, b| a.variance.total.total_cmp(&b.variance.total)).expect("curve is nonempty");
    Ok(OptimalRate { best_rate: best.rate, best_variance: best.variance.total, curve })
}
