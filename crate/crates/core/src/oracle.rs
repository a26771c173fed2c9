//! Brute-force checks that do not rely on the closed forms elsewhere in the
//! crate: the exact distribution of a subsampled Laplace release, the
//! amplification inequality evaluated on it, and sensitivities found by
//! exhaustive record replacement.

use serde::{Deserialize, Serialize};

use crate::amplification::SamplingRate;
use crate::budget::PrivacyBudget;
use crate::error::{Error, Result};
use crate::laplace::{laplace_cdf, LaplaceParams};
use crate::mechanisms::Mechanism;
use crate::population::{Bounds, Population};
use crate::rng::RngStream;
use crate::sampling::{binomial, enumerate_samples};
use crate::sensitivity::Statistic;

/// Limit on the number of statistic evaluations in the brute-force
/// sensitivity searches.
pub const SEARCH_GUARD: u128 = 10_000_000;

/// The release `g(sample) + Laplace(0, b)` with `sample` uniform over all
/// size-`n` subsets: an equal-weight mixture of Laplace distributions.
#[derive(Clone, Debug)]
pub struct ReleaseMixture {
    locations: Vec<f64>,
    components: Vec<LaplaceParams>,
    scale: f64,
}

impl ReleaseMixture {
    /// Global-sensitivity Laplace release of `statistic` on size-`n` samples
    /// of `pop`, spending `sample_eps` on the sample.
    pub fn new(
        pop: &Population,
        n: usize,
        statistic: Statistic,
        mechanism: Mechanism,
        sample_eps: f64,
    ) -> Result<Self> {
        if mechanism != Mechanism::GlobalLaplace {
            return Err(Error::Unsupported(
                "mixture not closed-form: smooth sensitivity makes the noise scale data-dependent".into(),
            ));
        }
        if !(sample_eps > 0.0 && sample_eps.is_finite()) {
            return Err(Error::param(format!("epsilon must be positive, got {sample_eps}")));
        }
        if n == 0 || n > pop.len() {
            return Err(Error::param(format!("sample size must satisfy 1 <= n <= N, got {n}")));
        }
        let range = pop.range().ok_or(Error::Unbounded)?;
        let sens = match statistic {
            Statistic::Mean => range / n as f64,
            Statistic::Median => range,
        };
        let values = pop.values();
        let scale = sens / sample_eps;
        let locations: Vec<f64> = enumerate_samples(pop.len(), n)?
            .map(|s| {
                let v: Vec<f64> = s.pick(values).collect();
                statistic.evaluate(&v)
            })
            .collect();
        let components = locations.iter().map(|&loc| LaplaceParams::new(loc, scale)).collect::<Result<Vec<_>>>()?;
        Ok(ReleaseMixture { locations, components, scale })
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn cdf(&self, omega: f64) -> f64 {
        let s: f64 = self.components.iter().map(|&p| laplace_cdf(omega, p)).sum();
        s / self.components.len() as f64
    }
}

/// `Pr[release <= omega]` for the subsampled global Laplace release.
pub fn exact_release_cdf(
    pop: &Population,
    n: usize,
    statistic: Statistic,
    mechanism: Mechanism,
    sample_eps: f64,
    omega: f64,
) -> Result<f64> {
    Ok(ReleaseMixture::new(pop, n, statistic, mechanism, sample_eps)?.cdf(omega))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub population_size: usize,
    pub n: usize,
    pub sample_budget: PrivacyBudget,
    /// `1 + (n/N)(e^ε − 1)`.
    pub factor: f64,
    /// `(n/N) δ`.
    pub additive: f64,
    /// Number of inequalities evaluated.
    pub checks: usize,
    /// Largest `lhs − rhs` over all checks; negative means every check had
    /// slack.
    pub max_violation: f64,
    pub passed: bool,
}

/// Tolerance for [`VerificationReport::passed`].
pub const VIOLATION_TOLERANCE: f64 = 1e-12;

fn check_neighbors(a: &Population, b: &Population) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::NotNeighbors(format!("sizes differ: {} vs {}", a.len(), b.len())));
    }
    if a.bounds() != b.bounds() {
        return Err(Error::NotNeighbors("bounds differ".into()));
    }
    let diff = a.values().iter().zip(b.values()).filter(|(x, y)| x != y).count();
    if diff > 1 {
        return Err(Error::NotNeighbors(format!("{diff} records differ")));
    }
    Ok(())
}

/// Evaluates the amplification inequality
///
/// ```text
/// Pr[A(S(Y)) ∈ E] <= (1 + (n/N)(e^ε − 1)) Pr[A(S(Y')) ∈ E] + (n/N) δ
/// ```
///
/// in both directions for `E = (−∞, ω]` and `E = (ω, ∞)` at every `ω` of the
/// grid and at `±∞`. The release is the global Laplace mechanism calibrated to
/// be `(ε, δ)`-DP at sample size `n` (it is in fact ε-DP; `δ` only loosens the
/// right-hand side).
pub fn verify_amplification(
    pop_a: &Population,
    pop_b: &Population,
    n: usize,
    statistic: Statistic,
    sample_budget: PrivacyBudget,
    omega_grid: &[f64],
) -> Result<VerificationReport> {
    check_neighbors(pop_a, pop_b)?;
    let big_n = pop_a.len();
    let rate = SamplingRate::from_counts(n, big_n)?.value();
    let eps = sample_budget.epsilon();
    let factor = 1.0 + rate * eps.exp_m1();
    let additive = rate * sample_budget.delta();
    let ma = ReleaseMixture::new(pop_a, n, statistic, Mechanism::GlobalLaplace, eps)?;
    let mb = ReleaseMixture::new(pop_b, n, statistic, Mechanism::GlobalLaplace, eps)?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut checks = 0usize;
    let points = omega_grid.iter().copied().chain([f64::NEG_INFINITY, f64::INFINITY]);
    for omega in points {
        let (fa, fb) = (ma.cdf(omega), mb.cdf(omega));
        for (p, q) in [(fa, fb), (fb, fa), (1.0 - fa, 1.0 - fb), (1.0 - fb, 1.0 - fa)] {
            max_violation = max_violation.max(p - (factor * q + additive));
            checks += 1;
        }
    }
    Ok(VerificationReport {
        population_size: big_n,
        n,
        sample_budget,
        factor,
        additive,
        checks,
        max_violation,
        passed: max_violation <= VIOLATION_TOLERANCE,
    })
}

/// `grid_size` equally spaced points from `lower` to `upper` inclusive.
pub fn value_grid(bounds: Bounds, grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(Error::param("grid needs at least 2 points"));
    }
    let step = bounds.range() / (grid_size - 1) as f64;
    Ok((0..grid_size).map(|k| if k + 1 == grid_size { bounds.upper } else { bounds.lower + step * k as f64 }).collect())
}

fn local_search(values: &[f64], statistic: Statistic, grid: &[f64]) -> f64 {
    let base = statistic.evaluate(values);
    let mut work = values.to_vec();
    let mut best = 0.0f64;
    for i in 0..values.len() {
        for &g in grid {
            work[i] = g;
            best = best.max((statistic.evaluate(&work) - base).abs());
        }
        work[i] = values[i];
    }
    best
}

/// Largest change of `statistic` when one record of `pop` is replaced by a
/// point of a `grid_size`-point grid spanning the bounds.
pub fn brute_force_local_sensitivity(pop: &Population, statistic: Statistic, grid_size: usize) -> Result<f64> {
    let bounds = pop.bounds().ok_or(Error::Unbounded)?;
    let work = pop.len() as u128 * grid_size as u128;
    if work > SEARCH_GUARD {
        return Err(Error::GuardExceeded(format!("N * grid = {work} exceeds {SEARCH_GUARD}")));
    }
    let grid = value_grid(bounds, grid_size)?;
    Ok(local_search(pop.values(), statistic, &grid))
}

/// Largest local sensitivity over every size-`n` dataset with values on the
/// grid. Only for tiny `n` (at most 4).
pub fn brute_force_global_sensitivity(bounds: Bounds, n: usize, statistic: Statistic, grid_size: usize) -> Result<f64> {
    if n == 0 || n > 4 {
        return Err(Error::param(format!("global brute force supports 1 <= N <= 4, got {n}")));
    }
    let datasets = (grid_size as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let work = datasets.saturating_mul(n as u128 * grid_size as u128);
    if work > SEARCH_GUARD {
        return Err(Error::GuardExceeded(format!("{work} evaluations exceed {SEARCH_GUARD}")));
    }
    let grid = value_grid(bounds, grid_size)?;
    let mut digits = vec![0usize; n];
    let mut best = 0.0f64;
    loop {
        let values: Vec<f64> = digits.iter().map(|&d| grid[d]).collect();
        best = best.max(local_search(&values, statistic, &grid));
        // odometer increment
        let mut p = 0;
        loop {
            if p == n {
                return Ok(best);
            }
            digits[p] += 1;
            if digits[p] < grid_size {
                break;
            }
            digits[p] = 0;
            p += 1;
        }
    }
}

/// A random bounded-neighbour pair of size `size`: values uniform in the
/// bounds, each at a bound with probability 1/8, and one record of the second
/// population redrawn the same way.
pub fn random_neighbor_pair(size: usize, bounds: Bounds, rng: &mut RngStream) -> Result<(Population, Population)> {
    if size == 0 {
        return Err(Error::param("population size must be at least 1"));
    }
    let draw = |rng: &mut RngStream| {
        let u = rng.next_open01();
        if u < 1.0 / 16.0 {
            bounds.lower
        } else if u > 15.0 / 16.0 {
            bounds.upper
        } else {
            bounds.lower + bounds.range() * rng.next_open01()
        }
    };
    let a: Vec<f64> = (0..size).map(|_| draw(rng)).collect();
    let mut b = a.clone();
    let k = ((rng.next_open01() * size as f64) as usize).min(size - 1);
    b[k] = draw(rng);
    Ok((Population::new(a, Some(bounds), "neighbour A")?, Population::new(b, Some(bounds), "neighbour B")?))
}

/// Number of samples [`ReleaseMixture::new`] would enumerate.
pub fn mixture_size(population_size: usize, n: usize) -> u128 {
    binomial(population_size, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensitivity::{local_sensitivity_mean, local_sensitivity_median};
    use approx::assert_abs_diff_eq;

    fn unit() -> Option<Bounds> {
        Some(Bounds::new(0.0, 1.0).unwrap())
    }

    fn pop(v: &[f64]) -> Population {
        Population::new(v.to_vec(), unit(), "o").unwrap()
    }

    fn lap(x: f64, loc: f64, b: f64) -> f64 {
        laplace_cdf(x, LaplaceParams::new(loc, b).unwrap())
    }

    #[test]
    fn three_sample_mixture() {
        let p = pop(&[0.0, 0.0, 1.0]);
        let got = exact_release_cdf(&p, 2, Statistic::Mean, Mechanism::GlobalLaplace, 1.0, 1.0 / 3.0).unwrap();
        let want = (lap(1.0 / 3.0, 0.0, 0.5) + 2.0 * lap(1.0 / 3.0, 0.5, 0.5)) / 3.0;
        assert_abs_diff_eq!(got, want, epsilon = 1e-15);
    }

    #[test]
    fn full_sample_is_single_laplace() {
        let p = pop(&[0.1, 0.4, 0.9]);
        let m = ReleaseMixture::new(&p, 3, Statistic::Median, Mechanism::GlobalLaplace, 2.0).unwrap();
        assert_eq!(m.locations(), &[0.4]);
        assert_eq!(m.cdf(0.7), lap(0.7, 0.4, 0.5));
    }

    #[test]
    fn cdf_monotone_with_limits() {
        let p = pop(&[0.1, 0.2, 0.7, 0.9]);
        let m = ReleaseMixture::new(&p, 2, Statistic::Mean, Mechanism::GlobalLaplace, 0.7).unwrap();
        assert_eq!(m.cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(m.cdf(f64::INFINITY), 1.0);
        let mut last = 0.0;
        for k in -100..=100 {
            let f = m.cdf(k as f64 * 0.05);
            assert!(f >= last);
            last = f;
        }
    }

    #[test]
    fn mixture_mean_by_integration() {
        let p = pop(&[0.05, 0.3, 0.35, 0.8, 0.95]);
        let m = ReleaseMixture::new(&p, 3, Statistic::Mean, Mechanism::GlobalLaplace, 1.0).unwrap();
        // E X = hi − ∫_lo^hi F(x) dx when F(lo) ≈ 0 and F(hi) ≈ 1
        let (lo, hi, steps) = (-15.0, 16.0, 200_000);
        let h = (hi - lo) / steps as f64;
        let integral: f64 =
            (0..steps).map(|k| 0.5 * h * (m.cdf(lo + h * k as f64) + m.cdf(lo + h * (k + 1) as f64))).sum();
        let avg = m.locations().iter().sum::<f64>() / m.locations().len() as f64;
        assert_abs_diff_eq!(hi - integral, avg, epsilon = 1e-6);
    }

    #[test]
    fn smooth_mixture_rejected() {
        let p = pop(&[0.1, 0.2, 0.3]);
        assert!(matches!(
            ReleaseMixture::new(&p, 2, Statistic::Median, Mechanism::SmoothLaplace, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    fn grid() -> Vec<f64> {
        (0..1001).map(|k| -5.0 + 11.0 * k as f64 / 1000.0).collect()
    }

    #[test]
    fn five_two_example() {
        let a = pop(&[0.1, 0.5, 0.3, 0.9, 0.2]);
        let b = pop(&[0.1, 0.5, 1.0, 0.9, 0.2]);
        let r = verify_amplification(&a, &b, 2, Statistic::Mean, PrivacyBudget::pure(0.5).unwrap(), &grid()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.checks, 4 * 1003);
    }

    #[test]
    fn identical_populations_have_slack() {
        let a = pop(&[0.1, 0.5, 0.3]);
        let r = verify_amplification(&a, &a, 2, Statistic::Mean, PrivacyBudget::pure(1.0).unwrap(), &grid()).unwrap();
        assert!(r.passed);
        assert!(r.max_violation <= 0.0);
    }

    #[test]
    fn worst_case_pair() {
        let a = pop(&[0.0; 6]);
        let b = pop(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        for n in 1..=6 {
            for stat in [Statistic::Mean, Statistic::Median] {
                let r = verify_amplification(&a, &b, n, stat, PrivacyBudget::pure(1.0).unwrap(), &grid()).unwrap();
                assert!(r.passed, "{n} {stat:?} {r:?}");
            }
        }
    }

    #[test]
    fn full_rate_is_tight() {
        // n = N: factor e^ε, attained in the left tail by the worst-case pair
        let a = pop(&[0.0, 0.0, 0.0]);
        let b = pop(&[0.0, 0.0, 1.0]);
        let r = verify_amplification(&b, &a, 3, Statistic::Mean, PrivacyBudget::pure(1.0).unwrap(), &grid()).unwrap();
        assert_abs_diff_eq!(r.factor, 1f64.exp(), epsilon = 1e-15);
        assert!(r.passed);
        assert!(r.max_violation > -1e-6, "{}", r.max_violation);
    }

    #[test]
    fn too_small_a_factor_is_caught() {
        // sanity check that the verifier can fail: pretend the sample used ε/4
        let a = pop(&[0.0, 0.0, 0.0]);
        let b = pop(&[0.0, 0.0, 1.0]);
        let m_a = ReleaseMixture::new(&a, 3, Statistic::Mean, Mechanism::GlobalLaplace, 1.0).unwrap();
        let m_b = ReleaseMixture::new(&b, 3, Statistic::Mean, Mechanism::GlobalLaplace, 1.0).unwrap();
        let weak = 0.25f64.exp();
        let worst = grid().iter().map(|&w| m_b.cdf(w) - weak * m_a.cdf(w)).fold(f64::NEG_INFINITY, f64::max);
        let worst = worst.max(grid().iter().map(|&w| m_a.cdf(w) - weak * m_b.cdf(w)).fold(f64::NEG_INFINITY, f64::max));
        assert!(worst > 1e-3);
    }

    #[test]
    fn neighbors_enforced() {
        let a = pop(&[0.1, 0.2, 0.3]);
        let b = pop(&[0.5, 0.6, 0.3]);
        let e = verify_amplification(&a, &b, 2, Statistic::Mean, PrivacyBudget::pure(1.0).unwrap(), &[0.0]);
        assert!(matches!(e, Err(Error::NotNeighbors(_))));
        let c = pop(&[0.1, 0.2]);
        assert!(verify_amplification(&a, &c, 2, Statistic::Mean, PrivacyBudget::pure(1.0).unwrap(), &[0.0]).is_err());
    }

    #[test]
    fn local_brute_force_matches() {
        let p = pop(&[0.2, 0.5, 0.8]);
        let bf = brute_force_local_sensitivity(&p, Statistic::Mean, 10_001).unwrap();
        assert_abs_diff_eq!(bf, local_sensitivity_mean(&p).unwrap().value, epsilon = 1e-12);
        let p = Population::new(vec![1.0, 2.0, 4.0, 8.0, 16.0], Some(Bounds::new(0.0, 20.0).unwrap()), "g").unwrap();
        let bf = brute_force_local_sensitivity(&p, Statistic::Median, 50).unwrap();
        assert_eq!(bf, local_sensitivity_median(&p).unwrap().value);
        let c = pop(&[0.4; 5]);
        let bf = brute_force_local_sensitivity(&c, Statistic::Mean, 50).unwrap();
        assert_abs_diff_eq!(bf, 0.6 / 5.0, epsilon = 1e-12);
        assert!(bf > 0.0);
    }

    #[test]
    fn global_brute_force() {
        let b = Bounds::new(0.0, 2.5).unwrap();
        for n in 1..=4 {
            let v = brute_force_global_sensitivity(b, n, Statistic::Mean, 11).unwrap();
            assert_abs_diff_eq!(v, 2.5 / n as f64, epsilon = 1e-12);
        }
        assert_eq!(brute_force_global_sensitivity(b, 3, Statistic::Median, 11).unwrap(), 2.5);
        assert!(brute_force_global_sensitivity(b, 5, Statistic::Mean, 3).is_err());
        assert!(matches!(brute_force_global_sensitivity(b, 4, Statistic::Mean, 1000), Err(Error::GuardExceeded(_))));
    }

    #[test]
    fn local_guard() {
        let p = pop(&[0.5; 101]);
        assert!(matches!(brute_force_local_sensitivity(&p, Statistic::Mean, 1_000_000), Err(Error::GuardExceeded(_))));
    }
}
