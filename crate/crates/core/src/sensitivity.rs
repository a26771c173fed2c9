//! Global, local and smooth sensitivity of the mean and the median.
//!
//! # Smooth sensitivity of the median
//!
//! For sorted values `y_1 <= ... <= y_N` with `N` odd and `m = (N + 1) / 2`,
//!
//! ```text
//! S(y) = max_{k = 0..N} exp(-k β) · max_{t = 0..k+1} ( y_{m+t} - y_{m+t-k-1} ),
//! β = ε / (2 ln(2 / δ)).
//! ```
//!
//! Order-statistic indices outside `1..=N` resolve to the lower bound (below)
//! or the upper bound (above) when the population is bounded. Without bounds,
//! `(k, t)` pairs that touch such an index are skipped.
//!
//! Writing `i = m + t - k - 1` and `j = m + t`, the double maximum ranges over
//! all pairs `i <= m <= j` and equals
//!
//! ```text
//! max_{i <= m <= j} (y_j - y_i) · exp(-β (j - i - 1)),
//! ```
//!
//! where pairs reaching beyond `0` or `N + 1` are dominated by the clamped
//! endpoints. The weight factors as `e^β · e^{β i} · e^{-β j}` and the span
//! satisfies `(y_j - y_i)(y_j' - y_i') >= (y_j' - y_i)(y_j - y_i')` for
//! `i < i'`, `j < j'`, so the rightmost row maximiser is monotone in `i` and
//! a divide-and-conquer row search finds the maximum in `O(N log N)`.
//! [`SmoothSearch`] selects between that search, the literal double loop, and
//! the double loop with early termination.

use serde::{Deserialize, Serialize};

use crate::budget::PrivacyBudget;
use crate::error::{Error, Result};
use crate::population::{Bounds, Population};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Median,
}

impl Statistic {
    pub fn of_sorted(&self, sorted: &[f64]) -> f64 {
        match self {
            Statistic::Mean => crate::population::mean_of(sorted),
            Statistic::Median => crate::population::median_of_sorted(sorted),
        }
    }

    /// Evaluates the statistic on unsorted values.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        match self {
            Statistic::Mean => crate::population::mean_of(values),
            Statistic::Median => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                crate::population::median_of_sorted(&v)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitivityKind {
    Global,
    Local,
    Smooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothParams {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub kind: SensitivityKind,
    pub statistic: Statistic,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<SmoothParams>,
    /// A maximising `k` of the outer maximum (smooth sensitivity only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_k: Option<usize>,
}

impl SensitivityReport {
    fn plain(kind: SensitivityKind, statistic: Statistic, value: f64) -> Self {
        SensitivityReport { kind, statistic, value, params: None, argmax_k: None }
    }
}

/// How the smooth-sensitivity maximum is evaluated. All three give the same
/// value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothSearch {
    /// Every `(k, t)` pair, `O(N^2)`.
    Exhaustive,
    /// The `k` loop stops once `exp(-kβ)` times the widest possible span
    /// falls below the running maximum.
    Pruned,
    /// Divide-and-conquer over monotone row maximisers, `O(N log N)`.
    #[default]
    Monotone,
}

pub fn global_sensitivity_mean(range: f64, n: usize) -> Result<SensitivityReport> {
    check_range(range)?;
    if n == 0 {
        return Err(Error::param("population size must be at least 1"));
    }
    Ok(SensitivityReport::plain(SensitivityKind::Global, Statistic::Mean, range / n as f64))
}

/// `R`, whatever the size of the data.
pub fn global_sensitivity_median(range: f64) -> Result<SensitivityReport> {
    check_range(range)?;
    Ok(SensitivityReport::plain(SensitivityKind::Global, Statistic::Median, range))
}

fn check_range(range: f64) -> Result<()> {
    if range.is_infinite() {
        return Err(Error::Unbounded);
    }
    if !(range > 0.0) {
        return Err(Error::param(format!("range must be positive, got {range}")));
    }
    Ok(())
}

/// Global sensitivity of `statistic` for a dataset of `pop`'s size and bounds.
pub fn global_sensitivity(pop: &Population, statistic: Statistic) -> Result<SensitivityReport> {
    let range = pop.range().ok_or(Error::Unbounded)?;
    match statistic {
        Statistic::Mean => global_sensitivity_mean(range, pop.len()),
        Statistic::Median => global_sensitivity_median(range),
    }
}

/// `max(upper - min(y), max(y) - lower) / N`.
pub fn local_sensitivity_mean(pop: &Population) -> Result<SensitivityReport> {
    let b = pop.bounds().ok_or(Error::Unbounded)?;
    let (lo, hi) = pop.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let value = (b.upper - lo).max(hi - b.lower) / pop.len() as f64;
    Ok(SensitivityReport::plain(SensitivityKind::Local, Statistic::Mean, value))
}

/// Largest gap between the median and one of its two neighbouring order
/// statistics. Requires odd `N >= 3`.
pub fn local_sensitivity_median(pop: &Population) -> Result<SensitivityReport> {
    let n = pop.len();
    if n.is_multiple_of(2) {
        return Err(Error::EvenSize(n));
    }
    if n < 3 {
        return Err(Error::param("local sensitivity of the median needs at least 3 records"));
    }
    let y = pop.sorted_values();
    let m = n / 2;
    let value = (y[m + 1] - y[m]).max(y[m] - y[m - 1]);
    Ok(SensitivityReport::plain(SensitivityKind::Local, Statistic::Median, value))
}

pub fn local_sensitivity(pop: &Population, statistic: Statistic) -> Result<SensitivityReport> {
    match statistic {
        Statistic::Mean => local_sensitivity_mean(pop),
        Statistic::Median => local_sensitivity_median(pop),
    }
}

/// `β = ε / (2 ln(2 / δ))`; requires `δ > 0`.
pub fn smoothing_beta(budget: PrivacyBudget) -> Result<f64> {
    if budget.delta() <= 0.0 {
        return Err(Error::param("smooth sensitivity requires delta > 0"));
    }
    Ok(budget.epsilon() / (2.0 * (2.0 / budget.delta()).ln()))
}

pub fn smooth_sensitivity_median(pop: &Population, budget: PrivacyBudget) -> Result<SensitivityReport> {
    smooth_sensitivity_median_with(pop, budget, SmoothSearch::default())
}

pub fn smooth_sensitivity_median_with(
    pop: &Population,
    budget: PrivacyBudget,
    search: SmoothSearch,
) -> Result<SensitivityReport> {
    let beta = smoothing_beta(budget)?;
    let sorted = pop.sorted_values();
    let (value, k) = smooth_median_sorted(&sorted, pop.bounds(), beta, search)?;
    Ok(SensitivityReport {
        kind: SensitivityKind::Smooth,
        statistic: Statistic::Median,
        value,
        params: Some(SmoothParams { epsilon: budget.epsilon(), delta: budget.delta(), beta }),
        argmax_k: Some(k),
    })
}

/// Smooth sensitivity is provided for the median only.
pub fn smooth_sensitivity(
    pop: &Population,
    statistic: Statistic,
    budget: PrivacyBudget,
    search: SmoothSearch,
) -> Result<SensitivityReport> {
    match statistic {
        Statistic::Median => smooth_sensitivity_median_with(pop, budget, search),
        Statistic::Mean => Err(Error::Unsupported("smooth sensitivity is only available for the median".into())),
    }
}

/// Smooth sensitivity of the median of already-sorted values for a given
/// `β > 0`. Returns the value and a maximising `k`.
pub fn smooth_median_sorted(
    sorted: &[f64],
    bounds: Option<Bounds>,
    beta: f64,
    search: SmoothSearch,
) -> Result<(f64, usize)> {
    let n = sorted.len();
    if n.is_multiple_of(2) {
        return Err(Error::EvenSize(n));
    }
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let ext = Extended::new(sorted, bounds);
    Ok(match search {
        SmoothSearch::Exhaustive => ext.double_loop(beta, false),
        SmoothSearch::Pruned => ext.double_loop(beta, true),
        SmoothSearch::Monotone => ext.row_search(beta),
    })
}

/// Sorted values indexed `0..=N+1`, with the bounds at both ends when present.
struct Extended {
    y: Vec<f64>,
    n: usize,
    bounded: bool,
}

impl Extended {
    fn new(sorted: &[f64], bounds: Option<Bounds>) -> Self {
        let (lo, hi) = bounds.map_or((f64::NAN, f64::NAN), |b| (b.lower, b.upper));
        let mut y = Vec::with_capacity(sorted.len() + 2);
        y.push(lo);
        y.extend_from_slice(sorted);
        y.push(hi);
        Extended { y, n: sorted.len(), bounded: bounds.is_some() }
    }

    fn mid(&self) -> usize {
        self.n.div_ceil(2)
    }

    /// Order statistic at 1-based position `i`, or `None` if it is out of
    /// range and unbounded.
    fn at(&self, i: isize) -> Option<f64> {
        let n = self.n as isize;
        if (1..=n).contains(&i) {
            Some(self.y[i as usize])
        } else if self.bounded {
            Some(if i < 1 { self.y[0] } else { self.y[self.n + 1] })
        } else {
            None
        }
    }

    fn widest_span(&self) -> f64 {
        if self.bounded {
            self.y[self.n + 1] - self.y[0]
        } else {
            self.y[self.n] - self.y[1]
        }
    }

    fn double_loop(&self, beta: f64, prune: bool) -> (f64, usize) {
        let m = self.mid() as isize;
        let widest = self.widest_span();
        let (mut best, mut best_k) = (0.0f64, 0usize);
        for k in 0..=self.n {
            let w = (-(k as f64) * beta).exp();
            if prune && w * widest < best {
                break;
            }
            let ki = k as isize;
            for t in 0..=ki + 1 {
                let (Some(hi), Some(lo)) = (self.at(m + t), self.at(m + t - ki - 1)) else {
                    continue;
                };
                let v = w * (hi - lo);
                if v > best {
                    best = v;
                    best_k = k;
                }
            }
        }
        (best, best_k)
    }

    fn row_search(&self, beta: f64) -> (f64, usize) {
        let m = self.mid();
        let (rows, cols) = if self.bounded { ((0, m), (m, self.n + 1)) } else { ((1, m), (m, self.n)) };
        // Rows are compared on ln(span) − β(d − 1), which cannot underflow
        // the way the product does for large β. An all-zero row then only
        // arises when every span in it is zero, and for such a row the
        // rightmost split is valid.
        let log_weight: Vec<f64> = (0..=self.n + 1).map(|d| -((d as f64) - 1.0) * beta).collect();
        let y = &self.y;
        let key = |i: usize, j: usize| {
            if j > i {
                (y[j] - y[i]).ln() + log_weight[j - i]
            } else {
                f64::NEG_INFINITY
            }
        };
        let (mut best, mut best_k) = (0.0f64, 0usize);
        let mut stack = vec![(rows.0, rows.1, cols.0, cols.1)];
        while let Some((ilo, ihi, jlo, jhi)) = stack.pop() {
            if ilo > ihi {
                continue;
            }
            let i = ilo + (ihi - ilo) / 2;
            let (mut row_best, mut row_arg) = (f64::NEG_INFINITY, jlo);
            for j in jlo..=jhi {
                let v = key(i, j);
                if v >= row_best {
                    row_best = v;
                    row_arg = j;
                }
            }
            if row_arg > i {
                let d = row_arg - i;
                let value = (y[row_arg] - y[i]) * (-((d - 1) as f64) * beta).exp();
                if value > best {
                    best = value;
                    best_k = d - 1;
                }
            }
            if i > ilo {
                stack.push((ilo, i - 1, jlo, row_arg));
            }
            stack.push((i + 1, ihi, row_arg, jhi));
        }
        (best, best_k)
    }
}
