//! The dataset every statistic and sensitivity is computed on.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard support bounds `[lower, upper]` with `lower < upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidPopulation(format!(
                "bounds must be finite with lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Population {
    values: Vec<f64>,
    bounds: Option<Bounds>,
    label: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PopulationStats {
    pub mean: f64,
    pub median: f64,
    /// Variance with the `N - 1` denominator (zero when `N = 1`).
    pub variance: f64,
}

impl Population {
    pub fn new(values: Vec<f64>, bounds: Option<Bounds>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPopulation("population is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPopulation(format!("value at index {i} is not finite ({})", values[i])));
        }
        if let Some(b) = bounds {
            if let Some(i) = values.iter().position(|&v| !b.contains(v)) {
                return Err(Error::InvalidPopulation(format!(
                    "value {} at index {i} lies outside bounds [{}, {}]",
                    values[i], b.lower, b.upper
                )));
            }
        }
        Ok(Population { values, bounds, label: label.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a population holds at least one record.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    /// `upper - lower` if bounds are present.
    pub fn range(&self) -> Option<f64> {
        self.bounds.map(|b| b.range())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// A sorted copy of the values; the population itself is never reordered.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// A copy of `self` with a subset of records, inheriting the bounds.
    pub fn subset(&self, indices: &[usize], label: impl Into<String>) -> Population {
        Population {
            values: indices.iter().map(|&i| self.values[i]).collect(),
            bounds: self.bounds,
            label: label.into(),
        }
    }

    pub fn stats(&self) -> PopulationStats {
        population_stats(self)
    }

    /// Reads a single-column CSV. Lines starting with `#` are comments, and a
    /// non-numeric first row is treated as a header.
    pub fn load_csv(path: impl AsRef<Path>, bounds: Option<Bounds>) -> Result<Population> {
        let path = path.as_ref();
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let field = record.get(0).unwrap_or("");
            match field.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if row == 0 => continue,
                Err(_) => {
                    return Err(Error::InvalidPopulation(format!(
                        "{}: row {} is not a number: {field:?}",
                        path.display(),
                        row + 1
                    )))
                }
            }
        }
        Population::new(values, bounds, path.display().to_string())
    }
}

/// Mean, median and `N - 1`-denominator variance.
///
/// The median of an even-sized population is the midpoint of the two central
/// order statistics.
pub fn population_stats(pop: &Population) -> PopulationStats {
    let sorted = pop.sorted_values();
    stats_of_sorted(&sorted)
}

pub(crate) fn stats_of_sorted(sorted: &[f64]) -> PopulationStats {
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let variance =
        if n > 1 { sorted.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    PopulationStats { mean, median: median_of_sorted(sorted), variance }
}

pub(crate) fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub(crate) fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
