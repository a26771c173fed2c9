use serde::{Deserialize, Serialize};

use super::protocol::{Release, ReplicateRecord};

/// Summary of one cell over all replicates. Every field is a function of the
/// per-replicate records of the cell and of the population cell with the same
/// target ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub release: Release,
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub population_size: usize,
    pub rate: f64,
    pub eps_n: f64,
    pub delta_n: f64,
    pub replicates: usize,
    pub true_value: f64,
    /// Mean of `(noisy − true_value)^2`.
    pub mse: f64,
    pub log_mse: f64,
    /// Mean of `2 · noise_scale^2`.
    pub expected_noise_variance: f64,
    /// Variance (T − 1 denominator) of the raw statistic.
    pub raw_variance: f64,
    pub noisy_variance: f64,
    pub noise_variance: f64,
    pub mean_sensitivity: f64,
    /// Quantiles of `sensitivity / population sensitivity` within a replicate.
    pub sensitivity_ratio_q10: f64,
    pub sensitivity_ratio_q50: f64,
    pub sensitivity_ratio_q90: f64,
    /// Share of replicates with a sensitivity ratio below one.
    pub sensitivity_ratio_below_one: f64,
    pub abs_noise_q50: f64,
    pub abs_noise_q90: f64,
}

/// Linear-interpolation quantile of sorted data (the `(T − 1) p` rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn quantiles(mut v: Vec<f64>, ps: &[f64]) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    ps.iter().map(|&p| quantile_sorted(&v, p)).collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Two-pass variance with the `T − 1` denominator; NaN for a single value.
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v.iter().copied());
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Aggregates for `cells_per_replicate` cells, from records laid out
/// replicate by replicate.
pub fn aggregate(records: &[ReplicateRecord], cells_per_replicate: usize) -> Vec<Aggregate> {
    if cells_per_replicate == 0 || records.is_empty() {
        return Vec::new();
    }
    let t_count = records.len() / cells_per_replicate;
    let cell =
        |c: usize| -> Vec<&ReplicateRecord> { (0..t_count).map(|t| &records[t * cells_per_replicate + c]).collect() };
    let mut out = Vec::with_capacity(cells_per_replicate);
    let mut pop_sens: Vec<f64> = Vec::new();
    for c in 0..cells_per_replicate {
        let rs = cell(c);
        let first = rs[0];
        if first.release == Release::Population {
            pop_sens = rs.iter().map(|r| r.sensitivity).collect();
        }
        let ratios: Vec<f64> = rs.iter().zip(&pop_sens).map(|(r, &p)| r.sensitivity / p).collect();
        let rq = quantiles(ratios.clone(), &[0.1, 0.5, 0.9]);
        let aq = quantiles(rs.iter().map(|r| r.noise.abs()).collect(), &[0.5, 0.9]);
        let mse = mean(rs.iter().map(|r| (r.noisy - r.true_value).powi(2)));
        out.push(Aggregate {
            release: first.release,
            epsilon: first.epsilon,
            delta: first.delta,
            n: first.n,
            population_size: first.population_size,
            rate: first.rate,
            eps_n: first.eps_n,
            delta_n: first.delta_n,
            replicates: rs.len(),
            true_value: first.true_value,
            mse,
            log_mse: mse.ln(),
            expected_noise_variance: mean(rs.iter().map(|r| 2.0 * r.noise_scale * r.noise_scale)),
            raw_variance: variance(&rs.iter().map(|r| r.raw).collect::<Vec<_>>()),
            noisy_variance: variance(&rs.iter().map(|r| r.noisy).collect::<Vec<_>>()),
            noise_variance: variance(&rs.iter().map(|r| r.noise).collect::<Vec<_>>()),
            mean_sensitivity: mean(rs.iter().map(|r| r.sensitivity)),
            sensitivity_ratio_q10: rq[0],
            sensitivity_ratio_q50: rq[1],
            sensitivity_ratio_q90: rq[2],
            sensitivity_ratio_below_one: ratios.iter().filter(|&&x| x < 1.0).count() as f64 / ratios.len() as f64,
            abs_noise_q50: aq[0],
            abs_noise_q90: aq[1],
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_rule() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert!((quantile_sorted(&v, 0.1) - 1.3).abs() < 1e-15);
        assert_eq!(quantile_sorted(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn variance_rule() {
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
        assert!(variance(&[1.0]).is_nan());
    }
}
