//! Goodness of fit of the population generators.

use dpamp::popgen::{gen_beta, gen_bimodal_beta_mix, gen_lognormal};
use dpamp::RngStream;
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, LogNormal};

const DRAWS: usize = 100_000;
const BINS: usize = 20;

/// Chi-square p-value for equiprobable bins defined by the quantiles of `dist`.
fn chi_square_p(values: &[f64], dist: &impl ContinuousCDF<f64, f64>) -> f64 {
    let mut counts = [0usize; BINS];
    for &x in values {
        let bin = ((dist.cdf(x) * BINS as f64) as usize).min(BINS - 1);
        counts[bin] += 1;
    }
    let expected = values.len() as f64 / BINS as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((BINS - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn beta_fits() {
    for (seed, a, b) in [(1, 2.0, 10.0), (2, 0.5, 0.5), (3, 5.0, 1.0)] {
        let pop = gen_beta(DRAWS, a, b, &mut RngStream::new(seed, 0)).unwrap();
        let p = chi_square_p(pop.values(), &Beta::new(a, b).unwrap());
        assert!(p > 0.001, "Beta({a}, {b}): p = {p}");
    }
}

#[test]
fn lognormal_fits() {
    let pop = gen_lognormal(DRAWS, 5.0, 0.5, &mut RngStream::new(4, 0)).unwrap();
    let p = chi_square_p(pop.values(), &LogNormal::new(5.0, 0.5).unwrap());
    assert!(p > 0.001, "p = {p}");
    assert!(pop.bounds().is_none());
}

#[test]
fn beta_mean_band() {
    // Beta(2, 10) has mean 1/6 and sd about 0.1038
    let pop = gen_beta(10_001, 2.0, 10.0, &mut RngStream::new(123, 0)).unwrap();
    let m = pop.stats().mean;
    assert!((m - 1.0 / 6.0).abs() < 5.0 * 0.1038 / 10_001f64.sqrt(), "mean {m}");
}

#[test]
fn lognormal_median_band() {
    // median e^5 = 148.41; sd of the sample median is about 1.2533 · 148.41 · 0.5 / sqrt(N)
    let pop = gen_lognormal(10_001, 5.0, 0.5, &mut RngStream::new(123, 0)).unwrap();
    let med = pop.stats().median;
    let tol = 5.0 * 1.2533 * 5f64.exp() * 0.5 / 10_001f64.sqrt();
    assert!((med - 5f64.exp()).abs() < tol, "median {med}");
}

#[test]
fn bimodal_structure() {
    for seed in 0..5 {
        let pop = gen_bimodal_beta_mix(10_001, &mut RngStream::new(seed, 0)).unwrap();
        let s = pop.sorted_values();
        assert_eq!(s[0], 0.0);
        assert_eq!(s[s.len() - 1], 1.0);
        let med = s[s.len() / 2];
        assert!((0.16..=0.26).contains(&med), "median {med}");
        let gap = s[s.len() / 2 + 1] - med;
        assert!(gap >= 0.15, "gap {gap}");
    }
}
