//! Synthetic populations: Beta, log-normal, and a two-component Beta mixture
//! with a gap above its median.
//!
//! Beta and log-normal draws come from `rand_distr`. Draw counts per value
//! vary with the rejection steps inside the Beta sampler, so each population
//! should be generated from its own stream.

use rand::Rng;
use rand_distr::{Beta, Distribution, LogNormal};

use crate::error::{Error, Result};
use crate::population::{Bounds, Population};
use crate::rng::RngStream;

fn beta_dist(a: f64, b: f64) -> Result<Beta<f64>> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::param(format!("Beta shapes must be positive and finite, got ({a}, {b})")));
    }
    Beta::new(a, b).map_err(|e| Error::param(format!("Beta({a}, {b}): {e}")))
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("population size must be at least 1"));
    }
    Ok(())
}

/// Draws from `dist`, redrawing the (measure-zero) values that land exactly
/// on a support endpoint in floating point.
fn draw_open_unit<R: Rng>(dist: &Beta<f64>, rng: &mut R) -> f64 {
    loop {
        let x = dist.sample(rng);
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

/// `n` i.i.d. Beta(a, b) values with bounds (0, 1).
pub fn gen_beta(n: usize, a: f64, b: f64, rng: &mut RngStream) -> Result<Population> {
    check_size(n)?;
    let dist = beta_dist(a, b)?;
    let values = (0..n).map(|_| draw_open_unit(&dist, rng)).collect();
    Population::new(values, Some(Bounds::new(0.0, 1.0)?), format!("beta(a={a}, b={b}, N={n})"))
}

/// `n` i.i.d. values of `exp(Normal(mu, sigma))`, without bounds.
pub fn gen_lognormal(n: usize, mu: f64, sigma: f64, rng: &mut RngStream) -> Result<Population> {
    check_size(n)?;
    if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
        return Err(Error::param(format!("log-normal needs finite mu and sigma > 0, got ({mu}, {sigma})")));
    }
    let dist = LogNormal::new(mu, sigma).map_err(|e| Error::param(e.to_string()))?;
    let values = (0..n).map(|_| dist.sample(rng)).collect();
    Population::new(values, None, format!("lognormal(mu={mu}, sigma={sigma}, N={n})"))
}

/// Bimodal population of odd size `n`.
///
/// `(n + 1) / 2` values of `Beta(2, 10) / 2` followed by `(n − 1) / 2` values
/// of `Beta(2, 10) + 1`, min–max rescaled onto `[0, 1]`. The first component
/// lies in `(0, 0.5)` and the second in `(1, 2)`, so the median is the largest
/// first-component value and nothing falls between the components.
pub fn gen_bimodal_beta_mix(n: usize, rng: &mut RngStream) -> Result<Population> {
    if n.is_multiple_of(2) {
        return Err(Error::EvenSize(n));
    }
    if n < 3 {
        return Err(Error::param("bimodal population needs at least 3 records"));
    }
    let dist = beta_dist(2.0, 10.0)?;
    let first = n.div_ceil(2);
    let mut values: Vec<f64> = (0..first).map(|_| draw_open_unit(&dist, rng) / 2.0).collect();
    values.extend((first..n).map(|_| draw_open_unit(&dist, rng) + 1.0));
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    for v in &mut values {
        *v = ((*v - lo) / (hi - lo)).clamp(0.0, 1.0);
    }
    Population::new(values, Some(Bounds::new(0.0, 1.0)?), format!("bimodal-beta-mix(N={n})"))
}
