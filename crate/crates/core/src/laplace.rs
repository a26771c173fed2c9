//! The Laplace distribution: inverse-CDF sampling, CDF and quantile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceParams {
    location: f64,
    scale: f64,
}

impl LaplaceParams {
    /// `scale = 0` is allowed and denotes a point mass at `location`.
    pub fn new(location: f64, scale: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::param(format!("Laplace location must be finite, got {location}")));
        }
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::param(format!("Laplace scale must be finite and nonnegative, got {scale}")));
        }
        Ok(LaplaceParams { location, scale })
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.scale * self.scale
    }
}

/// One Laplace draw from one uniform of `rng`.
pub fn laplace_sample(params: LaplaceParams, rng: &mut RngStream) -> f64 {
    laplace_from_uniform(params, rng.next_open01())
}

/// Maps a uniform `u` in (0, 1) to `location + scale * sign(u - 1/2) * ln(1 - 2|u - 1/2|)`.
///
/// The map is odd around `u = 1/2`, so `u` and `1 - u` give noise of equal
/// magnitude and opposite sign.
pub fn laplace_from_uniform(params: LaplaceParams, u: f64) -> f64 {
    if params.scale == 0.0 {
        return params.location;
    }
    let c = u - 0.5;
    params.location + params.scale * c.signum() * (-2.0 * c.abs()).ln_1p()
}

/// CDF. With `scale = 0` this is the step function of the point mass.
pub fn laplace_cdf(x: f64, params: LaplaceParams) -> f64 {
    let LaplaceParams { location, scale } = params;
    if scale == 0.0 {
        return if x < location { 0.0 } else { 1.0 };
    }
    if x < location {
        0.5 * ((x - location) / scale).exp()
    } else {
        1.0 - 0.5 * (-(x - location) / scale).exp()
    }
}

/// Quantile function. Requires `0 < p < 1`.
pub fn laplace_quantile(p: f64, params: LaplaceParams) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let LaplaceParams { location, scale } = params;
    if p < 0.5 {
        Ok(location + scale * (2.0 * p).ln())
    } else {
        Ok(location - scale * (-2.0 * (p - 0.5)).ln_1p())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn degenerate_scale_returns_location() {
        let p = LaplaceParams::new(3.7, 0.0).unwrap();
        let mut rng = RngStream::new(1, 1);
        assert_eq!(laplace_sample(p, &mut rng), 3.7);
        assert_eq!(laplace_cdf(3.69, p), 0.0);
        assert_eq!(laplace_cdf(3.7, p), 1.0);
    }

    #[test]
    fn midpoint_uniform_gives_location() {
        let p = LaplaceParams::new(0.0, 2.0).unwrap();
        assert_eq!(laplace_from_uniform(p, 0.5), 0.0);
    }

    #[test]
    fn cdf_anchors() {
        let p = LaplaceParams::new(1.5, 0.7).unwrap();
        assert_eq!(laplace_cdf(1.5, p), 0.5);
        assert_abs_diff_eq!(laplace_cdf(1.5 + 0.7 * 2f64.ln(), p), 0.75, epsilon = 1e-15);
        assert_eq!(laplace_cdf(f64::NEG_INFINITY, p), 0.0);
        assert_eq!(laplace_cdf(f64::INFINITY, p), 1.0);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(LaplaceParams::new(0.0, -1.0).is_err());
        assert!(LaplaceParams::new(f64::NAN, 1.0).is_err());
        assert!(LaplaceParams::new(0.0, f64::INFINITY).is_err());
        let p = LaplaceParams::new(0.0, 1.0).unwrap();
        assert!(laplace_quantile(0.0, p).is_err());
        assert!(laplace_quantile(1.0, p).is_err());
    }

    #[test]
    fn empirical_moments() {
        let b = 1.3;
        let p = LaplaceParams::new(0.0, b).unwrap();
        let mut rng = RngStream::new(2024, 0);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| laplace_sample(p, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 5.0 * b / (n as f64).sqrt(), "mean {mean}");
        assert!((var / (2.0 * b * b) - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn sample_is_reflected_quantile() {
        let p = LaplaceParams::new(-2.0, 0.4).unwrap();
        for &u in &[0.01, 0.2, 0.49, 0.51, 0.8, 0.999] {
            let direct = laplace_from_uniform(p, u);
            let via_quantile = laplace_quantile(1.0 - u, p).unwrap();
            assert_abs_diff_eq!(direct, via_quantile, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cdf_inverts_quantile(p in 1e-9f64..(1.0 - 1e-9), loc in -50.0f64..50.0, scale in 1e-3f64..10.0) {
            let params = LaplaceParams::new(loc, scale).unwrap();
            let x = laplace_quantile(p, params).unwrap();
            prop_assert!((laplace_cdf(x, params) - p).abs() < 1e-12);
        }

        #[test]
        fn cdf_is_monotone(a in -100.0f64..100.0, d in 0.0f64..10.0, scale in 1e-3f64..10.0) {
            let params = LaplaceParams::new(0.0, scale).unwrap();
            prop_assert!(laplace_cdf(a, params) <= laplace_cdf(a + d, params));
        }

        #[test]
        fn reflected_uniform_negates_noise(k in 0u64..(1u64 << 52), scale in 1e-3f64..10.0) {
            let params = LaplaceParams::new(0.0, scale).unwrap();
            let u = ((2 * k + 1) as f64) / (1u64 << 53) as f64;
            prop_assert_eq!(laplace_from_uniform(params, u), -laplace_from_uniform(params, 1.0 - u));
        }
    }
}
