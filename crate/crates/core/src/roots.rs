//! Bracketing root finder.

use crate::error::{Error, Result};

/// Bisection for a root of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `abs_tol` or after `max_iter`
/// halvings. Returns the final bracket `(a, b)` with `f(a)` and `f(b)` of
/// opposite sign (or one of them zero), so callers can pick the side they
/// need.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, abs_tol: f64, max_iter: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param(format!("invalid bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok((a, a));
    }
    if fb == 0.0 {
        return Ok((b, b));
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let a_positive = fa > 0.0;
    for _ in 0..max_iter {
        if b - a <= abs_tol {
            break;
        }
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, mid));
        }
        if (fm > 0.0) == a_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let (a, b) = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!(a <= 2f64.sqrt() && 2f64.sqrt() <= b);
        assert!(b - a <= 1e-14);
    }

    #[test]
    fn decreasing_function() {
        let (a, b) = bisect(|x| 1.0 - x, -3.0, 5.0, 1e-12, 200).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_root_at_endpoint() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 1e-12, 10).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rejects_same_sign() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9, 100), Err(Error::NoSignChange { .. })));
        assert!(bisect(|x| x, 1.0, 0.0, 1e-9, 100).is_err());
    }
}
