//! Bracketed scalar searches used for parameter inference.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_BISECTION_ITERS: usize = 200;

/// Finds `x ∈ [lo, hi]` with `|f(x)| < tol` for an `f` that changes sign on
/// the bracket. Endpoints that already satisfy the tolerance are returned.
pub fn bisect<T, F>(mut f: F, mut lo: T, mut hi: T, tol: T, max_iter: usize) -> Result<T>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    let mut f_lo = f(lo)?;
    if f_lo.abs() < tol {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi.abs() < tol {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::TargetOutOfRange {
            target: 0.0,
            lo: f_lo.to_f64_lossy(),
            hi: f_hi.to_f64_lossy(),
        });
    }
    let two = T::lit(2.0);
    for _ in 0..max_iter {
        let mid = lo + (hi - lo) / two;
        let f_mid = f(mid)?;
        if f_mid.abs() < tol {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            // bracket exhausted at machine precision
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(max_iter))
}

/// Largest `x` in `[lo, hi]` (to within `iters` halvings) for which the
/// monotone predicate still holds; `pred(lo)` is assumed true.
pub fn last_true<T: Scalar>(mut pred: impl FnMut(T) -> bool, mut lo: T, mut hi: T, iters: usize) -> T {
    if pred(hi) {
        return hi;
    }
    let two = T::lit(2.0);
    for _ in 0..iters {
        let mid = lo + (hi - lo) / two;
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(x_min, f(x_min))`; stops when the bracket is narrower than `tol`.
pub fn golden_section_min<T: Scalar>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    // compare against the endpoints so boundary minima are not missed
    let mid = (lo + hi) / T::lit(2.0);
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .fold((mid, T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let x = bisect(|x: f64| Ok(x * x - 2.0), 0.0, 2.0, 1e-12, 200).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisect_requires_bracket() {
        assert!(matches!(
            bisect(|x: f64| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 200),
            Err(Error::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn bisect_reports_unreachable_tolerance() {
        // step function: sign change but |f| never small
        let r = bisect(|x: f64| Ok(if x < 0.3 { -1.0 } else { 1.0 }), 0.0, 1.0, 1e-3, 50);
        assert!(matches!(r, Err(Error::NoConvergence(50))));
    }

    #[test]
    fn last_true_threshold() {
        let x = last_true(|x: f64| x < 0.7, 0.0, 1.0, 60);
        assert!((x - 0.7).abs() < 1e-12);
    }

    #[test]
    fn golden_interior_and_boundary() {
        let (x, _) = golden_section_min(|x: f64| (x - 0.2).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.2).abs() < 1e-8);
        let (x, _) = golden_section_min(|x: f64| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 0.0);
    }
}
