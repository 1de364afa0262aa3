//! Bracketed scalar root finding.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}] (f = {flo}, {fhi})")]
    NoBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("non-finite function value at x = {x}")]
    NonFinite { x: f64 },
}

/// Bisection on a sign change of `f` in `[lo, hi]`.
///
/// Stops once the bracket is narrower than `x_tol` or cannot shrink further.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, x_tol: T) -> Result<T, RootError> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a.as_f64() });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b.as_f64() });
    }
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(RootError::NoBracket { lo: a.as_f64(), hi: b.as_f64(), flo: fa.as_f64(), fhi: fb.as_f64() });
    }
    let a_neg = fa < T::zero();
    let half = T::lit(0.5);
    for _ in 0..2000 {
        let m = a + (b - a) * half;
        if (b - a).abs() <= x_tol || m <= a.min(b) || m >= a.max(b) {
            return Ok(m);
        }
        let fm = f(m);
        if !fm.is_finite() {
            return Err(RootError::NonFinite { x: m.as_f64() });
        }
        if fm == T::zero() {
            return Ok(m);
        }
        if (fm < T::zero()) == a_neg {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a + (b - a) * half)
}
