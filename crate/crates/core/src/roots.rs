//! Bracketed scalar root finding.

use crate::scalar::Real;

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs
/// (or one is zero). Stops when the bracket width is at most
/// `rel_tol · max(1, |mid|)` or after `max_iter` halvings.
pub fn bisect<T: Real>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T, rel_tol: T, max_iter: usize) -> T {
    let mut f_lo = f(lo);
    if f_lo == T::zero() {
        return lo;
    }
    if f(hi) == T::zero() {
        return hi;
    }
    let two = T::one() + T::one();
    for _ in 0..max_iter {
        let mid = lo + (hi - lo) / two;
        if hi - lo <= rel_tol * T::one().max(mid.abs()) || mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == T::zero() {
            return mid;
        }
        if (f_mid < T::zero()) == (f_lo < T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) / two
}

/// Smallest/largest point found by stepping away from `start` with offsets
/// `step, 2·step, 4·step, …` until `f` takes the sign `want_positive`.
/// Returns `None` after `max_doublings` attempts.
pub fn expand_until_sign<T: Real>(
    mut f: impl FnMut(T) -> T,
    start: T,
    step: T,
    want_positive: bool,
    max_doublings: usize,
) -> Option<T> {
    let mut offset = step;
    for _ in 0..max_doublings {
        let x = start + offset;
        let v = f(x);
        if v.is_finite() && (v > T::zero()) == want_positive && v != T::zero() {
            return Some(x);
        }
        offset = offset + offset;
    }
    None
}
