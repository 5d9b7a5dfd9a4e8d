//! Bracketed scalar root finding (Illinois-modified regula falsi with a
//! bisection fallback).

/// Finds a root of `f` in `[lo, hi]` given `f(lo) < 0 < f(hi)` (or the
/// reverse). Stops when `|f| ≤ f_tol` or the bracket is below `x_tol`.
/// The caller is responsible for the sign change.
pub fn solve_bracketed(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
    x_tol: f64,
) -> f64 {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return lo;
    }
    if f_hi == 0.0 {
        return hi;
    }
    let mut side = 0i8;
    let mut x = 0.5 * (lo + hi);
    for it in 0..400 {
        x = if it % 4 == 3 {
            // periodic bisection guarantees bracket shrinkage
            0.5 * (lo + hi)
        } else {
            let c = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if c > lo.min(hi) && c < lo.max(hi) {
                c
            } else {
                0.5 * (lo + hi)
            }
        };
        let fx = f(x);
        if fx.abs() <= f_tol || (hi - lo).abs() <= x_tol {
            return x;
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    x
}
