//! Bracketed scalar root finding.

use crate::error::{Error, Result};

pub const SCAN_POINTS: usize = 10_000;
pub const INTERVAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    /// Number of sign changes seen on the scan grid.
    pub brackets: usize,
}

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Rightmost root of `f` on `[lo, hi]`: scans `SCAN_POINTS` grid points for
/// sign changes and bisects the last bracket.
pub fn rightmost_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, what: &str) -> Result<Root> {
    let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let x_at = |k: usize| if k == SCAN_POINTS - 1 { hi } else { lo + k as f64 * h };
    let mut brackets = 0;
    let mut last = None;
    let mut prev_x = x_at(0);
    let mut prev_f = f(prev_x);
    for k in 1..SCAN_POINTS {
        let x = x_at(k);
        let fx = f(x);
        if prev_f == 0.0 || ((prev_f < 0.0) != (fx < 0.0) && fx != 0.0) {
            brackets += 1;
            last = Some((prev_x, x));
        } else if fx == 0.0 && k == SCAN_POINTS - 1 {
            brackets += 1;
            last = Some((x, x));
        }
        prev_x = x;
        prev_f = fx;
    }
    let (a, b) = last.ok_or_else(|| Error::NoSolution(format!("{what}: no sign change on [{lo}, {hi}]")))?;
    let x = if a == b { a } else { bisect(&f, a, b, INTERVAL_TOL) };
    Ok(Root {
        x,
        residual: f(x).abs(),
        brackets,
    })
}
