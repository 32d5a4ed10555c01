//! Bracketed scalar root finding: bisection to tolerance, then a short
//! Newton (or false-position) polish that is only kept when it lowers the
//! residual and stays inside the final bracket.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Bracket width at which bisection stops, relative to `max(1, |x|)`.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Newton polish steps after bisection.
    pub polish_steps: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { x_tol: 1e-12, max_iter: 200, polish_steps: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub x: f64,
    /// `|f(x)|` at the returned point.
    pub residual: f64,
    /// Final bracket.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Bisection on `[lo, hi]`; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F>(f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    solve(f, None::<fn(f64) -> f64>, lo, hi, opts)
}

/// Bisection followed by Newton polish using the analytic derivative `df`.
pub fn bisect_newton<F, D>(f: F, df: D, lo: f64, hi: f64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    solve(f, Some(df), lo, hi, opts)
}

fn solve<F, D>(mut f: F, mut df: Option<D>, lo: f64, hi: f64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NonConvergence(format!("function is NaN at the bracket [{lo}, {hi}]")));
    }
    if f_lo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, bracket: (lo, lo), iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0, bracket: (hi, hi), iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }
    let mut f_hi = f_hi;

    let mut iterations = 0;
    while iterations < opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= opts.x_tol * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(Root { x: mid, residual: 0.0, bracket: (mid, mid), iterations });
        }
        if f_mid.is_nan() {
            return Err(Error::NonConvergence(format!("function is NaN at {mid}")));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if iterations >= opts.max_iter && hi - lo > opts.x_tol * (0.5 * (lo + hi)).abs().max(1.0) {
        return Err(Error::NonConvergence(format!(
            "bisection hit {} iterations with bracket [{lo}, {hi}]",
            opts.max_iter
        )));
    }

    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    // keep whichever endpoint is closer to zero if the midpoint is worse
    for (cand, f_cand) in [(lo, f_lo), (hi, f_hi)] {
        if f_cand.abs() < fx.abs() {
            x = cand;
            fx = f_cand;
        }
    }

    match df.as_mut() {
        Some(df) => {
            for _ in 0..opts.polish_steps {
                if fx == 0.0 {
                    break;
                }
                let slope = df(x);
                if !slope.is_finite() || slope == 0.0 {
                    break;
                }
                let next = x - fx / slope;
                if !(next >= lo && next <= hi) {
                    break;
                }
                let f_next = f(next);
                if f_next.abs() < fx.abs() {
                    x = next;
                    fx = f_next;
                } else {
                    break;
                }
            }
        }
        None => {
            if f_hi != f_lo {
                let next = lo - f_lo * (hi - lo) / (f_hi - f_lo);
                if next > lo && next < hi {
                    let f_next = f(next);
                    if f_next.abs() < fx.abs() {
                        x = next;
                        fx = f_next;
                    }
                }
            }
        }
    }

    Ok(Root { x, residual: fx.abs(), bracket: (lo, hi), iterations })
}
