//! Bracketing bisection for monotone scalar maps on the positive half-line.

use crate::error::{Error, Result};

pub const MAX_STEPS: usize = 200;

/// Outcome of a monotone root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Finds `x > 0` with `f(x) == target` for a strictly monotone `f`.
///
/// The initial bracket is `[1e-12, 1]`. Its upper end doubles (and its
/// lower end halves) until the bracket straddles the target; bisection then
/// runs on the geometric midpoint, so the search is scale free. The search
/// stops when the bracket collapses to adjacent floats; the final relative
/// residual must not exceed `rel_tol`.
pub fn solve_monotone<F>(f: F, target: f64, increasing: bool, rel_tol: f64) -> Result<Root>
where
    F: Fn(f64) -> f64,
{
    if !(target.is_finite()) {
        return Err(Error::Domain(format!("target {target} is not finite")));
    }
    // g(x) < 0 below the root and > 0 above it, independent of direction.
    let g = |x: f64| {
        let v = f(x) - target;
        if increasing {
            v
        } else {
            -v
        }
    };
    let tol = rel_tol * target.abs();

    let mut lo = 1e-12_f64;
    let mut hi = 1.0_f64;
    let mut expansions = 0usize;
    while g(hi) < 0.0 {
        hi *= 2.0;
        expansions += 1;
        if !hi.is_finite() || expansions > 4096 {
            return Err(Error::Solver {
                iterations: expansions,
                residual: g(hi / 2.0).abs(),
            });
        }
    }
    while g(lo) > 0.0 {
        lo *= 0.5;
        expansions += 1;
        if lo == 0.0 || expansions > 4096 {
            return Err(Error::Solver {
                iterations: expansions,
                residual: g(lo * 2.0).abs(),
            });
        }
    }
    if lo >= hi {
        lo = hi * 0.5;
    }

    let mut best = (hi, g(hi));
    for step in 1..=MAX_STEPS {
        let mid = (lo * hi).sqrt();
        let mid = if mid > lo && mid < hi {
            mid
        } else {
            0.5 * (lo + hi)
        };
        let gm = g(mid);
        if gm.abs() < best.1.abs() {
            best = (mid, gm);
        }
        if gm.abs() <= tol * 1e-3 || mid <= lo || mid >= hi {
            return finish(&f, best.0, step, tol, target);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            return finish(&f, best.0, step, tol, target);
        }
    }
    finish(&f, best.0, MAX_STEPS, tol, target)
}

fn finish<F: Fn(f64) -> f64>(
    f: &F,
    x: f64,
    iterations: usize,
    tol: f64,
    target: f64,
) -> Result<Root> {
    let value = f(x);
    let residual = (value - target).abs();
    if residual > tol {
        return Err(Error::Solver {
            iterations,
            residual,
        });
    }
    Ok(Root {
        x,
        value,
        iterations,
    })
}
