//! Bracketed scalar root finding and one-dimensional maximisation.

use crate::error::{Error, Result};

/// Newton's method safeguarded by bisection on a sign-changing bracket.
///
/// `f` returns `(value, derivative)`. The bracket `[lo, hi]` must satisfy
/// `f(lo) <= 0 <= f(hi)` (increasing orientation, which is what every caller
/// in this crate needs). Iteration stops once the bracket width falls below
/// `x_tol * max(|x|, 1e-300)` or the residual is exactly zero.
pub fn newton_bisect<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    if !(lo < hi) {
        return Err(Error::BracketFail(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut x = if x0 > lo && x0 < hi {
        x0
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..max_iter {
        let (fx, dfx) = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= x_tol * x.abs().max(1e-300) {
            return Ok(x);
        }
        let newton = if dfx.is_finite() && dfx > 0.0 {
            x - fx / dfx
        } else {
            f64::NAN
        };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 0.25 * x_tol * x.abs().max(1e-300) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Plain bisection for an increasing function, used where no derivative exists.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(Error::BracketFail(format!("empty bracket [{lo}, {hi}]")));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol * mid.abs().max(1e-300) {
            return Ok(mid);
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
///
/// Returns `(argmax, max)`.
pub fn golden_max<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..max_iter {
        if (hi - lo).abs() <= x_tol * (c.abs() + d.abs()).max(1e-300) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_cube_root() {
        let r = newton_bisect(
            |x| Ok((x * x * x - 2.0, 3.0 * x * x)),
            0.0,
            2.0,
            1.0,
            1e-15,
            200,
        )
        .unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn newton_survives_zero_derivative() {
        // Derivative vanishes at the start point; bisection must take over.
        let r = newton_bisect(|x| Ok((x.powi(3), 0.0)), -1.0, 3.0, 0.5, 1e-12, 500).unwrap();
        assert!(r.abs() < 1e-4);
    }

    #[test]
    fn golden_section_locates_parabola_peak() {
        let (x, v) = golden_max(|x| Ok(-(x - 1.3).powi(2) + 4.0), -5.0, 5.0, 1e-12, 500).unwrap();
        assert!((x - 1.3).abs() < 1e-6);
        assert!((v - 4.0).abs() < 1e-12);
    }
}
