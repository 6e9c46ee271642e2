//! Peak-centred coordinates for integrals against `e^{tx} p(x)`.
//!
//! Writing `x = x0 + y` with `h(x0) = t`, the log-integrand becomes
//! `ℓ(y) = (t − h(x0))·y − R(x0, y) + q(x0+y) − q(x0)` where `R` is the
//! second-order Taylor remainder of `g`. `ℓ(0) = 0` and no large terms cancel,
//! so moments of the tilted law stay accurate even when `t·x0` is huge.

use crate::density::Potential;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_vec, QuadOptions};
use crate::roots::newton_bisect;

/// Cut-off for the log-integrand relative to the peak, `e^{-700} < 1e-300`.
pub(crate) const LOG_CUTOFF: f64 = -700.0;

#[derive(Debug, Clone)]
pub(crate) struct TiltFrame {
    potential: Potential,
    t: f64,
    x0: f64,
    slope: f64,
    q0: f64,
    g0: f64,
    boundary: bool,
    scale: f64,
    y_lo: f64,
    y_hi: f64,
}

/// Mass and central moments of `e^{ℓ(y)}` on the frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FrameMoments {
    pub log_mass: f64,
    pub mean_offset: f64,
    pub variance: f64,
    pub mu3: f64,
}

fn frame_options() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_panels: 6000,
    }
}

impl TiltFrame {
    pub(crate) fn new(potential: &Potential, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tilt must be finite, got {t}"
            )));
        }
        let g = &potential.g;
        let h = |x: f64| g.derivative(x, 1);
        let h0 = h(0.0);
        let g_at0 = g.value(0.0);
        let (x0, boundary) = if h0 >= t && g_at0.is_finite() {
            (0.0, true)
        } else {
            let mut hi = 1.0f64;
            let mut iter = 0;
            while !(h(hi) > t) {
                hi *= 2.0;
                iter += 1;
                if iter > 1100 || !hi.is_finite() {
                    return Err(Error::Divergent(format!(
                        "no peak for tilt {t}: g is not superlinear"
                    )));
                }
            }
            let mut lo = 0.0;
            if hi > 1.0 {
                lo = hi / 2.0;
            } else {
                // shrink toward zero while h stays above t
                let mut x = hi;
                for _ in 0..1100 {
                    let half = x / 2.0;
                    if half <= 0.0 {
                        break;
                    }
                    if h(half) > t {
                        x = half;
                    } else {
                        lo = half;
                        break;
                    }
                }
                hi = x;
                if lo == 0.0 {
                    if g_at0.is_finite() {
                        // peak numerically at the origin
                        return Self::finish(potential, t, 0.0, true);
                    }
                    return Err(Error::Divergent(format!(
                        "peak for tilt {t} collapses onto 0"
                    )));
                }
            }
            let x = newton_bisect(
                |x| Ok((h(x) - t, g.derivative(x, 2))),
                lo,
                hi,
                0.5 * (lo + hi),
                1e-15,
                500,
            )?;
            (x, false)
        };
        Self::finish(potential, t, x0, boundary)
    }

    fn finish(potential: &Potential, t: f64, x0: f64, boundary: bool) -> Result<Self> {
        let g = &potential.g;
        let slope = t - g.derivative(x0, 1);
        let curvature = g.derivative(x0, 2);
        let mut scale = if curvature.is_finite() && curvature > 0.0 {
            1.0 / curvature.sqrt()
        } else {
            1.0
        };
        if boundary && slope < 0.0 {
            scale = scale.min(1.0 / -slope);
        }
        if x0 > 0.0 {
            scale = scale.min(x0.max(f64::MIN_POSITIVE) * 0.5).max(x0 * 1e-12);
        }
        let mut frame = TiltFrame {
            potential: potential.clone(),
            t,
            x0,
            slope,
            q0: potential.q.value(x0),
            g0: g.value(x0),
            boundary,
            scale,
            y_lo: 0.0,
            y_hi: 0.0,
        };
        frame.locate_window()?;
        Ok(frame)
    }

    fn locate_window(&mut self) -> Result<()> {
        let mut y = self.scale;
        let mut iter = 0;
        while self.log_weight(y) > LOG_CUTOFF {
            y *= 2.0;
            iter += 1;
            if iter > 1100 || !y.is_finite() {
                return Err(Error::Divergent(format!(
                    "tilted integrand at t = {} does not decay",
                    self.t
                )));
            }
        }
        self.y_hi = y;
        if self.x0 == 0.0 {
            self.y_lo = 0.0;
        } else {
            let mut y = -self.scale;
            while y > -self.x0 && self.log_weight(y) > LOG_CUTOFF {
                y *= 2.0;
            }
            self.y_lo = y.max(-self.x0);
        }
        Ok(())
    }

    pub(crate) fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn x0(&self) -> f64 {
        self.x0
    }

    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    /// `t·x0 − g(x0) + q(x0)`: log of the integrand at the peak.
    pub(crate) fn anchor(&self) -> f64 {
        self.t * self.x0 - self.g0 + self.q0
    }

    /// Integration window in `y` beyond which the integrand is below `e^{-700}`.
    pub(crate) fn window(&self) -> (f64, f64) {
        (self.y_lo, self.y_hi)
    }

    /// `ℓ(y)`, with `−∞` outside `y ≥ −x0` and for undefined values.
    pub(crate) fn log_weight(&self, y: f64) -> f64 {
        let x = self.x0 + y;
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        let g = &self.potential.g;
        let dg = if self.boundary {
            g.value(x) - self.g0 - (self.t - self.slope) * y
        } else {
            g.remainder(self.x0, y)
        };
        let v = self.slope * y - dg + self.potential.q.value(x) - self.q0;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    /// Breakpoints on a geometric ladder around the peak.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.y_lo, 0.0, self.y_hi];
        let mut s = self.scale;
        while s < self.y_hi {
            pts.push(s);
            s *= 2.0;
        }
        let mut s = -self.scale;
        while s > self.y_lo {
            pts.push(s);
            s *= 2.0;
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Breakpoints restricted to `[lo, hi]` in `y` coordinates.
    pub(crate) fn breakpoints_within(&self, lo: f64, hi: f64) -> Vec<f64> {
        let lo = lo.max(self.y_lo);
        let hi = hi.min(self.y_hi);
        if !(lo < hi) {
            return Vec::new();
        }
        let mut pts: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .filter(|&y| y > lo && y < hi)
            .collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts
    }

    pub(crate) fn moments(&self) -> Result<FrameMoments> {
        let f = |y: f64| {
            let w = self.log_weight(y).exp();
            [w, y * w, y * y * w, y * y * y * w]
        };
        let r = integrate_vec(&f, &self.breakpoints(), frame_options())?;
        let z = r.value[0];
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::QuadratureFail(format!(
                "tilted mass {z} at t = {}",
                self.t
            )));
        }
        if !r.converged {
            return Err(Error::QuadratureFail(format!(
                "tilted moments did not converge at t = {}",
                self.t
            )));
        }
        let m1 = r.value[1] / z;
        let m2 = r.value[2] / z;
        let m3 = r.value[3] / z;
        let variance = m2 - m1 * m1;
        let mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
        let mut out = FrameMoments {
            log_mass: z.ln(),
            mean_offset: m1,
            variance,
            mu3,
        };
        // A second pass centred at the mean removes the cancellation in the
        // raw-moment formulas when the peak and the mean differ.
        if m1.abs() > 1e-3 * variance.sqrt() {
            let c = m1;
            let g = |y: f64| {
                let w = self.log_weight(y).exp();
                let d = y - c;
                [d * w, d * d * w, d * d * d * w]
            };
            let r2 = integrate_vec(&g, &self.breakpoints(), frame_options())?;
            let d1 = r2.value[0] / z;
            let d2 = r2.value[1] / z;
            let d3 = r2.value[2] / z;
            out.mean_offset = c + d1;
            out.variance = d2 - d1 * d1;
            out.mu3 = d3 - 3.0 * d1 * d2 + 2.0 * d1 * d1 * d1;
        }
        if !(out.variance > 0.0) {
            return Err(Error::QuadratureFail(format!(
                "non-positive tilted variance at t = {}",
                self.t
            )));
        }
        Ok(out)
    }

    /// `∫_{lo}^{hi} e^{ℓ(y)} dy` over `y` coordinates, unnormalised.
    pub(crate) fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        let pts = self.breakpoints_within(lo, hi);
        if pts.len() < 2 {
            return Ok(0.0);
        }
        let f = |y: f64| [self.log_weight(y).exp()];
        let r = integrate_vec(
            &f,
            &pts,
            QuadOptions {
                rel_tol: 1e-12,
                abs_tol: 1e-17,
                max_panels: 4000,
            },
        )?;
        Ok(r.value[0])
    }
}
