//! Exact and second-order reference densities for the first coordinate under the point constraint.

use serde::Serialize;

use super::tv::Reference;
use crate::density::LightTailDensity;
use crate::edgeworth::{convolve_oracle, ConvolutionTable, GridSpec};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::tilt::TiltedDensity;

const PANELS: usize = 128;

fn opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-300,
        ..Default::default()
    }
}

fn panel_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Ok(0.0);
    }
    let w = (hi - lo) / PANELS as f64;
    let mut acc = 0.0;
    for i in 0..PANELS {
        let a = lo + i as f64 * w;
        acc += integrate(&f, a, a + w, opts())?.0;
    }
    Ok(acc)
}

/// Density of `X₁` given `S₁ⁿ = n·a`, from an FFT table of the standardised `(n−1)`-fold tilted sum.
///
/// Under the tilt with mean `a`, `p_a(y) ∝ π(y)·ρ_{n−1}((a − y)/(s√(n−1)))`
/// where `ρ_{n−1}` is the density of the standardised sum of `n − 1` tilted
/// variables. The constant is fixed by quadrature. At `n = 2` the factor is
/// `π(2a − y)` itself.
#[derive(Debug, Clone)]
pub struct ExactPointMarginal {
    tilted: TiltedDensity,
    n: usize,
    table: Option<ConvolutionTable>,
    log_norm: f64,
    window: (f64, f64),
}

/// Scalar summary of an [`ExactPointMarginal`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExactMarginalSummary {
    pub n: usize,
    pub a_n: f64,
    pub t: f64,
    pub s: f64,
    pub mean: f64,
    pub variance: f64,
}

pub fn exact_point_marginal(
    d: &LightTailDensity,
    n: usize,
    a_n: f64,
) -> Result<ExactPointMarginal> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be at least 2"
        )));
    }
    let tilted = TiltedDensity::with_mean(d, a_n)?;
    let table = if n > 2 {
        Some(convolve_oracle(&tilted, n - 1, GridSpec::default())?)
    } else {
        None
    };
    let (wlo, whi) = tilted.support_window();
    let window = (wlo.max(0.0), whi.min(n as f64 * a_n));
    let mut m = ExactPointMarginal {
        tilted,
        n,
        table,
        log_norm: 0.0,
        window,
    };
    let z = panel_integral(|y| m.unnormalised(y), window.0, window.1)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::QuadratureFail(
            "exact point marginal has no mass".into(),
        ));
    }
    m.log_norm = z.ln();
    Ok(m)
}

impl ExactPointMarginal {
    fn unnormalised(&self, y: f64) -> f64 {
        let a = self.tilted.mean();
        if !(y >= 0.0 && y <= self.n as f64 * a) {
            return 0.0;
        }
        let rest = match &self.table {
            None => self.tilted.pdf(2.0 * a - y),
            Some(tab) => {
                let z = (a - y) / (self.tilted.sd() * ((self.n - 1) as f64).sqrt());
                tab.eval(z).max(0.0)
            }
        };
        self.tilted.pdf(y) * rest
    }

    pub fn tilted(&self) -> &TiltedDensity {
        &self.tilted
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn summary(&self) -> Result<ExactMarginalSummary> {
        let (lo, hi) = self.window;
        let m1 = panel_integral(|y| y * self.pdf(y), lo, hi)?;
        let m2 = panel_integral(|y| (y - m1) * (y - m1) * self.pdf(y), lo, hi)?;
        Ok(ExactMarginalSummary {
            n: self.n,
            a_n: self.tilted.mean(),
            t: self.tilted.t(),
            s: self.tilted.sd(),
            mean: m1,
            variance: m2,
        })
    }
}

impl Reference for ExactPointMarginal {
    fn pdf(&self, x: f64) -> f64 {
        self.unnormalised(x) / self.log_norm.exp()
    }

    fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        let (lo, hi) = (lo.max(self.window.0), hi.min(self.window.1));
        if !(lo < hi) {
            return Ok(0.0);
        }
        Ok(integrate(|y| self.pdf(y), lo, hi, opts())?.0.min(1.0))
    }

    fn window(&self) -> (f64, f64) {
        self.window
    }
}

/// `y ↦ C·π(y)·𝔫(a, (n−1)s², y)`, the tilted density with its Gaussian correction.
#[derive(Debug, Clone)]
pub struct SecondOrderReference {
    tilted: TiltedDensity,
    n: usize,
    log_c: f64,
}

pub fn second_order_reference(
    d: &LightTailDensity,
    n: usize,
    a_n: f64,
) -> Result<SecondOrderReference> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be at least 2"
        )));
    }
    let tilted = TiltedDensity::with_mean(d, a_n)?;
    let mut r = SecondOrderReference {
        tilted,
        n,
        log_c: 0.0,
    };
    let (lo, hi) = r.tilted.support_window();
    let z = panel_integral(|y| r.unnormalised(y), lo, hi)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::QuadratureFail(
            "second-order reference has no mass".into(),
        ));
    }
    r.log_c = -z.ln();
    Ok(r)
}

impl SecondOrderReference {
    fn unnormalised(&self, y: f64) -> f64 {
        let a = self.tilted.mean();
        let v = (self.n - 1) as f64 * self.tilted.variance();
        let g = (-(y - a) * (y - a) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        self.tilted.pdf(y) * g
    }

    /// The normalising constant `C`.
    pub fn constant(&self) -> f64 {
        self.log_c.exp()
    }

    pub fn tilted(&self) -> &TiltedDensity {
        &self.tilted
    }
}

impl Reference for SecondOrderReference {
    fn pdf(&self, x: f64) -> f64 {
        self.unnormalised(x) * self.log_c.exp()
    }

    fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        let (wlo, whi) = self.tilted.support_window();
        let (lo, hi) = (lo.max(wlo), hi.min(whi));
        if !(lo < hi) {
            return Ok(0.0);
        }
        Ok(integrate(|y| self.pdf(y), lo, hi, opts())?.0.min(1.0))
    }

    fn window(&self) -> (f64, f64) {
        self.tilted.support_window()
    }
}
