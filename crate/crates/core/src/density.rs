//! Light-tailed densities `p(x) = c·exp(−(g(x) − q(x)))` on the half-line.
//!
//! The exponent `g` is a sum of catalog terms (powers, logarithms, shifted
//! exponentials), which gives closed-form derivatives and a
//! cancellation-free second-order remainder `g(x0+y) − g(x0) − g'(x0)·y`.
//! The remainder is what lets the tilt engine resolve skewness of order 1e-12
//! at tilts where `t·x` is of order 1e7.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::TiltFrame;
use crate::roots::newton_bisect;

/// One additive term of the exponent `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    /// `coef · x^exponent`
    Power { coef: f64, exponent: f64 },
    /// `coef · ln x`
    Log { coef: f64 },
    /// `coef · exp(rate · (x − shift))`
    Exp { coef: f64, rate: f64, shift: f64 },
}

/// `(1+u)^p − 1 − p·u`, accurate for small `u`.
fn power_remainder(p: f64, u: f64) -> f64 {
    if u.abs() <= 0.1 {
        let mut coef = p * (p - 1.0) / 2.0;
        let mut upow = u * u;
        let mut sum = coef * upow;
        for j in 3..80 {
            coef *= (p - (j as f64 - 1.0)) / j as f64;
            upow *= u;
            let term = coef * upow;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (p * u.ln_1p()).exp_m1() - p * u
    }
}

/// `ln(1+u) − u`, accurate for small `u`.
fn log_remainder(u: f64) -> f64 {
    if u.abs() <= 0.1 {
        let mut upow = u;
        let mut sum = 0.0;
        for j in 2..80 {
            upow *= -u;
            let term = upow / j as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        // upow alternates sign starting with -u^2
        sum
    } else {
        u.ln_1p() - u
    }
}

/// `e^z − 1 − z`, accurate for small `z`.
fn exp_remainder(z: f64) -> f64 {
    if z.abs() <= 0.1 {
        let mut term = z * z / 2.0;
        let mut sum = term;
        for j in 3..60 {
            term *= z / j as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        z.exp_m1() - z
    }
}

impl Term {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Term::Power { coef, exponent } => coef * x.powf(exponent),
            Term::Log { coef } => coef * x.ln(),
            Term::Exp { coef, rate, shift } => coef * (rate * (x - shift)).exp(),
        }
    }

    /// Derivative of order `order` (0..=3).
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        if order == 0 {
            return self.value(x);
        }
        match *self {
            Term::Power { coef, exponent } => {
                let mut c = coef;
                for i in 0..order {
                    c *= exponent - i as f64;
                }
                if c == 0.0 {
                    0.0
                } else {
                    c * x.powf(exponent - order as f64)
                }
            }
            Term::Log { coef } => {
                // d^n/dx^n ln x = (-1)^(n-1) (n-1)! / x^n
                let fact = (1..order).map(|i| i as f64).product::<f64>();
                let sign = if order % 2 == 1 { 1.0 } else { -1.0 };
                coef * sign * fact / x.powi(order as i32)
            }
            Term::Exp { coef, rate, shift } => {
                coef * rate.powi(order as i32) * (rate * (x - shift)).exp()
            }
        }
    }

    /// `T(x0+y) − T(x0) − T'(x0)·y` for `x0 > 0`.
    pub fn remainder(&self, x0: f64, y: f64) -> f64 {
        match *self {
            Term::Power { coef, exponent } => {
                if coef == 0.0 || exponent == 0.0 || exponent == 1.0 {
                    0.0
                } else {
                    coef * x0.powf(exponent) * power_remainder(exponent, y / x0)
                }
            }
            Term::Log { coef } => {
                if coef == 0.0 {
                    0.0
                } else {
                    coef * log_remainder(y / x0)
                }
            }
            Term::Exp { coef, rate, shift } => {
                coef * (rate * (x0 - shift)).exp() * exp_remainder(rate * y)
            }
        }
    }

    /// Whether the term is convex on `(0, ∞)`.
    pub fn is_convex(&self) -> bool {
        match *self {
            Term::Power { coef, exponent } => coef * exponent * (exponent - 1.0) >= 0.0,
            Term::Log { coef } => coef <= 0.0,
            Term::Exp { coef, .. } => coef >= 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Term::Power { coef, exponent } => coef.is_finite() && exponent.is_finite(),
            Term::Log { coef } => coef.is_finite(),
            Term::Exp { coef, rate, shift } => {
                coef.is_finite() && rate.is_finite() && shift.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("non-finite term {self:?}")))
        }
    }
}

/// The exponent `g` as a sum of [`Term`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GFunction {
    pub terms: Vec<Term>,
}

impl GFunction {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("g needs at least one term".into()));
        }
        for t in &terms {
            t.validate()?;
        }
        Ok(Self { terms })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        self.terms.iter().map(|t| t.derivative(x, order)).sum()
    }

    pub fn remainder(&self, x0: f64, y: f64) -> f64 {
        self.terms.iter().map(|t| t.remainder(x0, y)).sum()
    }

    pub fn is_convex(&self) -> bool {
        self.terms.iter().all(Term::is_convex)
    }

    fn has_exp_term(&self) -> bool {
        self.terms
            .iter()
            .any(|t| matches!(t, Term::Exp { coef, rate, .. } if *coef > 0.0 && *rate > 0.0))
    }

    fn leading_power(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter_map(|t| match *t {
                Term::Power { coef, exponent } if coef > 0.0 => Some(exponent),
                _ => None,
            })
            .fold(None, |acc: Option<f64>, e| {
                Some(acc.map_or(e, |a| a.max(e)))
            })
    }
}

/// The bounded perturbation `q`.
#[derive(Clone, Default)]
pub enum Perturbation {
    #[default]
    Zero,
    /// `amplitude · cos(frequency·x) / (1+x)^decay`
    DampedCos {
        amplitude: f64,
        frequency: f64,
        decay: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::Zero => write!(f, "Zero"),
            Perturbation::DampedCos {
                amplitude,
                frequency,
                decay,
            } => f
                .debug_struct("DampedCos")
                .field("amplitude", amplitude)
                .field("frequency", frequency)
                .field("decay", decay)
                .finish(),
            Perturbation::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Perturbation {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Perturbation::Zero => 0.0,
            Perturbation::DampedCos {
                amplitude,
                frequency,
                decay,
            } => amplitude * (frequency * x).cos() / (1.0 + x).powf(*decay),
            Perturbation::Custom(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Perturbation::Zero)
    }
}

/// `g − q`, the unnormalised negative log-density.
#[derive(Debug, Clone)]
pub struct Potential {
    pub g: GFunction,
    pub q: Perturbation,
}

/// Regularity class of `h = g'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityClass {
    /// `h(x) = x^β l(x)` with `l` slowly varying.
    Beta(f64),
    /// `h` rapidly varying, its inverse slowly varying.
    Infinity,
}

/// A normalised light-tailed density on `[0, ∞)`.
#[derive(Debug, Clone)]
pub struct LightTailDensity {
    name: String,
    potential: Potential,
    log_c: f64,
    class: RegularityClass,
    x_min_regular: f64,
    theta: f64,
    mean: f64,
    variance: f64,
}

/// Builder for [`LightTailDensity`]; the normalising constant is computed in [`build`](Self::build).
#[derive(Debug, Clone)]
pub struct DensityBuilder {
    name: String,
    g: GFunction,
    q: Perturbation,
    class: Option<RegularityClass>,
    x_min_regular: f64,
    theta: f64,
}

impl DensityBuilder {
    pub fn new(g: GFunction) -> Self {
        Self {
            name: "custom".into(),
            g,
            q: Perturbation::Zero,
            class: None,
            x_min_regular: 1.0,
            theta: 0.1,
        }
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn perturbation(mut self, q: Perturbation) -> Self {
        self.q = q;
        self
    }

    pub fn class(mut self, class: RegularityClass) -> Self {
        self.class = Some(class);
        self
    }

    pub fn x_min_regular(mut self, x: f64) -> Self {
        self.x_min_regular = x;
        self
    }

    pub fn theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn build(self) -> Result<LightTailDensity> {
        if !(self.x_min_regular.is_finite() && self.x_min_regular > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "x_min_regular must be positive, got {}",
                self.x_min_regular
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        let class = match self.class {
            Some(RegularityClass::Beta(b)) if !(b > 0.0 && b.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "class Beta needs beta > 0, got {b}"
                )));
            }
            Some(c) => c,
            None => {
                if self.g.has_exp_term() {
                    RegularityClass::Infinity
                } else {
                    let p = self.g.leading_power().unwrap_or(1.0);
                    RegularityClass::Beta((p - 1.0).max(f64::MIN_POSITIVE))
                }
            }
        };
        let potential = Potential {
            g: self.g,
            q: self.q,
        };
        let frame = TiltFrame::new(&potential, 0.0)?;
        let mom = frame.moments()?;
        let log_c = -(frame.anchor() + mom.log_mass);
        if !log_c.is_finite() {
            return Err(Error::Divergent("density cannot be normalised".into()));
        }
        let density = LightTailDensity {
            name: self.name,
            potential,
            log_c,
            class,
            x_min_regular: self.x_min_regular,
            theta: self.theta,
            mean: frame.x0() + mom.mean_offset,
            variance: mom.variance,
        };
        if class == RegularityClass::Infinity {
            density.check_h_increasing()?;
        }
        Ok(density)
    }
}

/// Weibull density with shape `k > 1` and unit scale.
pub fn builtin_weibull(k: f64) -> Result<LightTailDensity> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Weibull shape must exceed 1, got {k}"
        )));
    }
    let g = GFunction::new(vec![
        Term::Power {
            coef: 1.0,
            exponent: k,
        },
        Term::Log { coef: -(k - 1.0) },
    ])?;
    DensityBuilder::new(g)
        .name(format!("weibull(k={k})"))
        .class(RegularityClass::Beta(k - 1.0))
        .build()
}

/// The rapidly varying density `p(x) = c·exp(−e^{x−1})`, with `h(x) = e^{x−1}`.
pub fn builtin_double_exp() -> Result<LightTailDensity> {
    let g = GFunction::new(vec![Term::Exp {
        coef: 1.0,
        rate: 1.0,
        shift: 1.0,
    }])?;
    DensityBuilder::new(g)
        .name("double_exp")
        .class(RegularityClass::Infinity)
        .build()
}

impl LightTailDensity {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn log_c(&self) -> f64 {
        self.log_c
    }

    pub fn class(&self) -> RegularityClass {
        self.class
    }

    pub fn x_min_regular(&self) -> f64 {
        self.x_min_regular
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Unconditional mean `E X`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn g(&self, x: f64) -> f64 {
        self.potential.g.value(x)
    }

    /// `h(x) = g'(x)`.
    pub fn h(&self, x: f64) -> f64 {
        self.potential.g.derivative(x, 1)
    }

    /// `h'(x) = g''(x)`.
    pub fn h_prime(&self, x: f64) -> f64 {
        self.potential.g.derivative(x, 2)
    }

    /// `h''(x) = g'''(x)`.
    pub fn h_second(&self, x: f64) -> f64 {
        self.potential.g.derivative(x, 3)
    }

    pub fn q(&self, x: f64) -> f64 {
        self.potential.q.value(x)
    }

    /// Log-density; `−∞` outside the support.
    pub fn ln_pdf_unchecked(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        let v = self.log_c - self.g(x) + self.q(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    /// Density at `x`; negative arguments are a domain error.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!(
                "density is supported on [0, inf), got x = {x}"
            )));
        }
        Ok(self.ln_pdf_unchecked(x).exp())
    }

    /// Whether the pair-conditional `p(u)p(c−u)` is log-concave for every `c`.
    pub fn is_log_concave(&self) -> bool {
        self.potential.q.is_zero() && self.potential.g.is_convex()
    }

    /// `ψ(u) = inf{x : h(x) ≥ u}` on the regular region.
    pub fn psi(&self, u: f64) -> Result<f64> {
        let lo = self.x_min_regular;
        let h_lo = self.h(lo);
        if !(u >= h_lo) {
            return Err(Error::OutOfRange(format!(
                "u = {u} below h(x_min_regular) = {h_lo}"
            )));
        }
        if u == h_lo {
            return Ok(lo);
        }
        let mut hi = lo;
        // leading-order guess for power-type h
        if let RegularityClass::Beta(beta) = self.class {
            let guess = (u / (beta + 1.0)).powf(1.0 / beta);
            if guess.is_finite() && guess > hi {
                hi = guess;
            }
        }
        let mut iter = 0;
        while !(self.h(hi) >= u) {
            hi *= 2.0;
            iter += 1;
            if iter > 2000 || !hi.is_finite() {
                return Err(Error::NonMonotone(format!("cannot bracket h(x) = {u}")));
            }
        }
        let mut lo_b = lo;
        let mut hb = hi;
        while hb > 2.0 * lo_b && self.h(hb / 2.0) >= u {
            hb /= 2.0;
        }
        if hb / 2.0 > lo_b {
            lo_b = hb / 2.0;
        }
        let x = newton_bisect(
            |x| Ok((self.h(x) - u, self.h_prime(x))),
            lo_b,
            hb,
            0.5 * (lo_b + hb),
            1e-15,
            400,
        )?;
        if !(self.h_prime(x) > 0.0) {
            return Err(Error::NonMonotone(format!(
                "h'(psi({u})) = {} is not positive",
                self.h_prime(x)
            )));
        }
        Ok(x)
    }

    /// `ψ'(u) = 1/h'(ψ(u))`.
    pub fn psi_prime(&self, u: f64) -> Result<f64> {
        let x = self.psi(u)?;
        Ok(1.0 / self.h_prime(x))
    }

    /// `ψ''(u) = −h''(ψ)/h'(ψ)^3`.
    pub fn psi_second(&self, u: f64) -> Result<f64> {
        let x = self.psi(u)?;
        let hp = self.h_prime(x);
        Ok(-self.h_second(x) / (hp * hp * hp))
    }

    fn check_h_increasing(&self) -> Result<()> {
        let mut x = self.x_min_regular;
        let mut prev = self.h(x);
        for _ in 0..40 {
            x *= 1.5;
            let v = self.h(x);
            if !v.is_finite() {
                break;
            }
            if v <= prev {
                return Err(Error::NonMonotone(format!("h decreases near x = {x}")));
            }
            prev = v;
        }
        Ok(())
    }

    /// `ε(x) = x·l'(x)/l(x)` for the slowly varying part of the class representation.
    ///
    /// For class Beta(β), `l = h/x^β` and `ε(x) = x·h'(x)/h(x) − β`. For class
    /// Infinity the representation is that of `ψ` and `ε(u) = u·ψ'(u)/ψ(u)`.
    pub fn epsilon(&self, x: f64) -> Result<f64> {
        match self.class {
            RegularityClass::Beta(beta) => Ok(x * self.h_prime(x) / self.h(x) - beta),
            RegularityClass::Infinity => {
                let p = self.psi(x)?;
                Ok(x / (self.h_prime(p) * p))
            }
        }
    }

    /// Numerical class-membership report on `grid` (increasing, above `x_min_regular`).
    pub fn verify_class(&self, grid: &[f64], eta: f64) -> Result<ClassReport> {
        if grid.len() < 3 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "grid must hold at least 3 increasing points".into(),
            ));
        }
        if grid[0] < self.x_min_regular {
            return Err(Error::InvalidParameter(format!(
                "grid starts at {} below x_min_regular = {}",
                grid[0], self.x_min_regular
            )));
        }
        if !(eta > 0.0 && eta < 0.25) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in (0, 1/4), got {eta}"
            )));
        }
        let mut flags = Vec::new();
        let upper = grid.len() / 2;

        // Infinity-class grids live in the range of h; map them back to x.
        let xs: Vec<f64> = match self.class {
            RegularityClass::Beta(_) => grid.to_vec(),
            RegularityClass::Infinity => {
                grid.iter().map(|&u| self.psi(u)).collect::<Result<_>>()?
            }
        };
        let g_over_x: Vec<f64> = xs.iter().map(|&x| self.g(x) / x).collect();
        let superlinear_ok = g_over_x[upper..].windows(2).all(|w| w[1] > w[0])
            && g_over_x[grid.len() - 1] > g_over_x[0] * (1.0 + 1e-9);
        if !superlinear_ok {
            flags.push("g(x)/x is not eventually increasing".to_string());
        }

        let convex_ok = xs.iter().all(|&x| self.h_prime(x) > 0.0);
        if !convex_ok {
            flags.push("g is not convex on the grid".to_string());
        }

        let perturbation_ok = xs.iter().all(|&x| {
            let bound = 1.0 / (x * self.h(x)).sqrt();
            (0..=8).all(|i| {
                let v = x * (1.0 - self.theta + 2.0 * self.theta * i as f64 / 8.0);
                self.q(v).abs() <= bound
            })
        });
        if !perturbation_ok {
            flags.push(format!(
                "|q| exceeds 1/sqrt(x h(x)) within theta = {}",
                self.theta
            ));
        }

        let eps_at = |x: f64| self.epsilon(x);
        let epsilon: Vec<f64> = grid.iter().map(|&x| eps_at(x)).collect::<Result<_>>()?;
        let mut d1 = Vec::with_capacity(grid.len());
        let mut d2 = Vec::with_capacity(grid.len());
        for (&x, &e) in grid.iter().zip(&epsilon) {
            let step = x * 1e-5;
            let ep = eps_at(x + step)?;
            let em = eps_at(x - step)?;
            d1.push((ep - em) / (2.0 * step));
            d2.push((ep - 2.0 * e + em) / (step * step));
        }

        let n = grid.len();
        let mut report = ClassReport {
            class: self.class,
            grid: grid.to_vec(),
            g_over_x,
            epsilon: epsilon.clone(),
            superlinear_ok,
            convex_ok,
            perturbation_ok,
            x_eps1: Vec::new(),
            x2_eps2: Vec::new(),
            eta,
            x_eta_eps: Vec::new(),
            flagged_violations: Vec::new(),
        };

        match self.class {
            RegularityClass::Beta(_) => {
                let x_eps1: Vec<f64> = grid.iter().zip(&d1).map(|(x, d)| x * d.abs()).collect();
                let x2_eps2: Vec<f64> =
                    grid.iter().zip(&d2).map(|(x, d)| x * x * d.abs()).collect();
                if !(epsilon[n - 1].abs() < epsilon[0].abs() || epsilon[n - 1].abs() < 1e-12) {
                    flags.push("epsilon does not decay toward 0".to_string());
                }
                for (label, v) in [("x|eps'|", &x_eps1), ("x^2|eps''|", &x2_eps2)] {
                    let early = v[..upper.max(1)].iter().cloned().fold(0.0, f64::max);
                    if v.iter().any(|x| !x.is_finite()) || v[n - 1] > 10.0 * early.max(1e-12) {
                        flags.push(format!("{label} grows along the grid"));
                    }
                }
                report.x_eps1 = x_eps1;
                report.x2_eps2 = x2_eps2;
            }
            RegularityClass::Infinity => {
                let r1: Vec<f64> = grid
                    .iter()
                    .zip(d1.iter().zip(&epsilon))
                    .map(|(x, (d, e))| x * d / e)
                    .collect();
                let r2: Vec<f64> = grid
                    .iter()
                    .zip(d2.iter().zip(&epsilon))
                    .map(|(x, (d, e))| x * x * d / e)
                    .collect();
                if !(r1[n - 1].abs() < r1[0].abs()) {
                    flags.push("x eps'/eps does not trend to 0".to_string());
                }
                if !(r2[n - 1].abs() < r2[0].abs()) {
                    flags.push("x^2 eps''/eps does not trend to 0".to_string());
                }
                let xe: Vec<f64> = grid
                    .iter()
                    .zip(&epsilon)
                    .map(|(x, e)| x.powf(eta) * e)
                    .collect();
                let tail_min = xe[upper..].iter().cloned().fold(f64::INFINITY, f64::min);
                let tail_mid = xe[upper];
                if !(tail_min > 1e-3) || xe[n - 1] < 0.5 * tail_mid {
                    flags.push(format!("x^{eta} eps(x) is not bounded away from 0"));
                }
                let psi_first = self.psi(grid[0])?;
                let psi_last = self.psi(grid[n - 1])?;
                if !(psi_last > psi_first) {
                    flags.push("psi does not grow".to_string());
                }
                report.x_eps1 = r1;
                report.x2_eps2 = r2;
                report.x_eta_eps = xe;
            }
        }
        report.flagged_violations = flags;
        Ok(report)
    }
}

/// Outcome of [`LightTailDensity::verify_class`]. Violations are flagged, not fatal.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub class: RegularityClass,
    pub grid: Vec<f64>,
    pub g_over_x: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub superlinear_ok: bool,
    pub convex_ok: bool,
    pub perturbation_ok: bool,
    /// Beta: `x|ε'(x)|`. Infinity: `xε'(x)/ε(x)`.
    pub x_eps1: Vec<f64>,
    /// Beta: `x²|ε''(x)|`. Infinity: `x²ε''(x)/ε(x)`.
    pub x2_eps2: Vec<f64>,
    pub eta: f64,
    /// Infinity only: `x^η ε(x)`.
    pub x_eta_eps: Vec<f64>,
    pub flagged_violations: Vec<String>,
}

impl ClassReport {
    pub fn passed(&self) -> bool {
        self.flagged_violations.is_empty()
    }
}

/// Serializable description of a density, as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Weibull {
        k: f64,
    },
    DoubleExp,
    Custom {
        terms: Vec<Term>,
        #[serde(default)]
        class: Option<RegularityClass>,
        #[serde(default)]
        x_min_regular: Option<f64>,
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default)]
        perturbation: Option<PerturbationSpec>,
    },
}

/// Catalog perturbations available from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    Zero,
    DampedCos {
        amplitude: f64,
        frequency: f64,
        decay: f64,
    },
}

impl DensitySpec {
    pub fn build(&self) -> Result<LightTailDensity> {
        match self {
            DensitySpec::Weibull { k } => builtin_weibull(*k),
            DensitySpec::DoubleExp => builtin_double_exp(),
            DensitySpec::Custom {
                terms,
                class,
                x_min_regular,
                theta,
                perturbation,
            } => {
                let mut b = DensityBuilder::new(GFunction::new(terms.clone())?);
                if let Some(c) = class {
                    b = b.class(*c);
                }
                if let Some(x) = x_min_regular {
                    b = b.x_min_regular(*x);
                }
                if let Some(t) = theta {
                    b = b.theta(*t);
                }
                if let Some(PerturbationSpec::DampedCos {
                    amplitude,
                    frequency,
                    decay,
                }) = perturbation
                {
                    if !(amplitude.is_finite() && frequency.is_finite() && *decay >= 0.0) {
                        return Err(Error::InvalidParameter(
                            "bad damped_cos perturbation".into(),
                        ));
                    }
                    b = b.perturbation(Perturbation::DampedCos {
                        amplitude: *amplitude,
                        frequency: *frequency,
                        decay: *decay,
                    });
                }
                b.build()
            }
        }
    }
}
