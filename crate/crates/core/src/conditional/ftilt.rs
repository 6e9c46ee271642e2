//! Tilts of product laws on `ℝ^d` along a catalog function `f`, and level-set sampling.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{DensityBuilder, GFunction, LightTailDensity, Perturbation, Term};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::roots::bisect;
use crate::sampler::{sampler_tilted, TiltedSampler, STREAMS};
use crate::tilt::{invert_m, TiltedDensity};

/// Functions `f : ℝ^d → ℝ` available to the f-constraint experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FCatalog {
    /// `Σ x_j`
    Linear,
    /// `Σ x_j²`
    Sumsq,
    /// `‖x‖₂`
    Norm2,
}

impl FCatalog {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FCatalog::Linear => x.iter().sum(),
            FCatalog::Sumsq => x.iter().map(|v| v * v).sum(),
            FCatalog::Norm2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    fn is_even(&self) -> bool {
        !matches!(self, FCatalog::Linear)
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(FCatalog::Linear),
            "sumsq" => Ok(FCatalog::Sumsq),
            "norm2" => Ok(FCatalog::Norm2),
            other => Err(Error::InvalidParameter(format!(
                "unknown f '{other}', expected linear|sumsq|norm2"
            ))),
        }
    }
}

/// Coordinate law of an i.i.d. product on `ℝ^d`.
#[derive(Debug, Clone)]
pub enum AmbientLaw {
    /// Coordinates on `[0, ∞)` with density `p`.
    Positive(LightTailDensity),
    /// Symmetric coordinates on `ℝ` with density `|x|·p(x²)`, so that `X² ~ p`.
    SignedRoot(LightTailDensity),
}

impl AmbientLaw {
    pub fn base(&self) -> &LightTailDensity {
        match self {
            AmbientLaw::Positive(d) | AmbientLaw::SignedRoot(d) => d,
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            AmbientLaw::Positive(d) => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    d.ln_pdf_unchecked(x)
                }
            }
            AmbientLaw::SignedRoot(d) => x.abs().ln() + d.ln_pdf_unchecked(x * x),
        }
    }

    fn is_symmetric(&self) -> bool {
        matches!(self, AmbientLaw::SignedRoot(_))
    }
}

/// How the scalar tilt of the pushforward was obtained.
#[derive(Debug, Clone)]
enum Route {
    /// `f(X)` is a sum of `d` i.i.d. scalars with law `base`; each is tilted by `t`.
    Product { tilted: TiltedDensity },
    /// `d = 1`, `f(X) = |X|` with a catalog radial density.
    Radial { tilted: TiltedDensity },
    /// Self-normalised importance sampling on common random numbers.
    MonteCarlo { ess: f64 },
}

/// `x ↦ e^{t·f(x)}·p(x)/φ_f(t)` with `m_f(t) = a`.
#[derive(Debug, Clone)]
pub struct FTiltedLaw {
    ambient: AmbientLaw,
    dim: usize,
    f: FCatalog,
    a: f64,
    t: f64,
    log_phi: f64,
    route: Route,
}

/// Scalar description of an [`FTiltedLaw`].
#[derive(Debug, Clone, Serialize)]
pub struct FTiltSummary {
    pub f: FCatalog,
    pub dim: usize,
    pub a: f64,
    pub t: f64,
    pub log_phi_f: f64,
    pub route: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_effective_sample_size: Option<f64>,
}

/// Draws from the ambient law for the Monte Carlo route.
const MC_DRAWS: usize = 1 << 16;
const MC_MIN_ESS: f64 = 50.0;

fn radial_density(d: &LightTailDensity) -> Result<LightTailDensity> {
    let mut terms = Vec::with_capacity(d.potential().g.terms.len() + 1);
    for t in &d.potential().g.terms {
        terms.push(match *t {
            Term::Power { coef, exponent } => Term::Power {
                coef,
                exponent: 2.0 * exponent,
            },
            Term::Log { coef } => Term::Log { coef: 2.0 * coef },
            Term::Exp { .. } => {
                return Err(Error::PushforwardUnsolvable(
                    "no radial catalog form for exponential terms".into(),
                ));
            }
        });
    }
    terms.push(Term::Log { coef: -1.0 });
    let g = GFunction::new(terms)?;
    let q = d.potential().q.clone();
    let builder = DensityBuilder::new(g).name(format!("radial({})", d.name()));
    let builder = if q.is_zero() {
        builder
    } else {
        builder.perturbation(Perturbation::Custom(Arc::new(move |r: f64| q.value(r * r))))
    };
    builder.build()
}

fn sample_ambient(ambient: &AmbientLaw, dim: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    let td = TiltedDensity::new(ambient.base(), 0.0)?;
    draws_from(ambient, &td, dim, count, seed, false)
}

/// `count·dim` coordinates, row-major. Symmetric laws get a random sign, after `y ↦ √y` unless `radial`.
fn draws_from(
    ambient: &AmbientLaw,
    td: &TiltedDensity,
    dim: usize,
    count: usize,
    seed: u64,
    radial: bool,
) -> Result<Vec<f64>> {
    let mut xs = sampler_tilted(td, count * dim, seed)?;
    if ambient.is_symmetric() {
        let mut rng = stream_rng(seed, STREAMS as u64);
        for v in xs.iter_mut() {
            let r = if radial { *v } else { v.sqrt() };
            *v = if rng.random::<bool>() { r } else { -r };
        }
    }
    Ok(xs)
}

fn log_sum_exp(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    m + vals.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Builds the f-tilt of the product of `dim` copies of `ambient` at level `a`.
///
/// `Σx_j` over [`AmbientLaw::Positive`] and `Σx_j²` over
/// [`AmbientLaw::SignedRoot`] reduce to `d` i.i.d. tilts of the base law with
/// mean `a/d`. `‖x‖` in one dimension over `SignedRoot` uses the radial
/// density `2r·p(r²)`. Other combinations solve the tilt equation on the
/// self-normalised importance-sampling estimate of `m_f` from `2^16` fixed
/// ambient draws.
pub fn f_tilted_density(
    ambient: AmbientLaw,
    dim: usize,
    f: FCatalog,
    a: f64,
    seed: u64,
) -> Result<FTiltedLaw> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dim must be positive".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter(format!("a = {a} is not finite")));
    }
    let dimf = dim as f64;
    let pushforward_err = |e: Error| Error::PushforwardUnsolvable(e.to_string());
    let product = matches!(
        (&ambient, f),
        (AmbientLaw::Positive(_), FCatalog::Linear) | (AmbientLaw::SignedRoot(_), FCatalog::Sumsq)
    ) || (dim == 1
        && matches!((&ambient, f), (AmbientLaw::Positive(_), FCatalog::Norm2)));
    if product {
        let c = invert_m(ambient.base(), a / dimf).map_err(pushforward_err)?;
        let tilted = TiltedDensity::new(ambient.base(), c.t).map_err(pushforward_err)?;
        return Ok(FTiltedLaw {
            log_phi: dimf * c.log_phi,
            t: c.t,
            ambient,
            dim,
            f,
            a,
            route: Route::Product { tilted },
        });
    }
    if dim == 1 && f == FCatalog::Norm2 {
        if let Ok(radial) = radial_density(ambient.base()) {
            let c = invert_m(&radial, a).map_err(pushforward_err)?;
            // log E e^{t|X|} under the ambient law equals log φ of the radial law
            let tilted = TiltedDensity::new(&radial, c.t).map_err(pushforward_err)?;
            return Ok(FTiltedLaw {
                log_phi: c.log_phi,
                t: c.t,
                ambient,
                dim,
                f,
                a,
                route: Route::Radial { tilted },
            });
        }
    }
    monte_carlo_tilt(ambient, dim, f, a, seed)
}

fn monte_carlo_tilt(
    ambient: AmbientLaw,
    dim: usize,
    f: FCatalog,
    a: f64,
    seed: u64,
) -> Result<FTiltedLaw> {
    let pushforward_err = |e: Error| Error::PushforwardUnsolvable(e.to_string());
    let xs = sample_ambient(&ambient, dim, MC_DRAWS, seed)?;
    let fv: Vec<f64> = xs.chunks(dim).map(|x| f.eval(x)).collect();
    let m_hat = |t: f64| {
        let lw = log_sum_exp(fv.iter().map(|&v| t * v));
        fv.iter().map(|&v| v * (t * v - lw).exp()).sum::<f64>()
    };
    let ess = |t: f64| {
        let l1 = log_sum_exp(fv.iter().map(|&v| t * v));
        let l2 = log_sum_exp(fv.iter().map(|&v| 2.0 * t * v));
        (2.0 * l1 - l2).exp()
    };
    if !(a > m_hat(0.0)) {
        return Err(Error::PushforwardUnsolvable(format!(
            "a = {a} is not above the mean of f(X)"
        )));
    }
    let mut hi = 1.0;
    while m_hat(hi) < a {
        if ess(hi) < MC_MIN_ESS || hi > 1e12 {
            return Err(Error::PushforwardUnsolvable(format!(
                "importance weights degenerate before m_f(t) reaches {a}"
            )));
        }
        hi *= 2.0;
    }
    let t = bisect(|t| Ok(m_hat(t) - a), 0.0, hi, 1e-12 * hi, 200).map_err(pushforward_err)?;
    let e = ess(t);
    if e < MC_MIN_ESS {
        return Err(Error::PushforwardUnsolvable(format!(
            "effective sample size {e:.1} at the solution"
        )));
    }
    let log_phi = log_sum_exp(fv.iter().map(|&v| t * v)) - (MC_DRAWS as f64).ln();
    Ok(FTiltedLaw {
        ambient,
        dim,
        f,
        a,
        t,
        log_phi,
        route: Route::MonteCarlo { ess: e },
    })
}

/// Retained states of a random-walk Metropolis run.
#[derive(Debug, Clone, Serialize)]
pub struct MetropolisRun {
    /// Row-major `count × dim`.
    pub points: Vec<f64>,
    pub f_values: Vec<f64>,
    pub dim: usize,
    pub acceptance_rate: f64,
    pub step: f64,
    pub burn_in: usize,
    pub stride: usize,
}

impl FTiltedLaw {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn f(&self) -> FCatalog {
        self.f
    }

    pub fn log_phi_f(&self) -> f64 {
        self.log_phi
    }

    pub fn summary(&self) -> FTiltSummary {
        let (route, mc) = match &self.route {
            Route::Product { .. } => ("product", None),
            Route::Radial { .. } => ("radial", None),
            Route::MonteCarlo { ess, .. } => ("monte_carlo", Some(*ess)),
        };
        FTiltSummary {
            f: self.f,
            dim: self.dim,
            a: self.a,
            t: self.t,
            log_phi_f: self.log_phi,
            route,
            mc_effective_sample_size: mc,
        }
    }

    /// `t·f(x) + Σ log p(x_j) − log φ_f(t)`.
    pub fn ln_density(&self, x: &[f64]) -> f64 {
        self.t * self.f.eval(x) + x.iter().map(|&v| self.ambient.ln_pdf(v)).sum::<f64>()
            - self.log_phi
    }

    /// Whether [`sample_exact`](Self::sample_exact) is available.
    pub fn has_exact_sampler(&self) -> bool {
        !matches!(self.route, Route::MonteCarlo { .. })
    }

    /// I.i.d. draws, row-major `count × dim`, when the tilt factorises.
    pub fn sample_exact(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        match &self.route {
            Route::Product { tilted } => {
                draws_from(&self.ambient, tilted, self.dim, count, seed, false)
            }
            Route::Radial { tilted } => draws_from(&self.ambient, tilted, 1, count, seed, true),
            Route::MonteCarlo { .. } => Err(Error::InvalidParameter(
                "no exact sampler for this f-tilt".into(),
            )),
        }
    }

    fn start(&self) -> Vec<f64> {
        let d = self.dim as f64;
        let v = match self.f {
            FCatalog::Linear => self.a / d,
            FCatalog::Sumsq => (self.a.max(0.0) / d).sqrt(),
            FCatalog::Norm2 => self.a.max(0.0) / d.sqrt(),
        };
        vec![v.max(1e-8); self.dim]
    }

    /// Random-walk Metropolis with isotropic Gaussian steps.
    ///
    /// The step is adapted towards 0.234 acceptance by a Robbins–Monro
    /// recursion on its logarithm during burn-in and frozen afterwards. For
    /// symmetric coordinates and even `f` each iteration also flips the sign
    /// of one coordinate, which leaves the target invariant.
    pub fn metropolis(
        &self,
        count: usize,
        burn_in: usize,
        stride: usize,
        seed: u64,
    ) -> Result<MetropolisRun> {
        if count == 0 || stride == 0 {
            return Err(Error::InvalidParameter(
                "count and stride must be positive".into(),
            ));
        }
        let mut rng: ChaCha8Rng = stream_rng(seed, 0);
        let mut x = self.start();
        let mut lp = self.ln_density(&x);
        if !lp.is_finite() {
            return Err(Error::InfeasibleStart(
                "starting point has zero density".into(),
            ));
        }
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        let mut log_step = (0.1 * scale / (self.dim as f64).sqrt()).ln();
        let flips = self.ambient.is_symmetric() && self.f.is_even();
        let mut prop = vec![0.0; self.dim];
        let mut accepted = 0usize;
        let mut points = Vec::with_capacity(count * self.dim);
        let mut f_values = Vec::with_capacity(count);
        let total = burn_in + count * stride;
        for it in 0..total {
            let step = log_step.exp();
            for (p, &v) in prop.iter_mut().zip(&x) {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                *p = v + step * z;
            }
            let lq = self.ln_density(&prop);
            let acc = lq.is_finite() && rng.random::<f64>().ln() < lq - lp;
            if acc {
                x.copy_from_slice(&prop);
                lp = lq;
            }
            if it < burn_in {
                let rate = if acc { 1.0 } else { 0.0 };
                log_step += (rate - 0.234) / ((it + 1) as f64).powf(0.6);
            } else if acc {
                accepted += 1;
            }
            if flips && rng.random::<bool>() {
                let j = rng.random_range(0..self.dim);
                x[j] = -x[j];
            }
            if it >= burn_in && (it - burn_in + 1) % stride == 0 {
                points.extend_from_slice(&x);
                f_values.push(self.f.eval(&x));
            }
        }
        Ok(MetropolisRun {
            points,
            f_values,
            dim: self.dim,
            acceptance_rate: accepted as f64 / (count * stride) as f64,
            step: log_step.exp(),
            burn_in,
            stride,
        })
    }
}

/// Draws from an f-tilt with the fraction landing in the level window.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetSample {
    /// Row-major `count × dim`.
    pub points: Vec<f64>,
    pub f_values: Vec<f64>,
    pub dim: usize,
    pub a: f64,
    pub epsilon: f64,
    /// Fraction of draws with `f(x) ∈ (a − ε, a + ε)`.
    pub hit_fraction: f64,
    /// Standard deviation of the radius: `√f` for `sumsq`, `f` for `norm2`, `|f|` for `linear`.
    pub radial_sd: f64,
    /// `radial_sd` over the target radius.
    pub relative_radial_sd: f64,
    pub method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
}

/// Samples the f-tilt (exactly when it factorises, otherwise by Metropolis)
/// and reports the hit fraction of `(a − ε, a + ε)`.
pub fn level_set_sampler(
    law: &FTiltedLaw,
    epsilon: f64,
    count: usize,
    seed: u64,
) -> Result<LevelSetSample> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} must be non-negative"
        )));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be positive".into()));
    }
    let (points, method, acc) = if law.has_exact_sampler() {
        (law.sample_exact(count, seed)?, "exact", None)
    } else {
        let run = law.metropolis(count, 20_000, law.dim, seed)?;
        (run.points, "metropolis", Some(run.acceptance_rate))
    };
    let f_values: Vec<f64> = points.chunks(law.dim).map(|x| law.f.eval(x)).collect();
    let a = law.a;
    let hits = f_values
        .iter()
        .filter(|&&v| v > a - epsilon && v < a + epsilon)
        .count();
    let (radius, target): (Vec<f64>, f64) = match law.f {
        FCatalog::Sumsq => (f_values.iter().map(|v| v.sqrt()).collect(), a.sqrt()),
        FCatalog::Norm2 => (f_values.clone(), a),
        FCatalog::Linear => (f_values.iter().map(|v| v.abs()).collect(), a.abs()),
    };
    let n = radius.len() as f64;
    let mean = radius.iter().sum::<f64>() / n;
    let sd =
        (radius.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    Ok(LevelSetSample {
        points,
        f_values,
        dim: law.dim,
        a,
        epsilon,
        hit_fraction: hits as f64 / count as f64,
        radial_sd: sd,
        relative_radial_sd: sd / target,
        method,
        acceptance_rate: acc,
    })
}

/// Exact tilted sampler of the f-pushforward when it factorises, for diagnostics.
pub fn pushforward_sampler(law: &FTiltedLaw) -> Option<Result<TiltedSampler>> {
    match &law.route {
        Route::Product { tilted } | Route::Radial { tilted } => Some(TiltedSampler::new(tilted)),
        Route::MonteCarlo { .. } => None,
    }
}
