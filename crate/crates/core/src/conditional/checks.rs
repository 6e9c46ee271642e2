//! Empirical checks of the conditional limit theorems.

use serde::Serialize;

use super::exact::exact_point_marginal;
use super::exceedance::{sample_exceedance_conditional, ExceedanceSample, ProposalTilt};
use super::point::{sample_point_conditional, GibbsConfig, PointSample};
use super::tv::{ks_one_sample, Reference};
use super::ConditionDescriptor;
use crate::density::LightTailDensity;
use crate::edgeworth::std_normal_cdf;
use crate::error::{Error, Result};
use crate::sampler::sampler_tilted;
use crate::tilt::{invert_m, TiltedDensity};

/// One row of [`gibbs_local_check`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalCheckRow {
    pub y: f64,
    /// Kernel density estimate of the first-coordinate marginal.
    pub kde: f64,
    pub tilted: f64,
    pub ratio: f64,
    /// Two-standard-error Monte Carlo band on `ratio`.
    pub band_low: f64,
    pub band_high: f64,
    /// Exact marginal over the tilted density, from the convolution oracle.
    pub exact_ratio: f64,
}

fn silverman(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| s[((p * (n - 1.0)) as usize).min(s.len() - 1)];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Kernel estimate of `p_{a_n}` at `y_grid` divided by `π^{a_n}`.
///
/// Gaussian kernel, Silverman bandwidth. The band uses the asymptotic KDE
/// variance `f(y)·R(K)/(N·h)` with `R(K) = 1/(2√π)` and ignores chain
/// autocorrelation.
pub fn gibbs_local_check(
    d: &LightTailDensity,
    cond: &ConditionDescriptor,
    y_grid: &[f64],
    config: &GibbsConfig,
) -> Result<(Vec<LocalCheckRow>, PointSample)> {
    let sample = sample_point_conditional(d, cond, config)?;
    let rows = local_rows(d, cond, y_grid, &sample)?;
    Ok((rows, sample))
}

fn local_rows(
    d: &LightTailDensity,
    cond: &ConditionDescriptor,
    y_grid: &[f64],
    sample: &PointSample,
) -> Result<Vec<LocalCheckRow>> {
    let td = TiltedDensity::with_mean(d, cond.a_n)?;
    let exact = exact_point_marginal(d, cond.n, cond.a_n)?;
    let xs = &sample.x1;
    let n = xs.len() as f64;
    let h = silverman(xs);
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    let rk = 0.5 / std::f64::consts::PI.sqrt();
    Ok(y_grid
        .iter()
        .map(|&y| {
            let kde = xs
                .iter()
                .map(|&x| (-0.5 * ((y - x) / h).powi(2)).exp())
                .sum::<f64>()
                * norm;
            let pi = td.pdf(y);
            let se = (kde * rk / (n * h)).sqrt();
            LocalCheckRow {
                y,
                kde,
                tilted: pi,
                ratio: kde / pi,
                band_low: (kde - 2.0 * se) / pi,
                band_high: (kde + 2.0 * se) / pi,
                exact_ratio: exact.pdf(y) / pi,
            }
        })
        .collect())
}

/// Symmetric window `(a_n − ε_n, a_n + ε_n)` for the localization check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DlpWindow {
    pub k: f64,
    pub n: usize,
    pub a_n: f64,
    pub epsilon_n: f64,
    pub window: (f64, f64),
    /// `n·log a_n/(a_n^{k−2}·ε_n²)`.
    pub criterion_value: f64,
    pub epsilon_over_a: f64,
    /// `ε_n/a_n ≥ 1`: the window reaches below zero.
    pub infeasible: bool,
}

impl DlpWindow {
    /// Same centre with half-width `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut w = *self;
        w.epsilon_n = epsilon;
        w.window = (self.a_n - epsilon, self.a_n + epsilon);
        w.criterion_value =
            self.n as f64 * self.a_n.ln() / (self.a_n.powf(self.k - 2.0) * epsilon * epsilon);
        w.epsilon_over_a = epsilon / self.a_n;
        w.infeasible = w.epsilon_over_a >= 1.0;
        w
    }
}

/// `ε_n = n^{0.1}·√(n·log a_n / a_n^{k−2})`, with the infeasibility flag set instead of raised.
pub fn epsilon_schedule_unchecked(k: f64, n: usize, a_n: f64) -> Result<DlpWindow> {
    if !(k > 1.0) {
        return Err(Error::InvalidParameter(format!("k = {k} must exceed 1")));
    }
    if !(a_n > std::f64::consts::E) {
        return Err(Error::InvalidParameter(format!(
            "a_n = {a_n} must exceed e"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let nf = n as f64;
    let eps = nf.powf(0.1) * (nf * a_n.ln() / a_n.powf(k - 2.0)).sqrt();
    let base = DlpWindow {
        k,
        n,
        a_n,
        epsilon_n: eps,
        window: (0.0, 0.0),
        criterion_value: 0.0,
        epsilon_over_a: 0.0,
        infeasible: false,
    };
    Ok(base.with_epsilon(eps))
}

/// [`epsilon_schedule_unchecked`], raising [`Error::ScheduleInfeasible`] when `ε_n/a_n ≥ 1`.
pub fn epsilon_schedule(k: f64, n: usize, a_n: f64) -> Result<DlpWindow> {
    let w = epsilon_schedule_unchecked(k, n, a_n)?;
    if w.infeasible {
        return Err(Error::ScheduleInfeasible(w.epsilon_over_a));
    }
    Ok(w)
}

/// Schedule along `a_n = n^α` on an `n` grid, with the trend the theory requires.
#[derive(Debug, Clone, Serialize)]
pub struct ScheduleTrend {
    pub windows: Vec<DlpWindow>,
    /// `"epsilon_over_a"` for `k ≤ 2`, `"epsilon"` for `k > 2`.
    pub tracked: &'static str,
    pub decreasing: bool,
}

pub fn schedule_trend(k: f64, alpha: f64, ns: &[usize]) -> Result<ScheduleTrend> {
    let windows = ns
        .iter()
        .map(|&n| epsilon_schedule_unchecked(k, n, (n as f64).powf(alpha)))
        .collect::<Result<Vec<_>>>()?;
    let (tracked, vals): (_, Vec<f64>) = if k <= 2.0 {
        (
            "epsilon_over_a",
            windows.iter().map(|w| w.epsilon_over_a).collect(),
        )
    } else {
        ("epsilon", windows.iter().map(|w| w.epsilon_n).collect())
    };
    let decreasing = vals.windows(2).all(|p| p[1] < p[0]);
    Ok(ScheduleTrend {
        windows,
        tracked,
        decreasing,
    })
}

/// Weighted probability that every coordinate lies in the window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DlpEstimate {
    pub window: DlpWindow,
    pub estimate: f64,
    pub std_error: f64,
    pub accepted: usize,
    pub effective_sample_size: f64,
    pub acceptance_rate: f64,
    /// `log g(a_n)/log n`.
    pub condition_proxy: f64,
    pub condition_holds: bool,
}

impl DlpEstimate {
    pub fn from_sample(
        d: &LightTailDensity,
        sample: &ExceedanceSample,
        window: &DlpWindow,
        delta: f64,
    ) -> Self {
        let (lo, hi) = window.window;
        let (estimate, std_error) = sample.probability(|b| b.min > lo && b.max < hi);
        let n = sample.descriptor.n as f64;
        let proxy = d.g(sample.descriptor.a_n).ln() / n.ln();
        DlpEstimate {
            window: *window,
            estimate,
            std_error,
            accepted: sample.len(),
            effective_sample_size: sample.effective_sample_size,
            acceptance_rate: sample.acceptance_rate,
            condition_proxy: proxy,
            condition_holds: proxy > delta,
        }
    }
}

/// Fraction of exceedance-conditional blocks with all coordinates in `window`.
pub fn dlp_check(
    d: &LightTailDensity,
    cond: &ConditionDescriptor,
    window: &DlpWindow,
    count: usize,
    delta: f64,
    seed: u64,
) -> Result<DlpEstimate> {
    let sample = sample_exceedance_conditional(d, cond, count, ProposalTilt::Matched, seed)?;
    Ok(DlpEstimate::from_sample(d, &sample, window, delta))
}

/// One row of [`location_law_check`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocationLawRow {
    pub a: f64,
    pub t: f64,
    pub s: f64,
    pub skewness: f64,
    /// KS distance of `(X − a)/s` to the standard normal, `X` drawn from `π^a`.
    pub ks: f64,
    /// `sup_x |P((X − a)/s ≤ x) − Φ(x)|` on a fine grid, by quadrature.
    pub ks_exact: f64,
    pub samples: usize,
}

pub fn location_law_check(
    d: &LightTailDensity,
    a_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<LocationLawRow>> {
    a_grid
        .iter()
        .map(|&a| {
            let td = TiltedDensity::with_mean(d, a)?;
            let s = td.sd();
            let xs = sampler_tilted(&td, samples, seed)?;
            let z: Vec<f64> = xs.iter().map(|x| (x - a) / s).collect();
            let ks = ks_one_sample(&z, std_normal_cdf);
            let mut ks_exact = 0.0f64;
            let mut f = td.cdf(a - 8.0 * s)?;
            let mut prev = a - 8.0 * s;
            for i in 1..=1600 {
                let x = -8.0 + 16.0 * i as f64 / 1600.0;
                let y = a + s * x;
                f += td.mass_between(prev.max(0.0), y.max(0.0))?;
                prev = y;
                ks_exact = ks_exact.max((f - std_normal_cdf(x)).abs());
            }
            Ok(LocationLawRow {
                a,
                t: td.t(),
                s,
                skewness: td.cumulants().skewness(),
                ks,
                ks_exact,
                samples,
            })
        })
        .collect()
}

/// One interval of [`exceedance_vs_point_equivalence`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquivalenceRow {
    pub interval: (f64, f64),
    pub exceedance_mass: f64,
    pub std_error: f64,
    pub tilted_mass: f64,
    pub ratio: f64,
    pub band_low: f64,
    pub band_high: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub a_n: f64,
    pub t: f64,
    pub s: f64,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub effective_sample_size: f64,
    pub rows: Vec<EquivalenceRow>,
}

/// `P_{A_n}(X₁ ∈ B)` from weighted exceedance draws against `Π^{a_n}(B)`.
///
/// Raises [`Error::MassTooSmall`] when `estimate − 2·SE < 0.01` for some `B`.
pub fn exceedance_vs_point_equivalence(
    d: &LightTailDensity,
    n: usize,
    a_n: f64,
    intervals: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let cond = ConditionDescriptor::exceedance(n, a_n);
    let sample = sample_exceedance_conditional(d, &cond, count, ProposalTilt::Matched, seed)?;
    let c = invert_m(d, a_n)?;
    let td = TiltedDensity::new(d, c.t)?;
    let (wlo, whi) = Reference::window(&td);
    let mut rows = Vec::with_capacity(intervals.len());
    for &(lo, hi) in intervals {
        let (p, se) = sample.probability(|b| b.x1 > lo && b.x1 < hi);
        if p - 2.0 * se < 0.01 {
            return Err(Error::MassTooSmall(p - 2.0 * se));
        }
        let g = if lo <= wlo.min(0.0) && hi >= whi {
            1.0
        } else {
            td.mass_between(lo.max(0.0), hi)?
        };
        rows.push(EquivalenceRow {
            interval: (lo, hi),
            exceedance_mass: p,
            std_error: se,
            tilted_mass: g,
            ratio: p / g,
            band_low: (p - 2.0 * se) / g,
            band_high: (p + 2.0 * se) / g,
        });
    }
    Ok(EquivalenceReport {
        n,
        a_n,
        t: c.t,
        s: c.s(),
        accepted: sample.len(),
        acceptance_rate: sample.acceptance_rate,
        effective_sample_size: sample.effective_sample_size,
        rows,
    })
}
