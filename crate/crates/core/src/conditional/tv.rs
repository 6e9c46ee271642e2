//! Total-variation and Kolmogorov–Smirnov distances between samples and reference densities.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::rng::stream_rng;
use crate::tilt::TiltedDensity;

/// A normalised one-dimensional reference law.
pub trait Reference: Sync {
    fn pdf(&self, x: f64) -> f64;
    /// `∫_lo^hi` of the density.
    fn mass_between(&self, lo: f64, hi: f64) -> Result<f64>;
    /// Interval carrying all but a negligible fraction of the mass.
    fn window(&self) -> (f64, f64);
}

impl Reference for TiltedDensity {
    fn pdf(&self, x: f64) -> f64 {
        TiltedDensity::pdf(self, x)
    }

    fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        TiltedDensity::mass_between(self, lo, hi)
    }

    fn window(&self) -> (f64, f64) {
        self.support_window()
    }
}

/// Binned total-variation estimate with a bootstrap interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TvEstimate {
    pub tv: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bins: usize,
    pub sample_size: usize,
    pub bin_width: f64,
}

/// Fewest draws accepted by [`marginal_tv`].
pub const MIN_TV_SAMPLES: usize = 1000;
const BOOTSTRAP: usize = 200;
const MAX_BINS: usize = 10_000;

fn quantile_sorted(xs: &[f64], p: f64) -> f64 {
    let pos = p * (xs.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < xs.len() {
        xs[i] * (1.0 - f) + xs[i + 1] * f
    } else {
        xs[i]
    }
}

struct Binning {
    lo: f64,
    width: f64,
    bins: usize,
    /// Reference mass per bin.
    reference: Vec<f64>,
    /// Reference mass outside `[lo, lo + bins·width)`.
    outside: f64,
}

impl Binning {
    fn new(sorted: &[f64], reference: &dyn Reference) -> Result<Self> {
        let n = sorted.len() as f64;
        let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let range = hi - lo;
        if !(range > 0.0) {
            return Err(Error::InvalidParameter("sample has zero spread".into()));
        }
        let mut width = 2.0 * iqr / n.cbrt();
        if !(width > 0.0) {
            width = range / n.sqrt();
        }
        let bins = ((range / width).ceil() as usize).clamp(1, MAX_BINS);
        let width = range / bins as f64 * (1.0 + 1e-12);
        let mut masses = Vec::with_capacity(bins);
        for i in 0..bins {
            let a = lo + i as f64 * width;
            masses.push(reference.mass_between(a, a + width)?);
        }
        let (wlo, whi) = reference.window();
        let left = if wlo < lo {
            reference.mass_between(wlo, lo)?
        } else {
            0.0
        };
        let right_edge = lo + bins as f64 * width;
        let right = if whi > right_edge {
            reference.mass_between(right_edge, whi)?
        } else {
            0.0
        };
        Ok(Self {
            lo,
            width,
            bins,
            reference: masses,
            outside: left + right,
        })
    }

    fn index(&self, x: f64) -> Option<usize> {
        let u = (x - self.lo) / self.width;
        if u >= 0.0 && (u as usize) < self.bins {
            Some(u as usize)
        } else {
            None
        }
    }

    fn tv(&self, hist: &[f64], total: f64) -> f64 {
        let inside: f64 = hist
            .iter()
            .zip(&self.reference)
            .map(|(&h, &r)| (h / total - r).abs())
            .sum();
        (0.5 * (inside + self.outside)).clamp(0.0, 1.0)
    }
}

fn finish(tv: f64, mut boot: Vec<f64>, bins: usize, n: usize, width: f64) -> TvEstimate {
    boot.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&boot, 0.025).min(tv).max(0.0);
    let hi = quantile_sorted(&boot, 0.975).max(tv).min(1.0);
    TvEstimate {
        tv,
        ci_low: lo,
        ci_high: hi,
        bins,
        sample_size: n,
        bin_width: width,
    }
}

/// `½·Σ_bins |empirical mass − reference mass|`, plus half the reference mass
/// outside the sample range.
///
/// Bins follow the Freedman–Diaconis rule on the sample; the reference mass of
/// each bin is a quadrature of its density. The interval is the 2.5–97.5%
/// range of 200 bootstrap resamples, widened to contain the point estimate.
pub fn marginal_tv(sample: &[f64], reference: &dyn Reference, seed: u64) -> Result<TvEstimate> {
    if sample.len() < MIN_TV_SAMPLES {
        return Err(Error::TooFewSamples {
            got: sample.len(),
            needed: MIN_TV_SAMPLES,
        });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let binning = Binning::new(&sorted, reference)?;
    let idx: Vec<usize> = sample
        .iter()
        .map(|&x| binning.index(x).unwrap_or(binning.bins - 1))
        .collect();
    let mut hist = vec![0.0; binning.bins];
    for &i in &idx {
        hist[i] += 1.0;
    }
    let n = sample.len();
    let tv = binning.tv(&hist, n as f64);

    let mut rng = stream_rng(seed, 0);
    let boot = (0..BOOTSTRAP)
        .map(|_| {
            hist.iter_mut().for_each(|h| *h = 0.0);
            for _ in 0..n {
                hist[idx[rng.random_range(0..n)]] += 1.0;
            }
            binning.tv(&hist, n as f64)
        })
        .collect();
    Ok(finish(tv, boot, binning.bins, n, binning.width))
}

/// [`marginal_tv`] for a weighted sample; bootstrap resamples `(x, w)` pairs.
pub fn marginal_tv_weighted(
    sample: &[f64],
    weights: &[f64],
    reference: &dyn Reference,
    seed: u64,
) -> Result<TvEstimate> {
    if sample.len() != weights.len() {
        return Err(Error::InvalidParameter(
            "sample and weights differ in length".into(),
        ));
    }
    if sample.len() < MIN_TV_SAMPLES {
        return Err(Error::TooFewSamples {
            got: sample.len(),
            needed: MIN_TV_SAMPLES,
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter(
            "weights must be finite and non-negative".into(),
        ));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let binning = Binning::new(&sorted, reference)?;
    let idx: Vec<usize> = sample
        .iter()
        .map(|&x| binning.index(x).unwrap_or(binning.bins - 1))
        .collect();
    let mut hist = vec![0.0; binning.bins];
    for (&i, &w) in idx.iter().zip(weights) {
        hist[i] += w;
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("weights sum to zero".into()));
    }
    let n = sample.len();
    let tv = binning.tv(&hist, total);

    let mut rng = stream_rng(seed, 0);
    let boot = (0..BOOTSTRAP)
        .map(|_| {
            hist.iter_mut().for_each(|h| *h = 0.0);
            let mut tot = 0.0;
            for _ in 0..n {
                let k = rng.random_range(0..n);
                hist[idx[k]] += weights[k];
                tot += weights[k];
            }
            binning.tv(&hist, tot)
        })
        .collect();
    Ok(finish(tv, boot, binning.bins, n, binning.width))
}

/// `½∫|p − q|` by adaptive quadrature over the union of both windows.
pub fn tv_by_quadrature(p: &dyn Reference, q: &dyn Reference) -> Result<f64> {
    let (a0, a1) = p.window();
    let (b0, b1) = q.window();
    let (lo, hi) = (a0.min(b0), a1.max(b1));
    let panels = 256;
    let w = (hi - lo) / panels as f64;
    let opts = QuadOptions {
        rel_tol: 1e-9,
        abs_tol: 1e-14,
        ..Default::default()
    };
    let mut acc = 0.0;
    for i in 0..panels {
        let a = lo + i as f64 * w;
        acc += integrate(|x| (p.pdf(x) - q.pdf(x)).abs(), a, a + w, opts)?.0;
    }
    Ok((0.5 * acc).clamp(0.0, 1.0))
}

/// `sup_x |F_n(x) − F(x)|` for the empirical CDF of `sample`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value of statistic `d` at effective sample size `n`.
pub fn ks_pvalue(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::builtin_weibull;
    use crate::sampler::sampler_tilted;

    #[test]
    fn pvalue_known_points() {
        // Q(1.36) ≈ 0.049, Q(1.63) ≈ 0.0098 in the large-n limit
        assert!((ks_pvalue(1.36 / 1e4, 1e8) - 0.049).abs() < 2e-3);
        assert!((ks_pvalue(1.63 / 1e4, 1e8) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        let b: Vec<f64> = (0..100).map(|i| i as f64 + 1000.0).collect();
        assert_eq!(ks_two_sample(&a, &b), 1.0);
    }

    #[test]
    fn too_few_samples() {
        let td = TiltedDensity::with_mean(&builtin_weibull(2.0).unwrap(), 2.0).unwrap();
        assert!(matches!(
            marginal_tv(&[1.0; 10], &td, 0),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn null_and_mismatch() {
        let d = builtin_weibull(2.5).unwrap();
        let td = TiltedDensity::with_mean(&d, 3.0).unwrap();
        let xs = sampler_tilted(&td, 100_000, 5).unwrap();
        let e = marginal_tv(&xs, &td, 1).unwrap();
        assert!(e.tv < 0.05, "{e:?}");
        assert!(e.ci_low <= e.tv && e.tv <= e.ci_high);
        let wrong = TiltedDensity::with_mean(&d, 3.5).unwrap();
        let e2 = marginal_tv(&xs, &wrong, 1).unwrap();
        assert!(e2.tv > 0.2, "{e2:?}");
        let exact = tv_by_quadrature(&td, &wrong).unwrap();
        assert!((e2.tv - exact).abs() < 0.03, "{} vs {exact}", e2.tv);
    }

    #[test]
    fn uniform_weights_match_unweighted() {
        let td = TiltedDensity::with_mean(&builtin_weibull(2.0).unwrap(), 2.0).unwrap();
        let xs = sampler_tilted(&td, 5000, 2).unwrap();
        let a = marginal_tv(&xs, &td, 3).unwrap();
        let b = marginal_tv_weighted(&xs, &vec![2.5; xs.len()], &td, 3).unwrap();
        assert!((a.tv - b.tv).abs() < 1e-12);
    }
}
