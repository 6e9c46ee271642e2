//! Rate function and saddlepoint tail probabilities for sums of i.i.d. draws,
//! with an exponential-tilting importance-sampling oracle.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::LightTailDensity;
use crate::error::{Error, Result};
use crate::rng::{split_counts, stream_rng};
use crate::roots::golden_max;
use crate::sampler::{TiltedSampler, STREAMS};
use crate::tilt::{invert_m, log_mgf, TiltedDensity};

/// Default lower bound on `λ_n = √n·t_n·s(t_n)` below which the asymptotic formula is refused.
pub const MIN_LAMBDA: f64 = 5.0;

/// `I(x) = x·t − log φ(t)` with `m(t) = x`.
pub fn rate_i(d: &LightTailDensity, x: f64) -> Result<f64> {
    let c = invert_m(d, x)?;
    Ok((x * c.t - c.log_phi).max(0.0))
}

/// `sup_t (x·t − log φ(t))` by golden-section search, independent of [`invert_m`].
pub fn rate_legendre(d: &LightTailDensity, x: f64) -> Result<f64> {
    let obj = |t: f64| Ok(x * t - log_mgf(d, t)?);
    if x <= d.mean() {
        return Err(Error::NotSolvable(format!(
            "x = {x} is not above the mean {}",
            d.mean()
        )));
    }
    let mut hi = 1.0;
    while obj(2.0 * hi)? > obj(hi)? {
        hi *= 2.0;
        if hi > crate::tilt::T_MAX {
            return Err(Error::BracketFail(
                "Legendre objective keeps increasing".into(),
            ));
        }
    }
    let (_, v) = golden_max(obj, 0.0, 2.0 * hi, 1e-13, 400)?;
    Ok(v)
}

/// Saddlepoint approximation of `P(S₁ⁿ ≥ n·a_n)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailEstimate {
    pub n: u64,
    pub a_n: f64,
    pub t_n: f64,
    pub s_n: f64,
    #[serde(rename = "I")]
    pub rate: f64,
    pub lambda_n: f64,
    pub log_prob: f64,
    pub prob: f64,
}

/// `exp(−n·I(a_n))/(√(2πn)·t_n·s(t_n))`, refused when `λ_n < 5`.
pub fn tail_prob(d: &LightTailDensity, n: u64, a_n: f64) -> Result<TailEstimate> {
    tail_prob_with(d, n, a_n, MIN_LAMBDA)
}

/// [`tail_prob`] with an explicit admissibility threshold on `λ_n`.
pub fn tail_prob_with(
    d: &LightTailDensity,
    n: u64,
    a_n: f64,
    min_lambda: f64,
) -> Result<TailEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let c = invert_m(d, a_n)?;
    if !(c.t > 0.0) {
        return Err(Error::NotSolvable(format!(
            "a_n = {a_n} is not above the mean"
        )));
    }
    let nf = n as f64;
    let s = c.s();
    let rate = (a_n * c.t - c.log_phi).max(0.0);
    let lambda_n = nf.sqrt() * c.t * s;
    if lambda_n < min_lambda {
        return Err(Error::OutOfRange(format!(
            "lambda_n = {lambda_n:.3} is below {min_lambda}; the saddlepoint formula is not admissible"
        )));
    }
    let log_prob = -nf * rate - ((2.0 * std::f64::consts::PI * nf).sqrt() * c.t * s).ln();
    Ok(TailEstimate {
        n,
        a_n,
        t_n: c.t,
        s_n: s,
        rate,
        lambda_n,
        log_prob,
        prob: log_prob.exp(),
    })
}

/// Importance-sampling estimate of `P(S₁ⁿ ≥ n·a_n)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub log_estimate: f64,
    pub rel_std_error: f64,
    pub effective_sample_size: f64,
    pub hit_fraction: f64,
    pub samples: usize,
    pub t: f64,
}

/// Unbiased estimate of `P(S₁ⁿ ≥ n·a_n)` from blocks drawn under the tilt `m(t) = a_n`.
///
/// Each block contributes `exp(−t·S + n·log φ(t))·1{S ≥ n·a_n}`. Work is split
/// over [`STREAMS`] seeded streams and reduced in stream order.
pub fn tail_prob_is_oracle(
    d: &LightTailDensity,
    n: u64,
    a_n: f64,
    samples: usize,
    seed: u64,
) -> Result<IsEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter(
            "n and samples must be positive".into(),
        ));
    }
    if (n as u128) * (samples as u128) > 1u128 << 34 {
        return Err(Error::InvalidParameter(
            "n * samples exceeds the compute budget of 2^34 draws".into(),
        ));
    }
    let c = invert_m(d, a_n)?;
    let td = TiltedDensity::new(d, c.t)?;
    let sampler = TiltedSampler::new(&td)?;
    let nf = n as f64;
    let level = nf * a_n;
    let t = c.t;
    // Weights are carried relative to exp(−t·n·a_n + n·log φ(t)) = exp(−n·I).
    let log_scale = -(level * t - nf * c.log_phi);

    let partial: Vec<(f64, f64, usize)> = split_counts(samples, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(stream, k)| {
            let mut rng = stream_rng(seed, stream as u64);
            let (mut sw, mut sw2, mut hits) = (0.0, 0.0, 0usize);
            for _ in 0..k {
                let mut sum = 0.0;
                for _ in 0..n {
                    sum += sampler.sample(&mut rng);
                }
                if sum >= level {
                    let w = (-t * (sum - level)).exp();
                    sw += w;
                    sw2 += w * w;
                    hits += 1;
                }
            }
            (sw, sw2, hits)
        })
        .collect();
    let (mut sw, mut sw2, mut hits) = (0.0, 0.0, 0usize);
    for (a, b, h) in partial {
        sw += a;
        sw2 += b;
        hits += h;
    }
    let ess = if sw2 > 0.0 { sw * sw / sw2 } else { 0.0 };
    if ess < 100.0 {
        return Err(Error::DegenerateWeights(ess));
    }
    let m = samples as f64;
    let mean = sw / m;
    let var = (sw2 / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
    let se = (var / m).sqrt();
    let log_estimate = log_scale + mean.ln();
    Ok(IsEstimate {
        estimate: log_estimate.exp(),
        std_error: (log_scale + se.ln()).exp(),
        log_estimate,
        rel_std_error: se / mean,
        effective_sample_size: ess,
        hit_fraction: hits as f64 / m,
        samples,
        t,
    })
}
