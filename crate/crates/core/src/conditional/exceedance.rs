//! Weighted rejection sampling of the law of `(X_1, …, X_n)` given `S₁ⁿ ≥ n·a_n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ConditionDescriptor;
use crate::density::LightTailDensity;
use crate::error::{Error, Result};
use crate::rng::{split_counts, stream_rng};
use crate::sampler::{TiltedSampler, STREAMS};
use crate::tilt::{invert_m, TiltedDensity};

/// Exponential tilt used to propose blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalTilt {
    /// `t_n = m⁻¹(a_n)`: the proposal sum is centred on the boundary.
    Matched,
    /// A fixed tilt; `0` gives plain rejection sampling from `p`.
    Fixed(f64),
}

/// One accepted block, summarised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedBlock {
    pub x1: f64,
    pub x2: f64,
    /// Unnormalised weight `exp(−t·(Σ − n·a_n))`.
    pub weight: f64,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
}

/// Weighted draws from the exceedance-conditional law.
#[derive(Debug, Clone, Serialize)]
pub struct ExceedanceSample {
    pub descriptor: ConditionDescriptor,
    pub blocks: Vec<WeightedBlock>,
    pub proposed: usize,
    pub acceptance_rate: f64,
    pub effective_sample_size: f64,
    pub tilt: f64,
}

impl ExceedanceSample {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight).sum()
    }

    /// Weighted probability of `event` with its delta-method standard error.
    pub fn probability<F: Fn(&WeightedBlock) -> bool>(&self, event: F) -> (f64, f64) {
        let sw = self.total_weight();
        if !(sw > 0.0) {
            return (f64::NAN, f64::NAN);
        }
        let p = self
            .blocks
            .iter()
            .filter(|b| event(b))
            .map(|b| b.weight)
            .sum::<f64>()
            / sw;
        let var = self
            .blocks
            .iter()
            .map(|b| {
                let z = if event(b) { 1.0 } else { 0.0 } - p;
                b.weight * b.weight * z * z
            })
            .sum::<f64>()
            / (sw * sw);
        (p, var.sqrt())
    }
}

/// Smallest acceptance rate tolerated before [`Error::LowAcceptance`].
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// Proposes `count` blocks from the tilt, keeps those with `Σ ≥ n·a_n`, and
/// weights them by `exp(−t·(Σ − n·a_n))`, which makes weighted averages
/// consistent for the exceedance-conditional law.
pub fn sample_exceedance_conditional(
    d: &LightTailDensity,
    cond: &ConditionDescriptor,
    count: usize,
    tilt: ProposalTilt,
    seed: u64,
) -> Result<ExceedanceSample> {
    cond.validate_exceedance()?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be positive".into()));
    }
    let (n, a) = (cond.n, cond.a_n);
    let t = match tilt {
        ProposalTilt::Matched => invert_m(d, a)?.t,
        ProposalTilt::Fixed(t) => t,
    };
    let td = TiltedDensity::new(d, t)?;
    let sampler = TiltedSampler::new(&td)?;
    let level = n as f64 * a;

    let parts: Vec<Vec<WeightedBlock>> = split_counts(count, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(stream, k)| {
            let mut rng = stream_rng(seed, stream as u64);
            let mut kept = Vec::new();
            let mut block = vec![0.0; n];
            for _ in 0..k {
                for v in block.iter_mut() {
                    *v = sampler.sample(&mut rng);
                }
                let sum: f64 = block.iter().sum();
                if sum >= level {
                    let (mn, mx) = block
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                            (lo.min(v), hi.max(v))
                        });
                    kept.push(WeightedBlock {
                        x1: block[0],
                        x2: block[1],
                        weight: (-t * (sum - level)).exp(),
                        sum,
                        min: mn,
                        max: mx,
                    });
                }
            }
            kept
        })
        .collect();
    let blocks = parts.concat();
    let acceptance_rate = blocks.len() as f64 / count as f64;
    if acceptance_rate < MIN_ACCEPTANCE {
        return Err(Error::LowAcceptance(acceptance_rate));
    }
    let sw: f64 = blocks.iter().map(|b| b.weight).sum();
    let sw2: f64 = blocks.iter().map(|b| b.weight * b.weight).sum();
    Ok(ExceedanceSample {
        descriptor: cond.clone(),
        blocks,
        proposed: count,
        acceptance_rate,
        effective_sample_size: sw * sw / sw2,
        tilt: t,
    })
}
