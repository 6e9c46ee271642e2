//! Pairwise Gibbs sampling on the hyperplane `Σx_i = n·a_n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pair::{PairSampler, PairStats};
use super::ConditionDescriptor;
use crate::density::LightTailDensity;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use rand::Rng;

/// Run lengths of the point-conditional chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    pub chains: usize,
    /// Retained states per chain.
    pub draws_per_chain: usize,
    /// Pair updates before the first retained state; `None` means `1000·n`.
    pub burn_in: Option<u64>,
    /// Pair updates between retained states; `None` means `n`.
    pub stride: Option<u64>,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            chains: 8,
            draws_per_chain: 12_500,
            burn_in: None,
            stride: None,
            seed: 1,
        }
    }
}

/// Retained states of the point-conditional chains.
#[derive(Debug, Clone, Serialize)]
pub struct PointSample {
    pub descriptor: ConditionDescriptor,
    /// First coordinate of every retained state, chains concatenated in order.
    pub x1: Vec<f64>,
    /// Second coordinate of every retained state.
    pub x2: Vec<f64>,
    /// Largest `|Σx − n·a_n|/(n·a_n)` over retained states.
    pub max_residual: f64,
    pub acceptance_rate: f64,
    pub exact_pair_updates: bool,
    pub burn_in: u64,
    pub stride: u64,
    pub chains: usize,
}

impl PointSample {
    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }
}

/// Pair updates between exact re-projections onto the constraint.
const REPROJECT_EVERY: u64 = 1 << 16;

struct ChainOutput {
    x1: Vec<f64>,
    x2: Vec<f64>,
    max_residual: f64,
    stats: PairStats,
}

fn run_chain(
    pair: &PairSampler,
    n: usize,
    a: f64,
    burn_in: u64,
    stride: u64,
    draws: usize,
    seed: u64,
    chain: usize,
) -> Result<ChainOutput> {
    let mut rng = stream_rng(seed, chain as u64);
    let mut x = vec![a; n];
    let level = n as f64 * a;
    let mut stats = PairStats::default();
    let mut out = ChainOutput {
        x1: Vec::with_capacity(draws),
        x2: Vec::with_capacity(draws),
        max_residual: 0.0,
        stats,
    };
    let mut since_projection = 0u64;
    let mut update =
        |x: &mut [f64], rng: &mut rand_chacha::ChaCha8Rng, stats: &mut PairStats| -> Result<()> {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let c = x[i] + x[j];
            let u = pair.sample(c, rng, stats)?;
            x[i] = u;
            x[j] = c - u;
            since_projection += 1;
            if since_projection >= REPROJECT_EVERY {
                since_projection = 0;
                let r: f64 = x.iter().sum::<f64>() - level;
                let k = x
                    .iter()
                    .enumerate()
                    .fold(0, |b, (k, &v)| if v > x[b] { k } else { b });
                x[k] -= r;
            }
            Ok(())
        };
    for _ in 0..burn_in {
        update(&mut x, &mut rng, &mut stats)?;
    }
    for _ in 0..draws {
        for _ in 0..stride {
            update(&mut x, &mut rng, &mut stats)?;
        }
        let r = (x.iter().sum::<f64>() - level).abs() / level;
        out.max_residual = out.max_residual.max(r);
        out.x1.push(x[0]);
        out.x2.push(x[1]);
    }
    out.stats = stats;
    Ok(out)
}

/// Samples the law of `(X_1, …, X_n)` given `S₁ⁿ = n·a_n` by pairwise Gibbs.
///
/// Each update picks a uniform pair `(i, j)`, keeps `c = x_i + x_j` and draws
/// `x_i` from the exact conditional `∝ p(u)·p(c − u)`. Chains start from the
/// constant configuration `x_i = a_n` and run in parallel on disjoint streams.
pub fn sample_point_conditional(
    d: &LightTailDensity,
    cond: &ConditionDescriptor,
    config: &GibbsConfig,
) -> Result<PointSample> {
    cond.validate_point()?;
    let n = cond.n;
    let a = cond.a_n;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InfeasibleStart(format!(
            "a_n = {a} is not inside the support (0, inf)"
        )));
    }
    if !(d.ln_pdf_unchecked(a).is_finite()) {
        return Err(Error::InfeasibleStart(format!("p(a_n) = 0 at a_n = {a}")));
    }
    if config.chains == 0 || config.draws_per_chain == 0 {
        return Err(Error::InvalidParameter(
            "chains and draws_per_chain must be positive".into(),
        ));
    }
    let burn_in = config.burn_in.unwrap_or(1000 * n as u64);
    let stride = config.stride.unwrap_or(n as u64).max(1);
    let pair = PairSampler::new(d);
    let outputs: Vec<ChainOutput> = (0..config.chains)
        .into_par_iter()
        .map(|c| {
            run_chain(
                &pair,
                n,
                a,
                burn_in,
                stride,
                config.draws_per_chain,
                config.seed,
                c,
            )
        })
        .collect::<Result<_>>()?;

    let mut sample = PointSample {
        descriptor: cond.clone(),
        x1: Vec::with_capacity(config.chains * config.draws_per_chain),
        x2: Vec::with_capacity(config.chains * config.draws_per_chain),
        max_residual: 0.0,
        acceptance_rate: 0.0,
        exact_pair_updates: pair.is_exact(),
        burn_in,
        stride,
        chains: config.chains,
    };
    let (mut prop, mut acc) = (0u64, 0u64);
    for o in outputs {
        sample.x1.extend_from_slice(&o.x1);
        sample.x2.extend_from_slice(&o.x2);
        sample.max_residual = sample.max_residual.max(o.max_residual);
        prop += o.stats.proposals;
        acc += o.stats.accepted;
    }
    sample.acceptance_rate = if prop > 0 {
        acc as f64 / prop as f64
    } else {
        1.0
    };
    Ok(sample)
}
