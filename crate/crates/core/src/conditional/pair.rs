//! Exact draws from the two-coordinate conditional `∝ p(u)·p(c − u)` on `(0, c)`.

use rand::Rng;

use crate::density::LightTailDensity;
use crate::error::Result;
use crate::sampler::InverseCdfTable;

/// Sampler of `u` given `u + v = c`, both coordinates i.i.d. from `p`.
///
/// Writing `u = c/2 + w`, the log-density of `w` is
/// `ψ(w) = −[V(c/2+w) + V(c/2−w) − 2V(c/2)]`, symmetric in `w`. When `p` is
/// log-concave `ψ` is concave and `|w|` is drawn exactly by rejection from a
/// flat-then-exponential envelope built on the tangent at one curvature scale.
/// Otherwise a fresh inverse-CDF table is built for each `c`.
#[derive(Debug, Clone)]
pub struct PairSampler {
    density: LightTailDensity,
    log_concave: bool,
}

/// Outcome counters of a [`PairSampler`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PairStats {
    pub proposals: u64,
    pub accepted: u64,
    pub tables: u64,
}

impl PairSampler {
    pub fn new(density: &LightTailDensity) -> Self {
        Self {
            density: density.clone(),
            log_concave: density.is_log_concave(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.log_concave
    }

    /// `ψ(w)` at half-sum `mid = c/2`.
    fn log_psi(&self, mid: f64, w: f64) -> f64 {
        let pot = self.density.potential();
        let v = if self.log_concave {
            -(pot.g.remainder(mid, w) + pot.g.remainder(mid, -w))
        } else {
            let vv = |x: f64| pot.g.value(x) - pot.q.value(x);
            -(vv(mid + w) + vv(mid - w) - 2.0 * vv(mid))
        };
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn dpsi(&self, mid: f64, w: f64) -> f64 {
        -(self.density.h(mid + w) - self.density.h(mid - w))
    }

    /// Draws `u ∈ (0, c)`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        c: f64,
        rng: &mut R,
        stats: &mut PairStats,
    ) -> Result<f64> {
        let mid = 0.5 * c;
        let w = if self.log_concave {
            self.sample_abs_w_exact(mid, rng, stats)
        } else {
            self.sample_abs_w_table(mid, rng, stats)?
        };
        let u = if rng.random::<bool>() {
            mid + w
        } else {
            mid - w
        };
        Ok(u.clamp(0.0, c))
    }

    fn sample_abs_w_exact<R: Rng + ?Sized>(
        &self,
        mid: f64,
        rng: &mut R,
        stats: &mut PairStats,
    ) -> f64 {
        let half = mid;
        let curv = 2.0 * self.density.h_prime(mid);
        let w1 = if curv > 0.0 && curv.is_finite() {
            1.0 / curv.sqrt()
        } else {
            half
        };
        // Envelope: 1 on [0, w_star), exp(−r (w − w_star)) beyond, truncated at `half`.
        let (w_star, r) = if w1 < half {
            let p1 = self.log_psi(mid, w1);
            let d1 = self.dpsi(mid, w1);
            if d1 < 0.0 && p1.is_finite() && p1 < 0.0 {
                ((w1 - p1 / d1).min(half), -d1)
            } else {
                (half, 0.0)
            }
        } else {
            (half, 0.0)
        };
        let a1 = w_star;
        let span = half - w_star;
        let a2 = if r > 0.0 && span > 0.0 {
            -(-r * span).exp_m1() / r
        } else {
            0.0
        };
        let total = a1 + a2;
        loop {
            stats.proposals += 1;
            let (w, log_env) = if rng.random::<f64>() * total < a1 {
                (rng.random::<f64>() * w_star, 0.0)
            } else {
                // truncated exponential on [0, span)
                let e = -(1.0 - rng.random::<f64>() * (-(-r * span).exp_m1())).ln() / r;
                let e = e.min(span);
                (w_star + e, -r * e)
            };
            if w >= half {
                continue;
            }
            let lp = self.log_psi(mid, w);
            if rng.random::<f64>().ln() <= lp - log_env {
                stats.accepted += 1;
                return w;
            }
        }
    }

    fn sample_abs_w_table<R: Rng + ?Sized>(
        &self,
        mid: f64,
        rng: &mut R,
        stats: &mut PairStats,
    ) -> Result<f64> {
        stats.tables += 1;
        stats.proposals += 1;
        stats.accepted += 1;
        let half = mid;
        let curv = 2.0 * self.density.h_prime(mid);
        let sigma = if curv > 0.0 && curv.is_finite() {
            1.0 / curv.sqrt()
        } else {
            half
        };
        let mut knots: Vec<f64> = (0..=256).map(|i| half * i as f64 / 256.0).collect();
        let inner = (12.0 * sigma).min(half);
        knots.extend((1..256).map(|i| inner * i as f64 / 256.0));
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let table = InverseCdfTable::build(|w| self.log_psi(mid, w).exp(), &knots)?;
        Ok(table.sample(rng))
    }
}
