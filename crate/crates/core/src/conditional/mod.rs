//! Conditional Monte Carlo under the point constraint `S₁ⁿ = n·a_n` and the
//! exceedance constraint `S₁ⁿ ≥ n·a_n`, with the empirical checks built on it.

mod checks;
mod exact;
mod exceedance;
mod ftilt;
mod pair;
mod point;
mod tv;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checks::{
    dlp_check, epsilon_schedule, epsilon_schedule_unchecked, exceedance_vs_point_equivalence,
    gibbs_local_check, location_law_check, schedule_trend, DlpEstimate, DlpWindow,
    EquivalenceReport, EquivalenceRow, LocalCheckRow, LocationLawRow, ScheduleTrend,
};
pub use exact::{
    exact_point_marginal, second_order_reference, ExactMarginalSummary, ExactPointMarginal,
    SecondOrderReference,
};
pub use exceedance::{
    sample_exceedance_conditional, ExceedanceSample, ProposalTilt, WeightedBlock, MIN_ACCEPTANCE,
};
pub use ftilt::{
    f_tilted_density, level_set_sampler, pushforward_sampler, AmbientLaw, FCatalog, FTiltSummary,
    FTiltedLaw, LevelSetSample, MetropolisRun,
};
pub use pair::{PairSampler, PairStats};
pub use point::{sample_point_conditional, GibbsConfig, PointSample};
pub use tv::{
    ks_one_sample, ks_pvalue, ks_two_sample, marginal_tv, marginal_tv_weighted, tv_by_quadrature,
    Reference, TvEstimate, MIN_TV_SAMPLES,
};

/// Which conditioning event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Point,
    Exceedance,
}

/// The conditioning event `S₁ⁿ = n·a_n` or `S₁ⁿ ≥ n·a_n`, or the same for `Σf(X_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionDescriptor {
    pub kind: ConditionKind,
    pub n: usize,
    pub a_n: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<FCatalog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_dim: Option<usize>,
}

impl ConditionDescriptor {
    pub fn point(n: usize, a_n: f64) -> Self {
        Self {
            kind: ConditionKind::Point,
            n,
            a_n,
            f: None,
            ambient_dim: None,
        }
    }

    pub fn exceedance(n: usize, a_n: f64) -> Self {
        Self {
            kind: ConditionKind::Exceedance,
            n,
            a_n,
            f: None,
            ambient_dim: None,
        }
    }

    fn validate_common(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "n = {} must be at least 2",
                self.n
            )));
        }
        if !self.a_n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "a_n = {} is not finite",
                self.a_n
            )));
        }
        Ok(())
    }

    pub(crate) fn validate_point(&self) -> Result<()> {
        if self.kind != ConditionKind::Point {
            return Err(Error::InvalidParameter("expected a point condition".into()));
        }
        self.validate_common()
    }

    pub(crate) fn validate_exceedance(&self) -> Result<()> {
        if self.kind != ConditionKind::Exceedance {
            return Err(Error::InvalidParameter(
                "expected an exceedance condition".into(),
            ));
        }
        self.validate_common()
    }
}
