//! One function per experiment kind: typed result plus CSV table.

use exdev::conditional::{
    epsilon_schedule_unchecked, exact_point_marginal, exceedance_vs_point_equivalence,
    f_tilted_density, level_set_sampler, marginal_tv, sample_exceedance_conditional,
    sample_point_conditional, schedule_trend, tv_by_quadrature, AmbientLaw, ConditionDescriptor,
    DlpEstimate, DlpWindow, EquivalenceReport, FCatalog, FTiltSummary, GibbsConfig, ProposalTilt,
    ScheduleTrend, TvEstimate,
};
use exdev::edgeworth::std_normal_pdf;
use exdev::tilt::GrowthCondition;
use exdev::{
    abelian_check, convolve_oracle, cumulants, edgeworth_from_skewness, growth_condition,
    invert_m, self_neglect_check, tail_prob_is_oracle, tail_prob_with, AbelianReport,
    CumulantTriple, DensitySpec, GridSpec, IsEstimate, LightTailDensity,
    TailEstimate, TiltedDensity,
};
use serde::Serialize;

use crate::config::{
    parse_grid, DlpParams, EdgeworthParams, EquivParams, GibbsTvParams, LevelsetParams, Params,
    ResolvedConfig, TailParams, TiltParams,
};
use crate::error::CliError;
use crate::report::{Cell, Table};

type R<T> = Result<T, CliError>;

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

/// Runs the configured experiment.
pub fn run(cfg: &ResolvedConfig) -> R<(serde_json::Value, Table)> {
    let d = cfg.density.build()?;
    let seed = cfg.seed;
    fn pack<T: Serialize>(r: (T, Table)) -> R<(serde_json::Value, Table)> {
        let v = serde_json::to_value(&r.0).map_err(|e| CliError::Output(e.to_string()))?;
        Ok((v, r.1))
    }
    match &cfg.params {
        Params::Tilt(p) => pack(tilt(&d, p)?),
        Params::Edgeworth(p) => pack(edgeworth(&d, p)?),
        Params::Tail(p) => pack(tail(&d, p, seed)?),
        Params::GibbsTv(p) => pack(gibbs_tv(&d, p, seed)?),
        Params::Dlp(p) => pack(dlp(&d, &cfg.density, p, seed)?),
        Params::Levelset(p) => pack(levelset(&d, p, seed)?),
        Params::Equiv(p) => pack(equiv(&d, p, seed)?),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfNeglectRow {
    pub t: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TiltChecks {
    pub m_ratio_improves: bool,
    pub s2_ratio_improves: bool,
    pub skewness_monotone: bool,
    pub skewness_last_below_0_1: bool,
    pub self_neglect_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TiltResult {
    pub class: exdev::RegularityClass,
    pub abelian: AbelianReport,
    pub point: Option<CumulantTriple>,
    pub self_neglect: Vec<SelfNeglectRow>,
    pub checks: TiltChecks,
}

pub fn tilt(d: &LightTailDensity, p: &TiltParams) -> R<(TiltResult, Table)> {
    let grid = parse_grid(&p.grid)?;
    let abelian = abelian_check(d, &grid)?;
    let point = match (p.t, p.a) {
        (Some(t), _) => Some(cumulants(d, t)?),
        (None, Some(a)) => Some(invert_m(d, a)?),
        (None, None) => None,
    };
    let self_neglect = p
        .self_neglect_t
        .iter()
        .map(|&t| {
            Ok(SelfNeglectRow {
                t,
                sup: self_neglect_check(d, t, (-p.self_neglect_u, p.self_neglect_u))?,
            })
        })
        .collect::<R<Vec<_>>>()?;
    let sups: Vec<f64> = self_neglect.iter().map(|r| r.sup).collect();
    let s = &abelian.summary;
    let checks = TiltChecks {
        m_ratio_improves: s.m_dev_last < s.m_dev_first,
        s2_ratio_improves: s.s2_dev_last < s.s2_dev_first,
        skewness_monotone: s.skewness_monotone,
        skewness_last_below_0_1: s.skewness_last.abs() < 0.1,
        self_neglect_decreasing: strictly_decreasing(&sups),
    };
    let mut table = Table::new(&[
        "t",
        "m",
        "s2",
        "mu3",
        "psi",
        "psi_prime",
        "psi_second",
        "m_ratio",
        "s2_ratio",
        "mu3_ratio",
        "mu3_psi2_ratio",
        "skewness",
        "psi2_over_psi_prime",
    ]);
    let a = &abelian;
    for i in 0..a.t.len() {
        table.push(vec![
            a.t[i].into(),
            a.m[i].into(),
            a.s2[i].into(),
            a.mu3[i].into(),
            a.psi[i].into(),
            a.psi_prime[i].into(),
            a.psi_second[i].into(),
            a.m_ratio[i].into(),
            a.s2_ratio[i].into(),
            a.mu3_ratio[i].into(),
            a.mu3_psi2_ratio[i].into(),
            a.skewness[i].into(),
            a.psi2_over_psi_prime[i].into(),
        ]);
    }
    Ok((
        TiltResult {
            class: d.class(),
            abelian,
            point,
            self_neglect,
            checks,
        },
        table,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeworthRow {
    pub n: usize,
    pub sup_err_edgeworth: f64,
    pub sup_err_gaussian: f64,
    pub oracle_boundary_mass: f64,
    /// Previous row's Edgeworth error over this one.
    pub shrink_factor: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeworthChecks {
    pub shrink_at_least_1_5: bool,
    /// Only asserted when the skewness exceeds 0.05 in absolute value.
    pub gaussian_not_better_at_first_n: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeworthResult {
    pub a: f64,
    pub t: f64,
    pub s: f64,
    pub skewness: f64,
    pub rows: Vec<EdgeworthRow>,
    pub checks: EdgeworthChecks,
}

pub fn edgeworth(d: &LightTailDensity, p: &EdgeworthParams) -> R<(EdgeworthResult, Table)> {
    let td = TiltedDensity::with_mean(d, p.a)?;
    let c = td.cumulants();
    let skew = c.skewness();
    let grid = GridSpec {
        half_width: p.grid_half_width,
        points: p.grid_points,
    };
    let mut rows = Vec::with_capacity(p.n_list.len());
    let mut table = Table::new(&["n", "x", "oracle", "edgeworth", "gaussian", "abs_err"]);
    let mut prev: Option<f64> = None;
    for &n in &p.n_list {
        let tab = convolve_oracle(&td, n, grid)?;
        let edge = |x: f64| edgeworth_from_skewness(skew, n, x).value;
        let e = tab.sup_distance(edge, p.x_range);
        let g = tab.sup_distance(std_normal_pdf, p.x_range);
        rows.push(EdgeworthRow {
            n,
            sup_err_edgeworth: e,
            sup_err_gaussian: g,
            oracle_boundary_mass: tab.boundary_mass,
            shrink_factor: prev.map(|q| q / e),
        });
        prev = Some(e);
        for i in 0..p.x_points {
            let x = -p.x_range + 2.0 * p.x_range * i as f64 / (p.x_points - 1) as f64;
            let o = tab.eval(x);
            let ev = edge(x);
            table.push(vec![
                n.into(),
                x.into(),
                o.into(),
                ev.into(),
                std_normal_pdf(x).into(),
                (o - ev).abs().into(),
            ]);
        }
    }
    let checks = EdgeworthChecks {
        shrink_at_least_1_5: rows.iter().skip(1).all(|r| r.shrink_factor >= Some(1.5)),
        gaussian_not_better_at_first_n: (skew.abs() > 0.05)
            .then(|| rows[0].sup_err_gaussian >= rows[0].sup_err_edgeworth),
    };
    Ok((
        EdgeworthResult {
            a: p.a,
            t: c.t,
            s: c.s(),
            skewness: skew,
            rows,
            checks,
        },
        table,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct TailChecks {
    pub lambda_admissible: bool,
    pub relative_difference: f64,
    /// `max(0.1, 3·relative standard error)`.
    pub tolerance: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailResult {
    pub saddlepoint: TailEstimate,
    pub oracle: IsEstimate,
    pub checks: TailChecks,
}

pub fn tail(d: &LightTailDensity, p: &TailParams, seed: u64) -> R<(TailResult, Table)> {
    let sp = tail_prob_with(d, p.n, p.a, p.min_lambda)?;
    let or = tail_prob_is_oracle(d, p.n, p.a, p.oracle_samples, seed)?;
    let rel = (sp.prob / or.estimate - 1.0).abs();
    let tol = (3.0 * or.rel_std_error).max(0.1);
    let checks = TailChecks {
        lambda_admissible: sp.lambda_n >= exdev::MIN_LAMBDA,
        relative_difference: rel,
        tolerance: tol,
        agree: rel <= tol,
    };
    let mut table = Table::new(&[
        "n",
        "a_n",
        "t_n",
        "s_n",
        "I",
        "lambda_n",
        "log_prob",
        "prob",
        "oracle",
        "oracle_std_error",
        "oracle_rel_std_error",
        "relative_difference",
    ]);
    table.push(vec![
        sp.n.into(),
        sp.a_n.into(),
        sp.t_n.into(),
        sp.s_n.into(),
        sp.rate.into(),
        sp.lambda_n.into(),
        sp.log_prob.into(),
        sp.prob.into(),
        or.estimate.into(),
        or.std_error.into(),
        or.rel_std_error.into(),
        rel.into(),
    ]);
    Ok((
        TailResult {
            saddlepoint: sp,
            oracle: or,
            checks,
        },
        table,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsTvRow {
    pub n: usize,
    pub a_n: f64,
    pub t: f64,
    pub s: f64,
    pub tv: TvEstimate,
    /// TV between the exact first-coordinate marginal and the tilt, by quadrature.
    pub exact_tv: f64,
    pub max_residual: f64,
    pub acceptance_rate: f64,
    pub exact_pair_updates: bool,
    pub burn_in: u64,
    pub stride: u64,
    pub growth: GrowthCondition,
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsTvChecks {
    pub tv_strictly_decreasing: bool,
    pub tv_last_below_0_1: bool,
    pub null_floor_below_0_05: Option<bool>,
    pub exact_tv_strictly_decreasing: bool,
    /// Flagged when the growth functional fails to decrease along `n`.
    pub growth_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsTvResult {
    pub rows: Vec<GibbsTvRow>,
    /// TV estimate of an exact tilted sample of the same size at the last `n`.
    pub null_floor: Option<TvEstimate>,
    pub checks: GibbsTvChecks,
}

pub fn gibbs_tv(d: &LightTailDensity, p: &GibbsTvParams, seed: u64) -> R<(GibbsTvResult, Table)> {
    let mut rows = Vec::with_capacity(p.n_list.len());
    let mut last_td = None;
    for &n in &p.n_list {
        let a = (n as f64).powf(p.alpha);
        let cfg = GibbsConfig {
            chains: p.chains,
            draws_per_chain: p.steps,
            burn_in: Some(p.burn_in_factor * n as u64),
            stride: Some(p.stride_factor * n as u64),
            seed,
        };
        let sample = sample_point_conditional(d, &ConditionDescriptor::point(n, a), &cfg)?;
        let td = TiltedDensity::with_mean(d, a)?;
        let tv = marginal_tv(&sample.x1, &td, seed)?;
        let ex = exact_point_marginal(d, n, a)?;
        let exact_tv = tv_by_quadrature(&ex, ex.tilted())?;
        let c = td.cumulants();
        rows.push(GibbsTvRow {
            n,
            a_n: a,
            t: c.t,
            s: c.s(),
            tv,
            exact_tv,
            max_residual: sample.max_residual,
            acceptance_rate: sample.acceptance_rate,
            exact_pair_updates: sample.exact_pair_updates,
            burn_in: sample.burn_in,
            stride: sample.stride,
            growth: growth_condition(d, n as u64, a)?,
        });
        last_td = Some((td, sample.len()));
    }
    let null_floor = match (p.null_test, last_td) {
        (true, Some((td, size))) => {
            let xs = exdev::sampler_tilted(&td, size, seed.wrapping_add(1))?;
            Some(marginal_tv(&xs, &td, seed)?)
        }
        _ => None,
    };
    let tvs: Vec<f64> = rows.iter().map(|r| r.tv.tv).collect();
    let exact: Vec<f64> = rows.iter().map(|r| r.exact_tv).collect();
    let growth: Vec<f64> = rows.iter().map(|r| r.growth.lemma_form).collect();
    let checks = GibbsTvChecks {
        tv_strictly_decreasing: strictly_decreasing(&tvs),
        tv_last_below_0_1: tvs.last().is_some_and(|&v| v < 0.1),
        null_floor_below_0_05: null_floor.map(|e| e.tv < 0.05),
        exact_tv_strictly_decreasing: strictly_decreasing(&exact),
        growth_decreasing: strictly_decreasing(&growth),
    };
    let mut table = Table::new(&[
        "n",
        "a_n",
        "tv",
        "tv_ci_low",
        "tv_ci_high",
        "bins",
        "sample_size",
        "exact_tv",
        "max_residual",
        "acceptance_rate",
        "growth_lemma_form",
        "growth_display_form",
    ]);
    for r in &rows {
        table.push(vec![
            r.n.into(),
            r.a_n.into(),
            r.tv.tv.into(),
            r.tv.ci_low.into(),
            r.tv.ci_high.into(),
            r.tv.bins.into(),
            r.tv.sample_size.into(),
            r.exact_tv.into(),
            r.max_residual.into(),
            r.acceptance_rate.into(),
            r.growth.lemma_form.into(),
            r.growth.display_form.into(),
        ]);
    }
    Ok((
        GibbsTvResult {
            rows,
            null_floor,
            checks,
        },
        table,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct DlpRow {
    pub n: usize,
    pub a_n: f64,
    pub s: f64,
    pub window: DlpWindow,
    pub estimate: DlpEstimate,
    /// Report-only window `ε = n^0.1·s·√(2 log n)` on the same sample.
    pub diagnostic: DlpEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct DlpChecks {
    pub estimate_strictly_increasing: bool,
    pub estimate_non_decreasing: bool,
    pub last_above_0_9: bool,
    /// Some schedule window reaches below zero, so its estimate is trivially one.
    pub schedule_vacuous: bool,
    pub diagnostic_non_decreasing: bool,
    pub diagnostic_last_above_0_9: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DlpResult {
    pub k: f64,
    pub rows: Vec<DlpRow>,
    pub schedule: ScheduleTrend,
    pub checks: DlpChecks,
}

fn dlp_k(spec: &DensitySpec, p: &DlpParams) -> R<f64> {
    match (p.k, spec) {
        (Some(k), _) => Ok(k),
        (None, DensitySpec::Weibull { k }) => Ok(*k),
        _ => Err(CliError::Invalid(
            "dlp needs k unless the density is weibull".into(),
        )),
    }
}

pub fn dlp(
    d: &LightTailDensity,
    spec: &DensitySpec,
    p: &DlpParams,
    seed: u64,
) -> R<(DlpResult, Table)> {
    let k = dlp_k(spec, p)?;
    let mut rows = Vec::with_capacity(p.n_list.len());
    for &n in &p.n_list {
        let a = (n as f64).powf(p.alpha);
        let window = epsilon_schedule_unchecked(k, n, a)?;
        let cond = ConditionDescriptor::exceedance(n, a);
        let sample = sample_exceedance_conditional(d, &cond, p.count, ProposalTilt::Matched, seed)?;
        let estimate = DlpEstimate::from_sample(d, &sample, &window, p.delta);
        let s = invert_m(d, a)?.s();
        let nf = n as f64;
        let diag = window.with_epsilon(nf.powf(0.1) * s * (2.0 * nf.ln()).sqrt());
        let diagnostic = DlpEstimate::from_sample(d, &sample, &diag, p.delta);
        rows.push(DlpRow {
            n,
            a_n: a,
            s,
            window,
            estimate,
            diagnostic,
        });
    }
    let schedule = schedule_trend(k, p.alpha, &p.n_list)?;
    let est: Vec<f64> = rows.iter().map(|r| r.estimate.estimate).collect();
    let diag: Vec<f64> = rows.iter().map(|r| r.diagnostic.estimate).collect();
    let checks = DlpChecks {
        estimate_strictly_increasing: strictly_increasing(&est),
        estimate_non_decreasing: non_decreasing(&est),
        last_above_0_9: est.last().is_some_and(|&v| v > 0.9),
        schedule_vacuous: rows.iter().any(|r| r.window.infeasible),
        diagnostic_non_decreasing: non_decreasing(&diag),
        diagnostic_last_above_0_9: diag.last().is_some_and(|&v| v > 0.9),
    };
    let mut table = Table::new(&[
        "n",
        "a_n",
        "epsilon_n",
        "epsilon_over_a",
        "infeasible",
        "estimate",
        "std_error",
        "accepted",
        "effective_sample_size",
        "diagnostic_epsilon",
        "diagnostic_estimate",
        "diagnostic_std_error",
        "condition_proxy",
    ]);
    for r in &rows {
        table.push(vec![
            r.n.into(),
            r.a_n.into(),
            r.window.epsilon_n.into(),
            r.window.epsilon_over_a.into(),
            r.window.infeasible.into(),
            r.estimate.estimate.into(),
            r.estimate.std_error.into(),
            r.estimate.accepted.into(),
            r.estimate.effective_sample_size.into(),
            r.diagnostic.window.epsilon_n.into(),
            r.diagnostic.estimate.into(),
            r.diagnostic.std_error.into(),
            r.estimate.condition_proxy.into(),
        ]);
    }
    Ok((
        DlpResult {
            k,
            rows,
            schedule,
            checks,
        },
        table,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelsetRow {
    pub tilt: FTiltSummary,
    pub epsilon: f64,
    pub hit_fraction: f64,
    pub radial_sd: f64,
    pub relative_radial_sd: f64,
    pub method: &'static str,
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelsetChecks {
    pub radial_sd_decreasing: bool,
    pub relative_radial_sd_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelsetResult {
    pub ambient: String,
    pub rows: Vec<LevelsetRow>,
    pub checks: LevelsetChecks,
}

pub fn levelset(d: &LightTailDensity, p: &LevelsetParams, seed: u64) -> R<(LevelsetResult, Table)> {
    let f = FCatalog::parse(&p.f)?;
    let ambient = match p.ambient.as_str() {
        "positive" => AmbientLaw::Positive(d.clone()),
        _ => AmbientLaw::SignedRoot(d.clone()),
    };
    let mut rows = Vec::with_capacity(p.a_list.len());
    for &a in &p.a_list {
        let law = f_tilted_density(ambient.clone(), p.dim, f, a, seed)?;
        let ls = level_set_sampler(&law, p.epsilon_rel * a.abs(), p.count, seed)?;
        rows.push(LevelsetRow {
            tilt: law.summary(),
            epsilon: ls.epsilon,
            hit_fraction: ls.hit_fraction,
            radial_sd: ls.radial_sd,
            relative_radial_sd: ls.relative_radial_sd,
            method: ls.method,
            acceptance_rate: ls.acceptance_rate,
        });
    }
    let sd: Vec<f64> = rows.iter().map(|r| r.radial_sd).collect();
    let rel: Vec<f64> = rows.iter().map(|r| r.relative_radial_sd).collect();
    let checks = LevelsetChecks {
        radial_sd_decreasing: strictly_decreasing(&sd),
        relative_radial_sd_decreasing: strictly_decreasing(&rel),
    };
    let mut table = Table::new(&[
        "a",
        "t",
        "log_phi_f",
        "route",
        "epsilon",
        "hit_fraction",
        "radial_sd",
        "relative_radial_sd",
        "method",
        "acceptance_rate",
    ]);
    for r in &rows {
        table.push(vec![
            r.tilt.a.into(),
            r.tilt.t.into(),
            r.tilt.log_phi_f.into(),
            r.tilt.route.into(),
            r.epsilon.into(),
            r.hit_fraction.into(),
            r.radial_sd.into(),
            r.relative_radial_sd.into(),
            r.method.into(),
            r.acceptance_rate.map_or(Cell::Text(String::new()), Cell::Num),
        ]);
    }
    Ok((
        LevelsetResult {
            ambient: p.ambient.clone(),
            rows,
            checks,
        },
        table,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivChecks {
    pub band: (f64, f64),
    pub ratios_in_band: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivResult {
    pub report: EquivalenceReport,
    pub checks: EquivChecks,
}

pub fn equiv(d: &LightTailDensity, p: &EquivParams, seed: u64) -> R<(EquivResult, Table)> {
    let a = p.a.unwrap_or_else(|| (p.n as f64).powf(p.alpha));
    let s = invert_m(d, a)?.s();
    let intervals: Vec<(f64, f64)> = p.half_widths.iter().map(|h| (a - h * s, a + h * s)).collect();
    let report = exceedance_vs_point_equivalence(d, p.n, a, &intervals, p.count, seed)?;
    let checks = EquivChecks {
        band: p.band,
        ratios_in_band: report
            .rows
            .iter()
            .all(|r| r.ratio >= p.band.0 && r.ratio <= p.band.1),
    };
    let mut table = Table::new(&[
        "lo",
        "hi",
        "exceedance_mass",
        "std_error",
        "tilted_mass",
        "ratio",
        "band_low",
        "band_high",
    ]);
    for r in &report.rows {
        table.push(vec![
            r.interval.0.into(),
            r.interval.1.into(),
            r.exceedance_mass.into(),
            r.std_error.into(),
            r.tilted_mass.into(),
            r.ratio.into(),
            r.band_low.into(),
            r.band_high.into(),
        ]);
    }
    Ok((EquivResult { report, checks }, table))
}
