//! Exponential tilting: log-MGF, tilted cumulants, inversion of `m(t) = a`,
//! and numerical checks of the Abelian asymptotics.

use serde::Serialize;

use crate::density::LightTailDensity;
use crate::error::{Error, Result};
use crate::frame::TiltFrame;

/// Largest tilt the engine accepts.
pub const T_MAX: f64 = 1e8;

/// Log-MGF and the first three cumulants of the tilted law at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantTriple {
    pub t: f64,
    pub log_phi: f64,
    pub m: f64,
    pub s2: f64,
    pub mu3: f64,
}

impl CumulantTriple {
    pub fn s(&self) -> f64 {
        self.s2.sqrt()
    }

    /// `μ₃/s³`.
    pub fn skewness(&self) -> f64 {
        self.mu3 / (self.s2 * self.s2.sqrt())
    }
}

fn check_tilt(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tilt must be finite, got {t}"
        )));
    }
    if t > T_MAX {
        return Err(Error::BracketFail(format!(
            "tilt {t} exceeds t_max = {T_MAX:e}"
        )));
    }
    Ok(())
}

fn triple_from_frame(d: &LightTailDensity, frame: &TiltFrame) -> Result<CumulantTriple> {
    let mom = frame.moments()?;
    Ok(CumulantTriple {
        t: frame.t(),
        log_phi: d.log_c() + frame.anchor() + mom.log_mass,
        m: frame.x0() + mom.mean_offset,
        s2: mom.variance,
        mu3: mom.mu3,
    })
}

/// `log φ(t) = log E e^{tX}`.
pub fn log_mgf(d: &LightTailDensity, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(cumulants(d, t)?.log_phi)
}

/// Tilted mean, variance and third central moment at `t`, from moment integrals.
pub fn cumulants(d: &LightTailDensity, t: f64) -> Result<CumulantTriple> {
    check_tilt(t)?;
    let frame = TiltFrame::new(d.potential(), t)?;
    let mut c = triple_from_frame(d, &frame)?;
    if t == 0.0 {
        c.log_phi = 0.0;
    }
    Ok(c)
}

/// Solves `m(t) = a` for `t ≥ 0`.
pub fn invert_m(d: &LightTailDensity, a: f64) -> Result<CumulantTriple> {
    invert_m_with(d, a, T_MAX)
}

/// [`invert_m`] with an explicit upper limit on the tilt.
pub fn invert_m_with(d: &LightTailDensity, a: f64, t_max: f64) -> Result<CumulantTriple> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "level a must be positive and finite, got {a}"
        )));
    }
    let base = cumulants(d, 0.0)?;
    let tol = 1e-13 * a;
    if (base.m - a).abs() <= tol {
        return Ok(base);
    }
    if a < base.m {
        return Err(Error::NotSolvable(format!(
            "a = {a} is below the mean {}",
            base.m
        )));
    }

    let mut lo = base;
    let h_a = d.h(a);
    let t0 = if h_a.is_finite() && h_a > 0.0 {
        h_a.min(t_max)
    } else {
        1.0f64.min(t_max)
    };
    let mut hi = cumulants(d, t0)?;
    while hi.m < a {
        lo = hi;
        if hi.t >= t_max {
            return Err(Error::BracketFail(format!(
                "m(t) < a = {a} up to t_max = {t_max:e}"
            )));
        }
        hi = cumulants(d, (2.0 * hi.t).min(t_max))?;
    }
    if (hi.m - a).abs() <= tol {
        return Ok(hi);
    }

    // Safeguarded Newton on m(t) − a with m' = s².
    let mut cur = if a - lo.m < hi.m - a { lo } else { hi };
    for _ in 0..200 {
        let newton = cur.t - (cur.m - a) / cur.s2;
        let next_t = if newton > lo.t && newton < hi.t && newton.is_finite() {
            newton
        } else {
            0.5 * (lo.t + hi.t)
        };
        let next = cumulants(d, next_t)?;
        if (next.m - a).abs() <= tol {
            return Ok(next);
        }
        if next.m < a {
            lo = next;
        } else {
            hi = next;
        }
        cur = next;
        if hi.t - lo.t <= 4.0 * f64::EPSILON * hi.t {
            break;
        }
    }
    // Bracket exhausted at floating-point resolution of t.
    let best = if (lo.m - a).abs() < (hi.m - a).abs() {
        lo
    } else {
        hi
    };
    if (best.m - a).abs() <= 1e-10 * a {
        Ok(best)
    } else {
        Err(Error::NotSolvable(format!(
            "m(t) = {a} reached only to relative error {:.2e}",
            (best.m - a).abs() / a
        )))
    }
}

/// The tilted density `π(x) = e^{tx} p(x)/φ(t)`.
#[derive(Debug, Clone)]
pub struct TiltedDensity {
    base: LightTailDensity,
    cumulants: CumulantTriple,
    frame: TiltFrame,
    log_mass: f64,
}

impl TiltedDensity {
    pub fn new(base: &LightTailDensity, t: f64) -> Result<Self> {
        check_tilt(t)?;
        let frame = TiltFrame::new(base.potential(), t)?;
        let mom = frame.moments()?;
        let cumulants = triple_from_frame(base, &frame)?;
        Ok(Self {
            base: base.clone(),
            cumulants,
            frame,
            log_mass: mom.log_mass,
        })
    }

    /// Tilt whose mean is `a`.
    pub fn with_mean(base: &LightTailDensity, a: f64) -> Result<Self> {
        let c = invert_m(base, a)?;
        Self::new(base, c.t)
    }

    pub fn base(&self) -> &LightTailDensity {
        &self.base
    }

    pub fn cumulants(&self) -> CumulantTriple {
        self.cumulants
    }

    pub fn t(&self) -> f64 {
        self.cumulants.t
    }

    pub fn log_phi(&self) -> f64 {
        self.cumulants.log_phi
    }

    pub fn mean(&self) -> f64 {
        self.cumulants.m
    }

    pub fn variance(&self) -> f64 {
        self.cumulants.s2
    }

    pub fn sd(&self) -> f64 {
        self.cumulants.s()
    }

    /// Location of the mode of `e^{tx}e^{-g(x)}` (ignoring `q`).
    pub fn peak(&self) -> f64 {
        self.frame.x0()
    }

    /// Interval outside of which the density is below `1e-300` of its peak value.
    pub fn support_window(&self) -> (f64, f64) {
        let (lo, hi) = self.frame.window();
        (self.frame.x0() + lo, self.frame.x0() + hi)
    }

    /// Natural length scale `1/√g''(peak)` used for breakpoints.
    pub fn peak_scale(&self) -> f64 {
        self.frame.scale()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.frame.log_weight(x - self.frame.x0()) - self.log_mass
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `∫_lo^hi π(x) dx`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) {
            return Ok(0.0);
        }
        let x0 = self.frame.x0();
        Ok((self.frame.mass_between(lo - x0, hi - x0)? / self.log_mass.exp()).min(1.0))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support_window();
        if x <= lo {
            return Ok(0.0);
        }
        if x >= hi {
            return Ok(1.0);
        }
        if x <= self.mean() {
            self.mass_between(lo, x)
        } else {
            Ok(1.0 - self.mass_between(x, hi)?)
        }
    }
}

/// Abelian-ratio diagnostics on a grid of tilts.
#[derive(Debug, Clone, Serialize)]
pub struct AbelianReport {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    pub s2: Vec<f64>,
    pub mu3: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_prime: Vec<f64>,
    pub psi_second: Vec<f64>,
    /// `m/ψ`
    pub m_ratio: Vec<f64>,
    /// `s²/ψ'`
    pub s2_ratio: Vec<f64>,
    /// `μ₃/(((M₆−3)/2)·ψ'')` with `M₆ = 15`.
    pub mu3_ratio: Vec<f64>,
    /// `μ₃/ψ''`
    pub mu3_psi2_ratio: Vec<f64>,
    /// `μ₃/s³`
    pub skewness: Vec<f64>,
    /// `ψ²/ψ'`; the growth functional is this divided by `√n`.
    pub psi2_over_psi_prime: Vec<f64>,
    pub summary: AbelianSummary,
}

/// Trend diagnostics extracted from an [`AbelianReport`].
#[derive(Debug, Clone, Serialize)]
pub struct AbelianSummary {
    pub m_dev_first: f64,
    pub m_dev_last: f64,
    pub m_dev_max: f64,
    pub s2_dev_first: f64,
    pub s2_dev_last: f64,
    pub s2_dev_max: f64,
    pub mu3_ratio_last: f64,
    pub skewness_first: f64,
    pub skewness_last: f64,
    pub skewness_monotone: bool,
    pub all_finite: bool,
}

const M6: f64 = 15.0;

/// Evaluates cumulants and `ψ, ψ', ψ''` on `t_grid` and forms the Abelian ratios.
pub fn abelian_check(d: &LightTailDensity, t_grid: &[f64]) -> Result<AbelianReport> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "t grid must be non-empty and increasing".into(),
        ));
    }
    let rows: Vec<(CumulantTriple, f64, f64, f64)> = t_grid
        .iter()
        .map(|&t| {
            let c = cumulants(d, t)?;
            Ok((c, d.psi(t)?, d.psi_prime(t)?, d.psi_second(t)?))
        })
        .collect::<Result<_>>()?;

    let col = |f: &dyn Fn(&(CumulantTriple, f64, f64, f64)) -> f64| {
        rows.iter().map(f).collect::<Vec<f64>>()
    };
    let m_ratio = col(&|r| r.0.m / r.1);
    let s2_ratio = col(&|r| r.0.s2 / r.2);
    let mu3_ratio = col(&|r| r.0.mu3 / ((M6 - 3.0) / 2.0 * r.3));
    let mu3_psi2_ratio = col(&|r| r.0.mu3 / r.3);
    let skewness = col(&|r| r.0.skewness());
    let psi2 = col(&|r| r.1 * r.1 / r.2);

    let dev = |v: &[f64]| v.iter().map(|x| (x - 1.0).abs()).collect::<Vec<f64>>();
    let md = dev(&m_ratio);
    let sd = dev(&s2_ratio);
    let n = t_grid.len();
    let all_finite = [&m_ratio, &s2_ratio, &mu3_ratio, &skewness, &psi2]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()));
    let summary = AbelianSummary {
        m_dev_first: md[0],
        m_dev_last: md[n - 1],
        m_dev_max: md.iter().cloned().fold(0.0, f64::max),
        s2_dev_first: sd[0],
        s2_dev_last: sd[n - 1],
        s2_dev_max: sd.iter().cloned().fold(0.0, f64::max),
        mu3_ratio_last: mu3_ratio[n - 1],
        skewness_first: skewness[0],
        skewness_last: skewness[n - 1],
        skewness_monotone: skewness.windows(2).all(|w| w[1].abs() < w[0].abs()),
        all_finite,
    };

    Ok(AbelianReport {
        t: t_grid.to_vec(),
        m: col(&|r| r.0.m),
        s2: col(&|r| r.0.s2),
        mu3: col(&|r| r.0.mu3),
        psi: col(&|r| r.1),
        psi_prime: col(&|r| r.2),
        psi_second: col(&|r| r.3),
        m_ratio,
        s2_ratio,
        mu3_ratio,
        mu3_psi2_ratio,
        skewness,
        psi2_over_psi_prime: psi2,
        summary,
    })
}

/// `sup_{u ∈ K} |s²(t + u/s(t))/s²(t) − 1|` over 41 equispaced points of `K`.
pub fn self_neglect_check(d: &LightTailDensity, t: f64, k: (f64, f64)) -> Result<f64> {
    if !(k.0 <= k.1 && k.0.is_finite() && k.1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bad interval [{}, {}]",
            k.0, k.1
        )));
    }
    let base = cumulants(d, t)?;
    let s = base.s();
    let points = 41;
    let mut sup: f64 = 0.0;
    for i in 0..points {
        let u = k.0 + (k.1 - k.0) * i as f64 / (points - 1) as f64;
        if u == 0.0 {
            continue;
        }
        let tu = t + u / s;
        if !(tu.is_finite() && tu <= T_MAX) {
            return Err(Error::Domain(format!(
                "t + u/s = {tu} leaves the solvable range"
            )));
        }
        let c = cumulants(d, tu)?;
        sup = sup.max((c.s2 / base.s2 - 1.0).abs());
    }
    Ok(sup)
}

/// Growth functional at `t = m⁻¹(a_n)`, in both printed forms.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthCondition {
    pub n: u64,
    pub a_n: f64,
    pub t: f64,
    pub psi: f64,
    pub psi_prime: f64,
    /// `ψ²/(√n·ψ')`, the form used for pass/fail.
    pub lemma_form: f64,
    /// `ψ²/√(n·ψ')`
    pub display_form: f64,
}

/// `ψ(t)²/(√n·ψ'(t))` at `t = m⁻¹(a_n)`; the alternative reading `ψ²/√(nψ')` is reported alongside.
pub fn growth_condition(d: &LightTailDensity, n: u64, a_n: f64) -> Result<GrowthCondition> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let c = invert_m(d, a_n)?;
    let psi = d.psi(c.t)?;
    let psi_prime = d.psi_prime(c.t)?;
    let nf = n as f64;
    Ok(GrowthCondition {
        n,
        a_n,
        t: c.t,
        psi,
        psi_prime,
        lemma_form: psi * psi / (nf.sqrt() * psi_prime),
        display_form: psi * psi / (nf * psi_prime).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{builtin_double_exp, builtin_weibull};

    #[test]
    fn zero_tilt_is_identity() {
        let d = builtin_weibull(2.0).unwrap();
        let c = cumulants(&d, 0.0).unwrap();
        assert_eq!(c.log_phi, 0.0);
        // E X = Γ(1.5) for Weibull(2)
        let mean = 0.886_226_925_452_758;
        assert!((c.m - mean).abs() < 1e-12);
        assert!((c.s2 - (1.0 - mean * mean)).abs() < 1e-12);
        assert!((d.mean() - mean).abs() < 1e-12);
    }

    #[test]
    fn invert_at_mean_gives_zero() {
        let d = builtin_weibull(3.0).unwrap();
        let c = invert_m(&d, d.mean()).unwrap();
        assert_eq!(c.t, 0.0);
    }

    #[test]
    fn invert_below_mean_is_not_solvable() {
        let d = builtin_weibull(2.0).unwrap();
        assert!(matches!(invert_m(&d, 0.3), Err(Error::NotSolvable(_))));
    }

    #[test]
    fn invert_round_trip() {
        for d in [
            builtin_weibull(2.0).unwrap(),
            builtin_weibull(3.0).unwrap(),
            builtin_double_exp().unwrap(),
        ] {
            // m(t) grows like log t for the double exponential, so a = 20 needs t beyond t_max
            let top = if d.class() == crate::RegularityClass::Infinity {
                15.0
            } else {
                200.0
            };
            for &a in &[1.5, 3.0, 5.0, 12.0, top] {
                let c = invert_m(&d, a).unwrap();
                let back = cumulants(&d, c.t).unwrap();
                assert!(
                    (back.m - a).abs() < 1e-9 * a,
                    "{} a={a}: {}",
                    d.name(),
                    back.m
                );
            }
        }
    }

    #[test]
    fn double_exp_tilt_near_h_of_a() {
        let d = builtin_double_exp().unwrap();
        let r10 = invert_m(&d, 10.0).unwrap().t / d.h(10.0);
        let r15 = invert_m(&d, 15.0).unwrap().t / d.h(15.0);
        assert!((r10 - 1.0).abs() < 0.2, "{r10}");
        assert!((r15 - 1.0).abs() < (r10 - 1.0).abs(), "{r15}");
    }

    #[test]
    fn tilted_density_normalised_with_mean() {
        let d = builtin_weibull(2.5).unwrap();
        let td = TiltedDensity::with_mean(&d, 4.0).unwrap();
        let (lo, hi) = td.support_window();
        assert!((td.mass_between(lo, hi).unwrap() - 1.0).abs() < 1e-10);
        assert!((td.mean() - 4.0).abs() < 1e-9);
        let c = td.cdf(td.mean()).unwrap();
        assert!(c > 0.3 && c < 0.7);
        assert!(td.cdf(hi + 1.0).unwrap() == 1.0);
    }

    #[test]
    fn double_exp_level_beyond_t_max_refused() {
        let d = builtin_double_exp().unwrap();
        assert!(matches!(invert_m(&d, 25.0), Err(Error::BracketFail(_))));
    }

    #[test]
    fn too_large_tilt_refused() {
        let d = builtin_weibull(2.0).unwrap();
        assert!(matches!(cumulants(&d, 2e8), Err(Error::BracketFail(_))));
        assert!(matches!(
            invert_m_with(&d, 1e6, 10.0),
            Err(Error::BracketFail(_))
        ));
    }

    #[test]
    fn growth_condition_forms() {
        let d = builtin_weibull(2.0).unwrap();
        let g = growth_condition(&d, 100, 5.0).unwrap();
        assert!((g.lemma_form - g.psi * g.psi / (10.0 * g.psi_prime)).abs() < 1e-12 * g.lemma_form);
        assert!(g.display_form > 0.0);
    }

    #[test]
    fn self_neglect_trivial_interval() {
        let d = builtin_weibull(3.0).unwrap();
        assert_eq!(self_neglect_check(&d, 50.0, (0.0, 0.0)).unwrap(), 0.0);
    }
}
