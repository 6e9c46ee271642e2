//! Adaptive Gauss–Kronrod quadrature.
//!
//! The integrator works on vector-valued integrands so that the mass and the
//! first few moments of a tilted density are computed from the same set of
//! nodes. Error control is per component: the `j`-th integral is accepted once
//! its error estimate falls below `max(abs_tol, rel_tol * ∫|f_j|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Tolerances for [`integrate_vec`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 0.0,
            max_panels: 4000,
        }
    }
}

/// Result of a vector quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const M: usize> {
    pub value: [f64; M],
    pub abs_error: [f64; M],
    pub abs_integral: [f64; M],
    pub panels: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel<const M: usize> {
    a: f64,
    b: f64,
    value: [f64; M],
    err: [f64; M],
    absv: [f64; M],
    key: f64,
}

impl<const M: usize> PartialEq for Panel<M> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<const M: usize> Eq for Panel<M> {}
impl<const M: usize> PartialOrd for Panel<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const M: usize> Ord for Panel<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

/// One 21-point Kronrod panel with the embedded 10-point Gauss estimate.
///
/// Returns `(kronrod, error, ∫|f|)` per component, error estimated as in QUADPACK.
pub fn gk21<const M: usize, F>(f: &F, a: f64, b: f64) -> ([f64; M], [f64; M], [f64; M])
where
    F: Fn(f64) -> [f64; M],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut res_k = [0.0; M];
    let mut res_g = [0.0; M];
    let mut res_abs = [0.0; M];
    let mut fv: [[f64; M]; 21] = [[0.0; M]; 21];

    let fc = f(center);
    fv[20] = fc;
    for j in 0..M {
        res_k[j] = WGK[10] * fc[j];
        res_abs[j] = (WGK[10] * fc[j]).abs();
    }
    for i in 0..10 {
        let dx = half * XGK[i];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * i] = f1;
        fv[2 * i + 1] = f2;
        for j in 0..M {
            res_k[j] += WGK[i] * (f1[j] + f2[j]);
            res_abs[j] += WGK[i] * (f1[j].abs() + f2[j].abs());
            if i % 2 == 1 {
                res_g[j] += WG[i / 2] * (f1[j] + f2[j]);
            }
        }
    }

    let mut value = [0.0; M];
    let mut err = [0.0; M];
    let mut absv = [0.0; M];
    for j in 0..M {
        let mean = 0.5 * res_k[j];
        let mut asc = WGK[10] * (fc[j] - mean).abs();
        for i in 0..10 {
            asc += WGK[i] * ((fv[2 * i][j] - mean).abs() + (fv[2 * i + 1][j] - mean).abs());
        }
        let scale = half.abs();
        let resasc = asc * scale;
        let resabs = res_abs[j] * scale;
        let mut e = ((res_k[j] - res_g[j]) * half).abs();
        if resasc != 0.0 && e != 0.0 {
            e = resasc * (200.0 * e / resasc).powf(1.5).min(1.0);
        }
        let floor = 50.0 * f64::EPSILON * resabs;
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && e < floor {
            e = floor;
        }
        value[j] = res_k[j] * half;
        err[j] = e;
        absv[j] = resabs;
    }
    (value, err, absv)
}

fn panel_key<const M: usize>(err: &[f64; M], scale: &[f64; M]) -> f64 {
    let mut key: f64 = 0.0;
    for j in 0..M {
        let s = scale[j].max(f64::MIN_POSITIVE);
        key = key.max(err[j] / s);
    }
    key
}

/// Adaptive integration of a vector integrand over consecutive breakpoints.
///
/// `breakpoints` must be sorted and contain at least two entries; each initial
/// interval becomes one panel, and panels are bisected by largest normalized
/// error until every component meets its tolerance.
pub fn integrate_vec<const M: usize, F>(
    f: &F,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult<M>>
where
    F: Fn(f64) -> [f64; M],
{
    if breakpoints.len() < 2 {
        return Err(Error::QuadratureFail(
            "need at least two breakpoints".into(),
        ));
    }
    if breakpoints.iter().any(|x| !x.is_finite()) {
        return Err(Error::QuadratureFail("non-finite breakpoint".into()));
    }
    let mut panels: Vec<Panel<M>> = Vec::with_capacity(breakpoints.len());
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, err, absv) = gk21(f, w[0], w[1]);
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value,
            err,
            absv,
            key: 0.0,
        });
    }
    if panels.is_empty() {
        return Err(Error::QuadratureFail("empty integration range".into()));
    }

    let totals = |ps: &[Panel<M>]| {
        let mut v = [0.0; M];
        let mut e = [0.0; M];
        let mut a = [0.0; M];
        for p in ps {
            for j in 0..M {
                v[j] += p.value[j];
                e[j] += p.err[j];
                a[j] += p.absv[j];
            }
        }
        (v, e, a)
    };

    let (mut value, mut error, mut absint) = totals(&panels);
    let done =
        |e: &[f64; M], a: &[f64; M]| (0..M).all(|j| e[j] <= opts.abs_tol.max(opts.rel_tol * a[j]));

    let mut heap: BinaryHeap<Panel<M>> = BinaryHeap::new();
    for mut p in panels {
        p.key = panel_key(&p.err, &absint);
        heap.push(p);
    }

    let mut converged = done(&error, &absint);
    while !converged && heap.len() < opts.max_panels {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel cannot be split further in floating point.
            heap.push(Panel { key: 0.0, ..worst });
            break;
        }
        let (v1, e1, a1) = gk21(f, worst.a, mid);
        let (v2, e2, a2) = gk21(f, mid, worst.b);
        for j in 0..M {
            value[j] += v1[j] + v2[j] - worst.value[j];
            error[j] += e1[j] + e2[j] - worst.err[j];
            absint[j] += a1[j] + a2[j] - worst.absv[j];
        }
        let k1 = panel_key(&e1, &absint);
        let k2 = panel_key(&e2, &absint);
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
            absv: a1,
            key: k1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
            absv: a2,
            key: k2,
        });
        converged = done(&error, &absint);
    }

    // Re-sum from scratch so the running updates do not accumulate rounding.
    let all: Vec<Panel<M>> = heap.into_vec();
    let (v, e, a) = totals(&all);
    Ok(QuadResult {
        value: v,
        abs_error: e,
        abs_integral: a,
        panels: all.len(),
        converged: converged || done(&e, &a),
    })
}

/// Scalar convenience wrapper over [`integrate_vec`].
pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let g = |x: f64| [f(x)];
    let r = integrate_vec(&g, &[a, b], opts)?;
    Ok((r.value[0], r.abs_error[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // Kronrod-21 integrates degree <= 31 exactly.
        let (v, _) = integrate(
            |x| x.powi(7) - 3.0 * x * x,
            -1.0,
            2.0,
            QuadOptions::default(),
        )
        .unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass_and_moments() {
        let f = |x: f64| {
            let w = (-0.5 * x * x).exp();
            [w, x * x * w, x.powi(4) * w]
        };
        let r = integrate_vec(&f, &[-40.0, -5.0, 0.0, 5.0, 40.0], QuadOptions::default()).unwrap();
        let s = (2.0 * std::f64::consts::PI).sqrt();
        assert!(r.converged);
        assert!((r.value[0] / s - 1.0).abs() < 1e-13);
        assert!((r.value[1] / s - 1.0).abs() < 1e-13);
        assert!((r.value[2] / s - 3.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let (v, _) = integrate(
            |x: f64| x.sqrt(),
            0.0,
            1.0,
            QuadOptions {
                rel_tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(integrate(|x| x, 1.0, 1.0, QuadOptions::default()).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, QuadOptions::default()).is_err());
    }
}
