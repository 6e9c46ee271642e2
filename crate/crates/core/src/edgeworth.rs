//! One-term Edgeworth expansion for normalised sums of tilted variables and
//! an FFT convolution oracle for the exact density of the normalised sum.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tilt::TiltedDensity;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `x ↦ s·π(s·x + a)`: the tilted law standardised to mean 0 and variance 1.
#[derive(Debug, Clone)]
pub struct NormalizedTiltedDensity {
    tilted: TiltedDensity,
}

/// Quadrature moments of a [`NormalizedTiltedDensity`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalizedMoments {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
}

impl NormalizedTiltedDensity {
    pub fn new(tilted: TiltedDensity) -> Self {
        Self { tilted }
    }

    pub fn tilted(&self) -> &TiltedDensity {
        &self.tilted
    }

    pub fn a(&self) -> f64 {
        self.tilted.mean()
    }

    pub fn s(&self) -> f64 {
        self.tilted.sd()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s = self.s();
        s * self.tilted.pdf(s * x + self.a())
    }

    /// Mass of the standardised law on `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        let (a, s) = (self.a(), self.s());
        self.tilted.mass_between(a + s * lo, a + s * hi)
    }

    /// Mass, mean and variance recomputed by quadrature of the standardised density.
    pub fn moments(&self) -> Result<NormalizedMoments> {
        let (lo, hi) = self.tilted.support_window();
        let (a, s) = (self.a(), self.s());
        let mut pts = vec![(lo - a) / s, (hi - a) / s];
        for k in -8..=8 {
            let z = k as f64;
            if z > pts[0] && z < pts[1] {
                pts.push(z);
            }
        }
        pts.sort_by(f64::total_cmp);
        let f = |z: f64| {
            let p = self.pdf(z);
            [p, z * p, z * z * p]
        };
        let r = crate::quadrature::integrate_vec(&f, &pts, Default::default())?;
        let mass = r.value[0];
        let mean = r.value[1] / mass;
        Ok(NormalizedMoments {
            mass,
            mean,
            variance: r.value[2] / mass - mean * mean,
        })
    }
}

/// One Edgeworth evaluation, split into its Gaussian and skewness parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeworthEval {
    pub n: usize,
    pub x: f64,
    pub value: f64,
    pub correction: f64,
    pub gaussian: f64,
}

/// `φ(x)·(1 + μ₃/(6√n·s³)·(x³ − 3x))` at the cumulants of `td`.
pub fn edgeworth_density(td: &TiltedDensity, n: usize, x: f64) -> Result<EdgeworthEval> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "Edgeworth expansion needs n >= 2, got {n}"
        )));
    }
    Ok(edgeworth_from_skewness(td.cumulants().skewness(), n, x))
}

/// Edgeworth density from the skewness `μ₃/s³` directly.
pub fn edgeworth_from_skewness(skewness: f64, n: usize, x: f64) -> EdgeworthEval {
    let gaussian = std_normal_pdf(x);
    let correction = gaussian * skewness / (6.0 * (n as f64).sqrt()) * (x * x * x - 3.0 * x);
    EdgeworthEval {
        n,
        x,
        value: gaussian + correction,
        correction,
        gaussian,
    }
}

/// Uniform grid for the convolution oracle, in standardised units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// The standardised density is discretised on `[−half_width, half_width]`.
    pub half_width: f64,
    /// Number of grid intervals across `[−half_width, half_width]`.
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: 12.0,
            points: 1 << 14,
        }
    }
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }
}

/// Tabulated density of `(S₁ⁿ − n·a)/(√n·s)` on a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct ConvolutionTable {
    pub n: usize,
    /// Spacing between nodes.
    pub step: f64,
    /// Abscissa of `density[0]`.
    pub x0: f64,
    pub density: Vec<f64>,
    /// Probability mass of the discretised sum beyond the reported range.
    pub boundary_mass: f64,
    /// Widened half-width actually used for the single-variable grid.
    pub half_width_used: f64,
}

impl ConvolutionTable {
    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.density
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.x(i), v))
    }

    /// Four-point Lagrange interpolation; zero outside the table.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.density.len();
        let u = (x - self.x0) / self.step;
        if !(u >= 0.0 && u <= (n - 1) as f64) {
            return 0.0;
        }
        let i = (u.floor() as usize).clamp(1, n.saturating_sub(3));
        let f = u - i as f64;
        let (p0, p1, p2, p3) = (
            self.density[i - 1],
            self.density[i],
            self.density[i + 1],
            self.density[i + 2],
        );
        -f * (f - 1.0) * (f - 2.0) / 6.0 * p0 + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * p1
            - (f + 1.0) * f * (f - 2.0) / 2.0 * p2
            + (f + 1.0) * f * (f - 1.0) / 6.0 * p3
    }

    /// Trapezoidal mass, mean and variance of the table.
    pub fn moments(&self) -> (f64, f64, f64) {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        let last = self.density.len() - 1;
        for (i, (x, v)) in self.nodes().enumerate() {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 } * self.step;
            m0 += w * v;
            m1 += w * x * v;
            m2 += w * x * x * v;
        }
        let mean = m1 / m0;
        (m0, mean, m2 / m0 - mean * mean)
    }

    /// `sup |table − f|` over the table nodes with `|x| ≤ range`.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, f: F, range: f64) -> f64 {
        self.nodes()
            .filter(|(x, _)| x.abs() <= range)
            .map(|(x, v)| (v - f(x)).abs())
            .fold(0.0, f64::max)
    }
}

fn complex_pow(mut z: Complex<f64>, mut n: usize) -> Complex<f64> {
    let mut acc = Complex::new(1.0, 0.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= z;
        }
        z *= z;
        n >>= 1;
    }
    acc
}

/// Largest `n` the oracle accepts.
pub const ORACLE_MAX_N: usize = 1024;

/// Exact density of the normalised `n`-fold sum by FFT self-convolution.
///
/// The standardised tilted density is sampled on the grid, its transform is
/// raised to the `n`-th power by binary exponentiation, and the inverse
/// transform is rescaled by `√n`. Sample points are kept exactly, so the
/// oracle can be compared with other densities at its nodes without
/// interpolation. The single-variable grid is widened while its outside mass
/// exceeds `1e−12`.
pub fn convolve_oracle(td: &TiltedDensity, n: usize, grid: GridSpec) -> Result<ConvolutionTable> {
    if n == 0 || n > ORACLE_MAX_N {
        return Err(Error::InvalidParameter(format!(
            "oracle supports 1 <= n <= {ORACLE_MAX_N}, got {n}"
        )));
    }
    if !(grid.half_width > 0.0 && grid.points >= 16) {
        return Err(Error::InvalidParameter(
            "grid needs positive half-width and >= 16 points".into(),
        ));
    }
    let nt = NormalizedTiltedDensity::new(td.clone());
    let dx = grid.dx();

    let mut half = grid.half_width;
    for _ in 0..8 {
        let outside = nt.mass_between(-1e300, -half)? + nt.mass_between(half, 1e300)?;
        if outside <= 1e-12 {
            break;
        }
        half *= 1.5;
    }
    let j_max = (half / dx).ceil() as i64;

    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    // The sum lives on the same lattice; keep room for 12 standard deviations plus the input support.
    let reach = (grid.half_width * sqrt_n + half) / dx;
    let needed = (2.0 * reach).ceil() as usize + 2 * j_max as usize + 16;
    let size = needed.next_power_of_two();

    let mut buf = vec![Complex::new(0.0, 0.0); size];
    let mut total = 0.0;
    for j in -j_max..=j_max {
        let p = nt.pdf(j as f64 * dx) * dx;
        let idx = j.rem_euclid(size as i64) as usize;
        buf[idx] = Complex::new(p, 0.0);
        total += p;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::QuadratureFail(
            "discretised density has no mass".into(),
        ));
    }
    for c in buf.iter_mut() {
        *c /= total;
    }

    if n > 1 {
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_forward(size).process(&mut buf);
        for c in buf.iter_mut() {
            *c = complex_pow(*c, n);
        }
        planner.plan_fft_inverse(size).process(&mut buf);
        let scale = 1.0 / size as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    // Lattice point j of the sum sits at x = j·dx/√n in standardised units.
    let out_j = (grid.half_width * sqrt_n / dx).floor() as i64;
    let mut inside = 0.0;
    let mut density = Vec::with_capacity(2 * out_j as usize + 1);
    for j in -out_j..=out_j {
        let v = buf[j.rem_euclid(size as i64) as usize].re;
        inside += v;
        density.push(v);
    }
    let boundary_mass = (1.0 - inside).abs();
    if boundary_mass > 1e-9 {
        return Err(Error::MassLeak(boundary_mass));
    }

    let step = dx / sqrt_n;
    let last = density.len() - 1;
    let trap: f64 = density
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 || i == last { 0.5 * v } else { v })
        .sum::<f64>()
        * step;
    for v in density.iter_mut() {
        *v /= trap;
    }
    Ok(ConvolutionTable {
        n,
        step,
        x0: -(out_j as f64) * step,
        density,
        boundary_mass,
        half_width_used: half,
    })
}

/// `(n·a_n − y₁)/(s·√(n−1))`, as the variable is first defined.
pub fn z1_raw(n: usize, a_n: f64, y1: f64, s: f64) -> Result<f64> {
    check_z1(n, s)?;
    Ok((n as f64 * a_n - y1) / (s * ((n - 1) as f64).sqrt()))
}

/// `(a_n − y₁)/(s·√(n−1))`: the centred variant, matching `S₂ⁿ` having mean `(n−1)·a_n`.
pub fn z1_centered(n: usize, a_n: f64, y1: f64, s: f64) -> Result<f64> {
    check_z1(n, s)?;
    Ok((a_n - y1) / (s * ((n - 1) as f64).sqrt()))
}

fn check_z1(n: usize, s: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("z1 needs n >= 2, got {n}")));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("z1 needs s > 0, got {s}")));
    }
    Ok(())
}
