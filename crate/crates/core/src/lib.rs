//! Numerical laboratory for conditional limit theorems under extreme deviations.
//!
//! The crate covers light-tailed densities on the half-line, exponential
//! tilting and its cumulants, Edgeworth expansions checked against an FFT
//! convolution oracle, saddlepoint tail probabilities, and exact conditional
//! samplers for point and exceedance constraints.

/// Library version, as reported by the command-line driver.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod conditional;
pub mod density;
pub mod edgeworth;
pub mod error;
mod frame;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod sampler;
pub mod tail;
pub mod tilt;

pub use density::{
    builtin_double_exp, builtin_weibull, ClassReport, DensityBuilder, DensitySpec, GFunction,
    LightTailDensity, Perturbation, RegularityClass, Term,
};
pub use edgeworth::{
    convolve_oracle, edgeworth_density, edgeworth_from_skewness, z1_centered, z1_raw,
    ConvolutionTable, EdgeworthEval, GridSpec, NormalizedTiltedDensity, ORACLE_MAX_N,
};
pub use error::{Error, Result};
pub use sampler::{sampler_tilted, TiltedSampler};
pub use tail::{
    rate_i, rate_legendre, tail_prob, tail_prob_is_oracle, tail_prob_with, IsEstimate,
    TailEstimate, MIN_LAMBDA,
};
pub use tilt::{
    abelian_check, cumulants, growth_condition, invert_m, log_mgf, self_neglect_check,
    AbelianReport, CumulantTriple, TiltedDensity,
};
