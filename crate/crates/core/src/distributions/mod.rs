//! Univariate distribution kernels: standard normal, Student-t, and the
//! Hansen skewed Student-t used for GARCH innovations and quantile-based
//! risk measures.
//!
//! All functions are pure and reentrant. Samplers take an explicit seed
//! and own their generator state.

pub(crate) mod special;

mod skewed_t;
mod student_t;

pub use skewed_t::SkewedT;
pub use student_t::{student_t_cdf, student_t_pdf, student_t_quantile};

use crate::error::{Error, Result};

/// Degrees of freedom above which Student-t quantities fall back to the
/// normal limit to avoid overflow in gamma-function ratios.
pub const NU_NORMAL_LIMIT: f64 = 1e7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF, evaluated through the complementary error
/// function for full relative accuracy in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * special::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile: inverse complementary error function plus
/// one Newton polish step to reach machine-level round-trip accuracy.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile requires p in (0,1), got {p}"
        )));
    }
    let mut x = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p);
    for _ in 0..2 {
        let d = normal_pdf(x);
        if d <= f64::MIN_POSITIVE {
            break;
        }
        let step = (normal_cdf(x) - p) / d;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    Ok(x)
}
