//! Bivariate copulas: the eight single families used for futures/spot
//! dependence plus the Gumbel / survival-Gumbel mixture, with CDFs,
//! log-densities, conditional (h-) functions, samplers, closed-form
//! dependence summaries, and canonical maximum-likelihood estimation on
//! rank pseudo-observations.
//!
//! Argument convention: throughout the risk pipeline the first copula
//! argument carries the spot margin and the second the futures margin.

mod elliptical;
mod fit;

pub use elliptical::{bvn_cdf, bvt_cdf};
pub use fit::{fit_mixed, fit_single, model_selection, Candidate};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::distributions::{
    normal_cdf, normal_quantile, student_t_cdf, student_t_quantile,
};
use crate::error::{Error, Result};
use crate::market_data::stats::kendall_tau;

/// Pseudo-observations are clamped to this interior margin before
/// density evaluation; the rank transform's `T+1` denominator already
/// keeps genuine pseudo-observations away from 0 and 1.
pub const UNIT_CLAMP: f64 = 1e-10;

/// Lower bound offset for the Student-t copula degrees of freedom.
pub const STUDENT_T_NU_MIN: f64 = 2.0 + 1e-4;
/// Upper bound for the Student-t copula degrees of freedom.
pub const STUDENT_T_NU_MAX: f64 = 100.0;

/// Single-copula family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CopulaFamily {
    Normal,
    StudentT,
    Clayton,
    SurvivalClayton,
    Rotated90Clayton,
    Rotated270Clayton,
    Gumbel,
    SurvivalGumbel,
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 8] = [
        CopulaFamily::Normal,
        CopulaFamily::StudentT,
        CopulaFamily::Clayton,
        CopulaFamily::SurvivalClayton,
        CopulaFamily::Rotated90Clayton,
        CopulaFamily::Rotated270Clayton,
        CopulaFamily::Gumbel,
        CopulaFamily::SurvivalGumbel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CopulaFamily::Normal => "normal",
            CopulaFamily::StudentT => "student-t",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::SurvivalClayton => "survival-clayton",
            CopulaFamily::Rotated90Clayton => "rotated-90-clayton",
            CopulaFamily::Rotated270Clayton => "rotated-270-clayton",
            CopulaFamily::Gumbel => "gumbel",
            CopulaFamily::SurvivalGumbel => "survival-gumbel",
        }
    }
}

/// A fully parameterized copula.
///
/// Parameter domains: `Normal` rho in (-1,1); `StudentT` rho in (-1,1),
/// nu in (2,100]; `Clayton`/`SurvivalClayton` alpha > 0; the rotated
/// Clayton variants take alpha in (-1,0), the negative-parameter range on
/// which the rotated closed forms define a proper copula; `Gumbel`/
/// `SurvivalGumbel` alpha > 1. The mixture combines a Gumbel (upper-tail)
/// and a survival Gumbel (lower-tail) component with weights summing to
/// one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Copula {
    Normal {
        rho: f64,
    },
    StudentT {
        rho: f64,
        nu: f64,
    },
    Clayton {
        alpha: f64,
    },
    SurvivalClayton {
        alpha: f64,
    },
    Rotated90Clayton {
        alpha: f64,
    },
    Rotated270Clayton {
        alpha: f64,
    },
    Gumbel {
        alpha: f64,
    },
    SurvivalGumbel {
        alpha: f64,
    },
    GumbelMixture {
        theta_upper: f64,
        theta_lower: f64,
        weight_upper: f64,
    },
}

impl Copula {
    /// Validates the family parameter domain.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Copula::Normal { rho } => {
                if !(-1.0 < rho && rho < 1.0) {
                    return bad(format!("normal copula rho must be in (-1,1), got {rho}"));
                }
            }
            Copula::StudentT { rho, nu } => {
                if !(-1.0 < rho && rho < 1.0) {
                    return bad(format!("student-t copula rho must be in (-1,1), got {rho}"));
                }
                if !(nu > 2.0 && nu <= STUDENT_T_NU_MAX) {
                    return bad(format!(
                        "student-t copula nu must be in (2,{STUDENT_T_NU_MAX}], got {nu}"
                    ));
                }
            }
            Copula::Clayton { alpha } | Copula::SurvivalClayton { alpha } => {
                if !(alpha > 0.0) {
                    return bad(format!("clayton alpha must be positive, got {alpha}"));
                }
            }
            Copula::Rotated90Clayton { alpha } | Copula::Rotated270Clayton { alpha } => {
                if !(-1.0 < alpha && alpha < 0.0) {
                    return bad(format!(
                        "rotated clayton alpha must be in (-1,0), got {alpha}"
                    ));
                }
            }
            Copula::Gumbel { alpha } | Copula::SurvivalGumbel { alpha } => {
                if !(alpha > 1.0) {
                    return bad(format!("gumbel alpha must exceed 1, got {alpha}"));
                }
            }
            Copula::GumbelMixture {
                theta_upper,
                theta_lower,
                weight_upper,
            } => {
                if !(theta_upper >= 1.0 && theta_lower >= 1.0) {
                    return bad(format!(
                        "mixture thetas must be >= 1, got ({theta_upper},{theta_lower})"
                    ));
                }
                if !(0.0..=1.0).contains(&weight_upper) {
                    return bad(format!(
                        "mixture weight must be in [0,1], got {weight_upper}"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Copula::Normal { .. } => "normal",
            Copula::StudentT { .. } => "student-t",
            Copula::Clayton { .. } => "clayton",
            Copula::SurvivalClayton { .. } => "survival-clayton",
            Copula::Rotated90Clayton { .. } => "rotated-90-clayton",
            Copula::Rotated270Clayton { .. } => "rotated-270-clayton",
            Copula::Gumbel { .. } => "gumbel",
            Copula::SurvivalGumbel { .. } => "survival-gumbel",
            Copula::GumbelMixture { .. } => "mixed-gumbel",
        }
    }

    /// Natural parameter vector in reporting order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Copula::Normal { rho } => vec![rho],
            Copula::StudentT { rho, nu } => vec![rho, nu],
            Copula::Clayton { alpha }
            | Copula::SurvivalClayton { alpha }
            | Copula::Rotated90Clayton { alpha }
            | Copula::Rotated270Clayton { alpha }
            | Copula::Gumbel { alpha }
            | Copula::SurvivalGumbel { alpha } => vec![alpha],
            Copula::GumbelMixture {
                theta_upper,
                theta_lower,
                weight_upper,
            } => vec![theta_upper, theta_lower, weight_upper],
        }
    }

    /// Copula CDF `C(u1, u2)`, with exact boundary handling.
    pub fn cdf(&self, u1: f64, u2: f64) -> f64 {
        if u1 <= 0.0 || u2 <= 0.0 {
            return 0.0;
        }
        if u1 >= 1.0 {
            return u2.min(1.0);
        }
        if u2 >= 1.0 {
            return u1;
        }
        let v = match *self {
            Copula::Normal { rho } => {
                if rho == 0.0 {
                    u1 * u2
                } else {
                    let x = normal_quantile(u1).expect("interior");
                    let y = normal_quantile(u2).expect("interior");
                    bvn_cdf(x, y, rho)
                }
            }
            Copula::StudentT { rho, nu } => {
                let x = student_t_quantile(u1, nu).expect("interior");
                let y = student_t_quantile(u2, nu).expect("interior");
                bvt_cdf(x, y, rho, nu)
            }
            Copula::Clayton { alpha } => clayton_cdf(u1, u2, alpha),
            Copula::SurvivalClayton { alpha } => {
                u1 + u2 - 1.0 + clayton_cdf(1.0 - u1, 1.0 - u2, alpha)
            }
            Copula::Rotated90Clayton { alpha } => u2 - clayton_cdf(1.0 - u1, u2, alpha),
            Copula::Rotated270Clayton { alpha } => u1 - clayton_cdf(u1, 1.0 - u2, alpha),
            Copula::Gumbel { alpha } => gumbel_cdf(u1, u2, alpha),
            Copula::SurvivalGumbel { alpha } => {
                u1 + u2 - 1.0 + gumbel_cdf(1.0 - u1, 1.0 - u2, alpha)
            }
            Copula::GumbelMixture {
                theta_upper,
                theta_lower,
                weight_upper,
            } => {
                weight_upper * gumbel_cdf(u1, u2, theta_upper)
                    + (1.0 - weight_upper)
                        * (u1 + u2 - 1.0 + gumbel_cdf(1.0 - u1, 1.0 - u2, theta_lower))
            }
        };
        v.clamp(0.0, 1.0)
    }

    /// Log of the copula density. Boundary arguments are clamped to the
    /// interior margin [`UNIT_CLAMP`] before evaluation.
    pub fn ln_pdf(&self, u1: f64, u2: f64) -> f64 {
        let u1 = clamp_unit(u1);
        let u2 = clamp_unit(u2);
        match *self {
            Copula::Normal { rho } => {
                let x = normal_quantile(u1).expect("interior");
                let y = normal_quantile(u2).expect("interior");
                normal_ln_pdf_xy(x, y, rho)
            }
            Copula::StudentT { rho, nu } => {
                let x = student_t_quantile(u1, nu).expect("interior");
                let y = student_t_quantile(u2, nu).expect("interior");
                student_t_ln_pdf_xy(x, y, rho, nu)
            }
            Copula::Clayton { alpha } => clayton_ln_pdf(u1, u2, alpha),
            Copula::SurvivalClayton { alpha } => clayton_ln_pdf(1.0 - u1, 1.0 - u2, alpha),
            Copula::Rotated90Clayton { alpha } => clayton_ln_pdf(1.0 - u1, u2, alpha),
            Copula::Rotated270Clayton { alpha } => clayton_ln_pdf(u1, 1.0 - u2, alpha),
            Copula::Gumbel { alpha } => gumbel_ln_pdf(u1, u2, alpha),
            Copula::SurvivalGumbel { alpha } => gumbel_ln_pdf(1.0 - u1, 1.0 - u2, alpha),
            Copula::GumbelMixture {
                theta_upper,
                theta_lower,
                weight_upper,
            } => mixture_ln_pdf(u1, u2, theta_upper, theta_lower, weight_upper),
        }
    }

    /// Conditional distribution (h-function) `dC(u1,u2)/du2`, i.e.
    /// `P(U1 <= u1 | U2 = u2)`. Monotone nondecreasing in `u1`.
    pub fn hfunc(&self, u1: f64, u2: f64) -> f64 {
        if u1 <= 0.0 {
            return 0.0;
        }
        if u1 >= 1.0 {
            return 1.0;
        }
        let u1c = clamp_unit(u1);
        let u2c = clamp_unit(u2);
        let v = match *self {
            Copula::Normal { rho } => {
                let x = normal_quantile(u1c).expect("interior");
                let y = normal_quantile(u2c).expect("interior");
                normal_cdf((x - rho * y) / ((1.0 - rho) * (1.0 + rho)).sqrt())
            }
            Copula::StudentT { rho, nu } => {
                let x = student_t_quantile(u1c, nu).expect("interior");
                let y = student_t_quantile(u2c, nu).expect("interior");
                let scale = ((nu + 1.0) / ((nu + y * y) * (1.0 - rho) * (1.0 + rho))).sqrt();
                student_t_cdf((x - rho * y) * scale, nu + 1.0)
            }
            Copula::Clayton { alpha } => clayton_hfunc(u1c, u2c, alpha),
            Copula::SurvivalClayton { alpha } => 1.0 - clayton_hfunc(1.0 - u1c, 1.0 - u2c, alpha),
            Copula::Rotated90Clayton { alpha } => 1.0 - clayton_hfunc(1.0 - u1c, u2c, alpha),
            Copula::Rotated270Clayton { alpha } => clayton_hfunc(u1c, 1.0 - u2c, alpha),
            Copula::Gumbel { alpha } => gumbel_hfunc(u1c, u2c, alpha),
            Copula::SurvivalGumbel { alpha } => 1.0 - gumbel_hfunc(1.0 - u1c, 1.0 - u2c, alpha),
            Copula::GumbelMixture {
                theta_upper,
                theta_lower,
                weight_upper,
            } => {
                weight_upper * gumbel_hfunc(u1c, u2c, theta_upper)
                    + (1.0 - weight_upper)
                        * (1.0 - gumbel_hfunc(1.0 - u1c, 1.0 - u2c, theta_lower))
            }
        };
        v.clamp(0.0, 1.0)
    }

    /// Draws `n` pairs from the copula; deterministic for a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    /// Like [`Copula::sample`] with a caller-owned generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(f64, f64)> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    pub(crate) fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match *self {
            Copula::Normal { rho } => {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                let x2 = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
                (normal_cdf(z1), normal_cdf(x2))
            }
            Copula::StudentT { rho, nu } => {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                let x2 = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
                let chi = ChiSquared::new(nu).expect("nu > 2").sample(rng);
                let scale = (nu / chi).sqrt();
                (
                    student_t_cdf(z1 * scale, nu),
                    student_t_cdf(x2 * scale, nu),
                )
            }
            Copula::Clayton { alpha } => clayton_sample_positive(rng, alpha),
            Copula::SurvivalClayton { alpha } => {
                let (u, v) = clayton_sample_positive(rng, alpha);
                (1.0 - u, 1.0 - v)
            }
            Copula::Rotated90Clayton { alpha } => {
                let (u, v) = clayton_sample_conditional(rng, alpha);
                (1.0 - u, v)
            }
            Copula::Rotated270Clayton { alpha } => {
                let (u, v) = clayton_sample_conditional(rng, alpha);
                (u, 1.0 - v)
            }
            Copula::Gumbel { alpha } => gumbel_sample(rng, alpha),
            Copula::SurvivalGumbel { alpha } => {
                let (u, v) = gumbel_sample(rng, alpha);
                (1.0 - u, 1.0 - v)
            }
            Copula::GumbelMixture {
                theta_upper,
                theta_lower,
                weight_upper,
            } => {
                if rng.random::<f64>() < weight_upper {
                    gumbel_sample(rng, theta_upper)
                } else {
                    let (u, v) = gumbel_sample(rng, theta_lower);
                    (1.0 - u, 1.0 - v)
                }
            }
        }
    }

    /// Kendall tau and tail-dependence coefficients.
    ///
    /// Closed forms for the single families; the mixture tau is computed
    /// by Monte Carlo (1e6 pairs, fixed internal seed) because the
    /// mixture concordance includes a cross term with no closed form,
    /// while the mixture tails are the weight-scaled component tails.
    pub fn dependence_summary(&self) -> DependenceSummary {
        match *self {
            Copula::Normal { rho } => DependenceSummary {
                tau: 2.0 * rho.asin() / std::f64::consts::PI,
                lambda_low: 0.0,
                lambda_up: 0.0,
            },
            Copula::StudentT { rho, nu } => {
                let lam = 2.0 * student_t_cdf(
                    -((nu + 1.0) * (1.0 - rho) / (1.0 + rho)).sqrt(),
                    nu + 1.0,
                );
                DependenceSummary {
                    tau: 2.0 * rho.asin() / std::f64::consts::PI,
                    lambda_low: lam,
                    lambda_up: lam,
                }
            }
            Copula::Clayton { alpha } => DependenceSummary {
                tau: alpha / (2.0 + alpha),
                lambda_low: powf2(-1.0 / alpha),
                lambda_up: 0.0,
            },
            Copula::SurvivalClayton { alpha } => DependenceSummary {
                tau: alpha / (2.0 + alpha),
                lambda_low: 0.0,
                lambda_up: powf2(-1.0 / alpha),
            },
            // Reflecting one margin of the negative-parameter Clayton
            // flips the sign of its concordance and removes both
            // standard-corner tails.
            Copula::Rotated90Clayton { alpha } | Copula::Rotated270Clayton { alpha } => {
                DependenceSummary {
                    tau: -alpha / (2.0 + alpha),
                    lambda_low: 0.0,
                    lambda_up: 0.0,
                }
            }
            Copula::Gumbel { alpha } => DependenceSummary {
                tau: 1.0 - 1.0 / alpha,
                lambda_low: 0.0,
                lambda_up: 2.0 - powf2(1.0 / alpha),
            },
            Copula::SurvivalGumbel { alpha } => DependenceSummary {
                tau: 1.0 - 1.0 / alpha,
                lambda_low: 2.0 - powf2(1.0 / alpha),
                lambda_up: 0.0,
            },
            Copula::GumbelMixture {
                theta_upper,
                theta_lower,
                weight_upper,
            } => {
                let n = 1_000_000;
                let pairs = self.sample(n, 0x7a11_de9e);
                let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                DependenceSummary {
                    tau: kendall_tau(&a, &b),
                    lambda_low: (1.0 - weight_upper) * (2.0 - powf2(1.0 / theta_lower)),
                    lambda_up: weight_upper * (2.0 - powf2(1.0 / theta_upper)),
                }
            }
        }
    }
}

/// Kendall tau and tail-dependence coefficients of a copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceSummary {
    pub tau: f64,
    pub lambda_low: f64,
    pub lambda_up: f64,
}

/// A fitted copula with goodness-of-fit measures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CopulaModel {
    pub copula: Copula,
    /// Natural parameters in reporting order.
    pub params: Vec<f64>,
    /// Standard errors from the inverse numerical Hessian (NaN where the
    /// Hessian could not be resolved).
    pub std_errors: Vec<f64>,
    pub loglik: f64,
    /// `2k - 2 LL` with `k` free parameters (mixture weights count as
    /// one less than the number of components).
    pub aic: f64,
    /// `k ln(T) - 2 LL`.
    pub bic: f64,
    pub n_obs: usize,
    pub dependence: DependenceSummary,
    /// Set when an estimate sits on its parameter-domain boundary.
    pub at_boundary: bool,
    /// Pseudo-observations clamped into the interior before evaluation.
    pub clamped: usize,
    pub converged: bool,
}

impl CopulaModel {
    pub fn family_name(&self) -> &'static str {
        self.copula.name()
    }
}

/// Information criteria for a log-likelihood with `k` free parameters.
pub fn information_criteria(loglik: f64, k: usize, n_obs: usize) -> (f64, f64) {
    let k = k as f64;
    (
        2.0 * k - 2.0 * loglik,
        k * (n_obs as f64).ln() - 2.0 * loglik,
    )
}

fn clamp_unit(u: f64) -> f64 {
    u.clamp(UNIT_CLAMP, 1.0 - UNIT_CLAMP)
}

fn powf2(e: f64) -> f64 {
    2f64.powf(e)
}

fn normal_ln_pdf_xy(x: f64, y: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let omr2 = (1.0 - rho) * (1.0 + rho);
    -0.5 * omr2.ln() + (2.0 * rho * x * y - rho * rho * (x * x + y * y)) / (2.0 * omr2)
}

fn student_t_ln_pdf_xy(x: f64, y: f64, rho: f64, nu: f64) -> f64 {
    let omr2 = (1.0 - rho) * (1.0 + rho);
    let quad = (x * x + y * y - 2.0 * rho * x * y) / (nu * omr2);
    ln_gamma((nu + 2.0) / 2.0) + ln_gamma(nu / 2.0) - 2.0 * ln_gamma((nu + 1.0) / 2.0)
        - 0.5 * omr2.ln()
        - 0.5 * (nu + 2.0) * quad.ln_1p()
        + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p())
}

fn clayton_cdf(u: f64, v: f64, alpha: f64) -> f64 {
    let s = u.powf(-alpha) + v.powf(-alpha) - 1.0;
    if s <= 0.0 {
        0.0
    } else {
        s.powf(-1.0 / alpha)
    }
}

fn clayton_ln_pdf(u: f64, v: f64, alpha: f64) -> f64 {
    let s = u.powf(-alpha) + v.powf(-alpha) - 1.0;
    if s <= 0.0 || alpha <= -1.0 || alpha == 0.0 {
        return f64::NEG_INFINITY;
    }
    (1.0 + alpha).ln() - (alpha + 1.0) * (u.ln() + v.ln()) - (2.0 + 1.0 / alpha) * s.ln()
}

/// `dC/dv` for the Clayton family (either parameter sign).
fn clayton_hfunc(u: f64, v: f64, alpha: f64) -> f64 {
    let s = u.powf(-alpha) + v.powf(-alpha) - 1.0;
    if s <= 0.0 {
        // Inside the zero region of a negative-parameter Clayton the CDF
        // is flat in v at fixed u... the conditional mass is zero below
        // the boundary curve.
        return 0.0;
    }
    (v.powf(-alpha - 1.0) * s.powf(-1.0 / alpha - 1.0)).clamp(0.0, 1.0)
}

fn gumbel_cdf(u: f64, v: f64, alpha: f64) -> f64 {
    let x = -u.ln();
    let y = -v.ln();
    let s = (x.powf(alpha) + y.powf(alpha)).powf(1.0 / alpha);
    (-s).exp()
}

fn gumbel_ln_pdf(u: f64, v: f64, alpha: f64) -> f64 {
    if alpha < 1.0 {
        return f64::NEG_INFINITY;
    }
    let x = -u.ln();
    let y = -v.ln();
    let big_s = x.powf(alpha) + y.powf(alpha);
    let s = big_s.powf(1.0 / alpha);
    -s + (alpha - 1.0) * (x.ln() + y.ln()) + x + y - (2.0 - 1.0 / alpha) * big_s.ln()
        + (s + alpha - 1.0).ln()
}

/// `dC/dv` for the Gumbel family.
fn gumbel_hfunc(u: f64, v: f64, alpha: f64) -> f64 {
    let x = -u.ln();
    let y = -v.ln();
    let big_s = x.powf(alpha) + y.powf(alpha);
    let s = big_s.powf(1.0 / alpha);
    (-s + (alpha - 1.0) * y.ln() + y + (1.0 / alpha - 1.0) * big_s.ln())
        .exp()
        .clamp(0.0, 1.0)
}

fn mixture_ln_pdf(u: f64, v: f64, theta_up: f64, theta_lo: f64, w: f64) -> f64 {
    let a = if w > 0.0 {
        w.ln() + gumbel_ln_pdf(u, v, theta_up)
    } else {
        f64::NEG_INFINITY
    };
    let b = if w < 1.0 {
        (1.0 - w).ln() + gumbel_ln_pdf(1.0 - u, 1.0 - v, theta_lo)
    } else {
        f64::NEG_INFINITY
    };
    log_sum_exp(a, b)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Gamma-frailty sampler for the positive-parameter Clayton copula.
fn clayton_sample_positive<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> (f64, f64) {
    let shape = 1.0 / alpha;
    let g = rand_distr::Gamma::new(shape, 1.0)
        .expect("positive shape")
        .sample(rng);
    let u = (1.0 + exp1(rng) / g).powf(-1.0 / alpha);
    let v = (1.0 + exp1(rng) / g).powf(-1.0 / alpha);
    (u, v)
}

/// Conditional-inversion sampler valid for Clayton parameters in
/// (-1, 0), where the frailty construction does not exist.
fn clayton_sample_conditional<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> (f64, f64) {
    let u: f64 = rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12);
    let w: f64 = rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12);
    // Invert h(v|u) = u^{-a-1} s^{-1/a-1}: the same closed form as the
    // positive-parameter case.
    let s = (w * u.powf(1.0 + alpha)).powf(-alpha / (1.0 + alpha));
    let v = (s + 1.0 - u.powf(-alpha)).powf(-1.0 / alpha);
    (u, v.clamp(0.0, 1.0))
}

/// Marshall-Olkin positive-stable frailty sampler for the Gumbel copula.
fn gumbel_sample<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> (f64, f64) {
    let a = 1.0 / alpha;
    if a >= 1.0 - 1e-9 {
        return (rng.random::<f64>(), rng.random::<f64>());
    }
    // Chambers-Mallows-Stuck positive stable with index a.
    let theta = rng.random::<f64>() * std::f64::consts::PI;
    let w = exp1(rng).max(1e-300);
    let st = ((a * theta).sin() / theta.sin().powf(1.0 / a))
        * (((1.0 - a) * theta).sin() / w).powf((1.0 - a) / a);
    let u = (-(exp1(rng) / st).powf(a)).exp();
    let v = (-(exp1(rng) / st).powf(a)).exp();
    (u, v)
}
