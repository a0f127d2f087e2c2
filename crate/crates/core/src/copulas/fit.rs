//! Canonical maximum-likelihood estimation of copula parameters on rank
//! pseudo-observations.
//!
//! Constrained domains are handled by smooth reparameterization:
//! correlations through `tanh`, Clayton/Gumbel offsets through
//! exponential maps, the rotated-Clayton parameter through a negated
//! logistic onto (-1,0), the Student-t degrees of freedom through a
//! capped exponential, and mixture weights through a logistic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    clamp_unit, information_criteria, mixture_ln_pdf, Copula, CopulaFamily, CopulaModel,
    STUDENT_T_NU_MAX, STUDENT_T_NU_MIN,
};
use crate::distributions::normal_quantile;
use crate::error::{Error, Result};
use crate::market_data::stats::kendall_tau;
use crate::optimize;

/// Minimum paired sample size for copula estimation.
pub const MIN_OBS: usize = 100;

/// A fit candidate: one of the single families or the Gumbel /
/// survival-Gumbel mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Candidate {
    Single(CopulaFamily),
    MixedGumbel,
}

impl Candidate {
    pub fn name(&self) -> &'static str {
        match self {
            Candidate::Single(f) => f.name(),
            Candidate::MixedGumbel => "mixed-gumbel",
        }
    }

    /// The paper workflow's default candidate set: all eight single
    /// families plus the mixture.
    pub fn default_set() -> Vec<Candidate> {
        let mut v: Vec<Candidate> = CopulaFamily::ALL.into_iter().map(Candidate::Single).collect();
        v.push(Candidate::MixedGumbel);
        v
    }
}

struct Prepared {
    u1: Vec<f64>,
    u2: Vec<f64>,
    clamped: usize,
    tau: f64,
}

fn prepare(u1: &[f64], u2: &[f64]) -> Result<Prepared> {
    if u1.len() != u2.len() {
        return Err(Error::Validation(format!(
            "pseudo-observation length mismatch: {} vs {}",
            u1.len(),
            u2.len()
        )));
    }
    if u1.len() < MIN_OBS {
        return Err(Error::Validation(format!(
            "copula fit requires at least {MIN_OBS} paired observations, got {}",
            u1.len()
        )));
    }
    let mut clamped = 0usize;
    let clamp_all = |v: &[f64], clamped: &mut usize| -> Vec<f64> {
        v.iter()
            .map(|&u| {
                let c = clamp_unit(u);
                if c != u {
                    *clamped += 1;
                }
                c
            })
            .collect()
    };
    let c1 = clamp_all(u1, &mut clamped);
    let c2 = clamp_all(u2, &mut clamped);
    let tau = kendall_tau(&c1, &c2);
    Ok(Prepared {
        u1: c1,
        u2: c2,
        clamped,
        tau,
    })
}

/// Negative copula log-likelihood over transformed parameters.
fn single_neg_ll(family: CopulaFamily, data: &Prepared) -> impl Fn(&[f64]) -> f64 + '_ {
    // Normal and Student-t evaluate on precomputed normal scores where
    // possible; the Student-t quantile transform depends on nu and must
    // stay inside the objective.
    let scores: Option<(Vec<f64>, Vec<f64>)> = if family == CopulaFamily::Normal {
        Some((
            data.u1.iter().map(|&u| normal_quantile(u).unwrap()).collect(),
            data.u2.iter().map(|&u| normal_quantile(u).unwrap()).collect(),
        ))
    } else {
        None
    };
    move |w: &[f64]| -> f64 {
        let copula = match natural_params(family, w) {
            Some(c) => c,
            None => return f64::INFINITY,
        };
        let mut ll = 0.0;
        match (&copula, &scores) {
            (Copula::Normal { rho }, Some((xs, ys))) => {
                for (&x, &y) in xs.iter().zip(ys) {
                    ll += super::normal_ln_pdf_xy(x, y, *rho);
                }
            }
            _ => {
                for (&a, &b) in data.u1.iter().zip(&data.u2) {
                    ll += copula.ln_pdf(a, b);
                }
            }
        }
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    }
}

/// Maps transformed coordinates to a validated copula.
fn natural_params(family: CopulaFamily, w: &[f64]) -> Option<Copula> {
    let c = match family {
        CopulaFamily::Normal => Copula::Normal { rho: w[0].tanh() },
        CopulaFamily::StudentT => Copula::StudentT {
            rho: w[0].tanh(),
            nu: (STUDENT_T_NU_MIN + w[1].min(NU_W_CAP).exp()).min(STUDENT_T_NU_MAX),
        },
        CopulaFamily::Clayton => Copula::Clayton { alpha: w[0].exp() },
        CopulaFamily::SurvivalClayton => Copula::SurvivalClayton { alpha: w[0].exp() },
        CopulaFamily::Rotated90Clayton => Copula::Rotated90Clayton {
            alpha: -logistic(w[0]),
        },
        CopulaFamily::Rotated270Clayton => Copula::Rotated270Clayton {
            alpha: -logistic(w[0]),
        },
        CopulaFamily::Gumbel => Copula::Gumbel {
            alpha: 1.0 + w[0].exp(),
        },
        CopulaFamily::SurvivalGumbel => Copula::SurvivalGumbel {
            alpha: 1.0 + w[0].exp(),
        },
    };
    c.validate().ok().map(|_| c)
}

/// Cap on the Student-t transformed dof so `exp` stays below the nu
/// ceiling; the objective is flat past the cap, which pins boundary
/// estimates at exactly `STUDENT_T_NU_MAX`.
const NU_W_CAP: f64 = 4.584_967_478_670_572; // ln(100 - 2 - 1e-4)

fn logistic(w: f64) -> f64 {
    1.0 / (1.0 + (-w).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Fits one single-family copula by CML.
pub fn fit_single(u1: &[f64], u2: &[f64], family: CopulaFamily) -> Result<CopulaModel> {
    let data = prepare(u1, u2)?;
    let neg_ll = single_neg_ll(family, &data);
    let tau = data.tau;

    // Moment-matched starting points from the empirical Kendall tau.
    let starts: Vec<Vec<f64>> = match family {
        CopulaFamily::Normal => {
            let rho0 = (std::f64::consts::PI * tau / 2.0).sin().clamp(-0.999, 0.999);
            vec![vec![rho0.atanh()]]
        }
        CopulaFamily::StudentT => {
            let rho0 = (std::f64::consts::PI * tau / 2.0).sin().clamp(-0.999, 0.999);
            vec![
                vec![rho0.atanh(), (6.0f64 - 2.0).ln()],
                vec![rho0.atanh(), (20.0f64 - 2.0).ln()],
                vec![rho0.atanh(), (2.5f64 - 2.0).ln()],
            ]
        }
        CopulaFamily::Clayton | CopulaFamily::SurvivalClayton => {
            let t = tau.clamp(1e-4, 0.98);
            vec![vec![(2.0 * t / (1.0 - t)).max(1e-3).ln()]]
        }
        CopulaFamily::Rotated90Clayton | CopulaFamily::Rotated270Clayton => {
            let t = (-tau).clamp(1e-4, 0.98);
            let alpha0 = (2.0 * t / (1.0 + t)).clamp(1e-5, 0.99);
            vec![vec![logit(alpha0)]]
        }
        CopulaFamily::Gumbel | CopulaFamily::SurvivalGumbel => {
            let t = tau.clamp(1e-4, 0.98);
            vec![vec![(1.0 / (1.0 - t) - 1.0).max(1e-3).ln()]]
        }
    };

    let dim = starts[0].len();
    let best = if dim == 1 {
        // Single-parameter families: golden-section over a wide bracket
        // around the moment start.
        let center = starts[0][0];
        let (w, value) = optimize::minimize_1d(
            |w| neg_ll(&[w]),
            (center - 9.0).max(-18.0),
            center + 7.0,
            1e-10,
        );
        optimize::OptimResult {
            x: vec![w],
            value,
            evals: 0,
            converged: value.is_finite(),
        }
    } else {
        starts
            .iter()
            .map(|s| optimize::minimize(&neg_ll, s, 0.4, 400 * dim, 150))
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .unwrap()
    };

    if !best.value.is_finite() {
        return Err(Error::Fit(format!(
            "{} copula likelihood non-finite at every start",
            family.name()
        )));
    }

    let copula = natural_params(family, &best.x)
        .ok_or_else(|| Error::Fit(format!("{} optimizer left the domain", family.name())))?;
    let params = copula.params();

    // Standard errors in natural coordinates.
    let nat_neg_ll = |p: &[f64]| -> f64 {
        let c = copula_from_natural(family, p);
        match c {
            Some(c) if c.validate().is_ok() => {
                let mut ll = 0.0;
                for (&a, &b) in data.u1.iter().zip(&data.u2) {
                    ll += c.ln_pdf(a, b);
                }
                if ll.is_finite() {
                    -ll
                } else {
                    f64::INFINITY
                }
            }
            _ => f64::INFINITY,
        }
    };
    let hess = optimize::numerical_hessian(&nat_neg_ll, &params);
    let std_errors = optimize::std_errors_from_hessian(&hess);

    let loglik = -best.value;
    let (aic, bic) = information_criteria(loglik, params.len(), data.u1.len());
    let at_boundary = boundary_flag(&copula);
    Ok(CopulaModel {
        copula,
        params,
        std_errors,
        loglik,
        aic,
        bic,
        n_obs: data.u1.len(),
        dependence: copula.dependence_summary(),
        at_boundary,
        clamped: data.clamped,
        converged: best.converged,
    })
}

fn copula_from_natural(family: CopulaFamily, p: &[f64]) -> Option<Copula> {
    Some(match family {
        CopulaFamily::Normal => Copula::Normal { rho: p[0] },
        CopulaFamily::StudentT => Copula::StudentT { rho: p[0], nu: p[1] },
        CopulaFamily::Clayton => Copula::Clayton { alpha: p[0] },
        CopulaFamily::SurvivalClayton => Copula::SurvivalClayton { alpha: p[0] },
        CopulaFamily::Rotated90Clayton => Copula::Rotated90Clayton { alpha: p[0] },
        CopulaFamily::Rotated270Clayton => Copula::Rotated270Clayton { alpha: p[0] },
        CopulaFamily::Gumbel => Copula::Gumbel { alpha: p[0] },
        CopulaFamily::SurvivalGumbel => Copula::SurvivalGumbel { alpha: p[0] },
    })
}

fn boundary_flag(copula: &Copula) -> bool {
    match *copula {
        Copula::StudentT { nu, .. } => {
            nu <= STUDENT_T_NU_MIN + 1e-3 || nu >= STUDENT_T_NU_MAX - 1e-3
        }
        Copula::Clayton { alpha } | Copula::SurvivalClayton { alpha } => alpha < 1e-3,
        Copula::Rotated90Clayton { alpha } | Copula::Rotated270Clayton { alpha } => {
            alpha > -1e-3 || alpha < -1.0 + 1e-3
        }
        Copula::Gumbel { alpha } | Copula::SurvivalGumbel { alpha } => alpha < 1.0 + 1e-3,
        Copula::GumbelMixture {
            theta_upper,
            theta_lower,
            weight_upper,
        } => {
            weight_upper < 1e-3
                || weight_upper > 1.0 - 1e-3
                || theta_upper < 1.0 + 1e-3
                || theta_lower < 1.0 + 1e-3
        }
        Copula::Normal { .. } => false,
    }
}

/// Fits the Gumbel / survival-Gumbel mixture by direct maximization of
/// the mixture log-likelihood over `(theta_upper, theta_lower,
/// weight_upper)`, with five random restarts plus one start informed by
/// the better single-family fit. Weight collapse onto a boundary is
/// admissible and reported, not an error.
pub fn fit_mixed(u1: &[f64], u2: &[f64]) -> Result<CopulaModel> {
    let data = prepare(u1, u2)?;
    let neg_ll = |w: &[f64]| -> f64 {
        let theta_up = 1.0 + w[0].clamp(-30.0, 8.0).exp();
        let theta_lo = 1.0 + w[1].clamp(-30.0, 8.0).exp();
        let weight = logistic(w[2].clamp(-40.0, 40.0));
        let mut ll = 0.0;
        for (&a, &b) in data.u1.iter().zip(&data.u2) {
            ll += mixture_ln_pdf(a, b, theta_up, theta_lo, weight);
        }
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    // Informed start from the better pure fit.
    let g = fit_single(u1, u2, CopulaFamily::Gumbel)?;
    let sg = fit_single(u1, u2, CopulaFamily::SurvivalGumbel)?;
    let (alpha_g, alpha_sg) = (g.params[0], sg.params[0]);
    let informed = if g.loglik >= sg.loglik {
        vec![
            (alpha_g - 1.0).max(1e-3).ln(),
            (alpha_sg - 1.0).max(0.2).ln(),
            logit(0.75),
        ]
    } else {
        vec![
            (alpha_g - 1.0).max(0.2).ln(),
            (alpha_sg - 1.0).max(1e-3).ln(),
            logit(0.25),
        ]
    };
    starts.push(informed);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d69_7865);
    for _ in 0..5 {
        starts.push(vec![
            rng.random::<f64>() * 3.0 - 1.5,
            rng.random::<f64>() * 3.0 - 1.5,
            rng.random::<f64>() * 4.0 - 2.0,
        ]);
    }

    let best = starts
        .iter()
        .map(|s| optimize::minimize(&neg_ll, s, 0.4, 450, 120))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Fit("mixture fit produced no result".into()))?;
    if !best.value.is_finite() {
        return Err(Error::Fit(
            "mixture copula likelihood non-finite at every restart".into(),
        ));
    }

    let copula = Copula::GumbelMixture {
        theta_upper: 1.0 + best.x[0].clamp(-30.0, 8.0).exp(),
        theta_lower: 1.0 + best.x[1].clamp(-30.0, 8.0).exp(),
        weight_upper: logistic(best.x[2].clamp(-40.0, 40.0)),
    };
    let params = copula.params();

    let nat_neg_ll = |p: &[f64]| -> f64 {
        if !(p[0] >= 1.0 && p[1] >= 1.0 && (0.0..=1.0).contains(&p[2])) {
            return f64::INFINITY;
        }
        let mut ll = 0.0;
        for (&a, &b) in data.u1.iter().zip(&data.u2) {
            ll += mixture_ln_pdf(a, b, p[0], p[1], p[2]);
        }
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let hess = optimize::numerical_hessian(&nat_neg_ll, &params);
    let std_errors = optimize::std_errors_from_hessian(&hess);

    let loglik = -best.value;
    // Three free parameters: the second weight is determined.
    let (aic, bic) = information_criteria(loglik, 3, data.u1.len());
    let at_boundary = boundary_flag(&copula);
    Ok(CopulaModel {
        copula,
        params,
        std_errors,
        loglik,
        aic,
        bic,
        n_obs: data.u1.len(),
        dependence: copula.dependence_summary(),
        at_boundary,
        clamped: data.clamped,
        converged: best.converged,
    })
}

/// Fits every candidate and ranks the results by ascending AIC. The
/// ranking is a permutation of the requested candidates; individual fit
/// failures abort the selection only if every candidate fails.
pub fn model_selection(
    u1: &[f64],
    u2: &[f64],
    candidates: &[Candidate],
) -> Result<Vec<CopulaModel>> {
    if candidates.is_empty() {
        return Err(Error::Validation("empty copula candidate list".into()));
    }
    let results: Vec<(Candidate, Result<CopulaModel>)> = candidates
        .par_iter()
        .map(|&c| {
            let r = match c {
                Candidate::Single(f) => fit_single(u1, u2, f),
                Candidate::MixedGumbel => fit_mixed(u1, u2),
            };
            (c, r)
        })
        .collect();

    let mut fitted = Vec::new();
    let mut errors = Vec::new();
    for (c, r) in results {
        match r {
            Ok(m) => fitted.push(m),
            Err(e) => errors.push(format!("{}: {e}", c.name())),
        }
    }
    if fitted.is_empty() {
        return Err(Error::Fit(format!(
            "all copula candidates failed: {}",
            errors.join("; ")
        )));
    }
    if !errors.is_empty() {
        log::warn!("copula candidates failed: {}", errors.join("; "));
    }
    fitted.sort_by(|a, b| {
        a.aic
            .total_cmp(&b.aic)
            .then_with(|| a.family_name().cmp(b.family_name()))
    });
    Ok(fitted)
}
