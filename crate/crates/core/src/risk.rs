//! Downside/upside Value-at-Risk, copula-conditional CoVaR (extreme and
//! median-state), and delta-CoVaR series for a spot marginal conditioned
//! on its futures counterpart.
//!
//! Level conventions: the downside CoVaR level solves
//! `C(u*, a1) = a2 a1` (the conditioning event is the futures margin at
//! or below its VaR level). The upside default solves the joint-survival
//! analogue `1 - u* - a1 + C(u*, a1) = (1-a1)(1-a2)`, the form implied
//! by the conditioning event "futures at or above its upper VaR"; the
//! joint-CDF reading of the same inversion applied at upper levels is
//! retained as a config option for auditability. Median-state CoVaR
//! defaults to the same event machinery at level one half, with the
//! equality (h-function) reading available as an option.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::copulas::Copula;
use crate::error::{Error, Result};
use crate::marginal::MarginalFit;
use crate::market_data::stats;

/// How the upside CoVaR level is inverted from the copula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum UpsideConvention {
    /// Solve the joint survival equation
    /// `1 - u - a1 + C(u, a1) = (1-a1)(1-a2)`; the conditioning event is
    /// the futures margin exceeding its upper VaR. Default.
    #[default]
    JointSurvival,
    /// Apply the downside inversion `C(u, a1) = a2 a1` literally at the
    /// upper levels.
    JointCdf,
}

/// How the median-state CoVaR level conditions on the futures margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalStateConvention {
    /// Event conditioning at level one half, reusing the tail machinery.
    /// Default.
    #[default]
    Event,
    /// Equality conditioning `P(U2 <= u | U1 = 1/2) = a2` through the
    /// copula h-function.
    Equality,
}

/// Risk levels and conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub alpha_down: f64,
    pub alpha_up: f64,
    pub normal_state: f64,
    pub upside_convention: UpsideConvention,
    pub normal_state_convention: NormalStateConvention,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            alpha_down: 0.05,
            alpha_up: 0.95,
            normal_state: 0.5,
            upside_convention: UpsideConvention::default(),
            normal_state_convention: NormalStateConvention::default(),
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.alpha_down && self.alpha_down < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha_down must be in (0, 0.5), got {}",
                self.alpha_down
            )));
        }
        if !(0.5 < self.alpha_up && self.alpha_up < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_up must be in (0.5, 1), got {}",
                self.alpha_up
            )));
        }
        if !(0.0 < self.normal_state && self.normal_state < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "normal_state must be in (0, 1), got {}",
                self.normal_state
            )));
        }
        Ok(())
    }
}

/// Which tail is being conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailSide {
    Down,
    Up,
}

/// Per-date VaR, CoVaR, median-state CoVaR and delta-CoVaR for the
/// conditioned (spot) series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskSeries {
    pub model: String,
    pub dates: Vec<NaiveDate>,
    pub var_down: Vec<f64>,
    pub var_up: Vec<f64>,
    pub covar_down: Vec<f64>,
    pub covar_up: Vec<f64>,
    pub covar_down_normal: Vec<f64>,
    pub covar_up_normal: Vec<f64>,
    pub delta_covar_down: Vec<f64>,
    pub delta_covar_up: Vec<f64>,
    /// Solved copula levels, time-invariant diagnostics:
    /// `[down, up, down_normal, up_normal]`.
    pub u_star: [f64; 4],
}

impl RiskSeries {
    pub fn len(&self) -> usize {
        self.var_down.len()
    }

    pub fn is_empty(&self) -> bool {
        self.var_down.is_empty()
    }
}

const BISECT_LO: f64 = 1e-12;
const BISECT_HI: f64 = 1.0 - 1e-12;
const BISECT_TOL: f64 = 1e-10;
const BISECT_MAX_ITER: usize = 200;

fn bisect<F: Fn(f64) -> f64>(f: F, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (BISECT_LO, BISECT_HI);
    let flo = f(lo) - target;
    let fhi = f(hi) - target;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change when inverting the copula: f(lo)-t={flo}, f(hi)-t={fhi}"
        )));
    }
    let increasing = flo < 0.0;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECT_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let fm = f(mid) - target;
        if hi - lo < BISECT_TOL {
            break;
        }
        if (fm < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

fn is_independence(copula: &Copula) -> bool {
    matches!(copula, Copula::Normal { rho } if *rho == 0.0)
}

/// Solves for the conditioned margin's copula level `u*`.
///
/// Downside: `C(u*, alpha1) = alpha2 alpha1` (closed form for the
/// Clayton family, monotone bisection otherwise). Upside: per the
/// configured [`UpsideConvention`].
pub fn covar_quantile(
    copula: &Copula,
    alpha1: f64,
    alpha2: f64,
    side: TailSide,
    convention: UpsideConvention,
) -> Result<f64> {
    if !(0.0 < alpha1 && alpha1 < 1.0) || !(0.0 < alpha2 && alpha2 < 1.0) {
        return Err(Error::Domain(format!(
            "conditioning levels must be interior, got ({alpha1}, {alpha2})"
        )));
    }
    copula.validate()?;
    if is_independence(copula) {
        return Ok(alpha2);
    }
    match side {
        TailSide::Down => {
            if let Copula::Clayton { alpha } = copula {
                let a = *alpha;
                let u = ((alpha2 * alpha1).powf(-a) - alpha1.powf(-a) + 1.0).powf(-1.0 / a);
                return Ok(u);
            }
            bisect(|u| copula.cdf(u, alpha1), alpha2 * alpha1)
        }
        TailSide::Up => match convention {
            UpsideConvention::JointCdf => bisect(|u| copula.cdf(u, alpha1), alpha2 * alpha1),
            UpsideConvention::JointSurvival => bisect(
                |u| 1.0 - u - alpha1 + copula.cdf(u, alpha1),
                (1.0 - alpha1) * (1.0 - alpha2),
            ),
        },
    }
}

/// Median-state copula level under the configured convention.
pub fn normal_state_quantile(
    copula: &Copula,
    config: &RiskConfig,
    side: TailSide,
) -> Result<f64> {
    let state = config.normal_state;
    let alpha2 = match side {
        TailSide::Down => config.alpha_down,
        TailSide::Up => config.alpha_up,
    };
    match config.normal_state_convention {
        NormalStateConvention::Event => match side {
            TailSide::Down => covar_quantile(
                copula,
                state,
                alpha2,
                TailSide::Down,
                config.upside_convention,
            ),
            TailSide::Up => covar_quantile(
                copula,
                state,
                alpha2,
                TailSide::Up,
                config.upside_convention,
            ),
        },
        NormalStateConvention::Equality => {
            if is_independence(copula) {
                return Ok(alpha2);
            }
            bisect(|u| copula.hfunc(u, state), alpha2)
        }
    }
}

/// VaR series `mu_t + sigma_t q(alpha)` at one level.
pub fn var_series(fit: &MarginalFit, alpha: f64) -> Result<Vec<f64>> {
    let q = fit.params.dist.quantile(alpha)?;
    Ok(fit
        .mu
        .iter()
        .zip(&fit.sigma)
        .map(|(m, s)| m + s * q)
        .collect())
}

/// Computes the full risk series for the spot marginal under the given
/// copula. `dates` must align with the fit's filtered state.
pub fn risk_series(
    fit_spot: &MarginalFit,
    copula: &Copula,
    config: &RiskConfig,
    dates: &[NaiveDate],
) -> Result<RiskSeries> {
    config.validate()?;
    if dates.len() != fit_spot.n_obs {
        return Err(Error::Validation(format!(
            "risk series dates ({}) do not match the fitted sample ({})",
            dates.len(),
            fit_spot.n_obs
        )));
    }

    let u_down = covar_quantile(
        copula,
        config.alpha_down,
        config.alpha_down,
        TailSide::Down,
        config.upside_convention,
    )?;
    let u_up = covar_quantile(
        copula,
        config.alpha_up,
        config.alpha_up,
        TailSide::Up,
        config.upside_convention,
    )?;
    let u_down_normal = normal_state_quantile(copula, config, TailSide::Down)?;
    let u_up_normal = normal_state_quantile(copula, config, TailSide::Up)?;

    let dist = &fit_spot.params.dist;
    let q_var_down = dist.quantile(config.alpha_down)?;
    let q_var_up = dist.quantile(config.alpha_up)?;
    let q_cov_down = dist.quantile(u_down)?;
    let q_cov_up = dist.quantile(u_up)?;
    let q_cov_down_n = dist.quantile(u_down_normal)?;
    let q_cov_up_n = dist.quantile(u_up_normal)?;

    let t = fit_spot.n_obs;
    let mut rs = RiskSeries {
        model: copula.name().to_string(),
        dates: dates.to_vec(),
        var_down: Vec::with_capacity(t),
        var_up: Vec::with_capacity(t),
        covar_down: Vec::with_capacity(t),
        covar_up: Vec::with_capacity(t),
        covar_down_normal: Vec::with_capacity(t),
        covar_up_normal: Vec::with_capacity(t),
        delta_covar_down: Vec::with_capacity(t),
        delta_covar_up: Vec::with_capacity(t),
        u_star: [u_down, u_up, u_down_normal, u_up_normal],
    };
    for (m, s) in fit_spot.mu.iter().zip(&fit_spot.sigma) {
        let vd = m + s * q_var_down;
        let vu = m + s * q_var_up;
        debug_assert!(vd < vu);
        let cd = m + s * q_cov_down;
        let cu = m + s * q_cov_up;
        let cdn = m + s * q_cov_down_n;
        let cun = m + s * q_cov_up_n;
        rs.var_down.push(vd);
        rs.var_up.push(vu);
        rs.covar_down.push(cd);
        rs.covar_up.push(cu);
        rs.covar_down_normal.push(cdn);
        rs.covar_up_normal.push(cun);
        rs.delta_covar_down.push(cd - cdn);
        rs.delta_covar_up.push(cu - cun);
    }
    Ok(rs)
}

/// Summary statistics of one risk measure series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureStats {
    pub mean: f64,
    pub std_dev: f64,
    pub max: f64,
    pub min: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

fn measure_stats(x: &[f64]) -> MeasureStats {
    let (mean, _, _, _) = stats::central_moments(x);
    let constant = x.iter().all(|&v| v == x[0]);
    MeasureStats {
        mean,
        std_dev: if constant { 0.0 } else { stats::sample_std(x) },
        max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: x.iter().copied().fold(f64::INFINITY, f64::min),
        skewness: if constant { 0.0 } else { stats::skewness(x) },
        kurtosis: if constant { 0.0 } else { stats::kurtosis(x) },
    }
}

/// Per-measure summary table of a risk series, in reporting order.
pub fn risk_summary(rs: &RiskSeries) -> Vec<(String, MeasureStats)> {
    [
        ("var_down", &rs.var_down),
        ("var_up", &rs.var_up),
        ("covar_down", &rs.covar_down),
        ("covar_up", &rs.covar_up),
        ("covar_down_normal", &rs.covar_down_normal),
        ("covar_up_normal", &rs.covar_up_normal),
        ("delta_covar_down", &rs.delta_covar_down),
        ("delta_covar_up", &rs.delta_covar_up),
    ]
    .into_iter()
    .map(|(name, series)| (name.to_string(), measure_stats(series)))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SkewedT;
    use crate::marginal::{filter, MarginalFit, MarginalParams, MarginalSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic_dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
        (0..n as u64).map(|i| start + chrono::Days::new(i)).collect()
    }

    fn garch_fit(nu: f64, eta: f64, t: usize, seed: u64) -> MarginalFit {
        let spec = MarginalSpec::new(0, 0, 1, 1).unwrap();
        let params = MarginalParams {
            phi0: 0.02,
            phi: vec![],
            gamma: vec![],
            alpha0: 0.05,
            alpha: vec![0.08],
            beta: vec![0.9],
            dist: SkewedT::new(nu, eta).unwrap(),
        };
        // Generate a path with the model itself, then filter it.
        let z = params.dist.sample(t, seed);
        let mut r = Vec::with_capacity(t);
        let (mut eps_prev, mut s2_prev) = (0.0f64, 1.0f64);
        for &zi in &z {
            let s2 = 0.05 + 0.08 * eps_prev * eps_prev + 0.9 * s2_prev;
            let e = s2.sqrt() * zi;
            r.push(0.02 + e);
            eps_prev = e;
            s2_prev = s2;
        }
        let out = filter(&r, &spec, &params).unwrap();
        MarginalFit::from_filter("spot", spec, params, out)
    }

    #[test]
    fn var_series_median_is_mu_when_symmetric() {
        let fit = garch_fit(6.0, 0.0, 300, 1);
        let v = var_series(&fit, 0.5).unwrap();
        for (a, m) in v.iter().zip(&fit.mu) {
            assert!((a - m).abs() < 1e-10);
        }
    }

    #[test]
    fn var_series_location_scale() {
        let fit = garch_fit(6.0, 0.1, 200, 2);
        let v = var_series(&fit, 0.05).unwrap();
        let mut doubled = fit.clone();
        for s in doubled.sigma.iter_mut() {
            *s *= 2.0;
        }
        let v2 = var_series(&doubled, 0.05).unwrap();
        for i in 0..v.len() {
            let d1 = v[i] - fit.mu[i];
            let d2 = v2[i] - fit.mu[i];
            assert!((d2 - 2.0 * d1).abs() < 1e-10);
        }
    }

    #[test]
    fn var_series_matches_distribution_quantile() {
        let fit = garch_fit(6.0, 0.1, 50, 3);
        let v = var_series(&fit, 0.05).unwrap();
        let q = fit.params.dist.quantile(0.05).unwrap();
        assert!((fit.params.dist.cdf(q) - 0.05).abs() < 1e-10);
        for i in 0..v.len() {
            assert!((v[i] - (fit.mu[i] + fit.sigma[i] * q)).abs() < 1e-12);
        }
    }

    #[test]
    fn covar_quantile_independence_is_unconditional_level() {
        let indep = Copula::Normal { rho: 0.0 };
        let u = covar_quantile(&indep, 0.05, 0.05, TailSide::Down, UpsideConvention::default())
            .unwrap();
        assert_eq!(u, 0.05);
        let u = covar_quantile(&indep, 0.95, 0.95, TailSide::Up, UpsideConvention::default())
            .unwrap();
        assert_eq!(u, 0.95);
    }

    #[test]
    fn covar_quantile_clayton_closed_form() {
        // ((0.0025)^-2 - (0.05)^-2 + 1)^(-1/2), frozen from direct
        // evaluation; Monte Carlo cross-check in the acceptance suite.
        let c = Copula::Clayton { alpha: 2.0 };
        let u = covar_quantile(&c, 0.05, 0.05, TailSide::Down, UpsideConvention::default())
            .unwrap();
        assert!((u - 0.002503123029756950).abs() < 1e-12, "u={u}");
        // Bisection agrees with the closed form.
        let g = Copula::Gumbel { alpha: 2.0 };
        let ug = covar_quantile(&g, 0.05, 0.05, TailSide::Down, UpsideConvention::default())
            .unwrap();
        let back = g.cdf(ug, 0.05);
        assert!((back - 0.0025).abs() < 1e-9, "back={back}");
    }

    #[test]
    fn covar_quantile_below_unconditional_for_positive_dependence() {
        let models = [
            Copula::Normal { rho: 0.6 },
            Copula::StudentT { rho: 0.7, nu: 5.0 },
            Copula::Clayton { alpha: 2.0 },
            Copula::Gumbel { alpha: 2.5 },
            Copula::SurvivalClayton { alpha: 1.5 },
            Copula::SurvivalGumbel { alpha: 2.0 },
        ];
        for c in models {
            let u = covar_quantile(&c, 0.05, 0.05, TailSide::Down, UpsideConvention::default())
                .unwrap();
            assert!(u <= 0.05 + 1e-9, "{c:?} u={u}");
        }
    }

    #[test]
    fn covar_quantile_monotone_in_dependence_strength() {
        let mut prev = f64::INFINITY;
        for &rho in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let c = Copula::Normal { rho };
            let u = covar_quantile(&c, 0.05, 0.05, TailSide::Down, UpsideConvention::default())
                .unwrap();
            assert!(u < prev, "rho={rho} u={u} prev={prev}");
            prev = u;
        }
        let mut prev = f64::INFINITY;
        for &alpha in &[0.5, 1.0, 2.0, 4.0, 8.0] {
            let c = Copula::Clayton { alpha };
            let u = covar_quantile(&c, 0.05, 0.05, TailSide::Down, UpsideConvention::default())
                .unwrap();
            assert!(u < prev, "alpha={alpha} u={u} prev={prev}");
            prev = u;
        }
    }

    #[test]
    fn upside_conventions_differ_under_asymmetric_dependence() {
        let c = Copula::Clayton { alpha: 2.0 };
        let survival =
            covar_quantile(&c, 0.95, 0.95, TailSide::Up, UpsideConvention::JointSurvival).unwrap();
        let literal =
            covar_quantile(&c, 0.95, 0.95, TailSide::Up, UpsideConvention::JointCdf).unwrap();
        // The survival-event reading pushes the level above the
        // unconditional one; the literal joint-CDF reading pulls it below.
        assert!(survival > 0.95, "survival={survival}");
        assert!(literal < 0.95, "literal={literal}");
    }

    #[test]
    fn risk_series_collapses_under_independence() {
        let fit = garch_fit(6.0, -0.1, 400, 4);
        let dates = synthetic_dates(fit.n_obs);
        let rs = risk_series(
            &fit,
            &Copula::Normal { rho: 0.0 },
            &RiskConfig::default(),
            &dates,
        )
        .unwrap();
        for i in 0..rs.len() {
            assert_eq!(rs.var_down[i], rs.covar_down[i]);
            assert_eq!(rs.var_up[i], rs.covar_up[i]);
            assert_eq!(rs.delta_covar_down[i], 0.0);
            assert_eq!(rs.delta_covar_up[i], 0.0);
        }
    }

    #[test]
    fn risk_series_ordering_under_positive_dependence() {
        let fit = garch_fit(6.0, -0.05, 500, 5);
        let dates = synthetic_dates(fit.n_obs);
        for copula in [
            Copula::Normal { rho: 0.7 },
            Copula::Gumbel { alpha: 2.5 },
            Copula::Clayton { alpha: 2.0 },
            Copula::GumbelMixture {
                theta_upper: 2.0,
                theta_lower: 3.0,
                weight_upper: 0.4,
            },
        ] {
            let rs = risk_series(&fit, &copula, &RiskConfig::default(), &dates).unwrap();
            for i in 0..rs.len() {
                assert!(rs.var_down[i] < rs.var_up[i]);
                assert!(rs.covar_down[i] <= rs.var_down[i], "{copula:?}");
                assert!(rs.covar_up[i] >= rs.var_up[i], "{copula:?}");
                assert!(rs.delta_covar_down[i] < 0.0, "{copula:?}");
                assert!(rs.delta_covar_up[i] > 0.0, "{copula:?}");
            }
        }
    }

    #[test]
    fn normal_state_conditioning_is_weaker_than_tail_conditioning() {
        for copula in [
            Copula::Normal { rho: 0.8 },
            Copula::Gumbel { alpha: 3.0 },
            Copula::Clayton { alpha: 3.0 },
        ] {
            let config = RiskConfig::default();
            let u_tail = covar_quantile(
                &copula,
                config.alpha_down,
                config.alpha_down,
                TailSide::Down,
                config.upside_convention,
            )
            .unwrap();
            let u_mid = normal_state_quantile(&copula, &config, TailSide::Down).unwrap();
            assert!(u_mid >= u_tail, "{copula:?}: {u_mid} < {u_tail}");
        }
    }

    #[test]
    fn event_and_equality_conventions_both_computed_and_differ() {
        let copula = Copula::Normal { rho: 0.8 };
        let event_cfg = RiskConfig::default();
        let equality_cfg = RiskConfig {
            normal_state_convention: NormalStateConvention::Equality,
            ..RiskConfig::default()
        };
        let ue = normal_state_quantile(&copula, &event_cfg, TailSide::Down).unwrap();
        let uq = normal_state_quantile(&copula, &equality_cfg, TailSide::Down).unwrap();
        assert!((ue - uq).abs() > 1e-4, "event {ue} vs equality {uq}");
        // Equality reading satisfies the h-function equation directly.
        assert!((copula.hfunc(uq, 0.5) - 0.05).abs() < 1e-8);
    }

    #[test]
    fn delta_covar_scales_with_sigma() {
        let fit = garch_fit(6.0, 0.0, 100, 6);
        let dates = synthetic_dates(fit.n_obs);
        let copula = Copula::Gumbel { alpha: 2.0 };
        let rs = risk_series(&fit, &copula, &RiskConfig::default(), &dates).unwrap();
        let mut scaled = fit.clone();
        for s in scaled.sigma.iter_mut() {
            *s *= 3.0;
        }
        let rs2 = risk_series(&scaled, &copula, &RiskConfig::default(), &dates).unwrap();
        for i in 0..rs.len() {
            assert!((rs2.delta_covar_down[i] - 3.0 * rs.delta_covar_down[i]).abs() < 1e-10);
            assert!((rs2.delta_covar_up[i] - 3.0 * rs.delta_covar_up[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn summary_constant_series_has_zero_std() {
        let fit = garch_fit(6.0, 0.0, 150, 7);
        let dates = synthetic_dates(fit.n_obs);
        let mut rs = risk_series(
            &fit,
            &Copula::Normal { rho: 0.5 },
            &RiskConfig::default(),
            &dates,
        )
        .unwrap();
        rs.var_down = vec![-1.5; rs.len()];
        let table = risk_summary(&rs);
        let vd = &table.iter().find(|(n, _)| n == "var_down").unwrap().1;
        assert_eq!(vd.std_dev, 0.0);
        assert_eq!(vd.mean, -1.5);
    }

    #[test]
    fn summary_delta_covar_sign_property() {
        let fit = garch_fit(6.0, -0.05, 600, 8);
        let dates = synthetic_dates(fit.n_obs);
        let rs = risk_series(
            &fit,
            &Copula::Gumbel { alpha: 2.5 },
            &RiskConfig::default(),
            &dates,
        )
        .unwrap();
        let table = risk_summary(&rs);
        let dd = &table
            .iter()
            .find(|(n, _)| n == "delta_covar_down")
            .unwrap()
            .1;
        assert!(dd.max < 0.0, "max delta down = {}", dd.max);
    }

    #[test]
    fn summary_long_run_var_matches_analytic_mean() {
        // GARCH(1,1) long-run variance alpha0/(1-a1-b1); the time average
        // of VaR should sit near mu + E[sigma] q(alpha), and E[sigma] is
        // slightly below the square root of the long-run variance.
        let fit = garch_fit(6.0, 0.0, 100_000, 9);
        let dates = synthetic_dates(fit.n_obs);
        let rs = risk_series(
            &fit,
            &Copula::Normal { rho: 0.5 },
            &RiskConfig::default(),
            &dates,
        )
        .unwrap();
        let lr_sd = (0.05f64 / (1.0 - 0.08 - 0.9)).sqrt();
        let q = fit.params.dist.quantile(0.05).unwrap();
        let analytic = 0.02 + lr_sd * q;
        let table = risk_summary(&rs);
        let vd = &table.iter().find(|(n, _)| n == "var_down").unwrap().1;
        // E[sigma] <= sqrt(E[sigma^2]) (Jensen), so with q < 0 the time
        // average sits above the analytic bound but within 10% of it.
        assert!(vd.mean >= analytic - 1e-9, "mean {} vs bound {analytic}", vd.mean);
        assert!(
            (vd.mean - analytic).abs() < 0.10 * lr_sd * q.abs(),
            "mean {} vs analytic {analytic}",
            vd.mean
        );
        let mean_s2 = fit.sigma.iter().map(|s| s * s).sum::<f64>() / fit.n_obs as f64;
        assert!(
            (mean_s2.sqrt() - lr_sd).abs() < 0.05 * lr_sd,
            "sqrt mean sigma^2 {} vs {lr_sd}",
            mean_s2.sqrt()
        );
    }

    #[test]
    fn conditional_probability_oracle_light() {
        // Monte Carlo check of the inverted level for two families; the
        // acceptance suite covers every family at both tails.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for copula in [Copula::Clayton { alpha: 2.0 }, Copula::Normal { rho: 0.6 }] {
            let u_star = covar_quantile(
                &copula,
                0.05,
                0.05,
                TailSide::Down,
                UpsideConvention::default(),
            )
            .unwrap();
            let n = 400_000;
            let mut joint = 0usize;
            let mut cond = 0usize;
            for _ in 0..n {
                let (u, v) = copula.sample_one(&mut rng);
                if v <= 0.05 {
                    cond += 1;
                    if u <= u_star {
                        joint += 1;
                    }
                }
            }
            let p = joint as f64 / cond as f64;
            assert!((p - 0.05).abs() < 0.008, "{copula:?} p={p}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(RiskConfig::default().validate().is_ok());
        let bad = RiskConfig {
            alpha_down: 0.6,
            ..RiskConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RiskConfig {
            alpha_up: 0.4,
            ..RiskConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dates_must_align() {
        let fit = garch_fit(6.0, 0.0, 100, 10);
        let dates = synthetic_dates(50);
        assert!(risk_series(
            &fit,
            &Copula::Normal { rho: 0.5 },
            &RiskConfig::default(),
            &dates
        )
        .is_err());
    }
}
