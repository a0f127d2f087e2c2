//! Two-sample Kolmogorov-Smirnov machinery for the three risk-spillover
//! hypotheses: downside existence, upside existence, and the
//! downside-vs-upside asymmetry on normalized CoVaR ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::RiskSeries;

/// Alternative hypothesis, stated on the empirical CDFs: `Greater` means
/// the CDF of `x` lies above the CDF of `y` somewhere (so `x` is
/// stochastically smaller), `Less` the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    /// `D+ = sup(G_m - H_n)`: CDF of the first sample above the second.
    Greater,
    /// `D- = sup(H_n - G_m)`.
    Less,
}

/// P-value method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    /// Kolmogorov limiting distribution (two-sided) or `exp(-2 t^2)`
    /// (one-sided) applied to the scaled statistic.
    #[default]
    Asymptotic,
    /// Pooled-resampling bootstrap.
    Bootstrap,
}

/// Result of a two-sample Kolmogorov-Smirnov test. The statistic carries
/// the `sqrt(mn/(m+n))` scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alternative: Alternative,
    pub method: PValueMethod,
    /// Number of bootstrap resamples when `method` is `Bootstrap`.
    pub n_boot: Option<usize>,
}

/// Unscaled supremum ECDF distance in the direction of `alternative`.
fn sup_distance(x: &mut [f64], y: &mut [f64], alternative: Alternative) -> f64 {
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (m, n) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let (mut d_plus, mut d_minus) = (0.0f64, 0.0f64);
    while i < x.len() || j < y.len() {
        let t = match (x.get(i), y.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        let g = i as f64 / m;
        let h = j as f64 / n;
        d_plus = d_plus.max(g - h);
        d_minus = d_minus.max(h - g);
    }
    match alternative {
        Alternative::TwoSided => d_plus.max(d_minus),
        Alternative::Greater => d_plus,
        Alternative::Less => d_minus,
    }
}

/// Kolmogorov limiting survival function `Q(t) = 2 sum (-1)^{j-1}
/// exp(-2 j^2 t^2)`.
fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * t * t).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn asymptotic_p(statistic: f64, alternative: Alternative) -> f64 {
    match alternative {
        Alternative::TwoSided => kolmogorov_sf(statistic),
        _ => (-2.0 * statistic * statistic).exp().clamp(0.0, 1.0),
    }
}

/// Two-sample Kolmogorov-Smirnov test with asymptotic p-values.
pub fn ks_two_sample(x: &[f64], y: &[f64], alternative: Alternative) -> Result<KsResult> {
    ks_two_sample_with(x, y, alternative, PValueMethod::Asymptotic, 0, 0)
}

/// Two-sample Kolmogorov-Smirnov test. Under the bootstrap method the
/// p-value is the pooled-resampling tail frequency over `n_boot`
/// resamples drawn deterministically from `seed`.
pub fn ks_two_sample_with(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
    method: PValueMethod,
    n_boot: usize,
    seed: u64,
) -> Result<KsResult> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::Validation(format!(
            "K-S test requires at least 2 observations per sample, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Validation("K-S samples must be finite".into()));
    }
    let (m, n) = (x.len() as f64, y.len() as f64);
    let scale = (m * n / (m + n)).sqrt();
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    let statistic = scale * sup_distance(&mut xs, &mut ys, alternative);

    let p_value = match method {
        PValueMethod::Asymptotic => asymptotic_p(statistic, alternative),
        PValueMethod::Bootstrap => {
            if n_boot == 0 {
                return Err(Error::Validation(
                    "bootstrap p-value requires a positive resample count".into(),
                ));
            }
            let pool: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut exceed = 0usize;
            let mut rx = vec![0.0; x.len()];
            let mut ry = vec![0.0; y.len()];
            for _ in 0..n_boot {
                for slot in rx.iter_mut() {
                    *slot = pool[rng.random_range(0..pool.len())];
                }
                for slot in ry.iter_mut() {
                    *slot = pool[rng.random_range(0..pool.len())];
                }
                let s = scale * sup_distance(&mut rx, &mut ry, alternative);
                if s >= statistic {
                    exceed += 1;
                }
            }
            (exceed as f64 + 1.0) / (n_boot as f64 + 1.0)
        }
    };
    Ok(KsResult {
        statistic,
        p_value,
        alternative,
        method,
        n_boot: (method == PValueMethod::Bootstrap).then_some(n_boot),
    })
}

/// One hypothesis of the spillover battery, with its labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpilloverHypothesis {
    pub null: String,
    pub alternative: String,
    pub result: KsResult,
}

/// The three spillover tests for one fitted pair/copula.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpilloverTestReport {
    pub model: String,
    /// H1: downside CoVaR stochastically smaller than downside VaR.
    pub downside: SpilloverHypothesis,
    /// H1: upside CoVaR stochastically larger than upside VaR.
    pub upside: SpilloverHypothesis,
    /// H1: normalized downside CoVaR stochastically larger than the
    /// normalized upside CoVaR (downside spillover stronger).
    pub asymmetry: SpilloverHypothesis,
    /// The asymmetry test in the reverse direction, for completeness.
    pub asymmetry_reverse: SpilloverHypothesis,
    /// Dates dropped from the normalized ratios because |VaR| fell below
    /// the degeneracy threshold.
    pub dropped_ratio_obs: usize,
}

/// Threshold below which a VaR denominator is treated as degenerate.
const RATIO_EPS: f64 = 1e-9;

/// Runs the three spillover hypotheses on a risk series.
pub fn spillover_tests(risk: &RiskSeries) -> Result<SpilloverTestReport> {
    spillover_tests_with(risk, PValueMethod::Asymptotic, 0, 0)
}

/// [`spillover_tests`] with an explicit p-value method.
pub fn spillover_tests_with(
    risk: &RiskSeries,
    method: PValueMethod,
    n_boot: usize,
    seed: u64,
) -> Result<SpilloverTestReport> {
    if risk.is_empty() {
        return Err(Error::Validation("empty risk series".into()));
    }
    // Test 1: CoVaR_down stochastically smaller than VaR_down, i.e. its
    // CDF sits above: "greater" on the CDFs with x = CoVaR.
    let downside = ks_two_sample_with(
        &risk.covar_down,
        &risk.var_down,
        Alternative::Greater,
        method,
        n_boot,
        seed ^ 0x01,
    )?;
    // Test 2: CoVaR_up stochastically larger: CDF below, "less".
    let upside = ks_two_sample_with(
        &risk.covar_up,
        &risk.var_up,
        Alternative::Less,
        method,
        n_boot,
        seed ^ 0x02,
    )?;

    // Test 3 on the per-date normalized ratios.
    let mut down_ratio = Vec::with_capacity(risk.len());
    let mut up_ratio = Vec::with_capacity(risk.len());
    let mut dropped = 0usize;
    for i in 0..risk.len() {
        if risk.var_down[i].abs() < RATIO_EPS || risk.var_up[i].abs() < RATIO_EPS {
            dropped += 1;
            continue;
        }
        down_ratio.push(risk.covar_down[i] / risk.var_down[i]);
        up_ratio.push(risk.covar_up[i] / risk.var_up[i]);
    }
    if dropped > 0 {
        log::info!(
            "spillover asymmetry test dropped {dropped} dates with near-zero VaR denominators"
        );
    }
    // Downside ratio stochastically larger: its CDF sits below, "less".
    let asymmetry = ks_two_sample_with(
        &down_ratio,
        &up_ratio,
        Alternative::Less,
        method,
        n_boot,
        seed ^ 0x03,
    )?;
    let asymmetry_reverse = ks_two_sample_with(
        &down_ratio,
        &up_ratio,
        Alternative::Greater,
        method,
        n_boot,
        seed ^ 0x04,
    )?;

    Ok(SpilloverTestReport {
        model: risk.model.clone(),
        downside: SpilloverHypothesis {
            null: "CoVaR_down = VaR_down".into(),
            alternative: "CoVaR_down < VaR_down".into(),
            result: downside,
        },
        upside: SpilloverHypothesis {
            null: "CoVaR_up = VaR_up".into(),
            alternative: "CoVaR_up > VaR_up".into(),
            result: upside,
        },
        asymmetry: SpilloverHypothesis {
            null: "CoVaR_down/VaR_down = CoVaR_up/VaR_up".into(),
            alternative: "CoVaR_down/VaR_down > CoVaR_up/VaR_up".into(),
            result: asymmetry,
        },
        asymmetry_reverse: SpilloverHypothesis {
            null: "CoVaR_down/VaR_down = CoVaR_up/VaR_up".into(),
            alternative: "CoVaR_down/VaR_down < CoVaR_up/VaR_up".into(),
            result: asymmetry_reverse,
        },
        dropped_ratio_obs: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_statistic_zero_p_one() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let r = ks_two_sample(&x, &x, Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn separated_samples_full_distance() {
        // ECDF enumeration oracle: sup|G-H| = 1 at any t in [2,3);
        // scale sqrt(2*2/4) = 1.
        let x = [1.0, 2.0];
        let y = [3.0, 4.0];
        let r = ks_two_sample(&x, &y, Alternative::TwoSided).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-15);
        let g = ks_two_sample(&x, &y, Alternative::Greater).unwrap();
        assert!((g.statistic - 1.0).abs() < 1e-15);
        let l = ks_two_sample(&x, &y, Alternative::Less).unwrap();
        assert_eq!(l.statistic, 0.0);
    }

    #[test]
    fn brute_force_ecdf_agreement() {
        // Cross-check the streaming sup against direct ECDF evaluation
        // over the pooled points.
        let x = [0.3, -1.2, 0.8, 2.5, 0.1, 0.0];
        let y = [0.5, 0.6, -0.4, 1.9];
        let ecdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
        let mut d_two = 0.0f64;
        let mut d_plus = 0.0f64;
        for &t in x.iter().chain(y.iter()) {
            let diff = ecdf(&x, t) - ecdf(&y, t);
            d_two = d_two.max(diff.abs());
            d_plus = d_plus.max(diff);
        }
        let scale = (6.0f64 * 4.0 / 10.0).sqrt();
        let r = ks_two_sample(&x, &y, Alternative::TwoSided).unwrap();
        assert!((r.statistic - scale * d_two).abs() < 1e-12);
        let g = ks_two_sample(&x, &y, Alternative::Greater).unwrap();
        assert!((g.statistic - scale * d_plus).abs() < 1e-12);
    }

    #[test]
    fn two_sided_dominates_one_sided() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..30 {
            let x: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..60).map(|_| rng.random::<f64>() * 1.2).collect();
            let two = ks_two_sample(&x, &y, Alternative::TwoSided).unwrap().statistic;
            let g = ks_two_sample(&x, &y, Alternative::Greater).unwrap().statistic;
            let l = ks_two_sample(&x, &y, Alternative::Less).unwrap().statistic;
            assert!(two >= g.max(l) - 1e-15);
            assert!((two - g.max(l)).abs() < 1e-12);
        }
    }

    #[test]
    fn one_sided_invariant_under_common_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..50).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let y: Vec<f64> = (0..70).map(|_| rng.random::<f64>() * 4.0 - 1.5).collect();
        let f = |v: f64| (v * 0.7).exp() + v;
        let tx: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let ty: Vec<f64> = y.iter().map(|&v| f(v)).collect();
        let a = ks_two_sample(&x, &y, Alternative::Less).unwrap().statistic;
        let b = ks_two_sample(&tx, &ty, Alternative::Less).unwrap().statistic;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn empty_or_tiny_sample_is_error() {
        let x = [1.0];
        let y = [1.0, 2.0];
        assert!(ks_two_sample(&x, &y, Alternative::TwoSided).is_err());
        assert!(ks_two_sample(&[], &y, Alternative::TwoSided).is_err());
    }

    #[test]
    fn null_calibration_two_sided_light() {
        // Reduced version of the full acceptance criterion.
        let mut rejections = 0;
        let reps = 400;
        for seed in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(100_000 + seed as u64);
            let x: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
            let r = ks_two_sample(&x, &y, Alternative::TwoSided).unwrap();
            if r.p_value < 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / reps as f64;
        assert!((0.02..=0.08).contains(&rate), "rate={rate}");
    }

    #[test]
    fn bootstrap_close_to_asymptotic_under_null() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let asym = ks_two_sample(&x, &y, Alternative::TwoSided).unwrap();
        let boot = ks_two_sample_with(
            &x,
            &y,
            Alternative::TwoSided,
            PValueMethod::Bootstrap,
            999,
            2024,
        )
        .unwrap();
        assert!(
            (asym.p_value - boot.p_value).abs() <= 0.03,
            "asym {} boot {}",
            asym.p_value,
            boot.p_value
        );
        assert_eq!(boot.n_boot, Some(999));
    }

    #[test]
    fn kolmogorov_sf_sane() {
        assert!((kolmogorov_sf(0.5) - 0.9639452436648751).abs() < 1e-9);
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 2e-3);
        assert!(kolmogorov_sf(0.0) == 1.0);
        assert!(kolmogorov_sf(5.0) < 1e-9);
    }

    mod spillover {
        use super::*;
        use crate::copulas::Copula;
        use crate::distributions::SkewedT;
        use crate::marginal::{filter, MarginalFit, MarginalParams, MarginalSpec};
        use crate::risk::{risk_series, RiskConfig};
        use chrono::NaiveDate;

        fn fit_with_path(t: usize, seed: u64) -> (MarginalFit, Vec<NaiveDate>) {
            let spec = MarginalSpec::new(0, 0, 1, 1).unwrap();
            let params = MarginalParams {
                phi0: 0.02,
                phi: vec![],
                gamma: vec![],
                alpha0: 0.05,
                alpha: vec![0.08],
                beta: vec![0.9],
                dist: SkewedT::new(6.0, -0.05).unwrap(),
            };
            let z = params.dist.sample(t, seed);
            let mut r = Vec::with_capacity(t);
            let (mut e_prev, mut s2_prev) = (0.0f64, 1.0f64);
            for &zi in &z {
                let s2 = 0.05 + 0.08 * e_prev * e_prev + 0.9 * s2_prev;
                let e = s2.sqrt() * zi;
                r.push(0.02 + e);
                e_prev = e;
                s2_prev = s2;
            }
            let out = filter(&r, &spec, &params).unwrap();
            let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
            let dates = (0..t as u64).map(|i| start + chrono::Days::new(i)).collect();
            (
                MarginalFit::from_filter("spot", spec, params, out),
                dates,
            )
        }

        #[test]
        fn independence_produces_zero_statistics() {
            let (fit, dates) = fit_with_path(1000, 11);
            let rs = risk_series(
                &fit,
                &Copula::Normal { rho: 0.0 },
                &RiskConfig::default(),
                &dates,
            )
            .unwrap();
            let rep = spillover_tests(&rs).unwrap();
            assert_eq!(rep.downside.result.statistic, 0.0);
            assert_eq!(rep.upside.result.statistic, 0.0);
            assert!(rep.downside.result.p_value > 0.99);
            assert!(rep.upside.result.p_value > 0.99);
        }

        #[test]
        fn strong_dependence_rejects_both_tails() {
            let (fit, dates) = fit_with_path(5000, 13);
            let rs = risk_series(
                &fit,
                &Copula::Gumbel { alpha: 3.0 },
                &RiskConfig::default(),
                &dates,
            )
            .unwrap();
            let rep = spillover_tests(&rs).unwrap();
            assert!(rep.downside.result.p_value < 0.01, "{:?}", rep.downside.result);
            assert!(rep.upside.result.p_value < 0.01, "{:?}", rep.upside.result);
        }

        #[test]
        fn lower_tail_dominant_mixture_rejects_asymmetry_downward() {
            let (fit, dates) = fit_with_path(5000, 17);
            let rs = risk_series(
                &fit,
                &Copula::GumbelMixture {
                    theta_upper: 1.5,
                    theta_lower: 3.0,
                    weight_upper: 0.2,
                },
                &RiskConfig::default(),
                &dates,
            )
            .unwrap();
            let rep = spillover_tests(&rs).unwrap();
            assert!(
                rep.asymmetry.result.p_value < 0.01,
                "downside-stronger direction should reject: {:?}",
                rep.asymmetry.result
            );
            assert!(
                rep.asymmetry_reverse.result.p_value > 0.10,
                "reverse direction should not reject: {:?}",
                rep.asymmetry_reverse.result
            );
        }
    }
}
