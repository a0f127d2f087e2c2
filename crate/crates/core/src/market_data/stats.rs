//! Moment, diagnostic-test and correlation kernels shared by the raw
//! return diagnostics and the fitted-residual diagnostics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::distributions::{normal_cdf, student_t_cdf};
use crate::error::{Error, Result};

/// A test statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStat {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the chi-squared distribution.
pub fn chi_squared_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Central sample moments: `(mean, m2, m3, m4)` with the biased `1/n`
/// normalization used by the moment-ratio skewness and kurtosis.
pub fn central_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

/// Moment-ratio skewness `m3 / m2^(3/2)`.
pub fn skewness(x: &[f64]) -> f64 {
    let (_, m2, m3, _) = central_moments(x);
    m3 / m2.powf(1.5)
}

/// Raw (non-excess) kurtosis `m4 / m2^2`; 3 for the normal distribution.
pub fn kurtosis(x: &[f64]) -> f64 {
    let (_, m2, _, m4) = central_moments(x);
    m4 / (m2 * m2)
}

/// Unbiased sample standard deviation (`n - 1` denominator).
pub fn sample_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (_, m2, _, _) = central_moments(x);
    (m2 * n / (n - 1.0)).sqrt()
}

/// Jarque-Bera normality statistic `(T/6) (S^2 + (K-3)^2 / 4)` with its
/// chi-squared(2) p-value. The statistic is nonnegative by construction.
pub fn jarque_bera(x: &[f64]) -> Result<TestStat> {
    ensure_non_degenerate(x)?;
    let t = x.len() as f64;
    let s = skewness(x);
    let k = kurtosis(x);
    let statistic = t / 6.0 * (s * s + 0.25 * (k - 3.0) * (k - 3.0));
    Ok(TestStat {
        statistic,
        p_value: chi_squared_sf(statistic, 2.0),
    })
}

/// Ljung-Box portmanteau statistic at lag `h`:
/// `Q = T (T+2) sum_{k<=h} rho_k^2 / (T-k)`, chi-squared(h) reference.
pub fn ljung_box(x: &[f64], h: usize) -> Result<TestStat> {
    ensure_non_degenerate(x)?;
    let t = x.len();
    if h == 0 || h >= t {
        return Err(Error::Validation(format!(
            "Ljung-Box lag {h} invalid for series of length {t}"
        )));
    }
    let mean = x.iter().sum::<f64>() / t as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let tf = t as f64;
    let mut q = 0.0;
    for k in 1..=h {
        let num: f64 = (k..t).map(|i| (x[i] - mean) * (x[i - k] - mean)).sum();
        let rho = num / denom;
        q += rho * rho / (tf - k as f64);
    }
    let statistic = tf * (tf + 2.0) * q;
    Ok(TestStat {
        statistic,
        p_value: chi_squared_sf(statistic, h as f64),
    })
}

/// Engle's ARCH-LM test: the squared, demeaned series is regressed on its
/// own first `lags` lags plus a constant; the statistic is `n R^2` for the
/// `n` auxiliary-regression observations, chi-squared(`lags`) reference.
pub fn arch_lm(x: &[f64], lags: usize) -> Result<TestStat> {
    ensure_non_degenerate(x)?;
    let t = x.len();
    if lags == 0 || t < lags + 2 {
        return Err(Error::Validation(format!(
            "ARCH-LM lag {lags} invalid for series of length {t}"
        )));
    }
    let mean = x.iter().sum::<f64>() / t as f64;
    let e2: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();

    let n = t - lags;
    let k = lags + 1;
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut xty = vec![0.0; k];
    let mut y_sum = 0.0;
    let mut y_sq = 0.0;
    for i in 0..n {
        let y = e2[lags + i];
        y_sum += y;
        y_sq += y * y;
        let mut row = vec![0.0; k];
        row[0] = 1.0;
        for j in 0..lags {
            row[j + 1] = e2[lags + i - 1 - j];
        }
        for a in 0..k {
            xty[a] += row[a] * y;
            for b in a..k {
                xtx[(a, b)] += row[a] * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }
    let beta = xtx
        .lu()
        .solve(&DMatrix::from_column_slice(k, 1, &xty))
        .ok_or_else(|| Error::Validation("ARCH-LM design matrix is singular".into()))?;

    let explained: f64 = (0..k).map(|a| beta[(a, 0)] * xty[a]).sum();
    let nf = n as f64;
    let sst = y_sq - y_sum * y_sum / nf;
    if sst <= 0.0 {
        return Err(Error::Validation(
            "ARCH-LM: squared series has no variation".into(),
        ));
    }
    let ssr = y_sq - explained;
    let r2 = (1.0 - ssr / sst).clamp(0.0, 1.0);
    let statistic = nf * r2;
    Ok(TestStat {
        statistic,
        p_value: chi_squared_sf(statistic, lags as f64),
    })
}

/// Pearson product-moment correlation with a Student-t asymptotic p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<TestStat> {
    check_paired(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Validation(
            "correlation undefined for constant input".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(TestStat {
        statistic: r,
        p_value: r_to_p(r, x.len()),
    })
}

fn r_to_p(r: f64, n: usize) -> f64 {
    if (1.0 - r * r) <= 0.0 {
        return 0.0;
    }
    let dof = (n - 2) as f64;
    let t = r * (dof / (1.0 - r * r)).sqrt();
    2.0 * student_t_cdf(-t.abs(), dof)
}

/// Spearman rank correlation (average ranks for ties) with the same
/// t-approximation p-value as Pearson applied to the ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<TestStat> {
    check_paired(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
}

/// Kendall tau-b with tie corrections, computed in O(n log n) via
/// Knight's algorithm, and the tie-adjusted normal-approximation p-value.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<TestStat> {
    check_paired(x, y)?;
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let nf = n as f64;
    let n0 = nf * (nf - 1.0) / 2.0;

    // Tie bookkeeping over x, y, and joint (x, y) groups.
    let tie_stats = |sorted_vals: &mut dyn Iterator<Item = (f64, f64)>| -> (f64, f64, f64) {
        // Returns (sum t(t-1)/2, sum t(t-1)(t-2), sum t(t-1)(2t+5)).
        let mut pairs = 0.0;
        let mut trip = 0.0;
        let mut var = 0.0;
        let mut run = 1.0;
        let mut prev: Option<(f64, f64)> = None;
        let flush = |run: f64, pairs: &mut f64, trip: &mut f64, var: &mut f64| {
            *pairs += run * (run - 1.0) / 2.0;
            *trip += run * (run - 1.0) * (run - 2.0);
            *var += run * (run - 1.0) * (2.0 * run + 5.0);
        };
        for v in sorted_vals {
            if let Some(p) = prev {
                if p == v {
                    run += 1.0;
                } else {
                    flush(run, &mut pairs, &mut trip, &mut var);
                    run = 1.0;
                }
            }
            prev = Some(v);
        }
        flush(run, &mut pairs, &mut trip, &mut var);
        (pairs, trip, var)
    };

    let (n1, xt3, xv) = tie_stats(&mut idx.iter().map(|&i| (x[i], 0.0)));
    let (n3, _, _) = tie_stats(&mut idx.iter().map(|&i| (x[i], y[i])));
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut sorted_y = ys.clone();
    sorted_y.sort_by(f64::total_cmp);
    let (n2, yt3, yv) = tie_stats(&mut sorted_y.iter().map(|&v| (v, 0.0)));

    let swaps = merge_count(&mut ys) as f64;
    let concordant_minus_discordant = n0 - n1 - n2 + n3 - 2.0 * swaps;

    let denom = ((n0 - n1) * (n0 - n2)).sqrt();
    if denom <= 0.0 {
        return Err(Error::Validation(
            "Kendall tau undefined for constant input".into(),
        ));
    }
    let tau = (concordant_minus_discordant / denom).clamp(-1.0, 1.0);

    // Tie-adjusted variance of C - D under independence.
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let mut var = (v0 - xv - yv) / 18.0;
    if n > 2 {
        var += xt3 * yt3 / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    }
    var += (2.0 * n1) * (2.0 * n2) / (2.0 * nf * (nf - 1.0));
    let p_value = if var > 0.0 {
        let z = concordant_minus_discordant / var.sqrt();
        2.0 * normal_cdf(-z.abs())
    } else {
        1.0
    };
    Ok(TestStat {
        statistic: tau,
        p_value,
    })
}

/// Kendall tau-b point estimate only; the fast path used by Monte Carlo
/// validation of copula samplers.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    kendall(x, y).map(|t| t.statistic).unwrap_or(f64::NAN)
}

/// Counts exchanges needed to sort `a` (merge-sort inversion count).
fn merge_count(a: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mut buf = a.to_vec();
    merge_count_rec(a, &mut buf)
}

fn merge_count_rec(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left_buf, right_buf) = buf.split_at_mut(mid);
    let mut inv = {
        let (left, right) = a.split_at_mut(mid);
        merge_count_rec(left, left_buf) + merge_count_rec(right, right_buf)
    };
    left_buf.copy_from_slice(&a[..mid]);
    right_buf.copy_from_slice(&a[mid..]);
    let (mut i, mut j) = (0, 0);
    for slot in a.iter_mut() {
        if i < left_buf.len() && (j >= right_buf.len() || left_buf[i] <= right_buf[j]) {
            *slot = left_buf[i];
            i += 1;
        } else {
            *slot = right_buf[j];
            j += 1;
            inv += (left_buf.len() - i) as u64;
        }
    }
    inv
}

/// Average ranks (1-based), ties sharing the mean rank of their block.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn ensure_non_degenerate(x: &[f64]) -> Result<()> {
    if x.len() < 3 {
        return Err(Error::Validation("series too short for diagnostics".into()));
    }
    let first = x[0];
    if x.iter().all(|&v| v == first) {
        return Err(Error::Validation(
            "diagnostics undefined for constant series".into(),
        ));
    }
    Ok(())
}

fn check_paired(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "paired series length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Validation(
            "correlation requires at least 3 observations".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kendall_tau_quadratic(x: &[f64], y: &[f64]) -> f64 {
        // tau-b: ties in x (n1) and y (n2) each include jointly tied pairs.
        let n = x.len();
        let (mut c, mut d) = (0i64, 0i64);
        let (mut n1, mut n2) = (0i64, 0i64);
        for i in 0..n {
            for j in (i + 1)..n {
                let a = (x[i] - x[j]).partial_cmp(&0.0).unwrap();
                let b = (y[i] - y[j]).partial_cmp(&0.0).unwrap();
                use std::cmp::Ordering::*;
                if a == Equal {
                    n1 += 1;
                }
                if b == Equal {
                    n2 += 1;
                }
                match (a, b) {
                    (Equal, _) | (_, Equal) => {}
                    (x, y) if x == y => c += 1,
                    _ => d += 1,
                }
            }
        }
        let n0 = (n * (n - 1) / 2) as f64;
        (c - d) as f64 / ((n0 - n1 as f64) * (n0 - n2 as f64)).sqrt()
    }

    #[test]
    fn jarque_bera_zero_for_exact_normal_moments() {
        // {-a, 0, 0, 0, 0, a} has skewness 0 and raw kurtosis exactly 3.
        let x = [-2.0, 0.0, 0.0, 0.0, 0.0, 2.0];
        let jb = jarque_bera(&x).unwrap();
        assert!(jb.statistic.abs() < 1e-12, "stat={}", jb.statistic);
        assert!((jb.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jarque_bera_nonnegative_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x: Vec<f64> = (0..50).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            assert!(jarque_bera(&x).unwrap().statistic >= 0.0);
        }
    }

    #[test]
    fn jarque_bera_null_calibration() {
        // i.i.d. standard normal samples of T=10000: p > 0.01 should hold
        // in at least 95% of seeds.
        let mut pass = 0;
        let total = 200;
        for seed in 0..total {
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let x: Vec<f64> = (0..10_000)
                .map(|_| {
                    let u: f64 = rng.random::<f64>().clamp(1e-16, 1.0 - 1e-16);
                    crate::distributions::normal_quantile(u).unwrap()
                })
                .collect();
            if jarque_bera(&x).unwrap().p_value > 0.01 {
                pass += 1;
            }
        }
        assert!(pass * 100 >= total * 95, "pass={pass}/{total}");
    }

    #[test]
    fn degenerate_series_rejected() {
        let x = [1.0; 20];
        assert!(jarque_bera(&x).is_err());
        assert!(ljung_box(&x, 5).is_err());
        assert!(arch_lm(&x, 5).is_err());
    }

    #[test]
    fn ljung_box_detects_autocorrelation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = vec![0.0f64; 2000];
        for t in 1..x.len() {
            x[t] = 0.6 * x[t - 1] + rng.random::<f64>() - 0.5;
        }
        let q = ljung_box(&x, 10).unwrap();
        assert!(q.p_value < 1e-6, "p={}", q.p_value);

        let white: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() - 0.5).collect();
        let qw = ljung_box(&white, 10).unwrap();
        assert!(qw.statistic >= 0.0 && qw.p_value > 1e-4);
    }

    #[test]
    fn arch_lm_detects_volatility_clustering() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut sigma2 = 1.0f64;
        let mut x = Vec::with_capacity(3000);
        for _ in 0..3000 {
            let z = crate::distributions::normal_quantile(
                rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12),
            )
            .unwrap();
            let e = sigma2.sqrt() * z;
            x.push(e);
            sigma2 = 0.1 + 0.25 * e * e + 0.7 * sigma2;
        }
        let lm = arch_lm(&x, 10).unwrap();
        assert!(lm.p_value < 1e-4, "p={}", lm.p_value);
    }

    #[test]
    fn kendall_matches_quadratic_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            // Coarse values guarantee plenty of ties.
            let x: Vec<f64> = (0..60).map(|_| (rng.random::<f64>() * 6.0).floor()).collect();
            let y: Vec<f64> = (0..60).map(|_| (rng.random::<f64>() * 6.0).floor()).collect();
            let fast = kendall(&x, &y).unwrap().statistic;
            let slow = kendall_tau_quadratic(&x, &y);
            assert!((fast - slow).abs() < 1e-12, "fast={fast} slow={slow}");
        }
    }

    #[test]
    fn kendall_small_example() {
        // 5 concordant pairs, 1 discordant of 6 total.
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        let t = kendall(&x, &y).unwrap();
        assert!((t.statistic - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_correlations() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y = x.clone();
        assert!((pearson(&x, &y).unwrap().statistic - 1.0).abs() < 1e-12);
        assert!((kendall(&x, &y).unwrap().statistic - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &y).unwrap().statistic - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap().statistic + 1.0).abs() < 1e-12);
        assert!((kendall(&x, &neg).unwrap().statistic + 1.0).abs() < 1e-12);
        assert!((spearman(&x, &neg).unwrap().statistic + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_is_an_error() {
        let x = [1.0; 10];
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(pearson(&x, &y).is_err());
        assert!(kendall(&x, &y).is_err());
        assert!(spearman(&x, &y).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        let r = average_ranks(&[3.0, 1.0, 4.0, 1.0]);
        assert_eq!(r, vec![3.0, 1.5, 4.0, 1.5]);
    }
}
