use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use super::{normal_cdf, normal_pdf, normal_quantile, NU_NORMAL_LIMIT};
use crate::error::{Error, Result};

/// Density of the Student-t distribution with `nu > 0` degrees of freedom
/// (non-integer values allowed).
pub fn student_t_pdf(x: f64, nu: f64) -> f64 {
    assert!(nu > 0.0, "student_t_pdf requires nu > 0");
    if nu > NU_NORMAL_LIMIT {
        return normal_pdf(x);
    }
    let ln_c = ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln();
    (ln_c - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
}

/// Degrees of freedom above which the CDF switches from the incomplete
/// beta function to a two-term Edgeworth-type expansion around the
/// normal limit; the beta routine loses relative accuracy for very large
/// shape parameters while the expansion is already exact to ~1e-16 here.
const NU_ASYMPTOTIC: f64 = 1e5;

/// Student-t CDF via the regularized incomplete beta function.
pub fn student_t_cdf(x: f64, nu: f64) -> f64 {
    assert!(nu > 0.0, "student_t_cdf requires nu > 0");
    if nu > NU_NORMAL_LIMIT {
        return normal_cdf(x);
    }
    if x == 0.0 {
        return 0.5;
    }
    if nu >= NU_ASYMPTOTIC {
        // T_nu(x) = Phi(x) - phi(x) [ (x^3+x)/(4 nu)
        //                           + (3x^7-7x^5-5x^3-3x)/(96 nu^2) ]
        let x2 = x * x;
        let g1 = x * (x2 + 1.0) / 4.0;
        let g2 = x * (x2 * (x2 * (3.0 * x2 - 7.0) - 5.0) - 3.0) / 96.0;
        return (normal_cdf(x) - normal_pdf(x) * (g1 / nu + g2 / (nu * nu))).clamp(0.0, 1.0);
    }
    let t = nu / (nu + x * x);
    let ib = beta_reg(nu / 2.0, 0.5, t);
    if x < 0.0 {
        0.5 * ib
    } else {
        1.0 - 0.5 * ib
    }
}

/// Student-t quantile by monotone inversion of [`student_t_cdf`].
///
/// Uses the exact closed forms for `nu = 1` and `nu = 2`, otherwise a
/// safeguarded Newton iteration inside a bisection bracket. Round-trip
/// error through the CDF is below 1e-10 on the probability scale.
pub fn student_t_quantile(p: f64, nu: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!(
            "student_t quantile requires p in (0,1), got {p}"
        )));
    }
    if nu <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "student_t quantile requires nu > 0, got {nu}"
        )));
    }
    if nu > NU_NORMAL_LIMIT {
        return normal_quantile(p);
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if nu == 1.0 {
        return Ok((std::f64::consts::PI * (p - 0.5)).tan());
    }
    if nu == 2.0 {
        return Ok((2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt());
    }

    // Starting point: normal quantile rescaled to the t variance when it
    // exists, otherwise the raw normal quantile.
    let z = normal_quantile(p)?;
    let mut x = if nu > 2.0 {
        z * (nu / (nu - 2.0)).sqrt()
    } else {
        z
    };

    // Establish a bisection bracket around the root.
    let (mut lo, mut hi);
    if student_t_cdf(x, nu) >= p {
        hi = x;
        lo = if x < 0.0 { 2.0 * x } else { -1.0 };
        let mut iter = 0;
        while student_t_cdf(lo, nu) > p {
            lo *= 2.0;
            iter += 1;
            if iter > 400 {
                return Err(Error::Numerical("student_t bracket expansion failed".into()));
            }
        }
    } else {
        lo = x;
        hi = if x > 0.0 { 2.0 * x } else { 1.0 };
        let mut iter = 0;
        while student_t_cdf(hi, nu) < p {
            hi *= 2.0;
            iter += 1;
            if iter > 400 {
                return Err(Error::Numerical("student_t bracket expansion failed".into()));
            }
        }
    }

    x = x.clamp(lo, hi);
    for _ in 0..80 {
        let f = student_t_cdf(x, nu) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if f.abs() < 1e-12 {
            break;
        }
        let d = student_t_pdf(x, nu);
        let step = if d > 0.0 { f / d } else { f64::INFINITY };
        let newton = x - step;
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if step.abs() < 1e-14 * (1.0 + x.abs()) || hi - lo < 1e-14 * (1.0 + x.abs()) {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_center_is_half_for_all_nu() {
        for &nu in &[0.5, 1.0, 2.0, 2.0001, 7.3, 30.0, 1e5] {
            assert_eq!(student_t_cdf(0.0, nu), 0.5, "nu={nu}");
        }
    }

    #[test]
    fn large_nu_approaches_normal() {
        let nu = 1e6;
        let mut x = -4.0;
        while x <= 4.0 {
            let d = (student_t_cdf(x, nu) - normal_cdf(x)).abs();
            assert!(d < 1e-4, "x={x} diff={d}");
            x += 0.25;
        }
    }

    #[test]
    fn quantile_round_trip() {
        for &nu in &[0.7, 1.0, 2.0, 2.0001, 4.4245, 8.0, 30.166, 250.0, 1e6] {
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let x = student_t_quantile(p, nu).unwrap();
                let back = student_t_cdf(x, nu);
                assert!((back - p).abs() < 1e-10, "nu={nu} p={p} back={back}");
            }
            // Deep tails.
            for &p in &[1e-8, 1e-5, 1.0 - 1e-5, 1.0 - 1e-8] {
                let x = student_t_quantile(p, nu).unwrap();
                let back = student_t_cdf(x, nu);
                assert!((back - p).abs() < 1e-10, "nu={nu} p={p} back={back}");
            }
        }
    }

    #[test]
    fn quantile_domain_errors() {
        assert!(student_t_quantile(0.0, 5.0).is_err());
        assert!(student_t_quantile(1.0, 5.0).is_err());
        assert!(student_t_quantile(0.5, 0.0).is_err());
        assert!(student_t_quantile(0.5, -1.0).is_err());
    }

    #[test]
    fn pdf_integrates_against_cdf_differences() {
        // Crude consistency: CDF increments match trapezoid pdf integrals.
        let nu = 5.0;
        let mut x = -6.0;
        while x < 6.0 {
            let h = 1e-4;
            let num = (student_t_cdf(x + h, nu) - student_t_cdf(x - h, nu)) / (2.0 * h);
            assert!((num - student_t_pdf(x, nu)).abs() < 1e-6);
            x += 0.5;
        }
    }
}
