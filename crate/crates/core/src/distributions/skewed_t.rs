use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{student_t_cdf, student_t_quantile, NU_NORMAL_LIMIT};
use crate::error::{Error, Result};

/// Hansen's standardized skewed Student-t distribution.
///
/// The family has zero mean and unit variance for every admissible
/// parameter pair: `nu > 2` degrees of freedom and asymmetry
/// `eta in (-1, 1)`. The density is the Student-t kernel with two tail
/// scales glued at `z = -a/b`, where the constants
///
/// ```text
/// c = Gamma((nu+1)/2) / (Gamma(nu/2) * sqrt(pi (nu-2)))
/// a = 4 eta c (nu-2)/(nu-1)
/// b = sqrt(1 + 3 eta^2 - a^2)
/// ```
///
/// are fixed by the standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkewedTRepr", into = "SkewedTRepr")]
pub struct SkewedT {
    nu: f64,
    eta: f64,
    a: f64,
    b: f64,
    ln_bc: f64,
    scale: f64,
}

/// Serialized form: only the free parameters; derived constants are
/// rebuilt on deserialization.
#[derive(Serialize, Deserialize)]
struct SkewedTRepr {
    nu: f64,
    eta: f64,
}

impl From<SkewedT> for SkewedTRepr {
    fn from(d: SkewedT) -> Self {
        Self { nu: d.nu, eta: d.eta }
    }
}

impl TryFrom<SkewedTRepr> for SkewedT {
    type Error = Error;

    fn try_from(r: SkewedTRepr) -> Result<Self> {
        SkewedT::new(r.nu, r.eta)
    }
}

impl SkewedT {
    /// Builds the distribution, validating `nu > 2` and `-1 < eta < 1`.
    ///
    /// Degrees of freedom are capped at 1e7; beyond that the normal limit
    /// of the underlying Student-t kernel takes over.
    pub fn new(nu: f64, eta: f64) -> Result<Self> {
        if !(nu > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "skewed-t requires nu > 2, got {nu}"
            )));
        }
        if !(-1.0 < eta && eta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "skewed-t requires eta in (-1,1), got {eta}"
            )));
        }
        let nu = nu.min(NU_NORMAL_LIMIT);
        let ln_c = ln_gamma((nu + 1.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (std::f64::consts::PI * (nu - 2.0)).ln();
        let c = ln_c.exp();
        let a = 4.0 * eta * c * (nu - 2.0) / (nu - 1.0);
        let b2 = 1.0 + 3.0 * eta * eta - a * a;
        if !(b2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "skewed-t scale constant not positive for nu={nu}, eta={eta}"
            )));
        }
        let b = b2.sqrt();
        Ok(Self {
            nu,
            eta,
            a,
            b,
            ln_bc: b.ln() + ln_c,
            scale: (nu / (nu - 2.0)).sqrt(),
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Mode-side breakpoint `-a/b` separating the two tail scales.
    pub fn breakpoint(&self) -> f64 {
        -self.a / self.b
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.ln_pdf(z).exp()
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        let tail = if z < self.breakpoint() {
            1.0 - self.eta
        } else {
            1.0 + self.eta
        };
        let t = (self.b * z + self.a) / tail;
        self.ln_bc - 0.5 * (self.nu + 1.0) * (t * t / (self.nu - 2.0)).ln_1p()
    }

    /// CDF by piecewise reduction to the classic Student-t CDF.
    ///
    /// For `z` below the breakpoint, `F(z) = (1-eta) T_nu(s (bz+a)/(1-eta))`
    /// with `s = sqrt(nu/(nu-2))`; the mirrored branch continues above so
    /// that `F(-a/b) = (1-eta)/2` and `F(+inf) = 1`.
    pub fn cdf(&self, z: f64) -> f64 {
        let bz = self.b * z + self.a;
        let v = if z < self.breakpoint() {
            (1.0 - self.eta) * student_t_cdf(self.scale * bz / (1.0 - self.eta), self.nu)
        } else {
            0.5 * (1.0 - self.eta)
                + (1.0 + self.eta)
                    * (student_t_cdf(self.scale * bz / (1.0 + self.eta), self.nu) - 0.5)
        };
        v.clamp(0.0, 1.0)
    }

    /// Quantile via piecewise inversion through the Student-t quantile,
    /// with a bisection fallback when branch arithmetic loses precision
    /// near `p = 0` or `p = 1` (tolerance 1e-12 on the probability scale).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::Domain(format!(
                "skewed-t quantile requires p in (0,1), got {p}"
            )));
        }
        let pm = 0.5 * (1.0 - self.eta);
        let z = if p < pm {
            let x = student_t_quantile(p / (1.0 - self.eta), self.nu)?;
            ((1.0 - self.eta) * x / self.scale - self.a) / self.b
        } else {
            let x = student_t_quantile(0.5 + (p - pm) / (1.0 + self.eta), self.nu)?;
            ((1.0 + self.eta) * x / self.scale - self.a) / self.b
        };
        if (self.cdf(z) - p).abs() <= 1e-12 {
            return Ok(z);
        }
        self.bisect_quantile(p, z)
    }

    fn bisect_quantile(&self, p: f64, guess: f64) -> Result<f64> {
        let (mut lo, mut hi) = (guess, guess);
        let mut width = 1.0;
        let mut iter = 0;
        while self.cdf(lo) > p {
            lo -= width;
            width *= 2.0;
            iter += 1;
            if iter > 200 {
                return Err(Error::Numerical("skewed-t quantile bracket failed".into()));
            }
        }
        width = 1.0;
        while self.cdf(hi) < p {
            hi += width;
            width *= 2.0;
            iter += 1;
            if iter > 400 {
                return Err(Error::Numerical("skewed-t quantile bracket failed".into()));
            }
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let f = self.cdf(mid) - p;
            if f.abs() <= 1e-12 || hi - lo < 1e-15 * (1.0 + mid.abs()) {
                break;
            }
            if f > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(mid)
    }

    /// Draws `n` i.i.d. variates by quantile transform of uniforms.
    /// Deterministic for a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    /// Like [`SkewedT::sample`] but drawing from a caller-owned generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>().clamp(1e-16, 1.0 - 1e-16);
                self.quantile(u).expect("interior uniform")
            })
            .collect()
    }
}
