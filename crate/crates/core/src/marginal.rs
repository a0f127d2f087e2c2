//! ARMA(m,n)-GARCH(p,q) marginals with Hansen skewed Student-t
//! innovations: likelihood filtering, constrained maximum likelihood,
//! AIC lag search, and the rank probability-integral transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::SkewedT;
use crate::error::{Error, Result};
use crate::market_data::stats::central_moments;
use crate::market_data::{describe_values, DescriptiveReport, ReturnSeries};
use crate::optimize;

/// Default minimum sample size for estimation.
pub const DEFAULT_MIN_OBS: usize = 100;
/// Stationarity margin: the ARCH/GARCH coefficients must sum below this.
pub const PERSISTENCE_CAP: f64 = 0.9999;
/// Largest lag order admitted in any equation.
pub const MAX_LAG: usize = 3;

/// Lag orders `(m, n, p, q)` for the mean AR/MA and variance ARCH/GARCH
/// terms. A variance equation must exist: `(p, q) != (0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarginalSpec {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl MarginalSpec {
    pub fn new(m: usize, n: usize, p: usize, q: usize) -> Result<Self> {
        let spec = Self { m, n, p, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m > MAX_LAG || self.n > MAX_LAG || self.p > MAX_LAG || self.q > MAX_LAG {
            return Err(Error::InvalidParameter(format!(
                "lag orders limited to {MAX_LAG}, got {self:?}"
            )));
        }
        if self.p == 0 && self.q == 0 {
            return Err(Error::InvalidParameter(
                "a variance equation must exist: p and q cannot both be 0".into(),
            ));
        }
        Ok(())
    }

    /// Number of estimated parameters, including the two distribution
    /// shape parameters.
    pub fn n_params(&self) -> usize {
        1 + self.m + self.n + 1 + self.p + self.q + 2
    }

    pub fn max_lag(&self) -> usize {
        self.m.max(self.n).max(self.p).max(self.q)
    }
}

impl std::fmt::Display for MarginalSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ARMA({},{})-GARCH({},{})",
            self.m, self.n, self.p, self.q
        )
    }
}

/// Coefficients of the marginal model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalParams {
    /// Mean constant.
    pub phi0: f64,
    /// AR coefficients, length `m`.
    pub phi: Vec<f64>,
    /// MA coefficients, length `n`.
    pub gamma: Vec<f64>,
    /// Variance constant, positive.
    pub alpha0: f64,
    /// ARCH coefficients, length `p`, nonnegative.
    pub alpha: Vec<f64>,
    /// GARCH coefficients, length `q`, nonnegative.
    pub beta: Vec<f64>,
    /// Innovation distribution.
    pub dist: SkewedT,
}

impl MarginalParams {
    pub fn validate(&self, spec: &MarginalSpec) -> Result<()> {
        if self.phi.len() != spec.m
            || self.gamma.len() != spec.n
            || self.alpha.len() != spec.p
            || self.beta.len() != spec.q
        {
            return Err(Error::InvalidParameter(
                "coefficient lengths do not match the lag specification".into(),
            ));
        }
        if !(self.alpha0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance constant must be positive, got {}",
                self.alpha0
            )));
        }
        if self.alpha.iter().chain(&self.beta).any(|&c| c < 0.0) {
            return Err(Error::InvalidParameter(
                "ARCH/GARCH coefficients must be nonnegative".into(),
            ));
        }
        let persistence: f64 = self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>();
        if persistence >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "covariance stationarity violated: sum of ARCH and GARCH terms {persistence} >= 1"
            )));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    /// Natural parameter vector in reporting order:
    /// `[phi0, phi.., gamma.., alpha0, alpha.., beta.., nu, eta]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.phi.len() + self.gamma.len() + 5);
        v.push(self.phi0);
        v.extend(&self.phi);
        v.extend(&self.gamma);
        v.push(self.alpha0);
        v.extend(&self.alpha);
        v.extend(&self.beta);
        v.push(self.dist.nu());
        v.push(self.dist.eta());
        v
    }

    pub fn unflatten(spec: &MarginalSpec, v: &[f64]) -> Result<Self> {
        if v.len() != spec.n_params() {
            return Err(Error::InvalidParameter(format!(
                "expected {} parameters, got {}",
                spec.n_params(),
                v.len()
            )));
        }
        let mut it = v.iter().copied();
        let phi0 = it.next().unwrap();
        let phi: Vec<f64> = (&mut it).take(spec.m).collect();
        let gamma: Vec<f64> = (&mut it).take(spec.n).collect();
        let alpha0 = it.next().unwrap();
        let alpha: Vec<f64> = (&mut it).take(spec.p).collect();
        let beta: Vec<f64> = (&mut it).take(spec.q).collect();
        let nu = it.next().unwrap();
        let eta = it.next().unwrap();
        Ok(Self {
            phi0,
            phi,
            gamma,
            alpha0,
            alpha,
            beta,
            dist: SkewedT::new(nu, eta)?,
        })
    }

    /// Parameter names aligned with [`MarginalParams::flatten`].
    pub fn names(spec: &MarginalSpec) -> Vec<String> {
        let mut v = vec!["phi0".to_string()];
        v.extend((1..=spec.m).map(|j| format!("ar{j}")));
        v.extend((1..=spec.n).map(|j| format!("ma{j}")));
        v.push("alpha0".into());
        v.extend((1..=spec.p).map(|j| format!("arch{j}")));
        v.extend((1..=spec.q).map(|j| format!("garch{j}")));
        v.push("nu".into());
        v.push("eta".into());
        v
    }
}

/// Output of one likelihood filter pass.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
    pub loglik: f64,
}

/// Runs the ARMA-GARCH recursion with the conventional pre-sample state:
/// pre-sample innovations zero, pre-sample conditional variance equal to
/// the sample variance of the input, pre-sample returns equal to the
/// sample mean.
pub fn filter(
    returns: &[f64],
    spec: &MarginalSpec,
    params: &MarginalParams,
) -> Result<FilterOutput> {
    let t = returns.len();
    if t <= spec.max_lag() {
        return Err(Error::Filter(format!(
            "series of length {t} too short for {spec}"
        )));
    }
    let (mean, m2, _, _) = central_moments(returns);
    let var = m2 * t as f64 / (t as f64 - 1.0);
    if !(var > 1e-12) {
        return Err(Error::Filter(
            "input series is constant; the innovation density degenerates".into(),
        ));
    }
    filter_with_presample(returns, spec, params, var, mean)
}

/// [`filter`] with explicit pre-sample variance and mean, used by the
/// simulate-then-filter consistency checks and by simulation itself.
pub fn filter_with_presample(
    returns: &[f64],
    spec: &MarginalSpec,
    params: &MarginalParams,
    presample_var: f64,
    presample_mean: f64,
) -> Result<FilterOutput> {
    params.validate(spec)?;
    let t = returns.len();
    let mut mu = vec![0.0; t];
    let mut sigma = vec![0.0; t];
    let mut z = vec![0.0; t];
    let mut eps = vec![0.0; t];
    let mut sigma2 = vec![0.0; t];
    let mut loglik = 0.0;

    for i in 0..t {
        let mut m = params.phi0;
        for (j, &phi) in params.phi.iter().enumerate() {
            let lag = i as isize - (j as isize + 1);
            m += phi * if lag >= 0 { returns[lag as usize] } else { presample_mean };
        }
        for (j, &gamma) in params.gamma.iter().enumerate() {
            let lag = i as isize - (j as isize + 1);
            m += gamma * if lag >= 0 { eps[lag as usize] } else { 0.0 };
        }
        let mut s2 = params.alpha0;
        for (j, &a) in params.alpha.iter().enumerate() {
            let lag = i as isize - (j as isize + 1);
            let e = if lag >= 0 { eps[lag as usize] } else { 0.0 };
            s2 += a * if lag >= 0 { e * e } else { presample_var };
        }
        for (j, &b) in params.beta.iter().enumerate() {
            let lag = i as isize - (j as isize + 1);
            s2 += b * if lag >= 0 { sigma2[lag as usize] } else { presample_var };
        }
        if !(s2 > 0.0) || !s2.is_finite() {
            return Err(Error::Filter(format!(
                "conditional variance left the positive domain at t={i}"
            )));
        }
        let sd = s2.sqrt();
        let e = returns[i] - m;
        let zt = e / sd;
        loglik += params.dist.ln_pdf(zt) - sd.ln();
        mu[i] = m;
        sigma[i] = sd;
        z[i] = zt;
        eps[i] = e;
        sigma2[i] = s2;
    }
    if !loglik.is_finite() {
        return Err(Error::Filter("non-finite log-likelihood".into()));
    }
    Ok(FilterOutput {
        mu,
        sigma,
        z,
        loglik,
    })
}

/// A fitted marginal model with filtered state and fit measures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalFit {
    pub label: String,
    pub spec: MarginalSpec,
    pub params: MarginalParams,
    /// Standard errors aligned with [`MarginalParams::flatten`].
    pub std_errors: Vec<f64>,
    pub loglik: f64,
    /// `2k - 2 LL`.
    pub aic_raw: f64,
    /// `aic_raw / T`, the per-observation convention used for lag-order
    /// reporting.
    pub aic_per_obs: f64,
    /// `k ln(T) - 2 LL`.
    pub bic_raw: f64,
    pub n_obs: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
    pub converged: bool,
}

impl MarginalFit {
    /// Packages a filter pass at known parameters as a fit (no
    /// estimation); used by simulation studies and tests.
    pub fn from_filter(
        label: impl Into<String>,
        spec: MarginalSpec,
        params: MarginalParams,
        output: FilterOutput,
    ) -> Self {
        let k = spec.n_params();
        let t = output.z.len();
        let (aic_raw, bic_raw) =
            crate::copulas::information_criteria(output.loglik, k, t);
        Self {
            label: label.into(),
            spec,
            params,
            std_errors: vec![f64::NAN; k],
            loglik: output.loglik,
            aic_raw,
            aic_per_obs: aic_raw / t as f64,
            bic_raw,
            n_obs: t,
            mu: output.mu,
            sigma: output.sigma,
            z: output.z,
            converged: true,
        }
    }
}

/// Smooth reparameterization between the constrained natural space and
/// an unconstrained optimizer space.
///
/// Mean coefficients pass through unchanged; `alpha0` through an
/// exponential map; the ARCH/GARCH block through a logistic total
/// persistence capped at [`PERSISTENCE_CAP`] split by a pinned softmax;
/// `nu` as `2 + exp(w)`; `eta` through `tanh`.
struct Transform {
    spec: MarginalSpec,
}

impl Transform {
    fn free_dim(&self) -> usize {
        self.spec.n_params()
    }

    fn to_params(&self, w: &[f64]) -> Option<MarginalParams> {
        let spec = &self.spec;
        let mut it = w.iter().copied();
        let phi0 = it.next()?;
        let phi: Vec<f64> = (&mut it).take(spec.m).collect();
        let gamma: Vec<f64> = (&mut it).take(spec.n).collect();
        let alpha0 = it.next()?.clamp(-40.0, 40.0).exp();
        let w_s = it.next()?;
        let persistence = PERSISTENCE_CAP / (1.0 + (-w_s.clamp(-40.0, 40.0)).exp());
        let k = spec.p + spec.q;
        let mut shares = Vec::with_capacity(k);
        shares.push(1.0);
        for _ in 1..k {
            shares.push(it.next()?.clamp(-40.0, 40.0).exp());
        }
        let total: f64 = shares.iter().sum();
        let coefs: Vec<f64> = shares.iter().map(|e| persistence * e / total).collect();
        let (alpha, beta) = coefs.split_at(spec.p);
        let nu = 2.0 + it.next()?.clamp(-20.0, 16.0).exp();
        let eta = it.next()?.clamp(-18.0, 18.0).tanh();
        let dist = SkewedT::new(nu, eta).ok()?;
        Some(MarginalParams {
            phi0,
            phi,
            gamma,
            alpha0,
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
            dist,
        })
    }

    fn from_params(&self, p: &MarginalParams) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.free_dim());
        w.push(p.phi0);
        w.extend(&p.phi);
        w.extend(&p.gamma);
        w.push(p.alpha0.max(1e-12).ln());
        let persistence = p.persistence().clamp(1e-6, PERSISTENCE_CAP - 1e-6);
        w.push((persistence / (PERSISTENCE_CAP - persistence)).ln());
        let coefs: Vec<f64> = p.alpha.iter().chain(&p.beta).copied().collect();
        let first = coefs[0].max(1e-8 * persistence);
        for &c in &coefs[1..] {
            w.push((c.max(1e-8 * persistence) / first).ln());
        }
        w.push((p.dist.nu() - 2.0).max(1e-9).ln());
        w.push(p.dist.eta().clamp(-0.999, 0.999).atanh());
        w
    }
}

/// Maximum-likelihood estimation of one lag specification.
pub fn fit(returns: &ReturnSeries, spec: &MarginalSpec) -> Result<MarginalFit> {
    fit_with_floor(returns, spec, DEFAULT_MIN_OBS)
}

/// [`fit`] with a configurable minimum-observations floor.
pub fn fit_with_floor(
    returns: &ReturnSeries,
    spec: &MarginalSpec,
    min_obs: usize,
) -> Result<MarginalFit> {
    spec.validate()?;
    let r = &returns.values;
    let t = r.len();
    if t < min_obs {
        return Err(Error::Fit(format!(
            "{} requires at least {min_obs} observations, got {t}",
            returns.label
        )));
    }
    let transform = Transform { spec: *spec };
    let neg_ll = |w: &[f64]| -> f64 {
        match transform.to_params(w) {
            Some(p) => match filter(r, spec, &p) {
                Ok(out) => -out.loglik,
                Err(_) => f64::INFINITY,
            },
            None => f64::INFINITY,
        }
    };

    let (mean, m2, m3, _) = central_moments(r);
    let var = m2 * t as f64 / (t as f64 - 1.0);
    if !(var > 1e-12) {
        return Err(Error::Fit("constant input series".into()));
    }
    let skew = m3 / m2.powf(1.5);

    // Moment-matched start.
    let start_params = {
        let phi = vec![0.05; spec.m];
        let gamma = vec![0.05; spec.n];
        let persistence = 0.94;
        let (alpha, beta) = if spec.p == 0 {
            (vec![], vec![persistence / spec.q as f64; spec.q])
        } else if spec.q == 0 {
            (vec![persistence / spec.p as f64; spec.p], vec![])
        } else {
            (
                vec![0.06 / spec.p as f64; spec.p],
                vec![0.88 / spec.q as f64; spec.q],
            )
        };
        MarginalParams {
            phi0: mean * (1.0 - 0.05 * spec.m as f64),
            phi,
            gamma,
            alpha0: (var * 0.06).max(1e-8),
            alpha,
            beta,
            dist: SkewedT::new(8.0, (0.1 * skew.signum()).clamp(-0.3, 0.3)).unwrap(),
        }
    };
    let base = transform.from_params(&start_params);

    let mut starts = vec![base.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(hash_spec(spec));
    for _ in 0..3 {
        let jitter: Vec<f64> = base
            .iter()
            .map(|&w| w + (rng.random::<f64>() - 0.5) * 0.8)
            .collect();
        starts.push(jitter);
    }

    let dim = transform.free_dim();
    let best = starts
        .iter()
        .map(|s| {
            optimize::minimize(
                &neg_ll,
                s,
                0.25,
                (250 * dim).min(2600),
                140,
            )
        })
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    if !best.value.is_finite() {
        return Err(Error::Fit(format!(
            "{spec} likelihood non-finite at every start for {}",
            returns.label
        )));
    }

    let params = transform
        .to_params(&best.x)
        .ok_or_else(|| Error::Fit(format!("{spec} optimizer left the domain")))?;
    let out = filter(r, spec, &params)?;

    // Standard errors in natural coordinates.
    let flat = params.flatten();
    let nat_neg_ll = |v: &[f64]| -> f64 {
        match MarginalParams::unflatten(spec, v) {
            Ok(p) if p.validate(spec).is_ok() => match filter(r, spec, &p) {
                Ok(o) => -o.loglik,
                Err(_) => f64::INFINITY,
            },
            _ => f64::INFINITY,
        }
    };
    let hess = optimize::numerical_hessian(&nat_neg_ll, &flat);
    let std_errors = optimize::std_errors_from_hessian(&hess);

    let k = spec.n_params();
    let (aic_raw, bic_raw) = crate::copulas::information_criteria(out.loglik, k, t);
    Ok(MarginalFit {
        label: returns.label.clone(),
        spec: *spec,
        params,
        std_errors,
        loglik: out.loglik,
        aic_raw,
        aic_per_obs: aic_raw / t as f64,
        bic_raw,
        n_obs: t,
        mu: out.mu,
        sigma: out.sigma,
        z: out.z,
        converged: best.converged,
    })
}

fn hash_spec(spec: &MarginalSpec) -> u64 {
    0x6d61_7267 ^ ((spec.m as u64) << 24 | (spec.n as u64) << 16 | (spec.p as u64) << 8 | spec.q as u64)
}

/// Inclusive upper bounds for the lag grid searched by [`lag_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagBounds {
    pub max_ar: usize,
    pub max_ma: usize,
    pub max_arch: usize,
    pub max_garch: usize,
}

impl Default for LagBounds {
    fn default() -> Self {
        Self {
            max_ar: MAX_LAG,
            max_ma: MAX_LAG,
            max_arch: MAX_LAG,
            max_garch: MAX_LAG,
        }
    }
}

impl LagBounds {
    /// Every admissible specification under the bounds; a variance
    /// equation is always required.
    pub fn grid(&self) -> Vec<MarginalSpec> {
        let mut specs = Vec::new();
        for m in 0..=self.max_ar.min(MAX_LAG) {
            for n in 0..=self.max_ma.min(MAX_LAG) {
                for p in 0..=self.max_arch.min(MAX_LAG) {
                    for q in 0..=self.max_garch.min(MAX_LAG) {
                        if p == 0 && q == 0 {
                            continue;
                        }
                        specs.push(MarginalSpec { m, n, p, q });
                    }
                }
            }
        }
        specs
    }
}

/// Fits every specification in the lag grid and returns the fit with
/// minimal AIC; ties break toward fewer parameters, then lexicographic
/// `(m, n, p, q)` order. Candidates are fitted in parallel and merged
/// deterministically.
pub fn lag_search(returns: &ReturnSeries, bounds: &LagBounds) -> Result<MarginalFit> {
    let grid = bounds.grid();
    if grid.is_empty() {
        return Err(Error::Validation("empty lag grid".into()));
    }
    let results: Vec<(MarginalSpec, Result<MarginalFit>)> = grid
        .par_iter()
        .map(|spec| (*spec, fit(returns, spec)))
        .collect();

    let mut fits = Vec::new();
    let mut errors = Vec::new();
    for (spec, r) in results {
        match r {
            Ok(f) => fits.push(f),
            Err(e) => errors.push(format!("{spec}: {e}")),
        }
    }
    if fits.is_empty() {
        return Err(Error::Fit(format!(
            "every lag specification failed for {}: {}",
            returns.label,
            errors.join("; ")
        )));
    }
    if !errors.is_empty() {
        log::warn!(
            "{} lag specifications failed during search: {}",
            errors.len(),
            errors.join("; ")
        );
    }
    fits.sort_by(|a, b| {
        a.aic_raw.total_cmp(&b.aic_raw).then_with(|| {
            a.spec.n_params().cmp(&b.spec.n_params()).then_with(|| {
                (a.spec.m, a.spec.n, a.spec.p, a.spec.q)
                    .cmp(&(b.spec.m, b.spec.n, b.spec.p, b.spec.q))
            })
        })
    });
    Ok(fits.swap_remove(0))
}

/// Rank pseudo-observations strictly inside the unit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoObservations {
    pub u: Vec<f64>,
    pub source: String,
}

/// Empirical-CDF probability integral transform: `u_j = rank(z_j) /
/// (T+1)`, where the rank counts values `<= z_j` so tied values share
/// the maximal rank of their block.
pub fn pit_transform(z: &[f64], source: impl Into<String>) -> Result<PseudoObservations> {
    if z.is_empty() {
        return Err(Error::Validation(
            "probability integral transform of an empty sequence".into(),
        ));
    }
    let mut sorted: Vec<f64> = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let denom = (z.len() + 1) as f64;
    let u = z
        .iter()
        .map(|&v| {
            let rank = sorted.partition_point(|&s| s <= v);
            rank as f64 / denom
        })
        .collect();
    Ok(PseudoObservations {
        u,
        source: source.into(),
    })
}

/// Diagnostic battery on the standardized residuals of a fit.
pub fn residual_diagnostics(fit: &MarginalFit, lags: &[usize]) -> Result<DescriptiveReport> {
    describe_values(&format!("{} residuals", fit.label), &fit.z, lags)
}
