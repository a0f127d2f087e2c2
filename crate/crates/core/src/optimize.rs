//! Derivative-free and quasi-Newton minimizers used by the maximum
//! likelihood fitters.
//!
//! All estimation problems in this crate are smooth after
//! reparameterization onto an unconstrained space, but the likelihoods
//! can be multimodal and locally flat, so the house recipe is a
//! Nelder-Mead simplex pass polished by BFGS with central-difference
//! gradients. Objective functions signal infeasible points by returning
//! `f64::INFINITY`.

use nalgebra::DMatrix;

/// Outcome of a minimization run.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimization with the Gao-Han adaptive
/// coefficients. `step` sets the initial simplex spread per coordinate.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> OptimResult {
    let n = x0.len();
    assert!(n >= 1, "empty parameter vector");
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut xi = x0.to_vec();
        xi[i] += if xi[i].abs() > 1e-8 { step * xi[i].abs() } else { step };
        let vi = eval(&xi);
        simplex.push((xi, vi));
    }

    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= tol * (1.0 + best.abs()) && worst.is_finite() {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in simplex.iter().take(n) {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let point = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = point(alpha);
        let vr = eval(&xr);
        if vr < simplex[0].1 {
            let xe = point(alpha * beta);
            let ve = eval(&xe);
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
        } else if vr < simplex[n - 1].1 {
            simplex[n] = (xr, vr);
        } else {
            let (xc, vc) = if vr < simplex[n].1 {
                let xc = point(alpha * gamma);
                let vc = eval(&xc);
                (xc, vc)
            } else {
                let xc = point(-gamma);
                let vc = eval(&xc);
                (xc, vc)
            };
            if vc < simplex[n].1.min(vr) {
                simplex[n] = (xc, vc);
            } else {
                // Shrink toward the best vertex.
                let best_x = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (xi, bi) in entry.0.iter_mut().zip(&best_x) {
                        *xi = bi + delta * (*xi - bi);
                    }
                    entry.1 = eval(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    OptimResult {
        x,
        value,
        evals,
        converged,
    }
}

/// Central-difference gradient with per-coordinate steps. Falls back to
/// one-sided differences when a perturbed point is infeasible.
pub fn numerical_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], fx: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 6e-6 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = if fp.is_finite() && fm.is_finite() {
            (fp - fm) / (2.0 * h)
        } else if fp.is_finite() {
            (fp - fx) / h
        } else if fm.is_finite() {
            (fx - fm) / h
        } else {
            0.0
        };
    }
    g
}

/// BFGS minimization with numerical gradients and a backtracking Armijo
/// line search. Intended as a polish step from a near-optimal point.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], max_iter: usize, grad_tol: f64) -> OptimResult {
    let n = x0.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut x = x0.to_vec();
    let mut fx = eval(&x, &mut evals);
    if !fx.is_finite() {
        return OptimResult {
            x,
            value: fx,
            evals,
            converged: false,
        };
    }
    let count = std::cell::Cell::new(0usize);
    let fc = |y: &[f64]| {
        count.set(count.get() + 1);
        let v = f(y);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut g = numerical_gradient(&fc, &x, fx);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut converged = false;

    for _ in 0..max_iter {
        if g.iter().all(|gi| gi.abs() < grad_tol) {
            converged = true;
            break;
        }
        let gv = DMatrix::from_column_slice(n, 1, &g);
        let dir = -(&h_inv * &gv);
        let slope: f64 = g.iter().zip(dir.iter()).map(|(a, b)| a * b).sum();
        let dir: Vec<f64> = dir.iter().copied().collect();
        if slope >= 0.0 {
            // Not a descent direction; reset the approximation.
            h_inv = DMatrix::identity(n, n);
            continue;
        }

        let mut t = 1.0;
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = x[i] + t * dir[i];
            }
            f_new = fc(&x_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            converged = true; // no further progress possible along -Hg
            break;
        }

        let g_new = numerical_gradient(&fc, &x_new, f_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-10 * s_norm * y_norm {
            let sv = DMatrix::from_column_slice(n, 1, &s);
            let yv = DMatrix::from_column_slice(n, 1, &y);
            let rho = 1.0 / sy;
            let i_mat = DMatrix::<f64>::identity(n, n);
            let left = &i_mat - rho * (&sv * yv.transpose());
            let right = &i_mat - rho * (&yv * sv.transpose());
            h_inv = &left * h_inv * right + rho * (&sv * sv.transpose());
        } else {
            h_inv = DMatrix::identity(n, n);
        }

        let f_drop = fx - f_new;
        x = x_new.clone();
        fx = f_new;
        g = g_new;
        if f_drop.abs() <= 1e-12 * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
    }
    evals += count.get();
    OptimResult {
        x,
        value: fx,
        evals,
        converged,
    }
}

/// Simplex pass followed by a BFGS polish; the standard recipe for the
/// likelihood surfaces in this crate.
pub fn minimize<F: Fn(&[f64]) -> f64 + Copy>(
    f: F,
    x0: &[f64],
    step: f64,
    nm_iter: usize,
    bfgs_iter: usize,
) -> OptimResult {
    let nm = nelder_mead(f, x0, step, nm_iter, 1e-10);
    if !nm.value.is_finite() {
        return nm;
    }
    let polish = bfgs(f, &nm.x, bfgs_iter, 1e-7);
    if polish.value <= nm.value {
        OptimResult {
            evals: nm.evals + polish.evals,
            ..polish
        }
    } else {
        OptimResult {
            evals: nm.evals + polish.evals,
            ..nm
        }
    }
}

/// Golden-section search on `[lo, hi]` after a coarse scan that locates
/// the best starting bracket. Returns `(argmin, min)`.
pub fn minimize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    assert!(lo < hi);
    const SCAN: usize = 33;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    let grid: Vec<f64> = (0..SCAN)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN - 1) as f64)
        .collect();
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(SCAN - 1)];
    if a == b {
        return (a, best_v);
    }

    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a < tol * (1.0 + a.abs()) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (a + b);
    (xm, f(xm))
}

/// Central-difference Hessian of `f` at `x`.
pub fn numerical_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    let steps: Vec<f64> = x.iter().map(|xi| 1.5e-4 * xi.abs().max(1.0)).collect();
    let fx = f(x);
    let mut xp = x.to_vec();
    for i in 0..n {
        xp[i] = x[i] + steps[i];
        let fp = f(&xp);
        xp[i] = x[i] - steps[i];
        let fm = f(&xp);
        xp[i] = x[i];
        h[(i, i)] = (fp - 2.0 * fx + fm) / (steps[i] * steps[i]);
        for j in (i + 1)..n {
            xp[i] = x[i] + steps[i];
            xp[j] = x[j] + steps[j];
            let fpp = f(&xp);
            xp[j] = x[j] - steps[j];
            let fpm = f(&xp);
            xp[i] = x[i] - steps[i];
            let fmm = f(&xp);
            xp[j] = x[j] + steps[j];
            let fmp = f(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Standard errors as the square roots of the diagonal of the inverse
/// Hessian of the negative log-likelihood. Entries that cannot be
/// resolved (singular Hessian, negative curvature) come back as NaN.
pub fn std_errors_from_hessian(hess: &DMatrix<f64>) -> Vec<f64> {
    let n = hess.nrows();
    match hess.clone().try_inverse() {
        Some(inv) => (0..n)
            .map(|i| {
                let v = inv[(i, i)];
                if v > 0.0 {
                    v.sqrt()
                } else {
                    f64::NAN
                }
            })
            .collect(),
        None => vec![f64::NAN; n],
    }
}
