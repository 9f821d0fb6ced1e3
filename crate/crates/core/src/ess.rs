//! Effective sample size from smoothed accuracy curves.
//!
//! RMSE-versus-size curves are smoothed with a biexponential
//!
//! ```text
//! f(u) = a1 exp(-b1 u) + a2 exp(-b2 u),   u = log_base(zeta),  a, b >= 0
//! ```
//!
//! fitted by damped Gauss-Newton (Levenberg-Marquardt) on the
//! reparameterization `a = p^2`, `b = q^2`, restarted from a fixed set of
//! decay-rate pairs. The effective size of a clustered dataset of `zeta`
//! games is the `zeta'` at which the independent-outcome curve reaches the
//! clustered curve's RMSE.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EssError {
    #[error("need at least 4 points with distinct zeta, got {0}")]
    TooFewPoints(usize),
    #[error("point {0}: zeta must be positive and rmse finite")]
    BadPoint(usize),
    #[error("no start converged (best residual norm {:?})", best.as_ref().map(|b| b.residual_norm))]
    NoConvergence { best: Option<Box<BiexpFit>> },
    #[error(
        "extrapolation required: target {target} outside [{at_hi}, {at_lo}] reached on zeta in [{zeta_lo}, {zeta_hi}]"
    )]
    Extrapolation { target: f64, zeta_lo: f64, zeta_hi: f64, at_lo: f64, at_hi: f64 },
    #[error("zeta must be positive, got {0}")]
    BadZeta(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiexpFit {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    /// Base of the logarithmic abscissa.
    pub log_base: f64,
    /// Abscissa range covered by the fitted points.
    pub u_min: f64,
    pub u_max: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl BiexpFit {
    /// Curve with explicit parameters, valid over `[u_min, u_max]`.
    pub fn from_params(a1: f64, b1: f64, a2: f64, b2: f64, log_base: f64, u_min: f64, u_max: f64) -> Self {
        BiexpFit { a1, b1, a2, b2, log_base, u_min, u_max, residual_norm: 0.0, iterations: 0 }
    }

    pub fn eval_u(&self, u: f64) -> f64 {
        self.a1 * (-self.b1 * u).exp() + self.a2 * (-self.b2 * u).exp()
    }

    pub fn eval(&self, zeta: f64) -> f64 {
        self.eval_u(self.abscissa(zeta))
    }

    pub fn abscissa(&self, zeta: f64) -> f64 {
        zeta.ln() / self.log_base.ln()
    }

    pub fn zeta_at(&self, u: f64) -> f64 {
        self.log_base.powf(u)
    }

    pub fn zeta_range(&self) -> (f64, f64) {
        (self.zeta_at(self.u_min), self.zeta_at(self.u_max))
    }

    fn param_norm(&self) -> f64 {
        (self.a1 * self.a1 + self.b1 * self.b1 + self.a2 * self.a2 + self.b2 * self.b2).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiexpOptions {
    pub log_base: f64,
    pub max_iterations: usize,
}

impl Default for BiexpOptions {
    fn default() -> Self {
        BiexpOptions { log_base: 4.0, max_iterations: 5000 }
    }
}

/// Fit with the default abscissa `log4(zeta)`.
pub fn fit_biexponential(points: &[(f64, f64)]) -> Result<BiexpFit, EssError> {
    fit_biexponential_with(points, &BiexpOptions::default())
}

pub fn fit_biexponential_with(points: &[(f64, f64)], opts: &BiexpOptions) -> Result<BiexpFit, EssError> {
    for (i, &(z, r)) in points.iter().enumerate() {
        if !(z > 0.0 && z.is_finite() && r.is_finite()) {
            return Err(EssError::BadPoint(i));
        }
    }
    let mut zetas: Vec<f64> = points.iter().map(|p| p.0).collect();
    zetas.sort_by(f64::total_cmp);
    zetas.dedup();
    if zetas.len() < 4 {
        return Err(EssError::TooFewPoints(zetas.len()));
    }
    let ln_base = opts.log_base.ln();
    let u: Vec<f64> = points.iter().map(|p| p.0.ln() / ln_base).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let u_min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let u_max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut best: Option<BiexpFit> = None;
    let mut any_converged = false;
    for start in starts(&u, &y) {
        let (params, iterations, converged) = levenberg_marquardt(&u, &y, start, opts.max_iterations);
        let [p1, q1, p2, q2] = params;
        let (mut a1, mut b1, mut a2, mut b2) = (p1 * p1, q1 * q1, p2 * p2, q2 * q2);
        if b2 > b1 {
            std::mem::swap(&mut a1, &mut a2);
            std::mem::swap(&mut b1, &mut b2);
        }
        let mut fit = BiexpFit { a1, b1, a2, b2, log_base: opts.log_base, u_min, u_max, residual_norm: 0.0, iterations };
        fit.residual_norm = u.iter().zip(&y).map(|(&ui, &yi)| (fit.eval_u(ui) - yi).powi(2)).sum::<f64>().sqrt();
        if !fit.residual_norm.is_finite() {
            continue;
        }
        any_converged |= converged;
        let better = match &best {
            None => true,
            Some(b) => {
                fit.residual_norm < b.residual_norm
                    || (fit.residual_norm == b.residual_norm && fit.param_norm() < b.param_norm())
            }
        };
        if better {
            best = Some(fit);
        }
    }
    match best {
        Some(b) if any_converged => Ok(b),
        other => Err(EssError::NoConvergence { best: other.map(Box::new) }),
    }
}

/// Decay rates used to seed the multi-start.
const START_RATES: [f64; 6] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0];

/// 15 decay-rate pairs plus a flat start, each with amplitudes from a
/// non-negative linear least-squares solve at fixed rates.
fn starts(u: &[f64], y: &[f64]) -> Vec<[f64; 4]> {
    let mut out = Vec::with_capacity(16);
    for i in 0..START_RATES.len() {
        for j in (i + 1)..START_RATES.len() {
            let (b1, b2) = (START_RATES[j], START_RATES[i]);
            let (a1, a2) = amplitudes(u, y, b1, b2);
            out.push([a1.sqrt(), b1.sqrt(), a2.sqrt(), b2.sqrt()]);
        }
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    out.push([mean.max(0.0).sqrt(), 0.0, 0.0, 0.0]);
    out
}

/// Best non-negative `(a1, a2)` for fixed decay rates.
fn amplitudes(u: &[f64], y: &[f64], b1: f64, b2: f64) -> (f64, f64) {
    let e1: Vec<f64> = u.iter().map(|&x| (-b1 * x).exp()).collect();
    let e2: Vec<f64> = u.iter().map(|&x| (-b2 * x).exp()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (s11, s12, s22) = (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2));
    let (t1, t2) = (dot(&e1, y), dot(&e2, y));
    let det = s11 * s22 - s12 * s12;
    if det.abs() > 1e-14 * s11 * s22 {
        let a1 = (t1 * s22 - t2 * s12) / det;
        let a2 = (s11 * t2 - s12 * t1) / det;
        if a1 >= 0.0 && a2 >= 0.0 {
            return (a1, a2);
        }
    }
    let sse = |a1: f64, a2: f64| u.iter().enumerate().map(|(k, _)| (a1 * e1[k] + a2 * e2[k] - y[k]).powi(2)).sum::<f64>();
    let only1 = (t1 / s11).max(0.0);
    let only2 = (t2 / s22).max(0.0);
    if sse(only1, 0.0) <= sse(0.0, only2) {
        (only1, 0.0)
    } else {
        (0.0, only2)
    }
}

/// Levenberg-Marquardt on `theta = [p1, q1, p2, q2]`. Returns the final
/// parameters, the iteration count, and whether a tolerance (rather than the
/// iteration cap) ended the run.
fn levenberg_marquardt(u: &[f64], y: &[f64], start: [f64; 4], max_iter: usize) -> ([f64; 4], usize, bool) {
    let model = |th: &[f64; 4], x: f64| th[0] * th[0] * (-th[1] * th[1] * x).exp() + th[2] * th[2] * (-th[3] * th[3] * x).exp();
    let cost = |th: &[f64; 4]| u.iter().zip(y).map(|(&x, &v)| (model(th, x) - v).powi(2)).sum::<f64>();

    let mut theta = start;
    let mut c = cost(&theta);
    let mut mu = 1e-3;
    for iter in 0..max_iter {
        if c <= 1e-30 {
            return (theta, iter, true);
        }
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&x, &v) in u.iter().zip(y) {
            let e1 = (-theta[1] * theta[1] * x).exp();
            let e2 = (-theta[3] * theta[3] * x).exp();
            let r = model(&theta, x) - v;
            let j = [
                2.0 * theta[0] * e1,
                -2.0 * theta[0] * theta[0] * theta[1] * x * e1,
                2.0 * theta[2] * e2,
                -2.0 * theta[2] * theta[2] * theta[3] * x * e2,
            ];
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let grad_norm = jtr.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_norm <= 1e-18 {
            return (theta, iter, true);
        }
        loop {
            let mut m = jtj;
            let scale = (0..4).map(|k| jtj[k][k]).fold(0.0, f64::max).max(1e-30);
            for (k, row) in m.iter_mut().enumerate() {
                row[k] += mu * scale;
            }
            let rhs = jtr.map(|g| -g);
            let Some(delta) = solve4(m, rhs) else {
                mu *= 10.0;
                if mu > 1e20 {
                    return (theta, iter, true);
                }
                continue;
            };
            let cand = [theta[0] + delta[0], theta[1] + delta[1], theta[2] + delta[2], theta[3] + delta[3]];
            let cc = cost(&cand);
            if cc.is_finite() && cc < c {
                let rel = (c - cc) / c;
                theta = cand;
                c = cc;
                mu = (mu / 3.0).max(1e-15);
                if rel < 1e-16 {
                    return (theta, iter + 1, true);
                }
                break;
            }
            mu *= 4.0;
            if mu > 1e20 {
                // No descent direction left at working precision.
                return (theta, iter, true);
            }
        }
    }
    (theta, max_iter, false)
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = ((row + 1)..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssResult {
    pub zeta: f64,
    pub zeta_prime: f64,
    /// `zeta' / zeta`.
    pub ratio: f64,
    /// Set when `zeta' > zeta`, which clustering should not produce.
    pub exceeds_nominal: bool,
}

/// Solve `curve_k1(zeta') = curve_kt(zeta)` by bisection on the K=1 curve's
/// abscissa, restricted to the range that curve was fitted on.
///
/// Both curves are indexed by zeta: the K=T curve by games of `T` plays, the
/// K=1 curve by `zeta * T` single-play games, so `zeta'` comes out in the
/// same games-worth units as `zeta`.
pub fn effective_sample_size(curve_k1: &BiexpFit, curve_kt: &BiexpFit, zeta: f64) -> Result<EssResult, EssError> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(EssError::BadZeta(zeta));
    }
    let target = curve_kt.eval(zeta);
    let (mut lo, mut hi) = (curve_k1.u_min, curve_k1.u_max);
    let (at_lo, at_hi) = (curve_k1.eval_u(lo), curve_k1.eval_u(hi));
    if target > at_lo || target < at_hi {
        let (zeta_lo, zeta_hi) = curve_k1.zeta_range();
        return Err(EssError::Extrapolation { target, zeta_lo, zeta_hi, at_lo, at_hi });
    }
    // Relative width in zeta is ln(base) * width in u.
    let tol = 1e-13 / curve_k1.log_base.ln();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if curve_k1.eval_u(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    let zeta_prime = curve_k1.zeta_at(u);
    let ratio = zeta_prime / zeta;
    Ok(EssResult { zeta, zeta_prime, ratio, exceeds_nominal: ratio > 1.0 })
}
