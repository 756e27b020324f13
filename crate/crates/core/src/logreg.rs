//! Logistic regression fitted by iteratively reweighted least squares.
//!
//! The fit maximizes `LL(beta) - ridge/2 * |beta[1..]|^2` on internally
//! standardized columns, with step halving whenever a Newton step would
//! lower the objective. The stored coefficients are mapped back to the raw
//! feature space, so callers never see the standardization.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::BinaryLabel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::matrix::Matrix;

pub const DEFAULT_RIDGE: f64 = 1e-6;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;

const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// Intercept followed by one coefficient per raw feature column.
    pub beta: Vec<f64>,
    /// Standardization constants used during the fit.
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub ridge: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn linear_score(&self, x: &[f64]) -> f64 {
        self.beta[0] + self.beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    /// Same model with every coefficient negated, which swaps the classes.
    pub fn negated(&self) -> Self {
        LogisticModel {
            beta: self.beta.iter().map(|b| -b).collect(),
            ..self.clone()
        }
    }
}

pub fn logit_prob(model: &LogisticModel, x: &[f64]) -> f64 {
    math::logistic(model.linear_score(x))
}

fn score(beta: &[f64], row: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(row).map(|(b, v)| b * v).sum::<f64>()
}

/// Penalized log-likelihood of `beta` (intercept first) on design `x`.
/// The intercept is not penalized.
pub fn penalized_log_likelihood(beta: &[f64], x: &Matrix, y: &[BinaryLabel], ridge: f64) -> f64 {
    let mut ll = 0.0;
    for (row, label) in x.iter_rows().zip(y) {
        let s = score(beta, row);
        if label.is_positive() {
            ll -= math::log1p_exp(-s);
        } else {
            ll -= math::log1p_exp(s);
        }
    }
    ll - 0.5 * ridge * beta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of [`penalized_log_likelihood`] with respect to `beta`.
pub fn gradient(beta: &[f64], x: &Matrix, y: &[BinaryLabel], ridge: f64) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    for (row, label) in x.iter_rows().zip(y) {
        let r = f64::from(u8::from(label.is_positive())) - math::logistic(score(beta, row));
        g[0] += r;
        for (gj, v) in g[1..].iter_mut().zip(row) {
            *gj += r * v;
        }
    }
    for (gj, b) in g[1..].iter_mut().zip(&beta[1..]) {
        *gj -= ridge * b;
    }
    g
}

/// Negative Hessian of the penalized log-likelihood.
fn information(beta: &[f64], x: &Matrix, ridge: f64) -> Matrix {
    let d = beta.len();
    let mut h = Matrix::zeros(d, d);
    let mut z = vec![1.0; d];
    for row in x.iter_rows() {
        z[1..].copy_from_slice(row);
        let p = math::logistic(score(beta, row));
        let w = p * (1.0 - p);
        for i in 0..d {
            let wi = w * z[i];
            let out = h.row_mut(i);
            for j in i..d {
                out[j] += wi * z[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            let v = h.get(j, i);
            h.set(i, j, v);
        }
        if i > 0 {
            let v = h.get(i, i) + ridge;
            h.set(i, i, v);
        }
    }
    h
}

fn newton_direction(h: &Matrix, g: &[f64]) -> Vec<f64> {
    if let Some(d) = linalg::cholesky_solve(h, g) {
        return d;
    }
    // Near-singular information matrix: add a small jitter on the diagonal.
    let n = h.rows();
    let trace: f64 = (0..n).map(|i| h.get(i, i)).sum::<f64>() / n as f64;
    let mut jitter = 1e-10 * trace.max(1e-12);
    loop {
        let mut hj = h.clone();
        for i in 0..n {
            hj.set(i, i, h.get(i, i) + jitter);
        }
        if let Some(d) = linalg::cholesky_solve(&hj, g) {
            return d;
        }
        jitter *= 10.0;
    }
}

pub fn logreg_fit(
    x: &Matrix,
    y: &[BinaryLabel],
    ridge: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LogisticModel> {
    logreg_fit_traced(x, y, ridge, tol, max_iter).map(|(m, _)| m)
}

/// Like [`logreg_fit`], also returning the penalized log-likelihood (in the
/// standardized space) after every iteration, starting with the initial
/// all-zero coefficients.
pub fn logreg_fit_traced(
    x: &Matrix,
    y: &[BinaryLabel],
    ridge: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(LogisticModel, Vec<f64>)> {
    let (n, p) = (x.rows(), x.cols());
    if n != y.len() {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::param("X", "need at least 2 rows"));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::param("ridge", "must be finite and nonnegative"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let n_pos = y.iter().filter(|l| l.is_positive()).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }

    let mut means = vec![0.0; p];
    for row in x.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut scales = vec![0.0; p];
    for row in x.iter_rows() {
        for j in 0..p {
            let d = row[j] - means[j];
            scales[j] += d * d;
        }
    }
    for s in &mut scales {
        let sd = math::sqrt(*s / n as f64);
        *s = if sd > 0.0 { sd } else { 1.0 };
    }
    let mut z = x.clone();
    for i in 0..n {
        for (j, v) in z.row_mut(i).iter_mut().enumerate() {
            *v = (*v - means[j]) / scales[j];
        }
    }

    let mut beta = vec![0.0; p + 1];
    let mut ll = penalized_log_likelihood(&beta, &z, y, ridge);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let g = gradient(&beta, &z, y, ridge);
        let h = information(&beta, &z, ridge);
        let dir = newton_direction(&h, &g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = beta.iter().zip(&dir).map(|(b, d)| b + step * d).collect();
            let cand_ll = penalized_log_likelihood(&cand, &z, y, ridge);
            if cand_ll >= ll {
                accepted = Some((cand, cand_ll));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_ll)) = accepted else {
            // No ascent along the Newton direction: stationary to working precision.
            converged = true;
            break;
        };
        let delta = cand_ll - ll;
        beta = cand;
        ll = cand_ll;
        trace.push(ll);
        if delta.abs() < tol {
            converged = true;
            break;
        }
    }

    let mut raw = vec![0.0; p + 1];
    raw[0] = beta[0];
    for j in 0..p {
        raw[j + 1] = beta[j + 1] / scales[j];
        raw[0] -= beta[j + 1] * means[j] / scales[j];
    }
    if raw.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok((
        LogisticModel {
            beta: raw,
            means,
            scales,
            ridge,
            converged,
            iterations,
        },
        trace,
    ))
}
