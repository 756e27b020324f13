//! Sigmoid calibration of decision values, `p(d) = 1 / (1 + exp(a d + b))`.
//!
//! The fit is Newton's method with backtracking on the cross-entropy against
//! smoothed targets `(N+ + 1) / (N+ + 2)` and `1 / (N- + 2)`. The smoothing
//! acts as the penalty that keeps `a` finite on perfectly ordered data.

use crate::domain::BinaryLabel;
use crate::error::{Error, Result};
use crate::math;

const MAX_ITER: usize = 100;
const MIN_STEP: f64 = 1e-10;
const SIGMA: f64 = 1e-12;
const EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlattNote {
    /// All decision values were identical; the sigmoid is the constant prior.
    Degenerate,
    /// The unconstrained optimum had `a > 0`; refitted with `a = 0`.
    Flattened,
    /// Newton iterations hit the cap before the gradient vanished.
    NotConverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
    pub note: Option<PlattNote>,
}

impl Platt {
    pub fn prob(&self, decision: f64) -> f64 {
        math::logistic(-(self.a * decision + self.b))
    }
}

/// Fits the sigmoid to `(decision, label)` pairs; `weights`, when given,
/// are per-pair multiplicities.
pub fn platt_fit(decisions: &[f64], labels: &[BinaryLabel], weights: Option<&[f64]>) -> Result<Platt> {
    if decisions.len() != labels.len() {
        return Err(Error::Dimension {
            expected: decisions.len(),
            got: labels.len(),
        });
    }
    if decisions.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite);
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let (mut prior1, mut prior0) = (0.0, 0.0);
    for (i, l) in labels.iter().enumerate() {
        if l.is_positive() {
            prior1 += w(i);
        } else {
            prior0 += w(i);
        }
    }
    if prior1 == 0.0 || prior0 == 0.0 {
        return Err(Error::SingleClass);
    }
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let target = |i: usize| if labels[i].is_positive() { hi } else { lo };
    let mean_target = (prior1 * hi + prior0 * lo) / (prior1 + prior0);
    let flat_b = math::ln((1.0 - mean_target) / mean_target);

    let first = decisions[0];
    if decisions.iter().all(|&d| d == first) {
        return Ok(Platt {
            a: 0.0,
            b: flat_b,
            note: Some(PlattNote::Degenerate),
        });
    }

    let objective = |a: f64, b: f64| -> f64 {
        let mut f = 0.0;
        for (i, &d) in decisions.iter().enumerate() {
            let z = a * d + b;
            let t = target(i);
            f += w(i)
                * if z >= 0.0 {
                    t * z + math::ln_1p(math::exp(-z))
                } else {
                    (t - 1.0) * z + math::ln_1p(math::exp(z))
                };
        }
        f
    };

    let mut a = 0.0;
    let mut b = math::ln((prior0 + 1.0) / (prior1 + 1.0));
    let mut fval = objective(a, b);
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (i, &d) in decisions.iter().enumerate() {
            let z = a * d + b;
            let (p, q) = if z >= 0.0 {
                let e = math::exp(-z);
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = math::exp(z);
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let wi = w(i);
            let d2 = p * q * wi;
            h11 += d * d * d2;
            h22 += d2;
            h21 += d * d2;
            let d1 = (target(i) - p) * wi;
            g1 += d * d1;
            g2 += d1;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            converged = true;
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if a > 0.0 {
        return Ok(Platt {
            a: 0.0,
            b: flat_b,
            note: Some(PlattNote::Flattened),
        });
    }
    Ok(Platt {
        a,
        b,
        note: (!converged).then_some(PlattNote::NotConverged),
    })
}
