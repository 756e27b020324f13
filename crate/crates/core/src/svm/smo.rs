//! Sequential minimal optimization for the soft-margin dual
//!
//! ```text
//! min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C_i,  y'a = 0,   Q_ij = y_i y_j K_ij
//! ```
//!
//! Each step picks a violating pair, solves the two-variable subproblem in
//! closed form and clips it to the box. Iteration stops once the maximal
//! violation gap `m(a) - M(a)` falls below `tol`.
//!
//! Two pair rules are available. [`WorkingSet::MaxViolating`] takes the
//! maximal violating pair. [`WorkingSet::SecondOrder`] keeps the same first
//! index but picks the partner giving the largest decrease of the quadratic
//! model, which needs far fewer steps on noisy data.

use alloc::vec;
use alloc::vec::Vec;

use super::kernel::{rbf_kernel, KernelRows};
use crate::matrix::Matrix;

const TAU: f64 = 1e-12;

pub struct Problem<'a> {
    pub x: &'a Matrix,
    /// Labels as +1.0 / -1.0.
    pub y: &'a [f64],
    /// Per-point box bounds `C_i`.
    pub upper: &'a [f64],
    pub kernel_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub alpha: Vec<f64>,
    /// Decision values are `sum_i y_i a_i K(x_i, x) - rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final `m(a) - M(a)` gap.
    pub gap: f64,
    /// Dual objective `e'a - 1/2 a'Qa` after each step, when requested.
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WorkingSet {
    MaxViolating,
    #[default]
    SecondOrder,
}

pub struct SolverOptions {
    pub tol: f64,
    pub working_set: WorkingSet,
    pub max_iter: usize,
    pub cache_bytes: usize,
    pub record_objective: bool,
}

#[inline]
fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

#[inline]
fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Maximal violating pair `(i, j, gap)` for gradient `g`, or `None` when one
/// of the index sets is empty.
fn select(y: &[f64], alpha: &[f64], upper: &[f64], g: &[f64]) -> Option<(usize, usize, f64)> {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    let (mut i, mut j) = (usize::MAX, usize::MAX);
    for t in 0..y.len() {
        let v = -y[t] * g[t];
        if in_up(y[t], alpha[t], upper[t]) && v > gmax {
            gmax = v;
            i = t;
        }
        if in_low(y[t], alpha[t], upper[t]) && v < gmin {
            gmin = v;
            j = t;
        }
    }
    (i != usize::MAX && j != usize::MAX).then_some((i, j, gmax - gmin))
}

/// Partner `j` for first index `i` minimizing `-b^2 / a` over violating
/// candidates, where `b` is the violation and `a` the pair curvature.
fn second_order_partner(i: usize, y: &[f64], alpha: &[f64], upper: &[f64], g: &[f64], ki: &[f64]) -> usize {
    let vi = -y[i] * g[i];
    let mut best = usize::MAX;
    let mut best_obj = f64::INFINITY;
    for t in 0..y.len() {
        if !in_low(y[t], alpha[t], upper[t]) {
            continue;
        }
        let b = vi + y[t] * g[t];
        if b > 0.0 {
            // K_ii = K_tt = 1 for the radial kernel
            let a = (2.0 - 2.0 * ki[t]).max(TAU);
            let obj = -(b * b) / a;
            if obj < best_obj {
                best_obj = obj;
                best = t;
            }
        }
    }
    best
}

fn dual_objective(alpha: &[f64], g: &[f64]) -> f64 {
    // with g = Qa - e:  e'a - 1/2 a'Qa = -1/2 sum a_i (g_i - 1)
    -0.5 * alpha.iter().zip(g).map(|(a, gi)| a * (gi - 1.0)).sum::<f64>()
}

pub fn solve(p: &Problem<'_>, opts: &SolverOptions) -> Solution {
    let n = p.y.len();
    let (y, upper) = (p.y, p.upper);
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let mut rows = KernelRows::new(p.x, p.kernel_alpha, opts.cache_bytes);
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = 0.0;
    let mut ki_buf = vec![0.0; n];

    while iterations < opts.max_iter {
        let Some((i, j_first, d)) = select(y, &alpha, upper, &g) else {
            converged = true;
            gap = 0.0;
            break;
        };
        gap = d;
        if d < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        ki_buf.copy_from_slice(rows.row(i));
        let j = match opts.working_set {
            WorkingSet::MaxViolating => j_first,
            WorkingSet::SecondOrder => second_order_partner(i, y, &alpha, upper, &g, &ki_buf),
        };
        let kj = rows.row(j);
        let ki = &ki_buf;
        let (ci, cj) = (upper[i], upper[j]);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_ai, old_aj);
        if y[i] != y[j] {
            let quad = (ki[i] + kj[j] - 2.0 * ki[j]).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let quad = (ki[i] + kj[j] - 2.0 * ki[j]).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let dai = (ai - old_ai) * y[i];
        let daj = (aj - old_aj) * y[j];
        for t in 0..n {
            g[t] += y[t] * (ki[t] * dai + kj[t] * daj);
        }
        if opts.record_objective {
            objective.push(dual_objective(&alpha, &g));
        }
    }

    let rho = compute_rho(y, &alpha, upper, &g);
    Solution {
        alpha,
        rho,
        iterations,
        converged,
        gap,
        objective,
    }
}

fn compute_rho(y: &[f64], alpha: &[f64], upper: &[f64], g: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..y.len() {
        let yg = y[t] * g[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}

/// Largest KKT violation `m(a) - M(a)` of `alpha`, with the gradient
/// recomputed from scratch. Zero when either index set is empty.
pub fn kkt_gap(p: &Problem<'_>, alpha: &[f64]) -> f64 {
    let n = p.y.len();
    let mut g = vec![-1.0; n];
    for s in 0..n {
        if alpha[s] == 0.0 {
            continue;
        }
        let xs = p.x.row(s);
        for t in 0..n {
            g[t] += p.y[t] * p.y[s] * alpha[s] * rbf_kernel(p.x.row(t), xs, p.kernel_alpha);
        }
    }
    select(p.y, alpha, p.upper, &g).map_or(0.0, |(_, _, d)| d.max(0.0))
}
