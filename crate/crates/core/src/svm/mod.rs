//! Soft-margin support vector machine with a radial kernel.
//!
//! [`svm_fit`] solves the dual with [`smo::solve`], then calibrates decision
//! values into probabilities with a [`platt::Platt`] sigmoid fitted on
//! out-of-fold decision values from an internal k-fold split of the
//! training points.

pub mod kernel;
pub mod platt;
pub mod smo;
pub mod tune;

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::BinaryLabel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, tag};
use crate::sampling;

pub use kernel::rbf_kernel;
pub use platt::{platt_fit, Platt, PlattNote};
pub use tune::{svm_tune, TuneConfig, TuneResult};

pub const DEFAULT_COST: f64 = 0.5;
pub const DEFAULT_KERNEL_ALPHA: f64 = 0.125;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_CACHE_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Misclassification cost (box bound).
    pub cost: f64,
    /// Kernel width in `exp(-alpha |x - y|^2)`.
    pub kernel_alpha: f64,
    pub tol: f64,
    pub working_set: smo::WorkingSet,
    /// Iteration cap as a multiple of the number of training points.
    pub max_passes: usize,
    pub cache_bytes: usize,
    /// Internal folds used to produce calibration decision values. Values
    /// below 2 calibrate on in-sample decision values.
    pub platt_folds: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            cost: DEFAULT_COST,
            kernel_alpha: DEFAULT_KERNEL_ALPHA,
            tol: DEFAULT_TOL,
            working_set: smo::WorkingSet::default(),
            max_passes: 1000,
            cache_bytes: DEFAULT_CACHE_BYTES,
            platt_folds: 3,
        }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::param("cost", "must be positive"));
        }
        if !(self.kernel_alpha > 0.0 && self.kernel_alpha.is_finite()) {
            return Err(Error::param("kernel_alpha", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Matrix,
    /// `y_i * a_i` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub kernel_alpha: f64,
    pub cost: f64,
    pub platt: Platt,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut s = self.bias;
        for (sv, c) in self.support_vectors.iter_rows().zip(&self.dual_coefs) {
            s += c * rbf_kernel(sv, x, self.kernel_alpha);
        }
        s
    }
}

pub fn svm_prob(model: &SvmModel, x: &[f64]) -> f64 {
    model.platt.prob(model.decision(x))
}

/// Raw dual solution on a (weighted) point set, without calibration.
pub(crate) struct RawFit {
    pub sv_index: Vec<usize>,
    pub coefs: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RawFit {
    pub fn decision(&self, x: &Matrix, kernel_alpha: f64, q: &[f64]) -> f64 {
        let mut s = self.bias;
        for (&i, c) in self.sv_index.iter().zip(&self.coefs) {
            s += c * rbf_kernel(x.row(i), q, kernel_alpha);
        }
        s
    }
}

pub(crate) fn solve_raw(
    x: &Matrix,
    y: &[f64],
    upper: &[f64],
    params: &SvmParams,
    record_objective: bool,
) -> (RawFit, smo::Solution) {
    let problem = smo::Problem {
        x,
        y,
        upper,
        kernel_alpha: params.kernel_alpha,
    };
    let opts = smo::SolverOptions {
        tol: params.tol,
        working_set: params.working_set,
        max_iter: params.max_passes.saturating_mul(y.len()).max(1),
        cache_bytes: params.cache_bytes,
        record_objective,
    };
    let sol = smo::solve(&problem, &opts);
    let mut sv_index = Vec::new();
    let mut coefs = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            sv_index.push(i);
            coefs.push(y[i] * a);
        }
    }
    (
        RawFit {
            sv_index,
            coefs,
            bias: -sol.rho,
            iterations: sol.iterations,
            converged: sol.converged,
        },
        sol,
    )
}

fn check_inputs(x: &Matrix, y: &[BinaryLabel], weights: Option<&[u32]>) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != y.len() {
            return Err(Error::Dimension {
                expected: y.len(),
                got: w.len(),
            });
        }
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let has = |want: bool| {
        y.iter()
            .enumerate()
            .any(|(i, l)| l.is_positive() == want && weights.is_none_or(|w| w[i] > 0))
    };
    if !has(true) || !has(false) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Fits the SVM. `weights` are integer multiplicities: a point with weight
/// `m` stands for `m` identical copies and gets box bound `m * cost`.
pub fn svm_fit(
    x: &Matrix,
    y: &[BinaryLabel],
    weights: Option<&[u32]>,
    params: &SvmParams,
    seed: u64,
) -> Result<SvmModel> {
    svm_fit_traced(x, y, weights, params, seed, false).map(|(m, _)| m)
}

/// [`svm_fit`] that also returns the main solve's [`smo::Solution`],
/// including the dual objective after every step when `record_objective`.
pub fn svm_fit_traced(
    x: &Matrix,
    y: &[BinaryLabel],
    weights: Option<&[u32]>,
    params: &SvmParams,
    seed: u64,
    record_objective: bool,
) -> Result<(SvmModel, smo::Solution)> {
    params.validate()?;
    check_inputs(x, y, weights)?;
    // drop zero-weight points
    let keep: Vec<usize> = (0..y.len())
        .filter(|&i| weights.is_none_or(|w| w[i] > 0))
        .collect();
    let xs = x.select_rows(&keep);
    let ys: Vec<BinaryLabel> = keep.iter().map(|&i| y[i]).collect();
    let mult: Vec<f64> = keep
        .iter()
        .map(|&i| weights.map_or(1.0, |w| f64::from(w[i])))
        .collect();
    let signs: Vec<f64> = ys.iter().map(|l| l.sign()).collect();
    let upper: Vec<f64> = mult.iter().map(|m| m * params.cost).collect();

    let (raw, solution) = solve_raw(&xs, &signs, &upper, params, record_objective);
    let decisions = calibration_decisions(&xs, &ys, &signs, &upper, params, seed)
        .unwrap_or_else(|| {
            (0..xs.rows())
                .map(|i| raw.decision(&xs, params.kernel_alpha, xs.row(i)))
                .collect()
        });
    let platt = platt_fit(&decisions, &ys, Some(&mult))?;

    let model = SvmModel {
        support_vectors: xs.select_rows(&raw.sv_index),
        dual_coefs: raw.coefs,
        bias: raw.bias,
        kernel_alpha: params.kernel_alpha,
        cost: params.cost,
        platt,
        iterations: raw.iterations,
        converged: raw.converged,
    };
    Ok((model, solution))
}

/// Out-of-fold decision values, or `None` when some internal training split
/// would hold a single class.
fn calibration_decisions(
    x: &Matrix,
    y: &[BinaryLabel],
    signs: &[f64],
    upper: &[f64],
    params: &SvmParams,
    seed: u64,
) -> Option<Vec<f64>> {
    let k = params.platt_folds;
    let n = x.rows();
    if k < 2 || n < 2 * k {
        return None;
    }
    let folds = sampling::kfold(n, k, rng::child_seed(seed, tag::SVM, 0)).ok()?;
    let mut out = vec![0.0; n];
    for f in 0..k {
        let train = folds.train_indices(f);
        let pos = train.iter().filter(|&&i| y[i].is_positive()).count();
        if pos == 0 || pos == train.len() {
            return None;
        }
        let xt = x.select_rows(&train);
        let st: Vec<f64> = train.iter().map(|&i| signs[i]).collect();
        let ut: Vec<f64> = train.iter().map(|&i| upper[i]).collect();
        let (raw, _) = solve_raw(&xt, &st, &ut, params, false);
        for i in folds.test_indices(f) {
            out[i] = raw.decision(&xt, params.kernel_alpha, x.row(i));
        }
    }
    Some(out)
}

/// Collapses repeated rows into unique rows with integer multiplicities,
/// keeping first-occurrence order. Rows are compared bitwise together with
/// their label.
pub fn collapse_duplicates(x: &Matrix, y: &[BinaryLabel]) -> (Matrix, Vec<BinaryLabel>, Vec<u32>) {
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let key = |i: usize| (y[i], x.row(i).iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
    order.sort_by_cached_key(|&i| key(i));
    let mut first_of = vec![usize::MAX; x.rows()];
    let mut count = vec![0u32; x.rows()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && y[order[end]] == y[order[start]]
            && x.row(order[end]) == x.row(order[start])
        {
            end += 1;
        }
        let rep = order[start..end].iter().copied().min().expect("nonempty run");
        for &i in &order[start..end] {
            first_of[i] = rep;
        }
        count[rep] = (end - start) as u32;
        start = end;
    }
    let reps: Vec<usize> = (0..x.rows()).filter(|&i| first_of[i] == i).collect();
    (
        x.select_rows(&reps),
        reps.iter().map(|&i| y[i]).collect(),
        reps.iter().map(|&i| count[i]).collect(),
    )
}
