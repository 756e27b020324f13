//! Repeated-subsample grid search for `(cost, kernel_alpha)`.
//!
//! Each session draws a subsample without replacement, scores every grid
//! cell by k-fold accuracy of the decision sign, and keeps the best cell
//! (first in grid order on ties). The per-parameter median and most
//! frequent value are then taken over sessions.

use alloc::vec::Vec;

use rand::seq::index;

use super::{solve_raw, SvmParams};
use crate::domain::BinaryLabel;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::matrix::Matrix;
use crate::rng::{self, tag};
use crate::sampling;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub n_sessions: usize,
    pub session_size: usize,
    pub cost_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub inner_folds: usize,
    /// Solver settings; cost and kernel width are overridden per cell.
    pub solver: SvmParams,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            n_sessions: 200,
            session_size: 1600,
            cost_grid: (-3..=4).map(|e| libm::exp2(f64::from(e))).collect(),
            alpha_grid: (-6..=2).map(|e| libm::exp2(f64::from(e))).collect(),
            inner_folds: 3,
            solver: SvmParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    /// Best `(cost, kernel_alpha)` per session, in session order.
    pub sessions: Vec<(f64, f64)>,
    pub median_cost: f64,
    pub median_alpha: f64,
    pub mode_cost: f64,
    pub mode_alpha: f64,
}

impl TuneResult {
    pub fn from_sessions(sessions: Vec<(f64, f64)>) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::Empty("tuning sessions"));
        }
        let costs: Vec<f64> = sessions.iter().map(|s| s.0).collect();
        let alphas: Vec<f64> = sessions.iter().map(|s| s.1).collect();
        Ok(TuneResult {
            median_cost: median(&costs),
            median_alpha: median(&alphas),
            mode_cost: mode(&costs),
            mode_alpha: mode(&alphas),
            sessions,
        })
    }
}

/// Middle value; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Most frequent value; the smallest one among equally frequent values.
pub fn mode(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (mut best, mut best_count) = (v[0], 0);
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        if j - i > best_count {
            best = v[i];
            best_count = j - i;
        }
        i = j;
    }
    best
}

pub fn svm_tune<E: Executor>(
    x: &Matrix,
    y: &[BinaryLabel],
    cfg: &TuneConfig,
    seed: u64,
    exec: &E,
) -> Result<TuneResult> {
    if cfg.cost_grid.is_empty() || cfg.alpha_grid.is_empty() {
        return Err(Error::Empty("tuning grid"));
    }
    if cfg.n_sessions == 0 {
        return Err(Error::param("n_sessions", "must be at least 1"));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if cfg.session_size > x.rows() {
        return Err(Error::param(
            "session_size",
            alloc::format!("{} exceeds {} records", cfg.session_size, x.rows()),
        ));
    }
    if cfg.inner_folds < 2 || cfg.inner_folds > cfg.session_size {
        return Err(Error::param("inner_folds", "need 2 <= folds <= session size"));
    }
    if cfg.cost_grid.iter().chain(&cfg.alpha_grid).any(|v| !(*v > 0.0)) {
        return Err(Error::param("grid", "values must be positive"));
    }
    let sessions = exec.map(cfg.n_sessions, |s| tune_session(x, y, cfg, seed, s as u64));
    TuneResult::from_sessions(sessions)
}

fn tune_session(x: &Matrix, y: &[BinaryLabel], cfg: &TuneConfig, seed: u64, s: u64) -> (f64, f64) {
    let mut rng = rng::derive(seed, tag::TUNE, s);
    let mut picked = index::sample(&mut rng, x.rows(), cfg.session_size).into_vec();
    picked.sort_unstable();
    let xs = x.select_rows(&picked);
    let ys: Vec<BinaryLabel> = picked.iter().map(|&i| y[i]).collect();
    let signs: Vec<f64> = ys.iter().map(|l| l.sign()).collect();
    let folds = sampling::kfold(xs.rows(), cfg.inner_folds, rng::child_seed(seed, tag::TUNE, s))
        .expect("fold count checked");
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..cfg.inner_folds)
        .map(|f| (folds.train_indices(f), folds.test_indices(f)))
        .collect();

    let mut best = (cfg.cost_grid[0], cfg.alpha_grid[0]);
    let mut best_correct = None;
    for &cost in &cfg.cost_grid {
        for &alpha in &cfg.alpha_grid {
            let params = SvmParams {
                cost,
                kernel_alpha: alpha,
                ..cfg.solver
            };
            let mut correct = 0usize;
            for (train, test) in &splits {
                let st: Vec<f64> = train.iter().map(|&i| signs[i]).collect();
                if st.iter().all(|&v| v == st[0]) {
                    // single-class split: predict that class
                    correct += test.iter().filter(|&&i| signs[i] == st[0]).count();
                    continue;
                }
                let xt = xs.select_rows(train);
                let ut = alloc::vec![cost; train.len()];
                let (raw, _) = solve_raw(&xt, &st, &ut, &params, false);
                correct += test
                    .iter()
                    .filter(|&&i| (raw.decision(&xt, alpha, xs.row(i)) > 0.0) == ys[i].is_positive())
                    .count();
            }
            if best_correct.is_none_or(|b| correct > b) {
                best_correct = Some(correct);
                best = (cost, alpha);
            }
        }
    }
    best
}
