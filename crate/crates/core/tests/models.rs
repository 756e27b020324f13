use pexit_core::exec::{Executor, Serial};
use pexit_core::forest::{forest_fit, forest_prob, forest_votes, ForestParams};
use pexit_core::linalg::symmetric_eigen;
use pexit_core::logreg::{gradient, logreg_fit, logreg_fit_traced, penalized_log_likelihood};
use pexit_core::rng;
use pexit_core::svm::smo::{self, Problem, SolverOptions, WorkingSet};
use pexit_core::svm::{platt_fit, rbf_kernel};
use pexit_core::{BinaryLabel, Matrix};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, p: usize, seed: u64) -> Matrix {
    let mut r = rng::derive(seed, 1, 0);
    let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut r)).collect();
    Matrix::from_vec(n, p, data).unwrap()
}

fn coin_labels(n: usize, seed: u64) -> Vec<BinaryLabel> {
    let mut r = rng::derive(seed, 2, 0);
    (0..n).map(|_| BinaryLabel::from_bool(r.random_bool(0.5))).collect()
}

/// Labels from a noisy linear rule on the first two columns.
fn linear_labels(x: &Matrix, seed: u64) -> Vec<BinaryLabel> {
    let mut r = rng::derive(seed, 3, 0);
    x.iter_rows()
        .map(|row| {
            let noise: f64 = StandardNormal.sample(&mut r);
            BinaryLabel::from_bool(row[0] - 0.5 * row[1] + 0.5 * noise > 0.0)
        })
        .collect()
}

/// Spreads jobs over scoped threads and returns results in index order.
struct Threads(usize);

impl Executor for Threads {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let chunk = n.div_ceil(self.0).max(1);
        let f = &f;
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..n)
                .step_by(chunk)
                .map(|lo| s.spawn(move || (lo..(lo + chunk).min(n)).map(f).collect::<Vec<T>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        })
    }
}

// ---- logistic regression

#[test]
fn logistic_gradient_matches_finite_differences() {
    let x = gaussian(200, 5, 1);
    let y = linear_labels(&x, 1);
    let beta = [0.3, -0.2, 0.5, 0.1, -0.7, 0.25];
    let g = gradient(&beta, &x, &y, 0.1);
    let h = 1e-6;
    for k in 0..beta.len() {
        let mut up = beta;
        let mut down = beta;
        up[k] += h;
        down[k] -= h;
        let fd = (penalized_log_likelihood(&up, &x, &y, 0.1) - penalized_log_likelihood(&down, &x, &y, 0.1)) / (2.0 * h);
        assert!((fd - g[k]).abs() < 1e-5 * (1.0 + fd.abs()), "coordinate {k}: {fd} vs {}", g[k]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn newton_never_lowers_the_likelihood(seed in any::<u64>(), n in 20usize..300) {
        let x = gaussian(n, 4, seed);
        let y = linear_labels(&x, seed);
        prop_assume!(y.iter().any(|l| l.is_positive()) && y.iter().any(|l| !l.is_positive()));
        let (model, trace) = logreg_fit_traced(&x, &y, 1e-6, 1e-8, 100).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} then {}", w[0], w[1]);
        }
        prop_assert!(model.beta.iter().all(|b| b.is_finite()));
    }
}

#[test]
fn null_signal_gives_flat_slopes() {
    let x = gaussian(20_000, 6, 4);
    let y = coin_labels(20_000, 4);
    let m = logreg_fit(&x, &y, 1e-6, 1e-8, 100).unwrap();
    assert!(m.converged);
    for b in &m.beta[1..] {
        assert!(b.abs() < 0.05, "slope {b}");
    }
}

// ---- random forest

fn forest_data(n: usize, seed: u64) -> (Matrix, Vec<BinaryLabel>) {
    let x = gaussian(n, 6, seed);
    let y = linear_labels(&x, seed);
    (x, y)
}

#[test]
fn forest_probability_is_the_vote_share() {
    let (x, y) = forest_data(300, 5);
    let params = ForestParams { n_trees: 37, ..Default::default() };
    let m = forest_fit(&x, &y, params, 3, &Serial).unwrap();
    assert_eq!(m.trees.len(), 37);
    let probe = gaussian(50, 6, 99);
    for row in probe.iter_rows() {
        let votes = m.trees.iter().filter(|t| t.vote(row).is_positive()).count();
        assert_eq!(forest_votes(&m, row), votes);
        assert_eq!(forest_prob(&m, row), votes as f64 / 37.0);
    }
    assert!(m.trees.iter().all(|t| t.is_well_formed()));
}

#[test]
fn unbootstrapped_trees_memorize_distinct_rows() {
    let (x, y) = forest_data(400, 6);
    let params = ForestParams { n_trees: 5, mtry: 6, min_node: 1, bootstrap: false };
    let m = forest_fit(&x, &y, params, 0, &Serial).unwrap();
    for (row, l) in x.iter_rows().zip(&y) {
        for t in &m.trees {
            assert_eq!(t.vote(row), *l);
        }
    }
}

#[test]
fn row_order_does_not_change_unbootstrapped_trees() {
    let (x, y) = forest_data(250, 7);
    let params = ForestParams { n_trees: 8, mtry: 6, min_node: 3, bootstrap: false };
    let perm: Vec<usize> = (0..250).map(|i| (i * 101 + 17) % 250).collect();
    let xp = x.select_rows(&perm);
    let yp: Vec<BinaryLabel> = perm.iter().map(|&i| y[i]).collect();
    let a = forest_fit(&x, &y, params, 2, &Serial).unwrap();
    let b = forest_fit(&xp, &yp, params, 2, &Serial).unwrap();
    let probe = gaussian(200, 6, 98);
    for row in probe.iter_rows() {
        assert_eq!(forest_prob(&a, row), forest_prob(&b, row));
    }
}

#[test]
fn forests_are_deterministic_across_executors() {
    let (x, y) = forest_data(500, 8);
    let params = ForestParams { n_trees: 40, ..Default::default() };
    let serial = forest_fit(&x, &y, params, 11, &Serial).unwrap();
    assert_eq!(serial, forest_fit(&x, &y, params, 11, &Serial).unwrap());
    assert_eq!(serial, forest_fit(&x, &y, params, 11, &Threads(4)).unwrap());
    assert_ne!(serial, forest_fit(&x, &y, params, 12, &Serial).unwrap());
}

// ---- support vector machine

fn opts(working_set: WorkingSet, record_objective: bool) -> SolverOptions {
    SolverOptions {
        tol: 1e-3,
        working_set,
        max_iter: 1_000_000,
        cache_bytes: 1 << 20,
        record_objective,
    }
}

fn signs(y: &[BinaryLabel]) -> Vec<f64> {
    y.iter().map(|l| l.sign()).collect()
}

fn decision(p: &Problem<'_>, s: &smo::Solution, q: &[f64]) -> f64 {
    (0..p.y.len())
        .map(|i| p.y[i] * s.alpha[i] * rbf_kernel(p.x.row(i), q, p.kernel_alpha))
        .sum::<f64>()
        - s.rho
}

#[test]
fn fifty_random_problems_meet_the_kkt_tolerance() {
    let mut r = rng::derive(77, 4, 0);
    for case in 0..50u64 {
        let n = r.random_range(6..60);
        let d = r.random_range(1..6);
        let x = gaussian(n, d, 1000 + case);
        let mut y = coin_labels(n, 2000 + case);
        y[0] = BinaryLabel::Positive;
        y[1] = BinaryLabel::Negative;
        let s = signs(&y);
        let cost = [0.1, 1.0, 10.0][case as usize % 3];
        let upper = vec![cost; n];
        let p = Problem { x: &x, y: &s, upper: &upper, kernel_alpha: r.random_range(0.05..2.0) };
        for ws in [WorkingSet::MaxViolating, WorkingSet::SecondOrder] {
            let sol = smo::solve(&p, &opts(ws, true));
            assert!(sol.converged, "case {case} {ws:?}");
            let gap = smo::kkt_gap(&p, &sol.alpha);
            assert!(gap < 1e-3, "case {case} {ws:?}: gap {gap}");
            let balance: f64 = sol.alpha.iter().zip(&s).map(|(a, y)| a * y).sum();
            assert!(balance.abs() < 1e-9);
            assert!(sol.alpha.iter().all(|&a| (0.0..=cost).contains(&a)));
            for w in sol.objective.windows(2) {
                assert!(w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()), "case {case} {ws:?}: {} then {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn two_points_have_the_closed_form_solution() {
    let x = Matrix::from_rows(2, [[0.0, 0.0], [1.0, 2.0]]).unwrap();
    let s = [1.0, -1.0];
    let alpha_k = 0.3;
    let k = rbf_kernel(x.row(0), x.row(1), alpha_k);
    for cost in [0.05, 0.5, 1.0, 100.0] {
        let upper = [cost; 2];
        let p = Problem { x: &x, y: &s, upper: &upper, kernel_alpha: alpha_k };
        let sol = smo::solve(&p, &opts(WorkingSet::SecondOrder, false));
        let want = cost.min(1.0 / (1.0 - k));
        for a in &sol.alpha {
            assert!((a - want).abs() < 1e-12, "cost {cost}: {a} vs {want}");
        }
        assert!(sol.rho.abs() < 1e-12);
    }
}

#[test]
fn vanishing_cost_puts_every_point_at_the_bound() {
    let x = gaussian(40, 3, 9);
    let y: Vec<BinaryLabel> = (0..40).map(|i| BinaryLabel::from_bool(i % 2 == 0)).collect();
    let s = signs(&y);
    let cost = 1e-6;
    let upper = vec![cost; 40];
    let p = Problem { x: &x, y: &s, upper: &upper, kernel_alpha: 0.5 };
    let sol = smo::solve(&p, &opts(WorkingSet::SecondOrder, false));
    assert!(sol.alpha.iter().all(|&a| a == cost));
    for row in x.iter_rows() {
        assert!(decision(&p, &sol, row).abs() < 40.0 * cost + 1.0);
    }
}

#[test]
fn radial_gram_matrices_are_positive_semidefinite() {
    for seed in 0..10 {
        let x = gaussian(30, 4, 500 + seed);
        let mut k = Matrix::zeros(30, 30);
        for i in 0..30 {
            for j in 0..30 {
                k.set(i, j, rbf_kernel(x.row(i), x.row(j), 0.2 + seed as f64 * 0.1));
            }
        }
        let (values, _) = symmetric_eigen(&k);
        assert!(values.iter().all(|&v| v > -1e-10), "{values:?}");
    }
}

#[test]
fn duplicating_a_non_support_vector_changes_nothing() {
    let x = gaussian(60, 2, 12);
    let y = linear_labels(&x, 12);
    let s = signs(&y);
    let upper = vec![1.0; 60];
    let tight = SolverOptions { tol: 1e-9, ..opts(WorkingSet::SecondOrder, false) };
    let p = Problem { x: &x, y: &s, upper: &upper, kernel_alpha: 0.5 };
    let base = smo::solve(&p, &tight);
    let free = (0..60)
        .find(|&i| base.alpha[i] == 0.0 && s[i] * decision(&p, &base, x.row(i)) > 1.2)
        .expect("a point well outside the margin");

    let mut rows: Vec<usize> = (0..60).collect();
    rows.push(free);
    let x2 = x.select_rows(&rows);
    let s2: Vec<f64> = rows.iter().map(|&i| s[i]).collect();
    let upper2 = vec![1.0; 61];
    let p2 = Problem { x: &x2, y: &s2, upper: &upper2, kernel_alpha: 0.5 };
    let dup = smo::solve(&p2, &tight);
    assert_eq!(dup.alpha[60], 0.0);
    for q in gaussian(40, 2, 13).iter_rows() {
        let (a, b) = (decision(&p, &base, q), decision(&p2, &dup, q));
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn platt_on_uninformative_decisions_is_flat() {
    let d: Vec<f64> = gaussian(20_000, 1, 14).as_slice().to_vec();
    let y = coin_labels(20_000, 14);
    let platt = platt_fit(&d, &y, None).unwrap();
    assert!(platt.a <= 0.0);
    assert!(platt.a.abs() < 0.05, "slope {}", platt.a);
    for v in [-2.0, 0.0, 2.0] {
        assert!((platt.prob(v) - 0.5).abs() < 0.05);
    }
}
