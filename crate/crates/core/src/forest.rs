//! Random forest of Gini classification trees.
//!
//! Trees are grown on bootstrap samples, trying `mtry` randomly drawn
//! features at each node and taking the split with the lowest weighted Gini
//! impurity. Candidate thresholds are midpoints between adjacent distinct
//! values present in the node. A tree votes with the majority class of the
//! leaf a query reaches (ties vote negative); the forest probability is the
//! fraction of positive votes.
//!
//! Bootstrap repeats are carried as integer row weights rather than copied
//! rows. A split search only ever aggregates weights per distinct feature
//! value, so the grown tree does not depend on the order of training rows.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::domain::BinaryLabel;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::matrix::Matrix;
use crate::rng::{self, tag, Stream};

pub const DEFAULT_TREES: usize = 500;
/// `floor(sqrt(19))`.
pub const DEFAULT_MTRY: usize = 4;
pub const DEFAULT_MIN_NODE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go to the left child, which is
    /// the next node in preorder; the right child sits at index `right`.
    Split {
        feature: u32,
        threshold: f64,
        right: u32,
    },
    /// Weighted training counts reaching this leaf.
    Leaf { negative: u64, positive: u64 },
}

/// One tree as a preorder node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_for(&self, x: &[f64]) -> (u64, u64) {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    right,
                } => {
                    i = if x[feature as usize] <= threshold {
                        i + 1
                    } else {
                        right as usize
                    };
                }
                TreeNode::Leaf { negative, positive } => return (negative, positive),
            }
        }
    }

    pub fn vote(&self, x: &[f64]) -> BinaryLabel {
        let (neg, pos) = self.leaf_for(x);
        BinaryLabel::from_bool(pos > neg)
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> (usize, usize) {
            match nodes[i] {
                TreeNode::Leaf { .. } => (0, i + 1),
                TreeNode::Split { right, .. } => {
                    let (dl, _) = walk(nodes, i + 1);
                    let (dr, end) = walk(nodes, right as usize);
                    (1 + dl.max(dr), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }

    /// Checks the preorder layout: every split has a left child right after
    /// it and a right child after the left subtree, and leaves are nonempty.
    pub fn is_well_formed(&self) -> bool {
        fn walk(nodes: &[TreeNode], i: usize) -> Option<usize> {
            match *nodes.get(i)? {
                TreeNode::Leaf { negative, positive } => {
                    (negative + positive > 0).then_some(i + 1)
                }
                TreeNode::Split { right, .. } => {
                    let end = walk(nodes, i + 1)?;
                    if end != right as usize {
                        return None;
                    }
                    walk(nodes, end)
                }
            }
        }
        walk(&self.nodes, 0) == Some(self.nodes.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: usize,
    pub min_node: usize,
    /// Off only for testing: every tree then sees each row once.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: DEFAULT_TREES,
            mtry: DEFAULT_MTRY,
            min_node: DEFAULT_MIN_NODE,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
}

/// Feature values replaced by their rank among the distinct values of the
/// column, computed once per training matrix.
struct Ranked {
    n: usize,
    /// Column-major codes.
    codes: Vec<u32>,
    distinct: Vec<Vec<f64>>,
}

impl Ranked {
    fn new(x: &Matrix) -> Self {
        let (n, p) = (x.rows(), x.cols());
        let mut codes = vec![0u32; n * p];
        let mut distinct = Vec::with_capacity(p);
        let mut order: Vec<usize> = (0..n).collect();
        for j in 0..p {
            order.sort_unstable_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)));
            let mut vals: Vec<f64> = Vec::new();
            for &i in &order {
                let v = x.get(i, j);
                if vals.last() != Some(&v) {
                    vals.push(v);
                }
                codes[j * n + i] = (vals.len() - 1) as u32;
            }
            distinct.push(vals);
        }
        Ranked { n, codes, distinct }
    }

    #[inline]
    fn code(&self, row: usize, feature: usize) -> u32 {
        self.codes[feature * self.n + row]
    }
}

struct Scratch {
    pos: Vec<u64>,
    neg: Vec<u64>,
    keyed: Vec<(u32, u64, u64)>,
    features: Vec<usize>,
}

struct Split {
    feature: usize,
    code: u32,
    score: f64,
}

#[inline]
fn purity_score(pos: u64, neg: u64) -> f64 {
    let (p, q) = (pos as f64, neg as f64);
    (p * p + q * q) / (p + q)
}

fn best_split(
    ranked: &Ranked,
    y: &[BinaryLabel],
    w: &[u32],
    rows: &[usize],
    min_node: u64,
    mtry: usize,
    rng: &mut Stream,
    sc: &mut Scratch,
) -> Option<Split> {
    let p = ranked.distinct.len();
    // partial Fisher-Yates over the feature list
    sc.features.clear();
    sc.features.extend(0..p);
    for k in 0..mtry.min(p) {
        let j = rng.random_range(k..p);
        sc.features.swap(k, j);
    }
    let (mut tot_pos, mut tot_neg) = (0u64, 0u64);
    for &r in rows {
        if y[r].is_positive() {
            tot_pos += u64::from(w[r]);
        } else {
            tot_neg += u64::from(w[r]);
        }
    }
    let mut best: Option<Split> = None;
    for k in 0..mtry.min(p) {
        let f = sc.features[k];
        let n_distinct = ranked.distinct[f].len();
        sc.keyed.clear();
        if n_distinct <= rows.len() {
            sc.pos.clear();
            sc.pos.resize(n_distinct, 0);
            sc.neg.clear();
            sc.neg.resize(n_distinct, 0);
            for &r in rows {
                let c = ranked.code(r, f) as usize;
                if y[r].is_positive() {
                    sc.pos[c] += u64::from(w[r]);
                } else {
                    sc.neg[c] += u64::from(w[r]);
                }
            }
            for c in 0..n_distinct {
                if sc.pos[c] + sc.neg[c] > 0 {
                    sc.keyed.push((c as u32, sc.pos[c], sc.neg[c]));
                }
            }
        } else {
            for &r in rows {
                let wr = u64::from(w[r]);
                let (a, b) = if y[r].is_positive() { (wr, 0) } else { (0, wr) };
                sc.keyed.push((ranked.code(r, f), a, b));
            }
            sc.keyed.sort_unstable_by_key(|e| e.0);
            // merge runs of equal codes
            let mut out = 0;
            for i in 0..sc.keyed.len() {
                if out > 0 && sc.keyed[out - 1].0 == sc.keyed[i].0 {
                    sc.keyed[out - 1].1 += sc.keyed[i].1;
                    sc.keyed[out - 1].2 += sc.keyed[i].2;
                } else {
                    sc.keyed[out] = sc.keyed[i];
                    out += 1;
                }
            }
            sc.keyed.truncate(out);
        }
        let (mut lp, mut ln) = (0u64, 0u64);
        for i in 0..sc.keyed.len().saturating_sub(1) {
            lp += sc.keyed[i].1;
            ln += sc.keyed[i].2;
            let (rp, rn) = (tot_pos - lp, tot_neg - ln);
            if lp + ln < min_node || rp + rn < min_node {
                continue;
            }
            let s = purity_score(lp, ln) + purity_score(rp, rn);
            if best.as_ref().is_none_or(|b| s > b.score) {
                best = Some(Split {
                    feature: f,
                    code: sc.keyed[i].0,
                    score: s,
                });
            }
        }
    }
    best
}

fn grow(
    ranked: &Ranked,
    y: &[BinaryLabel],
    w: &[u32],
    mtry: usize,
    min_node: usize,
    rng: &mut Stream,
) -> Tree {
    let mut rows: Vec<usize> = (0..ranked.n).filter(|&i| w[i] > 0).collect();
    let mut nodes = Vec::new();
    let mut sc = Scratch {
        pos: Vec::new(),
        neg: Vec::new(),
        keyed: Vec::new(),
        features: Vec::new(),
    };
    let min_node = min_node.max(1) as u64;
    // (start, end, index of the split whose right child this is)
    let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(0, rows.len(), None)];
    while let Some((lo, hi, parent)) = stack.pop() {
        let here = nodes.len();
        if let Some(p) = parent {
            if let TreeNode::Split { right, .. } = &mut nodes[p] {
                *right = here as u32;
            }
        }
        let seg = &mut rows[lo..hi];
        let (mut pos, mut neg) = (0u64, 0u64);
        for &r in seg.iter() {
            if y[r].is_positive() {
                pos += u64::from(w[r]);
            } else {
                neg += u64::from(w[r]);
            }
        }
        let split = if pos == 0 || neg == 0 || pos + neg < 2 * min_node {
            None
        } else {
            best_split(ranked, y, w, seg, min_node, mtry, rng, &mut sc)
        };
        let Some(split) = split else {
            nodes.push(TreeNode::Leaf {
                negative: neg,
                positive: pos,
            });
            continue;
        };
        let vals = &ranked.distinct[split.feature];
        let next = vals[split.code as usize + 1..]
            .first()
            .copied()
            .expect("split below the largest value");
        let threshold = 0.5 * (vals[split.code as usize] + next);
        // partition: codes <= split.code first
        let mut mid = 0;
        for i in 0..seg.len() {
            if ranked.code(seg[i], split.feature) <= split.code {
                seg.swap(i, mid);
                mid += 1;
            }
        }
        nodes.push(TreeNode::Split {
            feature: split.feature as u32,
            threshold,
            right: 0,
        });
        stack.push((lo + mid, hi, Some(here)));
        stack.push((lo, lo + mid, None));
    }
    Tree { nodes }
}

/// Grows one tree on `x`/`y` with optional integer row weights
/// (multiplicities; zero drops a row).
pub fn tree_fit(
    x: &Matrix,
    y: &[BinaryLabel],
    weights: Option<&[u32]>,
    mtry: usize,
    min_node: usize,
    rng: &mut Stream,
) -> Result<Tree> {
    check_xy(x, y)?;
    check_mtry(mtry, x.cols())?;
    let ones;
    let w = match weights {
        Some(w) => {
            if w.len() != x.rows() {
                return Err(Error::Dimension {
                    expected: x.rows(),
                    got: w.len(),
                });
            }
            if w.iter().all(|&v| v == 0) {
                return Err(Error::Empty("tree weights are all zero"));
            }
            w
        }
        None => {
            ones = vec![1u32; x.rows()];
            &ones
        }
    };
    Ok(grow(&Ranked::new(x), y, w, mtry, min_node, rng))
}

fn check_xy(x: &Matrix, y: &[BinaryLabel]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::Empty("training rows"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn check_mtry(mtry: usize, p: usize) -> Result<()> {
    if mtry == 0 || mtry > p {
        return Err(Error::param(
            "mtry",
            alloc::format!("{mtry} not in 1..={p}"),
        ));
    }
    Ok(())
}

pub fn forest_fit<E: Executor>(
    x: &Matrix,
    y: &[BinaryLabel],
    params: ForestParams,
    seed: u64,
    exec: &E,
) -> Result<ForestModel> {
    check_xy(x, y)?;
    check_mtry(params.mtry, x.cols())?;
    if params.n_trees == 0 {
        return Err(Error::param("n_trees", "must be at least 1"));
    }
    let n_pos = y.iter().filter(|l| l.is_positive()).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::SingleClass);
    }
    let ranked = Ranked::new(x);
    let n = x.rows();
    let trees = exec.map(params.n_trees, |t| {
        let mut rng = rng::derive(seed, tag::FOREST, t as u64);
        let mut w = vec![0u32; n];
        if params.bootstrap {
            for _ in 0..n {
                w[rng.random_range(0..n)] += 1;
            }
        } else {
            w.iter_mut().for_each(|v| *v = 1);
        }
        grow(&ranked, y, &w, params.mtry, params.min_node, &mut rng)
    });
    Ok(ForestModel {
        trees,
        params,
        seed,
        n_features: x.cols(),
    })
}

/// Number of trees voting positive for `x`.
pub fn forest_votes(model: &ForestModel, x: &[f64]) -> usize {
    model
        .trees
        .iter()
        .filter(|t| t.vote(x).is_positive())
        .count()
}

/// Fraction of trees voting positive.
pub fn forest_prob(model: &ForestModel, x: &[f64]) -> f64 {
    forest_votes(model, x) as f64 / model.trees.len() as f64
}

/// Weighted Gini impurity `1 - sum p_k^2` of a (negative, positive) count pair.
pub fn gini(negative: u64, positive: u64) -> f64 {
    let n = (negative + positive) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (a, b) = (negative as f64 / n, positive as f64 / n);
    1.0 - a * a - b * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use BinaryLabel::{Negative as N, Positive as P};

    #[test]
    fn pure_input_is_a_single_leaf() {
        let x = Matrix::from_rows(2, [[0.0, 1.0], [2.0, 3.0], [4.0, 1.0]]).unwrap();
        let t = tree_fit(&x, &[P, P, P], None, 2, 1, &mut rng::derive(0, 0, 0)).unwrap();
        assert_eq!(t.nodes, vec![TreeNode::Leaf { negative: 0, positive: 3 }]);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn one_dimensional_separable() {
        let x = Matrix::from_rows(1, (-10..10).map(|i| [i as f64 + 0.5])).unwrap();
        let y: Vec<_> = (-10..10).map(|i| BinaryLabel::from_bool(i >= 0)).collect();
        let t = tree_fit(&x, &y, None, 1, 1, &mut rng::derive(0, 0, 0)).unwrap();
        assert_eq!(t.nodes.len(), 3);
        match t.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 0.0);
            }
            _ => panic!("root should split"),
        }
        for i in 0..20 {
            assert_eq!(t.vote(x.row(i)), y[i]);
        }
    }

    #[test]
    fn identical_rows_mixed_labels_stay_a_leaf() {
        let x = Matrix::from_rows(2, [[1.0, 1.0]; 4]).unwrap();
        let t = tree_fit(&x, &[P, N, P, N], None, 2, 1, &mut rng::derive(0, 0, 0)).unwrap();
        assert_eq!(t.nodes, vec![TreeNode::Leaf { negative: 2, positive: 2 }]);
        // tie votes negative
        assert_eq!(t.vote(&[1.0, 1.0]), N);
    }

    #[test]
    fn min_node_limits_leaf_size() {
        let x = Matrix::from_rows(1, (0..20).map(|i| [i as f64])).unwrap();
        let y: Vec<_> = (0..20).map(|i| BinaryLabel::from_bool(i % 2 == 0)).collect();
        let t = tree_fit(&x, &y, None, 1, 5, &mut rng::derive(0, 0, 0)).unwrap();
        assert!(t.is_well_formed());
        for n in &t.nodes {
            if let TreeNode::Leaf { negative, positive } = n {
                assert!(negative + positive >= 5);
            }
        }
    }

    #[test]
    fn forest_requires_two_classes() {
        let x = Matrix::from_rows(1, [[0.0], [1.0]]).unwrap();
        let r = forest_fit(&x, &[N, N], ForestParams::default().with_mtry(1), 0, &Serial);
        assert_eq!(r.unwrap_err(), Error::SingleClass);
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(5, 5), 0.5);
        assert_eq!(gini(0, 7), 0.0);
    }

    impl ForestParams {
        fn with_mtry(self, mtry: usize) -> Self {
            ForestParams { mtry, ..self }
        }
    }
}
