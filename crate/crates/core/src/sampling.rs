//! Class balancing and k-fold splitting.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::domain::BinaryLabel;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Balances a training split: every majority-class index is kept exactly
/// once, and the minority class is drawn with replacement until it reaches
/// the majority count. Positives count as the minority on a tie.
///
/// `labels` is indexed by the values in `train`. The output lists the kept
/// majority indices in input order, followed by the minority draws.
pub fn balance(train: &[usize], labels: &[BinaryLabel], seed: u64) -> Result<Vec<usize>> {
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        train.iter().partition(|&&i| labels[i].is_positive());
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let (minority, majority) = if pos.len() <= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let mut rng = rng::derive(seed, tag::BALANCE, 0);
    let mut out = Vec::with_capacity(2 * majority.len());
    out.extend_from_slice(&majority);
    for _ in 0..majority.len() {
        out.push(minority[rng.random_range(0..minority.len())]);
    }
    Ok(out)
}

/// Random partition of `0..n` into `k` folds whose sizes differ by at most
/// one. The first `n % k` folds hold the extra element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    /// Indices in `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    /// Indices outside `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = alloc::vec![0; self.k];
        for &f in &self.fold_of {
            s[f] += 1;
        }
        s
    }
}

pub fn kfold(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::param("k", "need at least 2 folds"));
    }
    if k > n {
        return Err(Error::param("k", alloc::format!("{k} folds for {n} records")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::derive(seed, tag::KFOLD, 0));
    let mut fold_of = alloc::vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    Ok(FoldAssignment { fold_of, k })
}
