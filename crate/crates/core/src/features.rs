//! The 19-column company representation: six values per round for the first
//! three rounds plus the foundation year. Investor quality enters through an
//! [`InvestorIndex`] built from training companies only.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::domain::{CompanyRecord, MAX_ROUNDS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const N_FEATURES: usize = 19;
pub const PER_ROUND: usize = 6;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "lag_1",
    "vix_1",
    "n_investors_1",
    "top_rank_1",
    "mean_rank_1",
    "present_1",
    "lag_2",
    "vix_2",
    "n_investors_2",
    "top_rank_2",
    "mean_rank_2",
    "present_2",
    "lag_3",
    "vix_3",
    "n_investors_3",
    "top_rank_3",
    "mean_rank_3",
    "present_3",
    "foundation_year",
];

/// Offsets within a round's block.
pub mod slot {
    pub const LAG: usize = 0;
    pub const VIX: usize = 1;
    pub const N_INVESTORS: usize = 2;
    pub const TOP_RANK: usize = 3;
    pub const MEAN_RANK: usize = 4;
    pub const PRESENT: usize = 5;
}

pub const FOUNDATION_YEAR: usize = 18;

/// Column index of `slot` for 1-based `round`.
pub const fn column(round: usize, slot: usize) -> usize {
    (round - 1) * PER_ROUND + slot
}

/// Investor importance: the number of distinct training companies an
/// investor backed in rounds 1-3, divided by the largest such count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InvestorIndex {
    scores: BTreeMap<String, f64>,
    built_from: usize,
}

impl InvestorIndex {
    /// Score of `investor`, 0.0 when it never appeared in training.
    pub fn score(&self, investor: &str) -> f64 {
        self.scores.get(investor).copied().unwrap_or(0.0)
    }

    pub fn built_from(&self) -> usize {
        self.built_from
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.scores.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Rebuilds an index from stored scores. Scores must lie in `[0, 1]`.
    pub fn from_scores<I>(built_from: usize, scores: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let scores: BTreeMap<_, _> = scores.into_iter().collect();
        if scores.values().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::param("investor score", "outside [0, 1]"));
        }
        Ok(InvestorIndex { scores, built_from })
    }
}

pub fn build_investor_index<'a, I>(train: I) -> InvestorIndex
where
    I: IntoIterator<Item = &'a CompanyRecord>,
{
    let mut counts: BTreeMap<&'a str, u64> = BTreeMap::new();
    let mut built_from = 0;
    for rec in train {
        built_from += 1;
        let distinct: BTreeSet<&str> = rec
            .rounds
            .iter()
            .take(MAX_ROUNDS)
            .flat_map(|r| r.investor_ids.iter().map(String::as_str))
            .collect();
        for inv in distinct {
            *counts.entry(inv).or_insert(0) += 1;
        }
    }
    let max = counts.values().copied().max().unwrap_or(0);
    let scores = counts
        .into_iter()
        .map(|(k, c)| (String::from(k), c as f64 / max as f64))
        .collect();
    InvestorIndex { scores, built_from }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn round(&self, round: usize, slot: usize) -> f64 {
        self.0[column(round, slot)]
    }
}

pub fn featurize(record: &CompanyRecord, index: &InvestorIndex) -> FeatureVector {
    let mut v = [0.0; N_FEATURES];
    for (k, r) in record.rounds.iter().take(MAX_ROUNDS).enumerate() {
        let base = k * PER_ROUND;
        v[base + slot::LAG] = f64::from(r.year - record.foundation_year);
        v[base + slot::VIX] = r.vix;
        v[base + slot::N_INVESTORS] = r.investor_ids.len() as f64;
        if !r.investor_ids.is_empty() {
            let mut top = 0.0f64;
            let mut sum = 0.0;
            for inv in &r.investor_ids {
                let s = index.score(inv);
                top = top.max(s);
                sum += s;
            }
            v[base + slot::TOP_RANK] = top;
            v[base + slot::MEAN_RANK] = sum / r.investor_ids.len() as f64;
        }
        v[base + slot::PRESENT] = 1.0;
    }
    v[FOUNDATION_YEAR] = f64::from(record.foundation_year);
    FeatureVector(v)
}

/// Featurizes records into an `n x 19` matrix.
pub fn feature_matrix<'a, I>(records: I, index: &InvestorIndex) -> Matrix
where
    I: IntoIterator<Item = &'a CompanyRecord>,
{
    let rows: Vec<FeatureVector> = records.into_iter().map(|r| featurize(r, index)).collect();
    Matrix::from_rows(N_FEATURES, rows.iter().map(|f| f.0)).expect("fixed width")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ExitStatus, RoundRecord};
    use alloc::format;
    use alloc::vec;

    fn rec(id: &str, founded: i32, rounds: &[(i32, &[&str])]) -> CompanyRecord {
        CompanyRecord {
            company_id: id.into(),
            sector: 1,
            foundation_year: founded,
            rounds: rounds
                .iter()
                .map(|(y, inv)| RoundRecord {
                    year: *y,
                    investor_ids: inv.iter().map(|s| String::from(*s)).collect(),
                    vix: 20.0,
                })
                .collect(),
            exit: ExitStatus::Private,
            exit_year: None,
        }
    }

    #[test]
    fn single_investor_scores_one() {
        let idx = build_investor_index(&[rec("c", 2000, &[(2001, &["A"])])]);
        assert_eq!(idx.score("A"), 1.0);
        assert_eq!(idx.score("nobody"), 0.0);
        assert_eq!(idx.built_from(), 1);
    }

    #[test]
    fn deal_counts_are_max_normalized() {
        let mut recs = Vec::new();
        for i in 0..50 {
            let invs: &[&str] = if i < 10 { &["A", "B"] } else { &["A"] };
            recs.push(rec(&format!("c{i}"), 2000, &[(2001, invs)]));
        }
        let idx = build_investor_index(&recs);
        assert_eq!(idx.score("A"), 1.0);
        assert!((idx.score("B") - 0.2).abs() < 1e-15);
    }

    #[test]
    fn repeat_participation_in_one_company_counts_once() {
        let recs = [
            rec("a", 2000, &[(2001, &["A"]), (2002, &["A", "B"])]),
            rec("b", 2000, &[(2001, &["B"])]),
        ];
        let idx = build_investor_index(&recs);
        assert_eq!(idx.score("A"), 0.5);
        assert_eq!(idx.score("B"), 1.0);
    }

    #[test]
    fn no_rounds_anywhere_gives_empty_index() {
        let idx = build_investor_index(&[rec("a", 2000, &[(2001, &[])])]);
        assert!(idx.is_empty());
    }

    #[test]
    fn lag_and_absence_convention() {
        let idx = InvestorIndex::default();
        let f = featurize(&rec("a", 2000, &[(2002, &[]), (2005, &[])]), &idx);
        assert_eq!(f.round(1, slot::LAG), 2.0);
        assert_eq!(f.round(2, slot::LAG), 5.0);
        assert_eq!(f.round(2, slot::PRESENT), 1.0);
        for s in 0..PER_ROUND {
            assert_eq!(f.round(3, s), 0.0);
        }
        assert_eq!(f.0[FOUNDATION_YEAR], 2000.0);
    }

    #[test]
    fn rank_summaries() {
        let idx = InvestorIndex::from_scores(
            5,
            vec![(String::from("x"), 0.2), (String::from("y"), 0.6)],
        )
        .unwrap();
        let f = featurize(&rec("a", 2000, &[(2001, &["x", "y"])]), &idx);
        assert_eq!(f.round(1, slot::TOP_RANK), 0.6);
        assert!((f.round(1, slot::MEAN_RANK) - 0.4).abs() < 1e-15);
        assert_eq!(f.round(1, slot::N_INVESTORS), 2.0);
    }
}
