//! Confusion-based metrics, probability thresholding, ROC curves and
//! threshold selection.

use alloc::vec::Vec;

use crate::domain::BinaryLabel;
use crate::error::{Error, Result};

/// Positive iff `p` is strictly greater than `gamma`.
#[inline]
pub fn threshold_label(p: f64, gamma: f64) -> BinaryLabel {
    BinaryLabel::from_bool(p > gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, truth: BinaryLabel, predicted: BinaryLabel) {
        match (truth.is_positive(), predicted.is_positive()) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (BinaryLabel, BinaryLabel)>,
    {
        let mut c = ConfusionCounts::default();
        for (t, p) in pairs {
            c.record(t, p);
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&self, other: &ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }
}

/// The five indicators. `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    pub prec_pos: Option<f64>,
    pub recl_pos: Option<f64>,
    pub prec_neg: Option<f64>,
    pub recl_neg: Option<f64>,
    pub accuracy: Option<f64>,
}

impl MetricsReport {
    pub const NAMES: [&'static str; 5] = ["prec_pos", "recl_pos", "prec_neg", "recl_neg", "accuracy"];

    pub fn values(&self) -> [Option<f64>; 5] {
        [
            self.prec_pos,
            self.recl_pos,
            self.prec_neg,
            self.recl_neg,
            self.accuracy,
        ]
    }

    pub fn from_values(v: [Option<f64>; 5]) -> Self {
        MetricsReport {
            prec_pos: v[0],
            recl_pos: v[1],
            prec_neg: v[2],
            recl_neg: v[3],
            accuracy: v[4],
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(c: &ConfusionCounts) -> MetricsReport {
    MetricsReport {
        prec_pos: ratio(c.tp, c.tp + c.fp),
        recl_pos: ratio(c.tp, c.tp + c.fn_),
        prec_neg: ratio(c.tn, c.tn + c.fn_),
        recl_neg: ratio(c.tn, c.tn + c.fp),
        accuracy: ratio(c.tp + c.tn, c.total()),
    }
}

/// Mean of defined values per indicator across reports, with the number of
/// undefined values left out of each mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AveragedMetrics {
    pub mean: MetricsReport,
    pub excluded: [usize; 5],
    pub reports: usize,
}

pub fn average(reports: &[MetricsReport]) -> AveragedMetrics {
    let mut sums = [0.0; 5];
    let mut counts = [0usize; 5];
    for r in reports {
        for (k, v) in r.values().iter().enumerate() {
            if let Some(v) = v {
                sums[k] += v;
                counts[k] += 1;
            }
        }
    }
    let mut mean = [None; 5];
    let mut excluded = [0; 5];
    for k in 0..5 {
        if counts[k] > 0 {
            mean[k] = Some(sums[k] / counts[k] as f64);
        }
        excluded[k] = reports.len() - counts[k];
    }
    AveragedMetrics {
        mean: MetricsReport::from_values(mean),
        excluded,
        reports: reports.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub gamma: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// `0.05, 0.10, ..., 0.95`.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..20).map(|k| f64::from(k) / 20.0).collect()
}

/// False and true positive rates at each threshold of `grid`. A rate whose
/// class is absent from `truths` is reported as 0.
pub fn roc(probs: &[f64], truths: &[BinaryLabel], grid: &[f64]) -> Result<RocCurve> {
    if probs.len() != truths.len() {
        return Err(Error::Dimension {
            expected: probs.len(),
            got: truths.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::Empty("scores"));
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("gamma_grid", "must be nonempty and strictly increasing"));
    }
    let n_pos = truths.iter().filter(|t| t.is_positive()).count() as u64;
    let n_neg = truths.len() as u64 - n_pos;
    let points = grid
        .iter()
        .map(|&gamma| {
            let c = ConfusionCounts::from_pairs(
                truths
                    .iter()
                    .zip(probs)
                    .map(|(&t, &p)| (t, threshold_label(p, gamma))),
            );
            RocPoint {
                gamma,
                fpr: ratio(c.fp, n_neg).unwrap_or(0.0),
                tpr: ratio(c.tp, n_pos).unwrap_or(0.0),
            }
        })
        .collect();
    Ok(RocCurve { points })
}

/// Threshold maximizing Youden's `J = tpr - fpr`; the largest such `gamma`
/// on ties.
pub fn knee(curve: &RocCurve) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for p in &curve.points {
        let j = p.tpr - p.fpr;
        if best.is_none_or(|(bj, _)| j >= bj) {
            best = Some((j, p.gamma));
        }
    }
    best.map(|(_, g)| g).ok_or(Error::Empty("ROC curve"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use BinaryLabel::{Negative as N, Positive as P};

    #[test]
    fn strict_threshold() {
        assert_eq!(threshold_label(0.55, 0.5), P);
        assert_eq!(threshold_label(0.5, 0.5), N);
        assert_eq!(threshold_label(0.55, 0.8), N);
    }

    #[test]
    fn metrics_by_hand() {
        let m = metrics(&ConfusionCounts { tp: 3, fp: 1, tn: 4, fn_: 2 });
        assert_eq!(m.prec_pos, Some(0.75));
        assert_eq!(m.recl_pos, Some(0.6));
        assert_eq!(m.prec_neg, Some(4.0 / 6.0));
        assert_eq!(m.recl_neg, Some(0.8));
        assert_eq!(m.accuracy, Some(0.7));
    }

    #[test]
    fn perfect_and_degenerate() {
        let m = metrics(&ConfusionCounts { tp: 5, fp: 0, tn: 7, fn_: 0 });
        assert!(m.values().iter().all(|v| *v == Some(1.0)));
        let m = metrics(&ConfusionCounts { tp: 0, fp: 0, tn: 3, fn_: 2 });
        assert_eq!(m.prec_pos, None);
        assert_eq!(m.recl_pos, Some(0.0));
        assert_eq!(m.accuracy, Some(0.6));
    }

    #[test]
    fn averaging_skips_undefined() {
        let a = MetricsReport::from_values([Some(0.5), Some(1.0), None, Some(0.2), Some(0.4)]);
        let b = MetricsReport::from_values([Some(0.7), Some(0.0), None, Some(0.4), Some(0.6)]);
        let avg = average(&[a, b]);
        assert_eq!(avg.mean.prec_neg, None);
        assert_eq!(avg.excluded, [0, 0, 2, 0, 0]);
        assert!((avg.mean.prec_pos.unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn roc_of_perfect_scores() {
        let truths = [P, N, P, N];
        let probs = [1.0, 0.0, 1.0, 0.0];
        let c = roc(&probs, &truths, &default_gamma_grid()).unwrap();
        assert!(c.points.iter().all(|p| p.fpr == 0.0 && p.tpr == 1.0));
    }

    #[test]
    fn roc_of_constant_scores() {
        let truths = [P, N, N];
        let c = roc(&[0.5; 3], &truths, &default_gamma_grid()).unwrap();
        for p in &c.points {
            if p.gamma < 0.5 {
                assert_eq!((p.fpr, p.tpr), (1.0, 1.0));
            } else {
                assert_eq!((p.fpr, p.tpr), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn default_grid() {
        let g = default_gamma_grid();
        assert_eq!(g.len(), 19);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[2], 0.15);
        assert_eq!(g[18], 0.95);
    }

    #[test]
    fn knee_choices() {
        let c = RocCurve {
            points: vec![
                RocPoint { gamma: 0.5, fpr: 0.30, tpr: 0.70 },
                RocPoint { gamma: 0.55, fpr: 0.45, tpr: 0.80 },
            ],
        };
        assert_eq!(knee(&c).unwrap(), 0.5);
        let flat = RocCurve {
            points: (1..5)
                .map(|k| RocPoint { gamma: k as f64 / 10.0, fpr: 0.2, tpr: 0.6 })
                .collect(),
        };
        assert_eq!(knee(&flat).unwrap(), 0.4);
        let single = RocCurve {
            points: vec![RocPoint { gamma: 0.3, fpr: 0.9, tpr: 0.1 }],
        };
        assert_eq!(knee(&single).unwrap(), 0.3);
        assert!(knee(&RocCurve { points: vec![] }).is_err());
    }

    #[test]
    fn roc_input_errors() {
        assert!(roc(&[0.1], &[P, N], &[0.5]).is_err());
        assert!(roc(&[0.1], &[P], &[0.5, 0.4]).is_err());
        assert!(roc(&[], &[], &[0.5]).is_err());
    }
}
