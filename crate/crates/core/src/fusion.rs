//! Majority and unanimity fusion of the three component labels, and the
//! statistics describing how the components vote together.

use alloc::vec::Vec;

use crate::domain::BinaryLabel;
use crate::error::{Error, Result};
use crate::eval::threshold_label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    #[default]
    Majority,
    Unanimity,
}

/// The label held by at least two of the three inputs.
pub fn fuse_majority(lr: BinaryLabel, rf: BinaryLabel, svm: BinaryLabel) -> BinaryLabel {
    let pos = [lr, rf, svm].iter().filter(|l| l.is_positive()).count();
    BinaryLabel::from_bool(pos >= 2)
}

/// Positive only when all three inputs are positive.
pub fn fuse_unanimity(lr: BinaryLabel, rf: BinaryLabel, svm: BinaryLabel) -> BinaryLabel {
    BinaryLabel::from_bool(lr.is_positive() && rf.is_positive() && svm.is_positive())
}

pub fn fuse(mode: FusionMode, lr: BinaryLabel, rf: BinaryLabel, svm: BinaryLabel) -> BinaryLabel {
    match mode {
        FusionMode::Majority => fuse_majority(lr, rf, svm),
        FusionMode::Unanimity => fuse_unanimity(lr, rf, svm),
    }
}

/// Per-component thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gammas {
    pub lr: f64,
    pub rf: f64,
    pub svm: f64,
}

impl Default for Gammas {
    fn default() -> Self {
        Gammas {
            lr: 0.5,
            rf: 0.5,
            svm: 0.5,
        }
    }
}

/// Component probabilities and labels for one sample, plus its true label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriplePrediction {
    pub lr_prob: f64,
    pub rf_prob: f64,
    pub svm_prob: f64,
    pub lr_label: BinaryLabel,
    pub rf_label: BinaryLabel,
    pub svm_label: BinaryLabel,
    pub truth: BinaryLabel,
}

impl TriplePrediction {
    /// Derives each label by thresholding its probability.
    pub fn new(probs: [f64; 3], gammas: Gammas, truth: BinaryLabel) -> Self {
        TriplePrediction {
            lr_prob: probs[0],
            rf_prob: probs[1],
            svm_prob: probs[2],
            lr_label: threshold_label(probs[0], gammas.lr),
            rf_label: threshold_label(probs[1], gammas.rf),
            svm_label: threshold_label(probs[2], gammas.svm),
            truth,
        }
    }

    /// Builds from explicit labels, checking them against the probabilities.
    pub fn from_parts(
        probs: [f64; 3],
        labels: [BinaryLabel; 3],
        gammas: Gammas,
        truth: BinaryLabel,
    ) -> Result<Self> {
        let t = Self::new(probs, gammas, truth);
        if t.labels() != labels {
            return Err(Error::param(
                "labels",
                "inconsistent with probabilities and thresholds",
            ));
        }
        Ok(t)
    }

    /// Labels for a fixture with no meaningful probabilities: each
    /// probability is set to 1 or 0 and thresholds are taken as 0.5.
    pub fn from_labels(lr: BinaryLabel, rf: BinaryLabel, svm: BinaryLabel, truth: BinaryLabel) -> Self {
        let p = |l: BinaryLabel| if l.is_positive() { 1.0 } else { 0.0 };
        Self::new([p(lr), p(rf), p(svm)], Gammas::default(), truth)
    }

    pub fn labels(&self) -> [BinaryLabel; 3] {
        [self.lr_label, self.rf_label, self.svm_label]
    }

    pub fn fused(&self, mode: FusionMode) -> BinaryLabel {
        fuse(mode, self.lr_label, self.rf_label, self.svm_label)
    }
}

/// How agreement-conditional accuracies are conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AgreeConditioning {
    /// TARI among unanimous-positive cases, TARNI among unanimous-negative.
    #[default]
    AgreedLabel,
    /// Both over all unanimous cases.
    AnyAgreement,
}

/// Voting statistics; `None` marks an empty conditioning set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FusionReport {
    /// Share of samples where all three labels coincide.
    pub ar: Option<f64>,
    pub tari: Option<f64>,
    pub tarni: Option<f64>,
    /// Accuracy of each component over the samples where it is the lone
    /// dissenter.
    pub tlr_min: Option<f64>,
    pub trf_min: Option<f64>,
    pub tsvm_min: Option<f64>,
    pub counts: FusionCounts,
}

/// Raw numerators and denominators behind a [`FusionReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FusionCounts {
    pub n: u64,
    pub agree: u64,
    pub agree_pos: u64,
    pub agree_pos_correct: u64,
    pub agree_neg: u64,
    pub agree_neg_correct: u64,
    /// Lone-dissent counts per component, in `[lr, rf, svm]` order.
    pub minority: [u64; 3],
    pub minority_correct: [u64; 3],
}

impl FusionReport {
    /// Values in the column order `ar, tari, tarni, trf_min, tlr_min, tsvm_min`.
    pub fn table_row(&self) -> [Option<f64>; 6] {
        [
            self.ar,
            self.tari,
            self.tarni,
            self.trf_min,
            self.tlr_min,
            self.tsvm_min,
        ]
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn tally(triples: &[TriplePrediction]) -> FusionCounts {
    let mut c = FusionCounts {
        n: triples.len() as u64,
        ..Default::default()
    };
    for t in triples {
        let l = t.labels();
        if l[0] == l[1] && l[1] == l[2] {
            c.agree += 1;
            let correct = l[0] == t.truth;
            if l[0].is_positive() {
                c.agree_pos += 1;
                c.agree_pos_correct += u64::from(correct);
            } else {
                c.agree_neg += 1;
                c.agree_neg_correct += u64::from(correct);
            }
        } else {
            // exactly one component differs from the other two
            let lone = if l[1] == l[2] {
                0
            } else if l[0] == l[2] {
                1
            } else {
                2
            };
            c.minority[lone] += 1;
            c.minority_correct[lone] += u64::from(l[lone] == t.truth);
        }
    }
    c
}

pub fn voting_dynamics(triples: &[TriplePrediction], conditioning: AgreeConditioning) -> Result<FusionReport> {
    if triples.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let c = tally(triples);
    let (tari, tarni) = match conditioning {
        AgreeConditioning::AgreedLabel => (
            ratio(c.agree_pos_correct, c.agree_pos),
            ratio(c.agree_neg_correct, c.agree_neg),
        ),
        AgreeConditioning::AnyAgreement => (
            ratio(c.agree_pos_correct, c.agree),
            ratio(c.agree_neg_correct, c.agree),
        ),
    };
    Ok(FusionReport {
        ar: ratio(c.agree, c.n),
        tari,
        tarni,
        tlr_min: ratio(c.minority_correct[0], c.minority[0]),
        trf_min: ratio(c.minority_correct[1], c.minority[1]),
        tsvm_min: ratio(c.minority_correct[2], c.minority[2]),
        counts: c,
    })
}

/// Fused labels for a batch.
pub fn fused_labels(triples: &[TriplePrediction], mode: FusionMode) -> Vec<BinaryLabel> {
    triples.iter().map(|t| t.fused(mode)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use BinaryLabel::{Negative as N, Positive as P};

    #[test]
    fn majority_examples() {
        assert_eq!(fuse_majority(P, P, N), P);
        assert_eq!(fuse_majority(P, N, N), N);
    }

    #[test]
    fn unanimity_examples() {
        assert_eq!(fuse_unanimity(P, P, P), P);
        assert_eq!(fuse_unanimity(P, P, N), N);
        assert_eq!(fuse_unanimity(N, N, N), N);
    }

    #[test]
    fn agree_ratio_of_four() {
        let t = [
            TriplePrediction::from_labels(P, P, P, P),
            TriplePrediction::from_labels(N, N, N, P),
            TriplePrediction::from_labels(N, N, N, N),
            TriplePrediction::from_labels(P, N, N, N),
        ];
        let r = voting_dynamics(&t, AgreeConditioning::AgreedLabel).unwrap();
        assert_eq!(r.ar, Some(0.75));
    }

    #[test]
    fn always_right_and_identical() {
        let t = [
            TriplePrediction::from_labels(P, P, P, P),
            TriplePrediction::from_labels(N, N, N, N),
        ];
        let r = voting_dynamics(&t, AgreeConditioning::AgreedLabel).unwrap();
        assert_eq!((r.ar, r.tari, r.tarni), (Some(1.0), Some(1.0), Some(1.0)));
        assert_eq!((r.tlr_min, r.trf_min, r.tsvm_min), (None, None, None));
    }

    #[test]
    fn inconsistent_labels_are_rejected() {
        let r = TriplePrediction::from_parts([0.7, 0.2, 0.6], [P, P, P], Gammas::default(), P);
        assert!(r.is_err());
        let ok = TriplePrediction::from_parts([0.7, 0.2, 0.6], [P, N, P], Gammas::default(), P);
        assert!(ok.is_ok());
    }

    #[test]
    fn empty_is_an_error() {
        assert!(voting_dynamics(&[], AgreeConditioning::AgreedLabel).is_err());
    }
}
