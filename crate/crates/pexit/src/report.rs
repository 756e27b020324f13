//! Metrics, ROC curves and voting statistics computed from a prediction
//! table. The full pipeline and the file-based subcommands both go through
//! these functions, so a table written by one and read by the other gives
//! the same reports.

use std::collections::BTreeMap;

use pexit_core::cv::Aggregation;
use pexit_core::eval::{self, threshold_label, ConfusionCounts, MetricsReport, RocCurve};
use pexit_core::fusion::{self, AgreeConditioning, FusionMode, FusionReport, Gammas, TriplePrediction};
use pexit_core::BinaryLabel;

use crate::config::GammaChoice;
use crate::error::{Error, Result};
use crate::tables::{MetricsRow, PredictionRow, Predictions};

pub const COMPONENTS: [&str; 3] = ["lr", "rf", "svm"];

/// Column positions of the three components in `pred`.
pub fn component_columns(pred: &Predictions) -> Result<[usize; 3]> {
    let mut cols = [0; 3];
    for (slot, name) in cols.iter_mut().zip(COMPONENTS) {
        *slot = pred
            .column(name)
            .ok_or_else(|| Error::config(format!("predictions lack a `{name}` column")))?;
    }
    Ok(cols)
}

fn averaged(per_fold: &[ConfusionCounts], aggregation: Aggregation) -> MetricsReport {
    let reports: Vec<MetricsReport> = match aggregation {
        Aggregation::MeanOfFolds => per_fold
            .iter()
            .filter(|c| c.total() > 0)
            .map(eval::metrics)
            .collect(),
        Aggregation::Pooled => {
            let total = per_fold
                .iter()
                .fold(ConfusionCounts::default(), |a, c| a.merge(c));
            if total.total() > 0 {
                vec![eval::metrics(&total)]
            } else {
                Vec::new()
            }
        }
    };
    eval::average(&reports).mean
}

/// One row per sector present in `pred`, ascending, then `all`. Within a
/// row, metrics are computed per fold and combined by `aggregation`.
pub fn metrics_table<F>(pred: &Predictions, label: F, aggregation: Aggregation, gamma: Option<f64>) -> Vec<MetricsRow>
where
    F: Fn(&PredictionRow) -> BinaryLabel,
{
    // confusion per (sector, fold); sector 0 collects everything
    let mut cells: BTreeMap<u8, BTreeMap<Option<usize>, ConfusionCounts>> = BTreeMap::new();
    for r in &pred.rows {
        let predicted = label(r);
        for s in [0, r.sector] {
            cells
                .entry(s)
                .or_default()
                .entry(r.fold)
                .or_default()
                .record(r.truth, predicted);
        }
    }
    let mut rows = Vec::new();
    let all = cells.remove(&0).unwrap_or_default();
    for (sector, folds) in &cells {
        let per_fold: Vec<ConfusionCounts> = folds.values().copied().collect();
        rows.push(MetricsRow {
            sector: sector.to_string(),
            report: averaged(&per_fold, aggregation),
            gamma,
        });
    }
    let per_fold: Vec<ConfusionCounts> = all.values().copied().collect();
    rows.push(MetricsRow {
        sector: "all".into(),
        report: averaged(&per_fold, aggregation),
        gamma,
    });
    rows
}

pub fn component_metrics(pred: &Predictions, col: usize, gamma: f64, aggregation: Aggregation) -> Vec<MetricsRow> {
    metrics_table(pred, |r| threshold_label(r.probs[col], gamma), aggregation, Some(gamma))
}

pub fn component_roc(pred: &Predictions, col: usize) -> Result<RocCurve> {
    let probs: Vec<f64> = pred.rows.iter().map(|r| r.probs[col]).collect();
    let truths: Vec<BinaryLabel> = pred.rows.iter().map(|r| r.truth).collect();
    Ok(eval::roc(&probs, &truths, &eval::default_gamma_grid())?)
}

pub fn resolve_gamma(choice: GammaChoice, pred: &Predictions, col: usize) -> Result<f64> {
    match choice {
        GammaChoice::Fixed(g) => Ok(g),
        GammaChoice::Knee => Ok(eval::knee(&component_roc(pred, col)?)?),
    }
}

pub fn resolve_gammas(choices: &[GammaChoice; 3], pred: &Predictions, cols: [usize; 3]) -> Result<Gammas> {
    Ok(Gammas {
        lr: resolve_gamma(choices[0], pred, cols[0])?,
        rf: resolve_gamma(choices[1], pred, cols[1])?,
        svm: resolve_gamma(choices[2], pred, cols[2])?,
    })
}

pub fn triples(pred: &Predictions, cols: [usize; 3], gammas: Gammas) -> Vec<TriplePrediction> {
    pred.rows
        .iter()
        .map(|r| TriplePrediction::new([r.probs[cols[0]], r.probs[cols[1]], r.probs[cols[2]]], gammas, r.truth))
        .collect()
}

pub fn fused_metrics(
    pred: &Predictions,
    cols: [usize; 3],
    gammas: Gammas,
    mode: FusionMode,
    aggregation: Aggregation,
) -> Vec<MetricsRow> {
    metrics_table(
        pred,
        |r| {
            TriplePrediction::new([r.probs[cols[0]], r.probs[cols[1]], r.probs[cols[2]]], gammas, r.truth)
                .fused(mode)
        },
        aggregation,
        None,
    )
}

pub fn fusion_report(
    pred: &Predictions,
    cols: [usize; 3],
    gammas: Gammas,
    conditioning: AgreeConditioning,
) -> Result<FusionReport> {
    Ok(fusion::voting_dynamics(&triples(pred, cols, gammas), conditioning)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sector: u8, fold: usize, truth: bool, p: f64) -> PredictionRow {
        PredictionRow {
            company_id: String::new(),
            sector,
            fold: Some(fold),
            truth: BinaryLabel::from_bool(truth),
            probs: vec![p],
        }
    }

    #[test]
    fn mean_of_folds_versus_pooled() {
        let pred = Predictions {
            components: vec!["lr".into()],
            rows: vec![
                // fold 0: 1 of 1 correct
                row(2, 0, true, 0.9),
                // fold 1: 1 of 3 correct
                row(2, 1, true, 0.1),
                row(5, 1, false, 0.8),
                row(5, 1, false, 0.2),
            ],
        };
        let mean = component_metrics(&pred, 0, 0.5, Aggregation::MeanOfFolds);
        assert_eq!(mean.iter().map(|r| r.sector.as_str()).collect::<Vec<_>>(), ["2", "5", "all"]);
        let all = mean[2].report;
        assert_eq!(all.accuracy, Some((1.0 + 1.0 / 3.0) / 2.0));
        let pooled = component_metrics(&pred, 0, 0.5, Aggregation::Pooled);
        assert_eq!(pooled[2].report.accuracy, Some(0.5));
        // sector 5 has no positives: recall+ undefined
        assert_eq!(mean[1].report.recl_pos, None);
        assert_eq!(mean[1].report.accuracy, Some(0.5));
        assert_eq!(mean[0].gamma, Some(0.5));
    }
}
