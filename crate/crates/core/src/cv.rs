//! k-fold evaluation of the three classifiers.
//!
//! For every fold the investor index, the PCA basis and the balanced
//! training multiset are built from the training folds alone; the held-out
//! fold is only featurized and scored. All components see the same split,
//! so their out-of-fold probabilities can be fused sample by sample.

use alloc::string::String;
use alloc::vec::Vec;

use crate::domain::{BinaryLabel, CompanyRecord, LabelMapping};
use crate::error::{Error, Result};
use crate::eval::{self, threshold_label, AveragedMetrics, ConfusionCounts, MetricsReport};
use crate::exec::Executor;
use crate::features::{build_investor_index, feature_matrix};
use crate::forest::{self, ForestModel, ForestParams};
use crate::logreg::{self, LogisticModel};
use crate::matrix::Matrix;
use crate::pca::{self, PcaModel};
use crate::rng::{self, tag};
use crate::sampling::{self, FoldAssignment};
use crate::svm::{self, SvmModel, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticSpec {
    pub ridge: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticSpec {
    fn default() -> Self {
        LogisticSpec {
            ridge: logreg::DEFAULT_RIDGE,
            tol: logreg::DEFAULT_TOL,
            max_iter: logreg::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmSpec {
    pub params: SvmParams,
    /// Principal components kept; the SVM sees only these.
    pub pca_k: usize,
    pub standardize: bool,
}

impl Default for SvmSpec {
    fn default() -> Self {
        SvmSpec {
            params: SvmParams::default(),
            pca_k: pca::DEFAULT_COMPONENTS,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierSpec {
    Logistic(LogisticSpec),
    Forest(ForestParams),
    Svm(SvmSpec),
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Logistic(_) => "lr",
            ClassifierSpec::Forest(_) => "rf",
            ClassifierSpec::Svm(_) => "svm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub mapping: LabelMapping,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 10,
            seed: 0,
            mapping: LabelMapping::default(),
        }
    }
}

/// Out-of-fold scores of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScores {
    pub fold: usize,
    /// Record indices of the held-out fold, ascending.
    pub test: Vec<usize>,
    /// One probability vector per classifier spec, aligned with `test`.
    pub probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FoldOutcome {
    Scored(FoldScores),
    Skipped { fold: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRun {
    pub folds: FoldAssignment,
    pub labels: Vec<BinaryLabel>,
    pub outcomes: Vec<FoldOutcome>,
    pub specs: Vec<ClassifierSpec>,
}

impl CvRun {
    pub fn scored(&self) -> impl Iterator<Item = &FoldScores> + '_ {
        self.outcomes.iter().filter_map(|o| match o {
            FoldOutcome::Scored(s) => Some(s),
            FoldOutcome::Skipped { .. } => None,
        })
    }

    /// Out-of-fold probability of every record for component `c`, `None`
    /// for records in skipped folds.
    pub fn oof_probs(&self, c: usize) -> Vec<Option<f64>> {
        let mut out = alloc::vec![None; self.labels.len()];
        for s in self.scored() {
            for (&i, &p) in s.test.iter().zip(&s.probs[c]) {
                out[i] = Some(p);
            }
        }
        out
    }
}

/// A fitted component, ready to score raw feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Logistic(LogisticModel),
    Forest(ForestModel),
    /// The SVM works on the first `k` principal components.
    Svm { pca: PcaModel, k: usize, model: SvmModel },
}

impl Fitted {
    pub fn name(&self) -> &'static str {
        match self {
            Fitted::Logistic(_) => "lr",
            Fitted::Forest(_) => "rf",
            Fitted::Svm { .. } => "svm",
        }
    }

    pub fn prob(&self, x: &[f64]) -> f64 {
        match self {
            Fitted::Logistic(m) => logreg::logit_prob(m, x),
            Fitted::Forest(m) => forest::forest_prob(m, x),
            Fitted::Svm { pca, k, model } => {
                let mut z = alloc::vec![0.0; *k];
                pca.project_row(x, *k, &mut z);
                svm::svm_prob(model, &z)
            }
        }
    }

    pub fn probs(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.prob(r)).collect()
    }
}

/// Fits `spec` on the rows `balanced` of `x_train` (indices may repeat).
/// The SVM's principal components come from all of `x_train`. Random
/// streams are keyed by `seed` and `stream`.
pub fn fit<E: Executor>(
    spec: &ClassifierSpec,
    x_train: &Matrix,
    y_train: &[BinaryLabel],
    balanced: &[usize],
    seed: u64,
    stream: u64,
    exec: &E,
) -> Result<Fitted> {
    let y_bal: Vec<BinaryLabel> = balanced.iter().map(|&i| y_train[i]).collect();
    Ok(match spec {
        ClassifierSpec::Logistic(s) => Fitted::Logistic(logreg::logreg_fit(
            &x_train.select_rows(balanced),
            &y_bal,
            s.ridge,
            s.tol,
            s.max_iter,
        )?),
        ClassifierSpec::Forest(params) => Fitted::Forest(forest::forest_fit(
            &x_train.select_rows(balanced),
            &y_bal,
            *params,
            rng::child_seed(seed, tag::FOREST, stream),
            exec,
        )?),
        ClassifierSpec::Svm(s) => {
            let pca_model = pca::pca_fit(x_train, s.standardize)?;
            let z = pca::pca_transform(&pca_model, &x_train.select_rows(balanced), s.pca_k)?;
            let (zu, yu, w) = svm::collapse_duplicates(&z, &y_bal);
            let model = svm::svm_fit(
                &zu,
                &yu,
                Some(&w),
                &s.params,
                rng::child_seed(seed, tag::SVM, stream),
            )?;
            Fitted::Svm {
                pca: pca_model,
                k: s.pca_k,
                model,
            }
        }
    })
}

/// Fits every spec on the training part of `fold` and scores its test part.
pub fn run_fold<E: Executor>(
    records: &[CompanyRecord],
    labels: &[BinaryLabel],
    folds: &FoldAssignment,
    fold: usize,
    specs: &[ClassifierSpec],
    seed: u64,
    exec: &E,
) -> Result<FoldScores> {
    let train = folds.train_indices(fold);
    let test = folds.test_indices(fold);
    let index = build_investor_index(train.iter().map(|&i| &records[i]));
    let x_train = feature_matrix(train.iter().map(|&i| &records[i]), &index);
    let x_test = feature_matrix(test.iter().map(|&i| &records[i]), &index);
    let y_train: Vec<BinaryLabel> = train.iter().map(|&i| labels[i]).collect();
    let local: Vec<usize> = (0..train.len()).collect();
    let balanced = sampling::balance(
        &local,
        &y_train,
        rng::child_seed(seed, tag::BALANCE, fold as u64),
    )?;

    let mut probs = Vec::with_capacity(specs.len());
    for spec in specs {
        let m = fit(spec, &x_train, &y_train, &balanced, seed, fold as u64, exec)?;
        probs.push(m.probs(&x_test));
    }
    Ok(FoldScores { fold, test, probs })
}

/// Out-of-fold scores for every spec over a `k`-fold split of `records`.
/// Folds whose training part holds a single class are skipped.
pub fn out_of_fold<E: Executor>(
    records: &[CompanyRecord],
    specs: &[ClassifierSpec],
    cfg: &CvConfig,
    exec: &E,
) -> Result<CvRun> {
    let labels: Vec<BinaryLabel> = records.iter().map(|r| r.label(&cfg.mapping)).collect();
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClass);
    }
    let folds = sampling::kfold(records.len(), cfg.k, rng::child_seed(cfg.seed, tag::KFOLD, 0))?;
    let outcomes = exec.map(cfg.k, |f| {
        match run_fold(records, &labels, &folds, f, specs, cfg.seed, exec) {
            Ok(s) => Ok(FoldOutcome::Scored(s)),
            Err(Error::SingleClass) => Ok(FoldOutcome::Skipped {
                fold: f,
                reason: "training folds hold a single class".into(),
            }),
            Err(e) => Err(e),
        }
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    if outcomes.iter().all(|o| matches!(o, FoldOutcome::Skipped { .. })) {
        return Err(Error::AllFoldsSkipped);
    }
    Ok(CvRun {
        folds,
        labels,
        outcomes,
        specs: specs.to_vec(),
    })
}

/// How fold results are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Unweighted mean of the defined per-fold values.
    #[default]
    MeanOfFolds,
    /// Metrics of the summed confusion counts.
    Pooled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub averaged: AveragedMetrics,
    /// Per fold, `None` when the fold was skipped.
    pub per_fold: Vec<Option<MetricsReport>>,
    pub confusion: Vec<Option<ConfusionCounts>>,
}

/// Summarizes thresholded predictions per fold. `predict` maps a record
/// index and its position within the fold to a label; `keep` filters the
/// records counted (e.g. one sector).
pub fn summarize_folds<P, K>(run: &CvRun, aggregation: Aggregation, predict: P, keep: K) -> CvReport
where
    P: Fn(&FoldScores, usize) -> BinaryLabel,
    K: Fn(usize) -> bool,
{
    let mut per_fold = alloc::vec![None; run.outcomes.len()];
    let mut confusion = alloc::vec![None; run.outcomes.len()];
    for s in run.scored() {
        let mut c = ConfusionCounts::default();
        for (pos, &i) in s.test.iter().enumerate() {
            if keep(i) {
                c.record(run.labels[i], predict(s, pos));
            }
        }
        if c.total() > 0 {
            per_fold[s.fold] = Some(eval::metrics(&c));
            confusion[s.fold] = Some(c);
        }
    }
    let averaged = match aggregation {
        Aggregation::MeanOfFolds => {
            let reports: Vec<MetricsReport> = per_fold.iter().flatten().copied().collect();
            eval::average(&reports)
        }
        Aggregation::Pooled => {
            let total = confusion
                .iter()
                .flatten()
                .fold(ConfusionCounts::default(), |a, c| a.merge(c));
            let reports = if total.total() > 0 {
                alloc::vec![eval::metrics(&total)]
            } else {
                Vec::new()
            };
            eval::average(&reports)
        }
    };
    CvReport {
        averaged,
        per_fold,
        confusion,
    }
}

/// k-fold metrics of a single classifier thresholded at `gamma`.
pub fn cross_validate<E: Executor>(
    records: &[CompanyRecord],
    spec: ClassifierSpec,
    gamma: f64,
    cfg: &CvConfig,
    exec: &E,
) -> Result<CvReport> {
    let run = out_of_fold(records, &[spec], cfg, exec)?;
    Ok(summarize_folds(
        &run,
        Aggregation::MeanOfFolds,
        |s, pos| threshold_label(s.probs[0][pos], gamma),
        |_| true,
    ))
}
