//! The full pipeline: load or generate records, cross-validate the three
//! components, pick thresholds, fuse, and write the report files.

use std::path::{Path, PathBuf};

use pexit_core::cv::{self, ClassifierSpec, CvConfig, CvRun, LogisticSpec, SvmSpec};
use pexit_core::domain::censor_filter;
use pexit_core::eval::RocCurve;
use pexit_core::exec::Executor;
use pexit_core::features::{build_investor_index, feature_matrix};
use pexit_core::fusion::{FusionMode, FusionReport, Gammas};
use pexit_core::pca::{self, PcaModel};
use pexit_core::summary::{summarize, ExitSummary};
use pexit_core::svm::{self, SvmParams, TuneConfig, TuneResult};
use pexit_core::synth::generate_synthetic;
use pexit_core::{BinaryLabel, CompanyRecord, LabelMapping, Matrix};

use crate::config::{ini_bytes, ExperimentConfig, Source};
use crate::error::{Error, Result};
use crate::records::{load_csv, RowDiagnostic};
use crate::report::{self, COMPONENTS};
use crate::tables::{self, MetricsRow, PredictionRow, Predictions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<CompanyRecord>,
    pub rejected: Vec<RowDiagnostic>,
}

/// Records named by the config's source, after the first-round window and
/// sector filters.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let (mut records, rejected) = match &cfg.source {
        Some(Source::Csv(path)) => {
            let loaded = load_csv(path)?;
            (loaded.records, loaded.rejected)
        }
        Some(Source::Synthetic(s)) => (generate_synthetic(s)?, Vec::new()),
        None => return Err(Error::config("no input records configured")),
    };
    if let Some((lo, hi)) = cfg.first_round {
        records = censor_filter(&records, lo, hi);
    }
    if let Some(s) = cfg.sector {
        records.retain(|r| r.sector == s);
    }
    Ok(Dataset { records, rejected })
}

pub fn label_mapping(cfg: &ExperimentConfig) -> LabelMapping {
    LabelMapping::with_lbo(cfg.lbo)
}

/// Component specs in `lr, rf, svm` order.
pub fn specs(cfg: &ExperimentConfig, svm_params: SvmParams) -> [ClassifierSpec; 3] {
    [
        ClassifierSpec::Logistic(LogisticSpec::default()),
        ClassifierSpec::Forest(cfg.forest),
        ClassifierSpec::Svm(SvmSpec {
            params: svm_params,
            pca_k: cfg.pca_k,
            standardize: true,
        }),
    ]
}

pub fn svm_params(cfg: &ExperimentConfig) -> SvmParams {
    SvmParams {
        cost: cfg.cost,
        kernel_alpha: cfg.kernel_alpha,
        ..SvmParams::default()
    }
}

/// Features of all `records` against an index built from all of them.
/// Used only for descriptive output and tuning, never for scoring.
pub fn full_features(records: &[CompanyRecord]) -> Matrix {
    let index = build_investor_index(records);
    feature_matrix(records, &index)
}

/// Tunes cost and kernel width on the reduced features of all records.
pub fn tune(
    records: &[CompanyRecord],
    labels: &[BinaryLabel],
    cfg: &ExperimentConfig,
    exec: &impl Executor,
) -> Result<TuneResult> {
    let x = full_features(records);
    let model = pca::pca_fit(&x, true)?;
    let z = pca::pca_transform(&model, &x, cfg.pca_k)?;
    let mut tc = TuneConfig {
        n_sessions: cfg.tune_sessions,
        ..TuneConfig::default()
    };
    tc.session_size = tc.session_size.min(z.rows());
    Ok(svm::svm_tune(&z, labels, &tc, cfg.seed, exec)?)
}

pub fn predictions(records: &[CompanyRecord], run: &CvRun) -> Predictions {
    let mut rows: Vec<Option<PredictionRow>> = vec![None; records.len()];
    for s in run.scored() {
        for (pos, &i) in s.test.iter().enumerate() {
            rows[i] = Some(PredictionRow {
                company_id: records[i].company_id.clone(),
                sector: records[i].sector,
                fold: Some(s.fold),
                truth: run.labels[i],
                probs: s.probs.iter().map(|p| p[pos]).collect(),
            });
        }
    }
    Predictions {
        components: run.specs.iter().map(|s| s.name().to_string()).collect(),
        rows: rows.into_iter().flatten().collect(),
    }
}

/// Everything a run produces, before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub config: ExperimentConfig,
    pub records: usize,
    pub rejected: Vec<RowDiagnostic>,
    pub summary: ExitSummary,
    pub predictions: Predictions,
    pub gammas: Gammas,
    pub rocs: [RocCurve; 3],
    pub metrics: [Vec<MetricsRow>; 3],
    pub fused: Vec<MetricsRow>,
    pub fusion: FusionReport,
    pub pca: PcaModel,
    pub tune: Option<TuneResult>,
}

pub fn run_experiment(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Outcome> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    let records = &data.records;
    let mapping = label_mapping(cfg);
    let labels: Vec<BinaryLabel> = records.iter().map(|r| r.label(&mapping)).collect();
    if records.len() < cfg.folds {
        return Err(Error::config(format!(
            "{} records cannot be split into {} folds",
            records.len(),
            cfg.folds
        )));
    }

    let tuned = if cfg.tune {
        Some(tune(records, &labels, cfg, exec)?)
    } else {
        None
    };
    let mut params = svm_params(cfg);
    if let Some(t) = &tuned {
        params.cost = t.median_cost;
        params.kernel_alpha = t.median_alpha;
    }
    let cv_cfg = CvConfig {
        k: cfg.folds,
        seed: cfg.seed,
        mapping,
    };
    let run = cv::out_of_fold(records, &specs(cfg, params), &cv_cfg, exec)?;
    let pred = predictions(records, &run);
    let cols = [0, 1, 2];
    let gammas = report::resolve_gammas(&cfg.gamma, &pred, cols)?;
    let g = [gammas.lr, gammas.rf, gammas.svm];
    let rocs = [
        report::component_roc(&pred, 0)?,
        report::component_roc(&pred, 1)?,
        report::component_roc(&pred, 2)?,
    ];
    let metrics = [0, 1, 2].map(|c| report::component_metrics(&pred, c, g[c], cfg.aggregation));
    let fused = report::fused_metrics(&pred, cols, gammas, cfg.fusion, cfg.aggregation);
    let fusion = report::fusion_report(&pred, cols, gammas, cfg.agreement)?;
    let pca = pca::pca_fit(&full_features(records), true)?;

    let mut config = cfg.clone();
    if let Some(Source::Csv(p)) = &mut config.source {
        if let Ok(abs) = std::fs::canonicalize(&*p) {
            *p = abs;
        }
    }
    Ok(Outcome {
        config,
        records: records.len(),
        rejected: data.rejected,
        summary: summarize(records),
        predictions: pred,
        gammas,
        rocs,
        metrics,
        fused,
        fusion,
        pca,
        tune: tuned,
    })
}

impl Outcome {
    /// Metrics of the fused labels under `mode`, from the same predictions.
    pub fn fused_with(&self, mode: FusionMode) -> Vec<MetricsRow> {
        report::fused_metrics(&self.predictions, [0, 1, 2], self.gammas, mode, self.config.aggregation)
    }

    /// Output files as `(file name, contents)`, in a fixed order.
    pub fn artifacts(&self) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        for (c, name) in COMPONENTS.iter().enumerate() {
            out.push((
                format!("metrics_{name}.csv"),
                tables::table_bytes(&tables::METRICS_HEADER, &tables::metrics_rows(&self.metrics[c])),
            ));
        }
        out.push((
            "metrics_fused.csv".into(),
            tables::table_bytes(&tables::METRICS_HEADER, &tables::metrics_rows(&self.fused)),
        ));
        for (c, name) in COMPONENTS.iter().enumerate() {
            out.push((
                format!("roc_{name}.csv"),
                tables::table_bytes(&tables::ROC_HEADER, &tables::roc_rows(&self.rocs[c])),
            ));
        }
        let cum = pca::cumulative_variance(&self.pca);
        out.push((
            "cumvar.csv".into(),
            tables::table_bytes(&tables::CUMVAR_HEADER, &tables::cumvar_rows(&self.pca.eigenvalues, &cum)),
        ));
        out.push((
            "fusion.csv".into(),
            tables::table_bytes(&tables::FUSION_HEADER, &tables::fusion_rows(&self.fusion)),
        ));
        out.push((
            "predictions.csv".into(),
            tables::table_bytes(&self.predictions.header(), &self.predictions.table_rows()),
        ));
        let (h, rows) = tables::summary_rows(&self.summary);
        out.push(("summary.csv".into(), tables::table_bytes(&h, &rows)));
        if let Some(t) = &self.tune {
            out.push((
                "tune.csv".into(),
                tables::table_bytes(&tables::TUNE_HEADER, &tables::tune_rows(&t.sessions)),
            ));
        }
        out.push(("manifest.ini".into(), self.manifest()));
        out
    }

    /// The effective config plus run facts; loadable with `--config`.
    pub fn manifest(&self) -> Vec<u8> {
        let mut ini = self.config.to_ini();
        ini.with_section(Some("manifest"))
            .set("version", VERSION)
            .set("records", self.records.to_string())
            .set("rejected", self.rejected.len().to_string())
            .set("gamma_lr", self.gammas.lr.to_string())
            .set("gamma_rf", self.gammas.rf.to_string())
            .set("gamma_svm", self.gammas.svm.to_string());
        if let Some(t) = &self.tune {
            ini.with_section(Some("manifest"))
                .set("tuned_cost", t.median_cost.to_string())
                .set("tuned_alpha", t.median_alpha.to_string());
        }
        ini_bytes(&ini)
    }

    /// Writes every artifact into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, bytes) in self.artifacts() {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}
