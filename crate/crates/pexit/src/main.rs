use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pexit::config::{parse_fusion, parse_sector, ExperimentConfig, GammaChoice, Source};
use pexit::experiment::{self, full_features, label_mapping, load_dataset};
use pexit::models::ModelBundle;
use pexit::records::write_csv;
use pexit::report::{self, COMPONENTS};
use pexit::tables::{self, PredictionRow, Predictions};
use pexit::{Error, Pool, Result};
use pexit_core::cv::{self, ClassifierSpec};
use pexit_core::features::build_investor_index;
use pexit_core::rng::{self, tag};
use pexit_core::synth::{generate_synthetic, SyntheticConfig};
use pexit_core::{sampling, summary, BinaryLabel};

/// Private-equity exit prediction: three classifiers, cross-validation and
/// label fusion.
#[derive(Parser)]
#[command(name = "pexit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// INI config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Company records CSV
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Threshold for logistic regression: a number in (0, 1) or `knee`
    #[arg(long)]
    gamma_lr: Option<GammaChoice>,
    #[arg(long)]
    gamma_rf: Option<GammaChoice>,
    #[arg(long)]
    gamma_svm: Option<GammaChoice>,
    /// Principal components fed to the SVM
    #[arg(long)]
    pca_k: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long)]
    cost: Option<f64>,
    /// RBF kernel width
    #[arg(long)]
    alpha: Option<f64>,
    /// `majority` or `unanimity`
    #[arg(long, visible_alias = "mode")]
    fusion: Option<String>,
    /// Sector code 1..9 or `all`
    #[arg(long)]
    sector: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic records into <out>/records.csv
    Synth {
        /// Number of companies
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Export the feature matrix of the input records
    Features {
        #[command(flatten)]
        common: Common,
    },
    /// Fit one classifier on all input records and save it
    Train {
        /// lr, rf or svm
        #[arg(long)]
        classifier: String,
        #[command(flatten)]
        common: Common,
    },
    /// Out-of-fold predictions and metrics, or scores of a saved model
    Eval {
        /// Score the input with this model instead of cross-validating
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// ROC curves from a predictions file
    Roc {
        #[arg(long)]
        predictions: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Tune SVM cost and kernel width on repeated subsamples
    TuneSvm {
        /// Tuning sessions
        #[arg(long)]
        sessions: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Fused labels and voting statistics from a predictions file
    Fuse {
        #[arg(long)]
        predictions: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sector by exit-outcome counts of the input records
    Report {
        #[command(flatten)]
        common: Common,
    },
    /// The whole pipeline
    Run {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pexit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Config file (if any) with the flags applied on top.
fn build_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.folds {
        cfg.folds = v;
    }
    for (slot, flag) in cfg.gamma.iter_mut().zip([c.gamma_lr, c.gamma_rf, c.gamma_svm]) {
        if let Some(g) = flag {
            *slot = g;
        }
    }
    if let Some(v) = c.pca_k {
        cfg.pca_k = v;
    }
    if let Some(v) = c.trees {
        cfg.forest.n_trees = v;
    }
    if let Some(v) = c.mtry {
        cfg.forest.mtry = v;
    }
    if let Some(v) = c.cost {
        cfg.cost = v;
    }
    if let Some(v) = c.alpha {
        cfg.kernel_alpha = v;
    }
    if let Some(v) = &c.fusion {
        cfg.fusion = parse_fusion(v)?;
    }
    if let Some(v) = &c.sector {
        cfg.sector = parse_sector(v)?;
    }
    if let Some(v) = &c.out {
        cfg.out = v.clone();
    }
    if let Some(v) = c.threads {
        cfg.threads = v;
    }
    if let Some(p) = &c.input {
        cfg.source = Some(Source::Csv(p.clone()));
    }
    if cfg.source.is_none() {
        // fall back to what `synth` left in the output directory
        let synth = cfg.out.join(SYNTH_CONFIG);
        if synth.exists() {
            let generated = ExperimentConfig::load(&synth)?;
            if c.seed.is_none() && c.config.is_none() {
                cfg.seed = generated.seed;
            }
            cfg.source = generated.source;
        }
    }
    Ok(cfg)
}

const SYNTH_CONFIG: &str = "synth.ini";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn classifier_index(name: &str) -> Result<usize> {
    COMPONENTS
        .iter()
        .position(|c| *c == name)
        .ok_or_else(|| Error::Config(format!("classifier `{name}` is not lr, rf or svm")))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth { n, common } => {
            let mut cfg = build_config(&common)?;
            let mut sc = match cfg.source.take() {
                Some(Source::Synthetic(s)) => s,
                _ => SyntheticConfig::default(),
            };
            if let Some(n) = n {
                sc.n_companies = n;
            }
            if let Some(seed) = common.seed {
                sc.seed = seed;
            }
            sc.validate().map_err(|e| Error::Config(e.to_string()))?;
            let records = generate_synthetic(&sc)?;
            create_dir(&cfg.out)?;
            let path = cfg.out.join("records.csv");
            write_csv(&path, &records)?;
            let described = ExperimentConfig {
                seed: sc.seed,
                source: Some(Source::Synthetic(sc)),
                ..ExperimentConfig::default()
            };
            let ini_path = cfg.out.join(SYNTH_CONFIG);
            std::fs::write(&ini_path, pexit::config::ini_bytes(&described.to_ini()))
                .map_err(|e| Error::Io { path: ini_path, source: e })?;
            println!("wrote {} records to {}", records.len(), path.display());
            Ok(())
        }
        Command::Features { common } => {
            let cfg = build_config(&common)?;
            let data = load_dataset(&cfg)?;
            report_rejects(&data.rejected);
            let mapping = label_mapping(&cfg);
            let x = full_features(&data.records);
            let labels: Vec<BinaryLabel> = data.records.iter().map(|r| r.label(&mapping)).collect();
            create_dir(&cfg.out)?;
            let path = cfg.out.join("features.csv");
            tables::write_features(&path, &x, &labels)?;
            println!("wrote {} feature rows to {}", x.rows(), path.display());
            Ok(())
        }
        Command::Train { classifier, common } => {
            let cfg = build_config(&common)?;
            cfg.validate()?;
            let c = classifier_index(&classifier)?;
            let data = load_dataset(&cfg)?;
            report_rejects(&data.rejected);
            let mapping = label_mapping(&cfg);
            let records = &data.records;
            let labels: Vec<BinaryLabel> = records.iter().map(|r| r.label(&mapping)).collect();
            let index = build_investor_index(records);
            let x = pexit_core::features::feature_matrix(records, &index);
            let all: Vec<usize> = (0..records.len()).collect();
            let balanced = sampling::balance(&all, &labels, rng::child_seed(cfg.seed, tag::BALANCE, u64::MAX))?;
            let spec: ClassifierSpec = experiment::specs(&cfg, experiment::svm_params(&cfg))[c];
            let pool = Pool::new(cfg.threads)?;
            let fitted = cv::fit(&spec, &x, &labels, &balanced, cfg.seed, u64::MAX, &pool)?;
            let bundle = ModelBundle {
                index,
                classifier: fitted,
            };
            create_dir(&cfg.out)?;
            let path = cfg.out.join(format!("model_{classifier}.txt"));
            bundle.save(&path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Eval { model, common } => {
            let cfg = build_config(&common)?;
            cfg.validate()?;
            let data = load_dataset(&cfg)?;
            report_rejects(&data.rejected);
            create_dir(&cfg.out)?;
            let mapping = label_mapping(&cfg);
            let pred = match &model {
                Some(path) => {
                    let bundle = ModelBundle::load(path)?;
                    Predictions {
                        components: vec![bundle.classifier.name().to_string()],
                        rows: data
                            .records
                            .iter()
                            .map(|r| PredictionRow {
                                company_id: r.company_id.clone(),
                                sector: r.sector,
                                fold: None,
                                truth: r.label(&mapping),
                                probs: vec![bundle.prob(r)],
                            })
                            .collect(),
                    }
                }
                None => {
                    let pool = Pool::new(cfg.threads)?;
                    let cv_cfg = cv::CvConfig {
                        k: cfg.folds,
                        seed: cfg.seed,
                        mapping,
                    };
                    let specs = experiment::specs(&cfg, experiment::svm_params(&cfg));
                    let run = cv::out_of_fold(&data.records, &specs, &cv_cfg, &pool)?;
                    experiment::predictions(&data.records, &run)
                }
            };
            pred.write(&cfg.out.join("predictions.csv"))?;
            for (col, name) in pred.components.iter().enumerate() {
                let c = classifier_index(name)?;
                let gamma = report::resolve_gamma(cfg.gamma[c], &pred, col)?;
                let rows = report::component_metrics(&pred, col, gamma, cfg.aggregation);
                tables::write_metrics(&cfg.out.join(format!("metrics_{name}.csv")), &rows)?;
                print_all_row(name, &rows);
            }
            Ok(())
        }
        Command::Roc { predictions, common } => {
            let cfg = build_config(&common)?;
            let pred = Predictions::read(&predictions)?;
            create_dir(&cfg.out)?;
            for (col, name) in pred.components.iter().enumerate() {
                let curve = report::component_roc(&pred, col)?;
                tables::write_roc(&cfg.out.join(format!("roc_{name}.csv")), &curve)?;
                println!("{name}: knee at gamma {}", pexit_core::eval::knee(&curve)?);
            }
            Ok(())
        }
        Command::TuneSvm { sessions, common } => {
            let mut cfg = build_config(&common)?;
            if let Some(s) = sessions {
                cfg.tune_sessions = s;
            }
            cfg.tune = true;
            cfg.validate()?;
            let data = load_dataset(&cfg)?;
            report_rejects(&data.rejected);
            let mapping = label_mapping(&cfg);
            let labels: Vec<BinaryLabel> = data.records.iter().map(|r| r.label(&mapping)).collect();
            let pool = Pool::new(cfg.threads)?;
            let result = experiment::tune(&data.records, &labels, &cfg, &pool)?;
            create_dir(&cfg.out)?;
            tables::write_table(
                &cfg.out.join("tune.csv"),
                &tables::TUNE_HEADER,
                &tables::tune_rows(&result.sessions),
            )?;
            println!(
                "median cost {} alpha {}; mode cost {} alpha {}",
                result.median_cost, result.median_alpha, result.mode_cost, result.mode_alpha
            );
            Ok(())
        }
        Command::Fuse { predictions, common } => {
            let cfg = build_config(&common)?;
            let pred = Predictions::read(&predictions)?;
            let cols = report::component_columns(&pred)?;
            let gammas = report::resolve_gammas(&cfg.gamma, &pred, cols)?;
            let fused = report::fused_metrics(&pred, cols, gammas, cfg.fusion, cfg.aggregation);
            let stats = report::fusion_report(&pred, cols, gammas, cfg.agreement)?;
            create_dir(&cfg.out)?;
            tables::write_metrics(&cfg.out.join("metrics_fused.csv"), &fused)?;
            tables::write_table(
                &cfg.out.join("fusion.csv"),
                &tables::FUSION_HEADER,
                &tables::fusion_rows(&stats),
            )?;
            print_all_row("fused", &fused);
            Ok(())
        }
        Command::Report { common } => {
            let cfg = build_config(&common)?;
            let data = load_dataset(&cfg)?;
            report_rejects(&data.rejected);
            let s = summary::summarize(&data.records);
            let (h, rows) = tables::summary_rows(&s);
            create_dir(&cfg.out)?;
            tables::write_table(&cfg.out.join("summary.csv"), &h, &rows)?;
            println!("{} records", s.total());
            Ok(())
        }
        Command::Run { common } => {
            let cfg = build_config(&common)?;
            cfg.validate()?;
            let pool = Pool::new(cfg.threads)?;
            let outcome = pexit::run_experiment(&cfg, &pool)?;
            report_rejects(&outcome.rejected);
            let written = outcome.write(&cfg.out)?;
            for (c, name) in COMPONENTS.iter().enumerate() {
                print_all_row(name, &outcome.metrics[c]);
            }
            print_all_row("fused", &outcome.fused);
            println!("wrote {} files to {}", written.len(), cfg.out.display());
            Ok(())
        }
    }
}

fn report_rejects(rejected: &[pexit::records::RowDiagnostic]) {
    if rejected.is_empty() {
        return;
    }
    eprintln!("{} rows rejected", rejected.len());
    for d in rejected.iter().take(20) {
        eprintln!("  {d}");
    }
}

fn print_all_row(name: &str, rows: &[tables::MetricsRow]) {
    if let Some(all) = rows.iter().find(|r| r.sector == "all") {
        let v: Vec<String> = all
            .report
            .values()
            .into_iter()
            .map(|x| x.map_or_else(|| tables::NA.to_string(), |x| format!("{x:.4}")))
            .collect();
        println!("{name:>5}  prec+ {}  recl+ {}  prec- {}  recl- {}  acc {}", v[0], v[1], v[2], v[3], v[4]);
    }
}
