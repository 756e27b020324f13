//! Experiment configuration, read from an INI file and overridden by flags.
//!
//! ```ini
//! [experiment]
//! seed = 7
//! folds = 10
//! fusion = majority
//!
//! [data]
//! input = records.csv
//!
//! [gamma]
//! lr = 0.5
//! rf = knee
//!
//! [forest]
//! trees = 500
//! ```
//!
//! Every key has a default. A run manifest is a config file holding every
//! effective value, so it can be passed back with `--config` to repeat a
//! run exactly.

use std::path::{Path, PathBuf};

use ini::{EscapePolicy, Ini, LineSeparator, WriteOption};
use pexit_core::cv::Aggregation;
use pexit_core::domain::N_SECTORS;
use pexit_core::forest::ForestParams;
use pexit_core::fusion::{AgreeConditioning, FusionMode};
use pexit_core::svm::{self, TuneConfig};
use pexit_core::synth::SyntheticConfig;
use pexit_core::{BinaryLabel, N_FEATURES};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaChoice {
    Fixed(f64),
    /// Pick the knee of the component's out-of-fold ROC curve.
    Knee,
}

impl std::str::FromStr for GammaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("knee") {
            return Ok(GammaChoice::Knee);
        }
        let g: f64 = parse_value("gamma", s)?;
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::config(format!("gamma {g} outside (0, 1)")));
        }
        Ok(GammaChoice::Fixed(g))
    }
}

impl std::fmt::Display for GammaChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GammaChoice::Fixed(g) => write!(f, "{g}"),
            GammaChoice::Knee => f.write_str("knee"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Csv(PathBuf),
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub folds: usize,
    pub lbo: BinaryLabel,
    /// Thresholds for lr, rf and svm.
    pub gamma: [GammaChoice; 3],
    pub pca_k: usize,
    pub forest: ForestParams,
    pub cost: f64,
    pub kernel_alpha: f64,
    /// Replace cost and kernel width by the medians of a tuning run.
    pub tune: bool,
    pub tune_sessions: usize,
    pub fusion: FusionMode,
    pub agreement: AgreeConditioning,
    pub aggregation: Aggregation,
    /// Restrict the data to one sector (1..=9).
    pub sector: Option<u8>,
    /// Keep only companies whose first round falls in this year window.
    pub first_round: Option<(i32, i32)>,
    pub source: Option<Source>,
    pub out: PathBuf,
    /// Worker threads; never affects results.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            folds: 10,
            lbo: BinaryLabel::Positive,
            gamma: [GammaChoice::Fixed(0.5); 3],
            pca_k: pexit_core::pca::DEFAULT_COMPONENTS,
            forest: ForestParams::default(),
            cost: svm::DEFAULT_COST,
            kernel_alpha: svm::DEFAULT_KERNEL_ALPHA,
            tune: false,
            tune_sessions: TuneConfig::default().n_sessions,
            fusion: FusionMode::Majority,
            agreement: AgreeConditioning::AgreedLabel,
            aggregation: Aggregation::MeanOfFolds,
            sector: None,
            first_round: None,
            source: None,
            out: PathBuf::from("out"),
            threads: 1,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse `{}`", s.trim())))
}

pub fn parse_fusion(s: &str) -> Result<FusionMode> {
    match s.trim().to_ascii_lowercase().as_str() {
        "majority" => Ok(FusionMode::Majority),
        "unanimity" => Ok(FusionMode::Unanimity),
        other => Err(Error::config(format!("fusion `{other}` is not majority or unanimity"))),
    }
}

pub fn fusion_name(m: FusionMode) -> &'static str {
    match m {
        FusionMode::Majority => "majority",
        FusionMode::Unanimity => "unanimity",
    }
}

/// `all` or a sector code.
pub fn parse_sector(s: &str) -> Result<Option<u8>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    let v: u8 = parse_value("sector", s)?;
    if !(1..=N_SECTORS as u8).contains(&v) {
        return Err(Error::config(format!("sector {v} outside 1..=9")));
    }
    Ok(Some(v))
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_value(key, t)).collect()
}

fn list_string(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "experiment",
        &[
            "seed",
            "folds",
            "lbo",
            "fusion",
            "agreement",
            "aggregation",
            "sector",
            "out",
            "threads",
        ],
    ),
    ("data", &["input", "first_round_from", "first_round_to"]),
    (
        "synthetic",
        &[
            "n_companies",
            "seed",
            "year_lo",
            "year_hi",
            "investor_pool_size",
            "zipf_exponent",
            "sector_weights",
            "coefficients",
        ],
    ),
    ("gamma", &["lr", "rf", "svm"]),
    ("pca", &["components"]),
    ("forest", &["trees", "mtry", "min_node"]),
    ("svm", &["cost", "alpha", "tune", "tune_sessions"]),
    (
        "manifest",
        &[
            "version",
            "records",
            "rejected",
            "gamma_lr",
            "gamma_rf",
            "gamma_svm",
            "tuned_cost",
            "tuned_alpha",
        ],
    ),
];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ini_str(&text)
    }

    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| Error::config(e.to_string()))?;
        for (section, props) in ini.iter() {
            let name = section.unwrap_or("");
            let Some((_, keys)) = KEYS.iter().find(|(s, _)| *s == name) else {
                if props.is_empty() {
                    continue;
                }
                return Err(Error::config(format!("unknown section `[{name}]`")));
            };
            for (k, _) in props.iter() {
                if !keys.contains(&k) {
                    return Err(Error::config(format!("unknown key `{k}` in [{name}]")));
                }
            }
        }
        let get = |section: &str, key: &str| ini.section(Some(section)).and_then(|s| s.get(key));
        let mut cfg = ExperimentConfig::default();
        if let Some(v) = get("experiment", "seed") {
            cfg.seed = parse_value("seed", v)?;
        }
        if let Some(v) = get("experiment", "folds") {
            cfg.folds = parse_value("folds", v)?;
        }
        if let Some(v) = get("experiment", "lbo") {
            cfg.lbo = match v.trim() {
                "positive" => BinaryLabel::Positive,
                "negative" => BinaryLabel::Negative,
                other => return Err(Error::config(format!("lbo `{other}` is not positive or negative"))),
            };
        }
        if let Some(v) = get("experiment", "fusion") {
            cfg.fusion = parse_fusion(v)?;
        }
        if let Some(v) = get("experiment", "agreement") {
            cfg.agreement = match v.trim() {
                "label" => AgreeConditioning::AgreedLabel,
                "any" => AgreeConditioning::AnyAgreement,
                other => return Err(Error::config(format!("agreement `{other}` is not label or any"))),
            };
        }
        if let Some(v) = get("experiment", "aggregation") {
            cfg.aggregation = match v.trim() {
                "mean" => Aggregation::MeanOfFolds,
                "pooled" => Aggregation::Pooled,
                other => return Err(Error::config(format!("aggregation `{other}` is not mean or pooled"))),
            };
        }
        if let Some(v) = get("experiment", "sector") {
            cfg.sector = parse_sector(v)?;
        }
        if let Some(v) = get("experiment", "out") {
            cfg.out = PathBuf::from(v.trim());
        }
        if let Some(v) = get("experiment", "threads") {
            cfg.threads = parse_value("threads", v)?;
        }
        match (get("data", "first_round_from"), get("data", "first_round_to")) {
            (None, None) => {}
            (Some(a), Some(b)) => cfg.first_round = Some((parse_value("first_round_from", a)?, parse_value("first_round_to", b)?)),
            _ => return Err(Error::config("first_round_from and first_round_to go together")),
        }
        let input = get("data", "input").map(|v| PathBuf::from(v.trim()));
        let synthetic = ini.section(Some("synthetic")).filter(|s| !s.is_empty());
        cfg.source = match (input, synthetic) {
            (Some(_), Some(_)) => return Err(Error::config("both [data] input and [synthetic] given")),
            (Some(p), None) => Some(Source::Csv(p)),
            (None, Some(s)) => {
                let mut sc = SyntheticConfig::default();
                if let Some(v) = s.get("n_companies") {
                    sc.n_companies = parse_value("n_companies", v)?;
                }
                if let Some(v) = s.get("seed") {
                    sc.seed = parse_value("synthetic seed", v)?;
                }
                if let Some(v) = s.get("year_lo") {
                    sc.year_range.0 = parse_value("year_lo", v)?;
                }
                if let Some(v) = s.get("year_hi") {
                    sc.year_range.1 = parse_value("year_hi", v)?;
                }
                if let Some(v) = s.get("investor_pool_size") {
                    sc.investor_pool_size = parse_value("investor_pool_size", v)?;
                }
                if let Some(v) = s.get("zipf_exponent") {
                    sc.zipf_exponent = parse_value("zipf_exponent", v)?;
                }
                if let Some(v) = s.get("sector_weights") {
                    sc.sector_weights = parse_list("sector_weights", v)?
                        .try_into()
                        .map_err(|_| Error::config(format!("sector_weights needs {N_SECTORS} values")))?;
                }
                if let Some(v) = s.get("coefficients") {
                    sc.signal_coefficients = parse_list("coefficients", v)?
                        .try_into()
                        .map_err(|_| Error::config(format!("coefficients needs {} values", N_FEATURES + 1)))?;
                }
                Some(Source::Synthetic(sc))
            }
            (None, None) => None,
        };
        for (k, key) in ["lr", "rf", "svm"].iter().enumerate() {
            if let Some(v) = get("gamma", key) {
                cfg.gamma[k] = v.parse()?;
            }
        }
        if let Some(v) = get("pca", "components") {
            cfg.pca_k = parse_value("pca components", v)?;
        }
        if let Some(v) = get("forest", "trees") {
            cfg.forest.n_trees = parse_value("trees", v)?;
        }
        if let Some(v) = get("forest", "mtry") {
            cfg.forest.mtry = parse_value("mtry", v)?;
        }
        if let Some(v) = get("forest", "min_node") {
            cfg.forest.min_node = parse_value("min_node", v)?;
        }
        if let Some(v) = get("svm", "cost") {
            cfg.cost = parse_value("cost", v)?;
        }
        if let Some(v) = get("svm", "alpha") {
            cfg.kernel_alpha = parse_value("alpha", v)?;
        }
        if let Some(v) = get("svm", "tune") {
            cfg.tune = parse_value("tune", v)?;
        }
        if let Some(v) = get("svm", "tune_sessions") {
            cfg.tune_sessions = parse_value("tune_sessions", v)?;
        }
        Ok(cfg)
    }

    /// Checks every field against its documented range.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if self.folds < 2 {
            return fail(format!("folds {} must be at least 2", self.folds));
        }
        if !(1..=N_FEATURES).contains(&self.pca_k) {
            return fail(format!("pca components {} outside 1..={N_FEATURES}", self.pca_k));
        }
        if self.forest.n_trees == 0 {
            return fail("trees must be at least 1".into());
        }
        if !(1..=N_FEATURES).contains(&self.forest.mtry) {
            return fail(format!("mtry {} outside 1..={N_FEATURES}", self.forest.mtry));
        }
        if self.forest.min_node == 0 {
            return fail("min_node must be at least 1".into());
        }
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return fail(format!("cost {} must be positive", self.cost));
        }
        if !(self.kernel_alpha > 0.0 && self.kernel_alpha.is_finite()) {
            return fail(format!("alpha {} must be positive", self.kernel_alpha));
        }
        if self.tune && self.tune_sessions == 0 {
            return fail("tune_sessions must be at least 1".into());
        }
        if self.threads == 0 {
            return fail("threads must be at least 1".into());
        }
        if let Some((a, b)) = self.first_round {
            if a > b {
                return fail(format!("first round window {a}..{b} is empty"));
            }
        }
        match &self.source {
            None => fail("no input: give --input, a [data] input or a [synthetic] section".into()),
            Some(Source::Synthetic(s)) => s.validate().map_err(|e| Error::config(e.to_string())),
            Some(Source::Csv(_)) => Ok(()),
        }
    }

    /// The config as INI with every effective value except `threads` and
    /// `out`. Neither can change results, and leaving them out keeps the
    /// manifests of otherwise identical runs identical.
    pub fn to_ini(&self) -> Ini {
        let mut ini = Ini::new();
        ini.with_section(Some("experiment"))
            .set("seed", self.seed.to_string())
            .set("folds", self.folds.to_string())
            .set(
                "lbo",
                if self.lbo.is_positive() { "positive" } else { "negative" },
            )
            .set("fusion", fusion_name(self.fusion))
            .set(
                "agreement",
                match self.agreement {
                    AgreeConditioning::AgreedLabel => "label",
                    AgreeConditioning::AnyAgreement => "any",
                },
            )
            .set(
                "aggregation",
                match self.aggregation {
                    Aggregation::MeanOfFolds => "mean",
                    Aggregation::Pooled => "pooled",
                },
            )
            .set(
                "sector",
                self.sector.map_or_else(|| "all".to_string(), |s| s.to_string()),
            );
        match &self.source {
            Some(Source::Csv(p)) => {
                ini.with_section(Some("data")).set("input", p.display().to_string());
            }
            Some(Source::Synthetic(s)) => {
                ini.with_section(Some("synthetic"))
                    .set("n_companies", s.n_companies.to_string())
                    .set("seed", s.seed.to_string())
                    .set("year_lo", s.year_range.0.to_string())
                    .set("year_hi", s.year_range.1.to_string())
                    .set("investor_pool_size", s.investor_pool_size.to_string())
                    .set("zipf_exponent", s.zipf_exponent.to_string())
                    .set("sector_weights", list_string(&s.sector_weights))
                    .set("coefficients", list_string(&s.signal_coefficients));
            }
            None => {}
        }
        if let Some((a, b)) = self.first_round {
            ini.with_section(Some("data"))
                .set("first_round_from", a.to_string())
                .set("first_round_to", b.to_string());
        }
        ini.with_section(Some("gamma"))
            .set("lr", self.gamma[0].to_string())
            .set("rf", self.gamma[1].to_string())
            .set("svm", self.gamma[2].to_string());
        ini.with_section(Some("pca"))
            .set("components", self.pca_k.to_string());
        ini.with_section(Some("forest"))
            .set("trees", self.forest.n_trees.to_string())
            .set("mtry", self.forest.mtry.to_string())
            .set("min_node", self.forest.min_node.to_string());
        ini.with_section(Some("svm"))
            .set("cost", self.cost.to_string())
            .set("alpha", self.kernel_alpha.to_string())
            .set("tune", self.tune.to_string())
            .set("tune_sessions", self.tune_sessions.to_string());
        ini
    }
}

pub fn ini_bytes(ini: &Ini) -> Vec<u8> {
    let mut buf = Vec::new();
    ini.write_to_opt(
        &mut buf,
        WriteOption {
            escape_policy: EscapePolicy::Nothing,
            line_separator: LineSeparator::CR,
            kv_separator: " = ",
        },
    )
    .expect("in-memory write");
    buf
}
