//! Plain-text model files.
//!
//! A file holds the investor index the model was trained with and one
//! classifier. Every line is a keyword followed by whitespace-separated
//! values; floats use the shortest representation that parses back to the
//! same value, so a model read from disk scores bit-identically.
//!
//! ```text
//! pexit-model 1
//! index 3 2
//! score 1 inv0001
//! score 0.5 inv0002
//! classifier lr
//! ridge 0.000001
//! ...
//! coef intercept -0.93
//! coef lag_1 -0.05 2.1 1.7
//! ```

use std::fmt::Write as _;
use std::path::Path;

use pexit_core::cv::Fitted;
use pexit_core::features::{featurize, InvestorIndex, FEATURE_NAMES};
use pexit_core::forest::{ForestModel, ForestParams, Tree, TreeNode};
use pexit_core::logreg::LogisticModel;
use pexit_core::pca::PcaModel;
use pexit_core::svm::{Platt, PlattNote, SvmModel};
use pexit_core::{CompanyRecord, Matrix, N_FEATURES};

use crate::error::{Error, Result};

const MAGIC: &str = "pexit-model 1";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub index: InvestorIndex,
    pub classifier: Fitted,
}

impl ModelBundle {
    /// Probability of a positive outcome for `record`.
    pub fn prob(&self, record: &CompanyRecord) -> f64 {
        self.classifier.prob(featurize(record, &self.index).as_slice())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |args: std::fmt::Arguments<'_>| {
            s.write_fmt(args).expect("string write");
            s.push('\n');
        };
        line(format_args!("{MAGIC}"));
        line(format_args!("index {} {}", self.index.built_from(), self.index.len()));
        for (id, score) in self.index.iter() {
            line(format_args!("score {score} {id}"));
        }
        line(format_args!("classifier {}", self.classifier.name()));
        match &self.classifier {
            Fitted::Logistic(m) => {
                line(format_args!("ridge {}", m.ridge));
                line(format_args!("converged {}", m.converged));
                line(format_args!("iterations {}", m.iterations));
                line(format_args!("coef intercept {}", m.beta[0]));
                for (k, name) in FEATURE_NAMES.iter().enumerate() {
                    line(format_args!(
                        "coef {name} {} {} {}",
                        m.beta[k + 1],
                        m.means[k],
                        m.scales[k]
                    ));
                }
            }
            Fitted::Forest(m) => {
                let p = m.params;
                line(format_args!(
                    "forest {} {} {} {} {} {}",
                    p.n_trees, p.mtry, p.min_node, p.bootstrap, m.seed, m.n_features
                ));
                for (t, tree) in m.trees.iter().enumerate() {
                    line(format_args!("tree {t} {}", tree.nodes.len()));
                    for node in &tree.nodes {
                        match *node {
                            TreeNode::Split {
                                feature,
                                threshold,
                                right,
                            } => line(format_args!("split {feature} {threshold} {right}")),
                            TreeNode::Leaf { negative, positive } => {
                                line(format_args!("leaf {negative} {positive}"))
                            }
                        }
                    }
                }
            }
            Fitted::Svm { pca, k, model } => {
                line(format_args!("pca {} {k}", pca.dim()));
                line(format_args!("means {}", join(&pca.means)));
                line(format_args!("scales {}", join(&pca.scales)));
                line(format_args!("eigenvalues {}", join(&pca.eigenvalues)));
                let constant: Vec<String> = pca.constant_columns.iter().map(|c| c.to_string()).collect();
                line(format_args!("constant {}", constant.join(" ")));
                for r in pca.components.iter_rows() {
                    line(format_args!("component {}", join(r)));
                }
                line(format_args!(
                    "svm {} {} {} {} {}",
                    model.cost, model.kernel_alpha, model.bias, model.iterations, model.converged
                ));
                let note = match model.platt.note {
                    None => "none",
                    Some(PlattNote::Degenerate) => "degenerate",
                    Some(PlattNote::Flattened) => "flattened",
                    Some(PlattNote::NotConverged) => "not_converged",
                };
                line(format_args!("platt {} {} {note}", model.platt.a, model.platt.b));
                line(format_args!(
                    "support {} {}",
                    model.dual_coefs.len(),
                    model.support_vectors.cols()
                ));
                for (c, sv) in model.dual_coefs.iter().zip(model.support_vectors.iter_rows()) {
                    line(format_args!("sv {c} {}", join(sv)));
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut p = Lines::new(text);
        if p.next_line()? != MAGIC {
            return Err(format!("first line must be `{MAGIC}`"));
        }
        let v = p.expect("index")?;
        let built_from = p.parse(&v, 0)?;
        let n: usize = p.parse(&v, 1)?;
        let mut scores = Vec::with_capacity(n);
        for _ in 0..n {
            let line = p.next_line()?;
            let rest = line
                .strip_prefix("score ")
                .ok_or_else(|| p.err("expected `score`"))?;
            let (score, id) = rest.split_once(' ').ok_or_else(|| p.err("score without id"))?;
            let score: f64 = score.parse().map_err(|_| p.err("bad score"))?;
            scores.push((id.to_string(), score));
        }
        let index = InvestorIndex::from_scores(built_from, scores).map_err(|e| e.to_string())?;
        let kind = p.expect("classifier")?;
        let classifier = match kind.first().copied() {
            Some("lr") => Fitted::Logistic(read_logistic(&mut p)?),
            Some("rf") => Fitted::Forest(read_forest(&mut p)?),
            Some("svm") => read_svm(&mut p)?,
            _ => return Err(p.err("unknown classifier")),
        };
        if p.peek().is_some() {
            return Err(p.err("trailing content"));
        }
        Ok(ModelBundle { index, classifier })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|reason| Error::format(path, reason))
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    at: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            lines: text.lines().filter(|l| !l.trim().is_empty()).collect(),
            at: 0,
        }
    }

    fn err(&self, what: &str) -> String {
        format!("model line {}: {what}", self.at)
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.at).copied()
    }

    fn next_line(&mut self) -> std::result::Result<&'a str, String> {
        let l = self.peek().ok_or_else(|| "unexpected end of model".to_string())?;
        self.at += 1;
        Ok(l.trim_end())
    }

    /// Values following `key` on the next line.
    fn expect(&mut self, key: &str) -> std::result::Result<Vec<&'a str>, String> {
        let line = self.next_line()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(&format!("expected `{key}`")));
        }
        Ok(it.collect())
    }

    fn parse<T: std::str::FromStr>(&self, v: &[&str], i: usize) -> std::result::Result<T, String> {
        v.get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(&format!("bad or missing value {}", i + 1)))
    }

    fn value<T: std::str::FromStr>(&mut self, key: &str) -> std::result::Result<T, String> {
        let v = self.expect(key)?;
        self.parse(&v, 0)
    }

    fn float_line(&mut self, key: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
        let v = self.expect(key)?;
        self.floats(&v, n)
    }

    fn floats(&self, v: &[&str], n: usize) -> std::result::Result<Vec<f64>, String> {
        if v.len() != n {
            return Err(self.err(&format!("expected {n} values, found {}", v.len())));
        }
        (0..n).map(|i| self.parse(v, i)).collect()
    }
}

fn read_logistic(p: &mut Lines<'_>) -> std::result::Result<LogisticModel, String> {
    let ridge = p.value("ridge")?;
    let converged = p.value("converged")?;
    let iterations = p.value("iterations")?;
    let v = p.expect("coef")?;
    if v.first() != Some(&"intercept") {
        return Err(p.err("expected intercept"));
    }
    let mut beta = vec![p.parse(&v, 1)?];
    let (mut means, mut scales) = (Vec::new(), Vec::new());
    for name in FEATURE_NAMES {
        let v = p.expect("coef")?;
        if v.first() != Some(&name) {
            return Err(p.err(&format!("expected coefficient {name}")));
        }
        let f = p.floats(&v[1..], 3)?;
        beta.push(f[0]);
        means.push(f[1]);
        scales.push(f[2]);
    }
    Ok(LogisticModel {
        beta,
        means,
        scales,
        ridge,
        converged,
        iterations,
    })
}

fn read_forest(p: &mut Lines<'_>) -> std::result::Result<ForestModel, String> {
    let v = p.expect("forest")?;
    let params = ForestParams {
        n_trees: p.parse(&v, 0)?,
        mtry: p.parse(&v, 1)?,
        min_node: p.parse(&v, 2)?,
        bootstrap: p.parse(&v, 3)?,
    };
    let seed = p.parse(&v, 4)?;
    let n_features: usize = p.parse(&v, 5)?;
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let v = p.expect("tree")?;
        if p.parse::<usize>(&v, 0)? != t {
            return Err(p.err("trees out of order"));
        }
        let n: usize = p.parse(&v, 1)?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let line = p.next_line()?;
            let v: Vec<&str> = line.split_whitespace().collect();
            let node = match v.first().copied() {
                Some("split") => TreeNode::Split {
                    feature: p.parse(&v, 1)?,
                    threshold: p.parse(&v, 2)?,
                    right: p.parse(&v, 3)?,
                },
                Some("leaf") => TreeNode::Leaf {
                    negative: p.parse(&v, 1)?,
                    positive: p.parse(&v, 2)?,
                },
                _ => return Err(p.err("expected `split` or `leaf`")),
            };
            nodes.push(node);
        }
        let tree = Tree { nodes };
        if !tree.is_well_formed() || tree_features_exceed(&tree, n_features) {
            return Err(p.err(&format!("tree {t} is malformed")));
        }
        trees.push(tree);
    }
    Ok(ForestModel {
        trees,
        params,
        seed,
        n_features,
    })
}

fn tree_features_exceed(tree: &Tree, n_features: usize) -> bool {
    tree.nodes
        .iter()
        .any(|n| matches!(n, TreeNode::Split { feature, .. } if *feature as usize >= n_features))
}

fn read_svm(p: &mut Lines<'_>) -> std::result::Result<Fitted, String> {
    let v = p.expect("pca")?;
    let dim: usize = p.parse(&v, 0)?;
    let k: usize = p.parse(&v, 1)?;
    if dim != N_FEATURES || k == 0 || k > dim {
        return Err(p.err("bad pca dimensions"));
    }
    let means = p.float_line("means", dim)?;
    let scales = p.float_line("scales", dim)?;
    let eigenvalues = p.float_line("eigenvalues", dim)?;
    let constant_columns = p
        .expect("constant")?
        .iter()
        .map(|s| s.parse().map_err(|_| p.err("bad constant column")))
        .collect::<std::result::Result<Vec<usize>, _>>()?;
    let mut comp = Vec::with_capacity(dim * dim);
    for _ in 0..dim {
        comp.extend(p.float_line("component", dim)?);
    }
    let components = Matrix::from_vec(dim, dim, comp).map_err(|e| e.to_string())?;
    let pca = PcaModel {
        means,
        scales,
        components,
        eigenvalues,
        constant_columns,
    };
    let v = p.expect("svm")?;
    let (cost, kernel_alpha, bias) = (p.parse(&v, 0)?, p.parse(&v, 1)?, p.parse(&v, 2)?);
    let (iterations, converged) = (p.parse(&v, 3)?, p.parse(&v, 4)?);
    let v = p.expect("platt")?;
    let note = match v.get(2).copied() {
        Some("none") => None,
        Some("degenerate") => Some(PlattNote::Degenerate),
        Some("flattened") => Some(PlattNote::Flattened),
        Some("not_converged") => Some(PlattNote::NotConverged),
        _ => return Err(p.err("bad platt note")),
    };
    let platt = Platt {
        a: p.parse(&v, 0)?,
        b: p.parse(&v, 1)?,
        note,
    };
    let v = p.expect("support")?;
    let n_sv: usize = p.parse(&v, 0)?;
    let cols: usize = p.parse(&v, 1)?;
    if cols != k {
        return Err(p.err("support vector width differs from pca components"));
    }
    let mut dual_coefs = Vec::with_capacity(n_sv);
    let mut data = Vec::with_capacity(n_sv * cols);
    for _ in 0..n_sv {
        let f = p.float_line("sv", cols + 1)?;
        dual_coefs.push(f[0]);
        data.extend_from_slice(&f[1..]);
    }
    let support_vectors = Matrix::from_vec(n_sv, cols, data).map_err(|e| e.to_string())?;
    Ok(Fitted::Svm {
        pca,
        k,
        model: SvmModel {
            support_vectors,
            dual_coefs,
            bias,
            kernel_alpha,
            cost,
            platt,
            iterations,
            converged,
        },
    })
}
