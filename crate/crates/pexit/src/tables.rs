//! Report files: feature matrices, metrics tables, ROC curves, cumulative
//! variance, voting statistics, out-of-fold predictions, exit summaries and
//! tuning sessions. Every writer has a reader that accepts its output.
//!
//! Numbers are written in shortest round-trip form, so a file read back
//! holds exactly the values that were written. Undefined metrics are `NA`.

use std::fs;
use std::path::Path;

use pexit_core::eval::{MetricsReport, RocCurve, RocPoint};
use pexit_core::features::FEATURE_NAMES;
use pexit_core::fusion::FusionReport;
use pexit_core::summary::ExitSummary;
use pexit_core::{BinaryLabel, ExitStatus, Matrix, N_FEATURES};

use crate::error::{csv_error, Error, Result};

pub const NA: &str = "NA";

pub const METRICS_HEADER: [&str; 7] = [
    "sector", "prec_pos", "recl_pos", "prec_neg", "recl_neg", "accuracy", "gamma",
];
pub const ROC_HEADER: [&str; 3] = ["gamma", "fpr", "tpr"];
pub const CUMVAR_HEADER: [&str; 3] = ["component", "eigenvalue", "cumulative"];
pub const FUSION_HEADER: [&str; 6] = ["ar", "tari", "tarni", "trf_min", "tlr_min", "tsvm_min"];
pub const TUNE_HEADER: [&str; 3] = ["session", "cost", "alpha"];

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn parse_f64(s: &str, path: &Path, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(path, format!("{what}: `{s}` is not a number")))
}

fn parse_opt(s: &str, path: &Path, what: &str) -> Result<Option<f64>> {
    if s.trim() == NA || s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, path, what).map(Some)
    }
}

/// Serializes a header and rows to CSV bytes.
pub fn table_bytes<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(AsRef::as_ref))
        .expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_table<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    fs::write(path, table_bytes(header, rows)).map_err(|e| Error::io(path, e))
}

/// Reads a CSV file whose header must equal `header`.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let (got, rows) = read_any_table(path)?;
    if got != header {
        return Err(Error::format(
            path,
            format!("expected header `{}`, found `{}`", header.join(","), got.join(",")),
        ));
    }
    Ok(rows)
}

/// Reads a CSV file, returning its header and rows.
pub fn read_any_table(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let rows = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_error(path, e))?;
    Ok((header, rows))
}

pub fn features_rows(x: &Matrix, labels: &[BinaryLabel]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    header.push("label".into());
    let rows = x
        .iter_rows()
        .zip(labels)
        .map(|(r, l)| {
            let mut row: Vec<String> = r.iter().map(f64::to_string).collect();
            row.push(l.as_str().to_string());
            row
        })
        .collect();
    (header, rows)
}

pub fn write_features(path: &Path, x: &Matrix, labels: &[BinaryLabel]) -> Result<()> {
    let (header, rows) = features_rows(x, labels);
    write_table(path, &header, &rows)
}

pub fn read_features(path: &Path) -> Result<(Matrix, Vec<BinaryLabel>)> {
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("label");
    let rows = read_table(path, &header)?;
    let mut data = Vec::with_capacity(rows.len() * N_FEATURES);
    let mut labels = Vec::with_capacity(rows.len());
    for r in &rows {
        for (k, name) in FEATURE_NAMES.iter().enumerate() {
            data.push(parse_f64(&r[k], path, name)?);
        }
        labels.push(parse_label(&r[N_FEATURES], path)?);
    }
    let x = Matrix::from_vec(rows.len(), N_FEATURES, data)?;
    Ok((x, labels))
}

fn parse_label(s: &str, path: &Path) -> Result<BinaryLabel> {
    match s.trim() {
        "1" => Ok(BinaryLabel::Positive),
        "0" => Ok(BinaryLabel::Negative),
        other => Err(Error::format(path, format!("label `{other}` is not 0 or 1"))),
    }
}

/// One row of a metrics table: a sector code (`1`..`9`) or `all`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub sector: String,
    pub report: MetricsReport,
    /// Threshold used; absent for fused labels.
    pub gamma: Option<f64>,
}

pub fn metrics_rows(rows: &[MetricsRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut out = vec![r.sector.clone()];
            out.extend(r.report.values().into_iter().map(fmt_opt));
            out.push(fmt_opt(r.gamma));
            out
        })
        .collect()
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_table(path, &METRICS_HEADER, &metrics_rows(rows))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    read_table(path, &METRICS_HEADER)?
        .iter()
        .map(|r| {
            let mut v = [None; 5];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = parse_opt(&r[k + 1], path, METRICS_HEADER[k + 1])?;
            }
            Ok(MetricsRow {
                sector: r[0].trim().to_string(),
                report: MetricsReport::from_values(v),
                gamma: parse_opt(&r[6], path, "gamma")?,
            })
        })
        .collect()
}

pub fn roc_rows(curve: &RocCurve) -> Vec<Vec<String>> {
    curve
        .points
        .iter()
        .map(|p| vec![p.gamma.to_string(), p.fpr.to_string(), p.tpr.to_string()])
        .collect()
}

pub fn write_roc(path: &Path, curve: &RocCurve) -> Result<()> {
    write_table(path, &ROC_HEADER, &roc_rows(curve))
}

pub fn read_roc(path: &Path) -> Result<RocCurve> {
    let points = read_table(path, &ROC_HEADER)?
        .iter()
        .map(|r| {
            Ok(RocPoint {
                gamma: parse_f64(&r[0], path, "gamma")?,
                fpr: parse_f64(&r[1], path, "fpr")?,
                tpr: parse_f64(&r[2], path, "tpr")?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RocCurve { points })
}

/// `(eigenvalue, cumulative fraction)` per component, 1-based in the file.
pub fn cumvar_rows(eigenvalues: &[f64], cumulative: &[f64]) -> Vec<Vec<String>> {
    eigenvalues
        .iter()
        .zip(cumulative)
        .enumerate()
        .map(|(k, (e, c))| vec![(k + 1).to_string(), e.to_string(), c.to_string()])
        .collect()
}

pub fn read_cumvar(path: &Path) -> Result<Vec<(f64, f64)>> {
    read_table(path, &CUMVAR_HEADER)?
        .iter()
        .map(|r| {
            Ok((
                parse_f64(&r[1], path, "eigenvalue")?,
                parse_f64(&r[2], path, "cumulative")?,
            ))
        })
        .collect()
}

pub fn fusion_rows(report: &FusionReport) -> Vec<Vec<String>> {
    vec![report.table_row().into_iter().map(fmt_opt).collect()]
}

/// The six statistics in file column order.
pub fn read_fusion(path: &Path) -> Result<[Option<f64>; 6]> {
    let rows = read_table(path, &FUSION_HEADER)?;
    let [r] = rows.as_slice() else {
        return Err(Error::format(path, format!("expected one data row, found {}", rows.len())));
    };
    let mut out = [None; 6];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = parse_opt(&r[k], path, FUSION_HEADER[k])?;
    }
    Ok(out)
}

/// Out-of-fold (or held-out) probabilities, one column per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub components: Vec<String>,
    pub rows: Vec<PredictionRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub company_id: String,
    pub sector: u8,
    /// Fold that scored the row; `None` outside cross-validation.
    pub fold: Option<usize>,
    pub truth: BinaryLabel,
    pub probs: Vec<f64>,
}

impl Predictions {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c == name)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["company_id", "sector", "fold", "truth"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.components.iter().cloned());
        h
    }

    pub fn table_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut out = vec![
                    r.company_id.clone(),
                    r.sector.to_string(),
                    r.fold.map(|f| f.to_string()).unwrap_or_default(),
                    r.truth.as_str().to_string(),
                ];
                out.extend(r.probs.iter().map(f64::to_string));
                out
            })
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_table(path, &self.header(), &self.table_rows())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (header, rows) = read_any_table(path)?;
        if header.len() < 5 || header[..4] != ["company_id", "sector", "fold", "truth"] {
            return Err(Error::format(
                path,
                "expected header `company_id,sector,fold,truth,<component>...`",
            ));
        }
        let components = header[4..].to_vec();
        let rows = rows
            .iter()
            .map(|r| {
                let fold = match r[2].trim() {
                    "" => None,
                    s => Some(s.parse().map_err(|_| Error::format(path, format!("fold `{s}`")))?),
                };
                Ok(PredictionRow {
                    company_id: r[0].trim().to_string(),
                    sector: r[1]
                        .trim()
                        .parse()
                        .map_err(|_| Error::format(path, format!("sector `{}`", &r[1])))?,
                    fold,
                    truth: parse_label(&r[3], path)?,
                    probs: (4..r.len())
                        .map(|k| parse_f64(&r[k], path, &header[k]))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Predictions { components, rows })
    }
}

/// Sector-by-outcome counts with totals, sectors as rows.
pub fn summary_rows(s: &ExitSummary) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["sector".to_string()];
    header.extend(ExitStatus::ALL.iter().map(|e| e.as_str().to_string()));
    header.push("total".into());
    let mut rows = Vec::new();
    for sector in 1..=pexit_core::domain::N_SECTORS as u8 {
        let mut row = vec![sector.to_string()];
        row.extend(ExitStatus::ALL.iter().map(|&e| s.cell(sector, e).to_string()));
        row.push(s.row_total(sector).to_string());
        rows.push(row);
    }
    let mut total = vec!["total".to_string()];
    total.extend(ExitStatus::ALL.iter().map(|&e| s.column_total(e).to_string()));
    total.push(s.total().to_string());
    rows.push(total);
    (header, rows)
}

pub fn read_summary(path: &Path) -> Result<ExitSummary> {
    let header = ["sector", "Bankrupt", "IPO", "LBO", "MA", "Private", "total"];
    let rows = read_table(path, &header)?;
    let mut counts = [[0u64; 5]; pexit_core::domain::N_SECTORS];
    for r in rows.iter().filter(|r| r[0].trim() != "total") {
        let sector: usize = r[0]
            .trim()
            .parse()
            .ok()
            .filter(|s| (1..=counts.len()).contains(s))
            .ok_or_else(|| Error::format(path, format!("sector `{}`", &r[0])))?;
        for k in 0..5 {
            counts[sector - 1][k] = r[k + 1]
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("count `{}`", &r[k + 1])))?;
        }
    }
    Ok(ExitSummary { counts })
}

pub fn tune_rows(sessions: &[(f64, f64)]) -> Vec<Vec<String>> {
    sessions
        .iter()
        .enumerate()
        .map(|(k, (c, a))| vec![k.to_string(), c.to_string(), a.to_string()])
        .collect()
}

pub fn read_tune(path: &Path) -> Result<Vec<(f64, f64)>> {
    read_table(path, &TUNE_HEADER)?
        .iter()
        .map(|r| Ok((parse_f64(&r[1], path, "cost")?, parse_f64(&r[2], path, "alpha")?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_round_trip_with_undefined() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = vec![
            MetricsRow {
                sector: "2".into(),
                report: MetricsReport::from_values([Some(0.75), None, Some(2.0 / 3.0), Some(0.8), Some(0.7)]),
                gamma: Some(0.45),
            },
            MetricsRow {
                sector: "all".into(),
                report: MetricsReport::from_values([Some(0.1); 5]),
                gamma: None,
            },
        ];
        write_metrics(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sector,prec_pos,recl_pos,prec_neg,recl_neg,accuracy,gamma\n"));
        assert!(text.contains("2,0.75,NA,0.6666666666666666,0.8,0.7,0.45\n"));
        assert_eq!(read_metrics(&path).unwrap(), rows);
    }

    #[test]
    fn predictions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let p = Predictions {
            components: vec!["lr".into(), "svm".into()],
            rows: vec![
                PredictionRow {
                    company_id: "a".into(),
                    sector: 3,
                    fold: Some(4),
                    truth: BinaryLabel::Positive,
                    probs: vec![0.1, 1.0 / 3.0],
                },
                PredictionRow {
                    company_id: "b".into(),
                    sector: 9,
                    fold: None,
                    truth: BinaryLabel::Negative,
                    probs: vec![0.9, 0.0],
                },
            ],
        };
        p.write(&path).unwrap();
        assert_eq!(Predictions::read(&path).unwrap(), p);
        assert_eq!(p.column("svm"), Some(1));
    }

    #[test]
    fn summary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let mut s = ExitSummary {
            counts: [[0; 5]; pexit_core::domain::N_SECTORS],
        };
        s.counts[1][1] = 2;
        s.counts[5][4] = 1;
        let (h, rows) = summary_rows(&s);
        write_table(&path, &h, &rows).unwrap();
        assert_eq!(read_summary(&path).unwrap(), s);
        assert_eq!(rows.last().unwrap(), &["total", "0", "2", "0", "0", "1", "3"]);
    }

    #[test]
    fn wrong_header_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, "gamma,tpr,fpr\n0.5,1,0\n").unwrap();
        assert!(matches!(read_roc(&path), Err(Error::Format { .. })));
    }
}
