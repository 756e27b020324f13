//! Company records as CSV, one row per company with the rounds flattened
//! into three fixed column groups.
//!
//! ```text
//! company_id,sector,foundation_year,exit_status,exit_year,r1_year,r1_vix,r1_investors,...,r3_investors
//! c0000001,2,1999,IPO,2004,2001,24.5,inv0012;inv0490,2003,18.2,inv0012,,,
//! ```
//!
//! A missing round leaves its three fields empty and `exit_year` may be
//! empty. Rows that fail to parse or violate the record invariants are
//! skipped and reported; a wrong header is fatal.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use pexit_core::domain::MAX_ROUNDS;
use pexit_core::{CompanyRecord, ExitStatus, RoundRecord};

use crate::error::{csv_error, Error, Result};

pub const HEADER: [&str; 14] = [
    "company_id",
    "sector",
    "foundation_year",
    "exit_status",
    "exit_year",
    "r1_year",
    "r1_vix",
    "r1_investors",
    "r2_year",
    "r2_vix",
    "r2_investors",
    "r3_year",
    "r3_vix",
    "r3_investors",
];

/// A rejected data row. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub line: u64,
    pub company_id: Option<String>,
    pub reason: String,
}

impl std::fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.company_id {
            Some(id) => write!(f, "line {} ({id}): {}", self.line, self.reason),
            None => write!(f, "line {}: {}", self.line, self.reason),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub records: Vec<CompanyRecord>,
    pub rejected: Vec<RowDiagnostic>,
}

pub fn load_csv(path: &Path) -> Result<Loaded> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(file, path)
}

/// Parses records from any reader; `source` only labels errors.
pub fn read_records<R: Read>(reader: R, source: &Path) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != HEADER {
        return Err(Error::format(
            source,
            format!("expected header `{}`, found `{}`", HEADER.join(","), got.join(",")),
        ));
    }
    let mut out = Loaded::default();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(csv_error(source, e)),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.rejected.push(RowDiagnostic {
                    line,
                    company_id: None,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.rejected.push(RowDiagnostic {
                line,
                company_id: row.get(0).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
                reason,
            }),
        }
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<CompanyRecord, String> {
    if row.len() != HEADER.len() {
        return Err(format!("{} fields, expected {}", row.len(), HEADER.len()));
    }
    let f = |i: usize| row[i].trim();
    let company_id = f(0).to_string();
    if company_id.is_empty() {
        return Err("empty company_id".into());
    }
    let sector: u8 = num(f(1), "sector")?;
    let foundation_year: i32 = num(f(2), "foundation_year")?;
    let exit: ExitStatus = f(3).parse().map_err(|_| format!("unknown exit_status `{}`", f(3)))?;
    let exit_year = if f(4).is_empty() {
        None
    } else {
        Some(num(f(4), "exit_year")?)
    };
    let mut rounds = Vec::new();
    let mut ended = false;
    for k in 0..MAX_ROUNDS {
        let base = 5 + 3 * k;
        let (year, vix, inv) = (f(base), f(base + 1), f(base + 2));
        if year.is_empty() && vix.is_empty() && inv.is_empty() {
            ended = true;
            continue;
        }
        if ended {
            return Err(format!("round {} present after a missing round", k + 1));
        }
        if year.is_empty() || vix.is_empty() {
            return Err(format!("round {} is missing its year or vix", k + 1));
        }
        let investor_ids = inv
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        rounds.push(RoundRecord {
            year: num(year, "round year")?,
            vix: num(vix, "vix")?,
            investor_ids,
        });
    }
    let rec = CompanyRecord {
        company_id,
        sector,
        foundation_year,
        rounds,
        exit,
        exit_year,
    };
    rec.validate().map_err(|e| match e {
        pexit_core::Error::InvalidRecord { reason, .. } => reason,
        other => other.to_string(),
    })?;
    Ok(rec)
}

fn num<T: std::str::FromStr>(s: &str, field: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("{field} `{s}` is not a valid number"))
}

pub fn write_csv(path: &Path, records: &[CompanyRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records, path)
}

/// Writes the canonical form: trimmed fields, shortest round-trip numbers.
pub fn write_records<W: Write>(writer: W, records: &[CompanyRecord], dest: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER).map_err(|e| csv_error(dest, e))?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.company_id.clone(),
            r.sector.to_string(),
            r.foundation_year.to_string(),
            r.exit.as_str().to_string(),
            r.exit_year.map(|y| y.to_string()).unwrap_or_default(),
        ];
        for k in 0..MAX_ROUNDS {
            match r.rounds.get(k) {
                Some(round) => {
                    row.push(round.year.to_string());
                    row.push(round.vix.to_string());
                    row.push(round.investor_ids.join(";"));
                }
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&row).map_err(|e| csv_error(dest, e))?;
    }
    w.flush().map_err(|e| Error::io(dest, e))
}
