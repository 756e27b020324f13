//! Companies, rounds, exit outcomes, and the two pre-learning transforms:
//! collapsing the five exit outcomes into a binary label and restricting the
//! data to a window of first-round years.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

pub const N_SECTORS: usize = 9;
pub const MAX_ROUNDS: usize = 3;

pub const SECTOR_NAMES: [&str; N_SECTORS] = [
    "Communications",
    "Computer",
    "Electronics",
    "Biotech/Pharma",
    "Medical/Health",
    "Energy",
    "Consumer",
    "Industrial",
    "Other",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExitStatus {
    Bankrupt,
    Ipo,
    Lbo,
    Ma,
    Private,
}

impl ExitStatus {
    /// Column order of the exit summary table.
    pub const ALL: [ExitStatus; 5] = [
        ExitStatus::Bankrupt,
        ExitStatus::Ipo,
        ExitStatus::Lbo,
        ExitStatus::Ma,
        ExitStatus::Private,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExitStatus::Bankrupt => "Bankrupt",
            ExitStatus::Ipo => "IPO",
            ExitStatus::Lbo => "LBO",
            ExitStatus::Ma => "MA",
            ExitStatus::Private => "Private",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExitStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "IPO" | "Ipo" | "ipo" => Ok(ExitStatus::Ipo),
            "MA" | "M&A" | "Ma" | "ma" => Ok(ExitStatus::Ma),
            "LBO" | "Lbo" | "lbo" => Ok(ExitStatus::Lbo),
            "Bankrupt" | "bankrupt" => Ok(ExitStatus::Bankrupt),
            "Private" | "private" => Ok(ExitStatus::Private),
            other => Err(Error::param(
                "exit_status",
                alloc::format!("unknown exit status `{other}`"),
            )),
        }
    }
}

/// Binary target. `Positive` is the "goes public or gets acquired" class.
/// The derived order puts `Negative < Positive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryLabel {
    Negative,
    Positive,
}

impl BinaryLabel {
    #[inline]
    pub fn is_positive(self) -> bool {
        self == BinaryLabel::Positive
    }

    #[inline]
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            BinaryLabel::Positive
        } else {
            BinaryLabel::Negative
        }
    }

    /// `+1.0` / `-1.0`, the margin-classifier convention.
    #[inline]
    pub fn sign(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Positive => "1",
            BinaryLabel::Negative => "0",
        }
    }
}

/// How the five exit outcomes collapse into the binary label. Only the LBO
/// direction is configurable; the other four are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelMapping {
    lbo: BinaryLabel,
}

impl Default for LabelMapping {
    /// LBO counts as an acquisition (positive).
    fn default() -> Self {
        LabelMapping {
            lbo: BinaryLabel::Positive,
        }
    }
}

impl LabelMapping {
    pub fn with_lbo(lbo: BinaryLabel) -> Self {
        LabelMapping { lbo }
    }

    pub fn lbo(&self) -> BinaryLabel {
        self.lbo
    }

    pub fn get(&self, exit: ExitStatus) -> BinaryLabel {
        match exit {
            ExitStatus::Ipo | ExitStatus::Ma => BinaryLabel::Positive,
            ExitStatus::Bankrupt | ExitStatus::Private => BinaryLabel::Negative,
            ExitStatus::Lbo => self.lbo,
        }
    }
}

pub fn aggregate_label(exit: ExitStatus, mapping: &LabelMapping) -> BinaryLabel {
    mapping.get(exit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub year: i32,
    pub investor_ids: Vec<String>,
    pub vix: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompanyRecord {
    pub company_id: String,
    /// 1-based sector code, 1..=9.
    pub sector: u8,
    pub foundation_year: i32,
    /// Rounds 1..=3 in order; at least one.
    pub rounds: Vec<RoundRecord>,
    pub exit: ExitStatus,
    pub exit_year: Option<i32>,
}

impl CompanyRecord {
    /// Checks the record invariants: sector in 1..=9, one to three rounds in
    /// nondecreasing year order, no round before foundation, VIX finite and
    /// nonnegative.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidRecord {
            id: self.company_id.clone(),
            reason,
        };
        if !(1..=N_SECTORS as u8).contains(&self.sector) {
            return Err(bad(alloc::format!("sector {} outside 1..=9", self.sector)));
        }
        if self.rounds.is_empty() {
            return Err(bad("company has no investment rounds".into()));
        }
        if self.rounds.len() > MAX_ROUNDS {
            return Err(bad(alloc::format!(
                "{} rounds, at most {MAX_ROUNDS} are kept",
                self.rounds.len()
            )));
        }
        let mut prev = i32::MIN;
        for (k, r) in self.rounds.iter().enumerate() {
            if r.year < self.foundation_year {
                return Err(bad(alloc::format!(
                    "round {} year {} precedes foundation year {}",
                    k + 1,
                    r.year,
                    self.foundation_year
                )));
            }
            if r.year < prev {
                return Err(bad(alloc::format!("round {} out of year order", k + 1)));
            }
            if !r.vix.is_finite() || r.vix < 0.0 {
                return Err(bad(alloc::format!("round {} vix {} invalid", k + 1, r.vix)));
            }
            prev = r.year;
        }
        Ok(())
    }

    pub fn first_round_year(&self) -> Option<i32> {
        self.rounds.first().map(|r| r.year)
    }

    pub fn label(&self, mapping: &LabelMapping) -> BinaryLabel {
        mapping.get(self.exit)
    }
}

/// Records whose first round falls in `[year_lo, year_hi]`, in input order.
pub fn censor_filter(records: &[CompanyRecord], year_lo: i32, year_hi: i32) -> Vec<CompanyRecord> {
    records
        .iter()
        .filter(|r| {
            r.first_round_year()
                .is_some_and(|y| (year_lo..=year_hi).contains(&y))
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn company(id: &str, first_round: i32) -> CompanyRecord {
        CompanyRecord {
            company_id: id.into(),
            sector: 2,
            foundation_year: first_round - 1,
            rounds: vec![RoundRecord {
                year: first_round,
                investor_ids: vec![],
                vix: 20.0,
            }],
            exit: ExitStatus::Private,
            exit_year: None,
        }
    }

    #[test]
    fn label_aggregation() {
        let m = LabelMapping::default();
        assert_eq!(aggregate_label(ExitStatus::Ipo, &m), BinaryLabel::Positive);
        assert_eq!(aggregate_label(ExitStatus::Bankrupt, &m), BinaryLabel::Negative);
        assert_eq!(aggregate_label(ExitStatus::Lbo, &m), BinaryLabel::Positive);
        assert_eq!(aggregate_label(ExitStatus::Ma, &m), BinaryLabel::Positive);
        assert_eq!(aggregate_label(ExitStatus::Private, &m), BinaryLabel::Negative);
        let alt = LabelMapping::with_lbo(BinaryLabel::Negative);
        assert_eq!(aggregate_label(ExitStatus::Lbo, &alt), BinaryLabel::Negative);
        assert_eq!(aggregate_label(ExitStatus::Ipo, &alt), BinaryLabel::Positive);
    }

    #[test]
    fn default_mapping_class_split_matches_exit_table_totals() {
        // Column totals of the 1996-2011 exit table.
        let totals = [
            (ExitStatus::Bankrupt, 5096u32),
            (ExitStatus::Ipo, 3973),
            (ExitStatus::Lbo, 6196),
            (ExitStatus::Ma, 15558),
            (ExitStatus::Private, 23874),
        ];
        let m = LabelMapping::default();
        let pos: u32 = totals
            .iter()
            .filter(|(s, _)| m.get(*s).is_positive())
            .map(|(_, c)| c)
            .sum();
        let neg: u32 = totals.iter().map(|(_, c)| c).sum::<u32>() - pos;
        assert_eq!((pos, neg), (25727, 28970));
    }

    #[test]
    fn censoring_window() {
        let recs = vec![company("a", 1996), company("b", 2014), company("c", 2011), company("d", 1995)];
        let kept = censor_filter(&recs, 1996, 2011);
        let ids: Vec<_> = kept.iter().map(|r| r.company_id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert_eq!(censor_filter(&kept, 1996, 2011), kept);
        assert!(censor_filter(&[], 1996, 2011).is_empty());
    }

    #[test]
    fn validation_rejects_bad_records() {
        let mut r = company("x", 2000);
        assert!(r.validate().is_ok());
        r.rounds[0].year = 1990;
        assert!(matches!(r.validate(), Err(Error::InvalidRecord { .. })));
        let mut r = company("y", 2000);
        r.rounds.clear();
        assert!(r.validate().is_err());
        let mut r = company("z", 2000);
        r.sector = 10;
        assert!(r.validate().is_err());
    }

    #[test]
    fn exit_status_parse_round_trip() {
        for s in ExitStatus::ALL {
            assert_eq!(s.as_str().parse::<ExitStatus>().unwrap(), s);
        }
        assert!("Unknown".parse::<ExitStatus>().is_err());
    }
}
