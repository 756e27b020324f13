use crate::domain::{CompanyRecord, ExitStatus, N_SECTORS};

/// Sector x exit-outcome count table. Rows follow sector codes 1..=9,
/// columns follow [`ExitStatus::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExitSummary {
    pub counts: [[u64; 5]; N_SECTORS],
}

impl ExitSummary {
    /// Count for 1-based `sector`.
    pub fn cell(&self, sector: u8, exit: ExitStatus) -> u64 {
        self.counts[usize::from(sector) - 1][exit.index()]
    }

    pub fn row_total(&self, sector: u8) -> u64 {
        self.counts[usize::from(sector) - 1].iter().sum()
    }

    pub fn column_total(&self, exit: ExitStatus) -> u64 {
        self.counts.iter().map(|r| r[exit.index()]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn summarize<'a, I>(records: I) -> ExitSummary
where
    I: IntoIterator<Item = &'a CompanyRecord>,
{
    let mut s = ExitSummary::default();
    for r in records {
        s.counts[usize::from(r.sector) - 1][r.exit.index()] += 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::RoundRecord;
    use alloc::vec;

    fn rec(sector: u8, exit: ExitStatus) -> CompanyRecord {
        CompanyRecord {
            company_id: "x".into(),
            sector,
            foundation_year: 2000,
            rounds: vec![RoundRecord {
                year: 2001,
                investor_ids: vec![],
                vix: 15.0,
            }],
            exit,
            exit_year: None,
        }
    }

    #[test]
    fn empty_is_all_zero() {
        assert_eq!(summarize(&[]), ExitSummary::default());
    }

    #[test]
    fn hand_count() {
        let recs = [
            rec(2, ExitStatus::Ipo),
            rec(2, ExitStatus::Ipo),
            rec(6, ExitStatus::Private),
        ];
        let s = summarize(&recs);
        assert_eq!(s.cell(2, ExitStatus::Ipo), 2);
        assert_eq!(s.cell(6, ExitStatus::Private), 1);
        assert_eq!(s.row_total(2), 2);
        assert_eq!(s.column_total(ExitStatus::Ipo), 2);
        assert_eq!(s.total(), 3);
    }
}
