//! Synthetic company generator with a planted logistic label model.
//!
//! Structure draws (sectors, rounds, investors, VIX) come first. The labels
//! are then drawn from `logistic(c0 + c . x)` where `x` is the output of the
//! same featurizer the classifiers see, with the investor index built over
//! the whole generated population. Scoring records with the planted
//! coefficients therefore gives the best accuracy any model can expect.
//!
//! Distribution choices, all knobs of this generator rather than facts about
//! real deal data:
//! * first-round year uniform over `year_range`;
//! * foundation-to-first-round lag and round-to-round gaps geometric
//!   (`p = 0.35`), redrawn until they fall in `0..=10` years;
//! * a second round with probability 0.65, a third with probability 0.6
//!   given a second;
//! * `Binomial(5, 0.4)` investors per round, drawn without repeats from a
//!   Zipf-weighted pool so a few investors are in many deals;
//! * VIX log-normal with median 19 and log-sd 0.35, clipped to `[9, 80]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric, LogNormal, Zipf};

use crate::domain::{BinaryLabel, CompanyRecord, ExitStatus, RoundRecord, N_SECTORS};
use crate::error::{Error, Result};
use crate::features::{build_investor_index, column, featurize, slot, N_FEATURES};
use crate::math;
use crate::rng::{self, tag};

/// Row totals of the 1996-2011 exit table, by sector.
pub const REFERENCE_SECTOR_COUNTS: [u64; N_SECTORS] =
    [3096, 13320, 3991, 4215, 4239, 1207, 7898, 9465, 7266];

const LAG_P: f64 = 0.35;
const MAX_LAG: u64 = 10;
const P_SECOND_ROUND: f64 = 0.65;
const P_THIRD_ROUND: f64 = 0.6;
const VIX_MEDIAN: f64 = 19.0;
const VIX_LOG_SD: f64 = 0.35;
const VIX_RANGE: (f64, f64) = (9.0, 80.0);
const INVESTOR_TRIALS: u64 = 5;
const INVESTOR_P: f64 = 0.4;
/// Share of IPO among generated positives and of bankruptcies among
/// negatives, from the exit table's column totals.
const IPO_SHARE: f64 = 3973.0 / (3973.0 + 15558.0);
const BANKRUPT_SHARE: f64 = 5096.0 / (5096.0 + 23874.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_companies: usize,
    pub seed: u64,
    pub sector_weights: [f64; N_SECTORS],
    /// Intercept followed by one weight per feature column.
    pub signal_coefficients: [f64; N_FEATURES + 1],
    pub year_range: (i32, i32),
    pub investor_pool_size: usize,
    pub zipf_exponent: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let total: u64 = REFERENCE_SECTOR_COUNTS.iter().sum();
        let mut sector_weights = [0.0; N_SECTORS];
        for (w, c) in sector_weights.iter_mut().zip(REFERENCE_SECTOR_COUNTS) {
            *w = c as f64 / total as f64;
        }
        SyntheticConfig {
            n_companies: 20_000,
            seed: 0,
            sector_weights,
            signal_coefficients: default_signal(),
            year_range: (1996, 2011),
            investor_pool_size: 3000,
            zipf_exponent: 1.1,
        }
    }
}

/// Planted coefficients: investor quality in every round, deal size, a
/// late-start penalty and a mild market-mood effect.
pub fn default_signal() -> [f64; N_FEATURES + 1] {
    let mut c = [0.0; N_FEATURES + 1];
    let mut set = |col: usize, v: f64| c[col + 1] = v;
    set(column(1, slot::LAG), -0.05);
    set(column(1, slot::VIX), -0.009);
    set(column(1, slot::N_INVESTORS), 0.07);
    set(column(1, slot::TOP_RANK), 1.1);
    set(column(1, slot::MEAN_RANK), 0.65);
    set(column(2, slot::TOP_RANK), 0.65);
    set(column(2, slot::PRESENT), 0.1);
    set(column(3, slot::TOP_RANK), 0.45);
    set(column(3, slot::PRESENT), 0.1);
    c[0] = -0.95;
    c
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_companies == 0 {
            return Err(Error::param("n_companies", "must be at least 1"));
        }
        if self.sector_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param("sector_weights", "must be finite and nonnegative"));
        }
        let sum: f64 = self.sector_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("sector_weights", format!("sum to {sum}, not 1")));
        }
        if self.signal_coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("signal_coefficients", "must be finite"));
        }
        if self.year_range.0 > self.year_range.1 {
            return Err(Error::param("year_range", "lower bound exceeds upper bound"));
        }
        if self.investor_pool_size == 0 {
            return Err(Error::param("investor_pool_size", "must be at least 1"));
        }
        if !(self.zipf_exponent > 0.0 && self.zipf_exponent.is_finite()) {
            return Err(Error::param("zipf_exponent", "must be positive"));
        }
        Ok(())
    }

    /// Planted linear score of a feature row.
    pub fn planted_score(&self, x: &[f64]) -> f64 {
        self.signal_coefficients[0]
            + self.signal_coefficients[1..]
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Vec<CompanyRecord>> {
    cfg.validate()?;
    let mut rng = rng::derive(cfg.seed, tag::SYNTH, 0);

    let lag = Geometric::new(LAG_P).expect("valid p");
    let vix = LogNormal::new(math::ln(VIX_MEDIAN), VIX_LOG_SD).expect("valid sd");
    let n_inv = Binomial::new(INVESTOR_TRIALS, INVESTOR_P).expect("valid p");
    let zipf = Zipf::new(cfg.investor_pool_size as f64, cfg.zipf_exponent)
        .map_err(|_| Error::param("zipf_exponent", "rejected by sampler"))?;
    let mut cum = [0.0; N_SECTORS];
    let mut acc = 0.0;
    for (c, w) in cum.iter_mut().zip(cfg.sector_weights) {
        acc += w;
        *c = acc;
    }

    let draw_lag = |rng: &mut rng::Stream| loop {
        let v = lag.sample(rng);
        if v <= MAX_LAG {
            break v as i32;
        }
    };
    let width = (cfg.investor_pool_size as f64).log10_ceil();

    let mut records = Vec::with_capacity(cfg.n_companies);
    for i in 0..cfg.n_companies {
        let u: f64 = rng.random::<f64>() * acc;
        let sector = cum.iter().position(|&c| u < c).unwrap_or(N_SECTORS - 1) as u8 + 1;
        let first = rng.random_range(cfg.year_range.0..=cfg.year_range.1);
        let foundation_year = first - draw_lag(&mut rng);
        let n_rounds = if rng.random_bool(P_SECOND_ROUND) {
            if rng.random_bool(P_THIRD_ROUND) {
                3
            } else {
                2
            }
        } else {
            1
        };
        let mut rounds = Vec::with_capacity(n_rounds);
        let mut year = first;
        for k in 0..n_rounds {
            if k > 0 {
                year += draw_lag(&mut rng);
            }
            let count = n_inv.sample(&mut rng) as usize;
            let mut investor_ids: Vec<String> = Vec::with_capacity(count);
            while investor_ids.len() < count.min(cfg.investor_pool_size) {
                let id = zipf.sample(&mut rng) as usize;
                let name = format!("inv{id:0width$}");
                if !investor_ids.contains(&name) {
                    investor_ids.push(name);
                }
            }
            let v: f64 = vix.sample(&mut rng);
            rounds.push(RoundRecord {
                year,
                investor_ids,
                vix: round2(v.clamp(VIX_RANGE.0, VIX_RANGE.1)),
            });
        }
        records.push(CompanyRecord {
            company_id: format!("c{i:07}"),
            sector,
            foundation_year,
            rounds,
            exit: ExitStatus::Private,
            exit_year: None,
        });
    }

    let index = build_investor_index(&records);
    let mut rng = rng::derive(cfg.seed, tag::SYNTH, 1);
    for rec in &mut records {
        let x = featurize(rec, &index);
        let p = math::logistic(cfg.planted_score(&x.0));
        let label = BinaryLabel::from_bool(rng.random::<f64>() < p);
        let last = rec.rounds.last().map_or(rec.foundation_year, |r| r.year);
        let (exit, exit_year) = match label {
            BinaryLabel::Positive if rng.random_bool(IPO_SHARE) => (ExitStatus::Ipo, true),
            BinaryLabel::Positive => (ExitStatus::Ma, true),
            BinaryLabel::Negative if rng.random_bool(BANKRUPT_SHARE) => {
                (ExitStatus::Bankrupt, true)
            }
            BinaryLabel::Negative => (ExitStatus::Private, false),
        };
        let gap = 1 + draw_lag(&mut rng);
        rec.exit = exit;
        rec.exit_year = exit_year.then_some(last + gap);
    }
    Ok(records)
}

/// VIX is quoted to two decimals; rounding keeps CSV round trips exact.
fn round2(v: f64) -> f64 {
    math::floor(v * 100.0 + 0.5) / 100.0
}

trait DigitWidth {
    fn log10_ceil(self) -> usize;
}

impl DigitWidth for f64 {
    fn log10_ceil(self) -> usize {
        let mut w = 1;
        let mut p = 10.0;
        while p <= self {
            p *= 10.0;
            w += 1;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_weights_sum_to_one() {
        let cfg = SyntheticConfig::default();
        assert!((cfg.sector_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((cfg.sector_weights[1] - 13320.0 / 54697.0).abs() < 1e-15);
        assert_eq!(REFERENCE_SECTOR_COUNTS.iter().sum::<u64>(), 54697);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SyntheticConfig::default();
        cfg.sector_weights[0] += 0.1;
        assert!(generate_synthetic(&cfg).is_err());
        let cfg = SyntheticConfig {
            n_companies: 0,
            ..Default::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
        let cfg = SyntheticConfig {
            year_range: (2011, 1996),
            ..Default::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }

    #[test]
    fn generated_records_are_valid() {
        let cfg = SyntheticConfig {
            n_companies: 500,
            seed: 3,
            ..Default::default()
        };
        let recs = generate_synthetic(&cfg).unwrap();
        assert_eq!(recs.len(), 500);
        for r in &recs {
            r.validate().unwrap();
            let y = r.first_round_year().unwrap();
            assert!((1996..=2011).contains(&y));
            assert!(!matches!(r.exit, ExitStatus::Lbo));
            assert_eq!(r.exit_year.is_none(), r.exit == ExitStatus::Private);
        }
    }

    #[test]
    fn widths() {
        assert_eq!(3000f64.log10_ceil(), 4);
        assert_eq!(9f64.log10_ceil(), 1);
        assert_eq!(10f64.log10_ceil(), 2);
    }
}
