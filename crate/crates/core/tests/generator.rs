use pexit_core::features::{build_investor_index, feature_matrix};
use pexit_core::synth::{generate_synthetic, SyntheticConfig};
use pexit_core::{LabelMapping, N_FEATURES};

fn cfg(n: usize, seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        n_companies: n,
        seed,
        ..Default::default()
    }
}

fn positive_share(c: &SyntheticConfig) -> f64 {
    let m = LabelMapping::default();
    let recs = generate_synthetic(c).unwrap();
    recs.iter().filter(|r| r.label(&m).is_positive()).count() as f64 / recs.len() as f64
}

#[test]
fn same_seed_same_records() {
    let a = generate_synthetic(&cfg(2000, 17)).unwrap();
    assert_eq!(a, generate_synthetic(&cfg(2000, 17)).unwrap());
    assert_ne!(a, generate_synthetic(&cfg(2000, 18)).unwrap());
    // a longer run starts with a different investor index, but the same draws
    let longer = generate_synthetic(&cfg(2500, 17)).unwrap();
    for (x, y) in a.iter().zip(&longer) {
        assert_eq!((&x.company_id, x.sector, &x.rounds), (&y.company_id, y.sector, &y.rounds));
    }
}

#[test]
fn sector_shares_follow_the_weights() {
    let c = cfg(54_697, 1);
    let recs = generate_synthetic(&c).unwrap();
    let mut counts = [0usize; 9];
    for r in &recs {
        counts[r.sector as usize - 1] += 1;
    }
    for (k, (&got, &w)) in counts.iter().zip(&c.sector_weights).enumerate() {
        let share = got as f64 / recs.len() as f64;
        assert!((share - w).abs() <= 0.01, "sector {}: {share} vs {w}", k + 1);
    }
}

#[test]
fn zero_signal_gives_fair_coin_labels() {
    let c = SyntheticConfig {
        signal_coefficients: [0.0; N_FEATURES + 1],
        ..cfg(100_000, 2)
    };
    let share = positive_share(&c);
    assert!((share - 0.5).abs() <= 0.01, "positive share {share}");
}

#[test]
fn planted_rule_is_about_sixty_five_percent_accurate() {
    let c = cfg(20_000, 3);
    let recs = generate_synthetic(&c).unwrap();
    let x = feature_matrix(&recs, &build_investor_index(&recs));
    let m = LabelMapping::default();
    let hits = x
        .iter_rows()
        .zip(&recs)
        .filter(|(row, r)| (c.planted_score(row) > 0.0) == r.label(&m).is_positive())
        .count();
    let acc = hits as f64 / recs.len() as f64;
    assert!((0.62..=0.68).contains(&acc), "oracle accuracy {acc}");
    let share = positive_share(&c);
    assert!((0.3..=0.5).contains(&share), "positive share {share}");
}
