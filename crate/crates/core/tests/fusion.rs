use pexit_core::fusion::*;
use pexit_core::BinaryLabel::{self, Negative as N, Positive as P};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = BinaryLabel> {
    prop_oneof![Just(P), Just(N)]
}

#[test]
fn truth_tables_for_all_eight_inputs() {
    for bits in 0u8..8 {
        let v = [0, 1, 2].map(|k| BinaryLabel::from_bool(bits >> k & 1 == 1));
        let pos = v.iter().filter(|l| l.is_positive()).count();
        let majority = fuse_majority(v[0], v[1], v[2]);
        let unanimity = fuse_unanimity(v[0], v[1], v[2]);
        assert_eq!(majority, BinaryLabel::from_bool(pos >= 2), "{v:?}");
        assert_eq!(unanimity, BinaryLabel::from_bool(pos == 3), "{v:?}");
        assert_eq!(fuse(FusionMode::Majority, v[0], v[1], v[2]), majority);
        assert_eq!(fuse(FusionMode::Unanimity, v[0], v[1], v[2]), unanimity);
    }
}

proptest! {
    #[test]
    fn permutation_invariant_and_unanimity_is_stricter(a in label(), b in label(), c in label()) {
        for f in [fuse_majority, fuse_unanimity] {
            let r = f(a, b, c);
            for p in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                prop_assert_eq!(f(p.0, p.1, p.2), r);
            }
        }
        if fuse_unanimity(a, b, c).is_positive() {
            prop_assert!(fuse_majority(a, b, c).is_positive());
        }
    }

    #[test]
    fn counts_are_integral(rows in prop::collection::vec((label(), label(), label(), label()), 1..60)) {
        let triples: Vec<_> = rows.iter().map(|&(a, b, c, t)| TriplePrediction::from_labels(a, b, c, t)).collect();
        let r = voting_dynamics(&triples, AgreeConditioning::AgreedLabel).unwrap();
        let n = triples.len() as f64;
        let ar = r.ar.unwrap() * n;
        prop_assert!((ar - ar.round()).abs() < 1e-9);
        prop_assert_eq!(r.counts.agree, r.counts.agree_pos + r.counts.agree_neg);
        let split: u64 = r.counts.minority.iter().sum();
        prop_assert_eq!(r.counts.agree + split, r.counts.n);
        for v in r.table_row().into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

// (lr, rf, svm, truth), enumerated by hand:
//  agreement on P: rows 0, 1 (one correct)      -> tari 1/2
//  agreement on N: rows 2, 3, 4 (two correct)   -> tarni 2/3
//  lr alone: rows 5 (right), 6 (wrong)          -> tlr_min 1/2
//  rf alone: row 7 (right)                      -> trf_min 1
//  svm alone: rows 8 (wrong), 9 (right)         -> tsvm_min 1/2
const FIXTURE: [(BinaryLabel, BinaryLabel, BinaryLabel, BinaryLabel); 10] = [
    (P, P, P, P),
    (P, P, P, N),
    (N, N, N, N),
    (N, N, N, N),
    (N, N, N, P),
    (P, N, N, P),
    (N, P, P, P),
    (P, N, P, N),
    (P, P, N, P),
    (N, N, P, P),
];

fn fixture() -> Vec<TriplePrediction> {
    FIXTURE
        .iter()
        .map(|&(a, b, c, t)| TriplePrediction::from_labels(a, b, c, t))
        .collect()
}

#[test]
fn ten_sample_fixture() {
    let t = fixture();
    let r = voting_dynamics(&t, AgreeConditioning::AgreedLabel).unwrap();
    assert_eq!(r.ar, Some(0.5));
    assert_eq!(r.tari, Some(0.5));
    assert_eq!(r.tarni, Some(2.0 / 3.0));
    assert_eq!(r.tlr_min, Some(0.5));
    assert_eq!(r.trf_min, Some(1.0));
    assert_eq!(r.tsvm_min, Some(0.5));
    assert_eq!(
        r.table_row(),
        [Some(0.5), Some(0.5), Some(2.0 / 3.0), Some(1.0), Some(0.5), Some(0.5)]
    );

    let any = voting_dynamics(&t, AgreeConditioning::AnyAgreement).unwrap();
    // correct positive and negative agreements over all five agreements
    assert_eq!(any.tari, Some(0.2));
    assert_eq!(any.tarni, Some(0.4));

    let majority = fused_labels(&t, FusionMode::Majority);
    assert_eq!(majority, [P, P, N, N, N, N, P, P, P, N]);
    let unanimity = fused_labels(&t, FusionMode::Unanimity);
    assert_eq!(unanimity, [P, P, N, N, N, N, N, N, N, N]);
}

#[test]
fn thresholded_triples_match_their_probabilities() {
    let g = Gammas { lr: 0.4, rf: 0.5, svm: 0.6 };
    let t = TriplePrediction::new([0.45, 0.5, 0.61], g, P);
    assert_eq!(t.labels(), [P, N, P]);
    assert_eq!(t.fused(FusionMode::Majority), P);
    assert_eq!(t.fused(FusionMode::Unanimity), N);
}
