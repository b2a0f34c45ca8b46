use super::*;
use crate::datagen::{default_score, generate_dataset, DatagenConfig};
use crate::synthtree::{Environment, DEFAULT_T_MAX};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest, Strategy};

type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn set(pairs: Vec<(Q, Q, Q)>, range: Option<Q>) -> PropertyPairSet<Q> {
    PropertyPairSet {
        property: "x".into(),
        pairs: pairs
            .into_iter()
            .map(|(a, b, s)| PropertyPair {
                target: "C".into(),
                product: "C".into(),
                target_value: a,
                product_value: b,
                similarity: s,
            })
            .collect(),
        range,
    }
}

#[test]
fn sali_hand_cases() {
    let same = set(vec![(q(3, 1), q(3, 1), q(1, 2)), (q(7, 1), q(7, 1), q(0, 1))], None);
    assert_eq!(sali(&same), Ok(q(0, 1)));
    let one = set(vec![(q(1, 1), q(3, 2), q(1, 2))], Some(q(1, 1)));
    assert_eq!(sali(&one), Ok(q(1, 1)));
    let f = PropertyPairSet {
        property: "x".into(),
        pairs: vec![PropertyPair {
            target: "C".into(),
            product: "C".into(),
            target_value: 1.0,
            product_value: 1.5,
            similarity: 0.5,
        }],
        range: Some(1.0),
    };
    assert_eq!(sali(&f), Ok(1.0));
}

#[test]
fn sali_excludes_identical_pairs() {
    let s = set(vec![(q(0, 1), q(1, 1), q(1, 1)), (q(0, 1), q(1, 1), q(0, 1))], None);
    assert_eq!(sali(&s), Ok(q(1, 1)));
    let all = set(vec![(q(0, 1), q(1, 1), q(1, 1))], None);
    assert_eq!(sali(&all), Err(MetricsError::EmptyAfterExclusion));
    assert_eq!(sali(&set(vec![], None)), Err(MetricsError::EmptyAfterExclusion));
    let flat = set(vec![(q(2, 1), q(2, 1), q(0, 1))], None);
    assert_eq!(sali(&flat), Err(MetricsError::ZeroRange));
    let bad = set(vec![(q(0, 1), q(1, 1), q(3, 2))], None);
    assert_eq!(sali(&bad), Err(MetricsError::Similarity(0)));
}

fn rational_pairs() -> impl Strategy<Value = Vec<(Q, Q, Q)>> {
    prop::collection::vec(((-50i64..50, 1i64..7), (-50i64..50, 1i64..7), 0i64..=8), 1..20).prop_map(|v| {
        v.into_iter()
            .map(|((a, ad), (b, bd), s)| (q(a, ad), q(b, bd), q(s, 8)))
            .collect()
    })
}

proptest! {
    #[test]
    fn sali_matches_direct_summation(pairs in rational_pairs()) {
        let s = set(pairs.clone(), None);
        let values: Vec<Q> = pairs.iter().flat_map(|p| [p.0.clone(), p.1.clone()]).collect();
        let range = values.iter().max().unwrap() - values.iter().min().unwrap();
        let kept: Vec<&(Q, Q, Q)> = pairs.iter().filter(|p| p.2 != q(1, 1)).collect();
        match sali(&s) {
            Ok(v) => {
                let mut total = q(0, 1);
                for (a, b, sim) in &kept {
                    let d = if a > b { a - b } else { b - a };
                    total += d / (&range * (q(1, 1) - sim));
                }
                prop_assert_eq!(v, total / q(kept.len() as i64, 1));
            }
            Err(MetricsError::ZeroRange) => prop_assert_eq!(range, q(0, 1)),
            Err(MetricsError::EmptyAfterExclusion) => prop_assert!(kept.is_empty()),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn sali_is_invariant_under_affine_rescaling(pairs in rational_pairs(), a in (1i64..20, 1i64..20), b in -30i64..30) {
        let (a, b) = (q(a.0, a.1), q(b, 1));
        let scaled: Vec<(Q, Q, Q)> = pairs.iter().map(|(x, y, s)| (&a * x + &b, &a * y + &b, s.clone())).collect();
        prop_assert_eq!(sali(&set(pairs, None)), sali(&set(scaled, None)));
    }

    #[test]
    fn pearson_is_bounded(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..30)) {
        let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}

#[test]
fn pearson_hand_cases() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
    let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
    assert!((pearson(&x, &rev).unwrap() + 1.0).abs() < 1e-15);
    // Deviations (-2,-1,0,1,2) and (-2,0,1,0,1): sxy = 6, sxx = 10, syy = 6.
    let y = [2.0, 4.0, 5.0, 4.0, 5.0];
    assert!((pearson(&x, &y).unwrap() - 6.0 / 60f64.sqrt()).abs() < 1e-15);
    assert_eq!(pearson(&[1.0], &[2.0]), Err(MetricsError::TooFewPoints(1)));
    assert_eq!(
        pearson(&[1.0, 1.0], &[2.0, 3.0]),
        Err(MetricsError::DegenerateVariance("target"))
    );
}

#[test]
fn correlation_report_from_records() {
    let rec = |t: &str, p: &str, s: f64| TargetRecord {
        target: t.into(),
        recovered: t == p,
        similarity: s,
        product: Some(p.into()),
        tree: None,
    };
    let records = vec![
        rec("CC(=O)NC", "CC(=O)NC", 1.0),
        rec("CC(=O)NCc1ccccc1", "CC(=O)NCC", 0.4),
        rec("CCCCNC(C)=O", "CCCNC(C)=O", 0.7),
    ];
    let heavy = property_pairs(&records, DescriptorKind::HeavyAtoms).unwrap();
    assert_eq!(
        heavy
            .pairs
            .iter()
            .map(|p| (p.target_value, p.product_value))
            .collect::<Vec<_>>(),
        vec![(5.0, 5.0), (11.0, 6.0), (8.0, 7.0)]
    );
    assert_eq!(heavy.observed_range(), Some(6.0));
    let report = correlation_report(&[heavy]).unwrap();
    assert_eq!(report[0].n, 3);
    let s = (5.0 / 6.0) / 0.6 + (1.0 / 6.0) / 0.3;
    assert!((report[0].sali.unwrap() - s / 2.0).abs() < 1e-12);
    let lines: Vec<&str> = report[0].scatter.lines().collect();
    assert_eq!(lines[0], "target,product,target_value,product_value,similarity");
    assert_eq!(lines.len(), 4);
}

#[test]
fn empty_corpus_summary_is_zero() {
    assert_eq!(corpus_summary(&[]), CorpusSummary::default());
}

#[test]
fn corpus_summary_counts() {
    let w = crate::toy::world();
    let env = Environment::new(&w, DEFAULT_T_MAX);
    let d = generate_dataset(
        &env,
        &DatagenConfig {
            n_target_trees: 60,
            seed: 4,
            ..Default::default()
        },
        &default_score,
    )
    .unwrap();
    let trees: Vec<SyntheticTree> = d.train.into_iter().chain(d.valid).chain(d.test).collect();
    let s = corpus_summary(&trees);
    assert_eq!(s.trees, trees.len());
    assert_eq!(s.template_usage.values().sum::<usize>(), s.reactions);
    assert_eq!(s.depth_histogram.values().sum::<usize>(), trees.len());
    assert_eq!(
        s.reactions_histogram.iter().map(|(k, v)| k * v).sum::<usize>(),
        s.reactions
    );
    assert_eq!(
        s.block_usage.values().sum::<usize>(),
        trees.iter().map(|t| t.leaves().count()).sum::<usize>()
    );
    for t in &trees {
        assert!((1..=t.reaction_count()).contains(&tree_depth(t)));
    }
    let single: Vec<SyntheticTree> = trees.iter().filter(|t| t.reaction_count() == 1).cloned().collect();
    assert!(!single.is_empty());
    let s1 = corpus_summary(&single);
    assert_eq!(s1.depth_histogram, BTreeMap::from([(1, single.len())]));
    assert_eq!(corpus_summary(&trees), s);
}
