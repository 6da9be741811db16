use std::collections::BTreeMap;

use proptest::prelude::*;
use qualnet_core::metrics::{kappa, match_edges, match_sets, precision_recall, psa, MatchPolicy, TextEdge};

fn items() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g", "h"]), 0..10)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn exact() -> MatchPolicy<f64> {
    MatchPolicy::ExactNormalized
}

/// Multiset intersection size: the size of any maximum one-to-one exact matching.
fn overlap(a: &[String], b: &[String]) -> usize {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for x in a {
        counts.entry(x).or_default().0 += 1;
    }
    for x in b {
        counts.entry(x).or_default().1 += 1;
    }
    counts.values().map(|(x, y)| (*x).min(*y)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn psa_matches_formula_and_is_symmetric(a in items(), b in items()) {
        prop_assume!(!(a.is_empty() && b.is_empty()));
        let r = psa(&a, &b, &exact(), None).unwrap();
        let shared = overlap(&a, &b);
        let (x, y) = (a.len() - shared, b.len() - shared);
        let expected = (2 * shared) as f64 / (2 * shared + x + y) as f64;
        prop_assert!((r.value - expected).abs() < 1e-12);
        let rev = psa(&b, &a, &exact(), None).unwrap();
        prop_assert_eq!(r.value, rev.value);
    }

    #[test]
    fn kappa_matches_formula_and_is_bounded(
        pairs in prop::collection::vec((0u8..4, 0u8..4), 1..60)
    ) {
        let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let n = a.len() as f64;
        let po = a.iter().zip(&b).filter(|(x, y)| x == y).count() as f64 / n;
        let pe: f64 = (0u8..4)
            .map(|k| {
                let ra = a.iter().filter(|&&x| x == k).count() as f64 / n;
                let rb = b.iter().filter(|&&x| x == k).count() as f64 / n;
                ra * rb
            })
            .sum();
        match kappa::<f64, _>(&a, &b) {
            Ok(r) => {
                let expected = (po - pe) / (1.0 - pe);
                prop_assert!((r.value - expected).abs() < 1e-12, "{} vs {}", r.value, expected);
                prop_assert!((-1.0..=1.0).contains(&r.value));
            }
            Err(_) => prop_assert!((pe - 1.0).abs() < 1e-12),
        }
    }

    #[test]
    fn ledger_recount(p in items(), g in items()) {
        let m = match_sets(&p, &g, &exact(), None).unwrap();
        let r = precision_recall(&m, &p, &g);
        let tp = r.ledger.iter().filter(|e| e.gold.is_some()).count();
        let fp = r.ledger.iter().filter(|e| e.gold.is_none()).count();
        prop_assert_eq!(r.true_positive, tp);
        prop_assert_eq!(r.false_positive, fp);
        prop_assert_eq!(r.false_negative, r.missed.len());
        prop_assert_eq!(r.true_positive + r.false_positive, p.len());
        prop_assert_eq!(r.true_positive + r.false_negative, g.len());
        prop_assert_eq!(r.true_positive, overlap(&p, &g));
        if !p.is_empty() {
            prop_assert!((r.precision - tp as f64 / p.len() as f64).abs() < 1e-12);
        }
        if !g.is_empty() {
            prop_assert!((r.recall - tp as f64 / g.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_matching_ignores_input_order(
        p in items(), g in items(), seed in any::<u64>()
    ) {
        let matched_texts = |p: &[String], g: &[String]| {
            let mut v: Vec<String> = match_sets(p, g, &exact(), None)
                .unwrap()
                .iter()
                .map(|m| p[m.predicted].clone())
                .collect();
            v.sort();
            v
        };
        let mut p2 = p.clone();
        let mut g2 = g.clone();
        let k = (seed as usize) % (p2.len().max(1));
        p2.rotate_left(k);
        g2.reverse();
        prop_assert_eq!(matched_texts(&p, &g), matched_texts(&p2, &g2));
    }

    #[test]
    fn edge_direction_bounded_by_matches(
        p in prop::collection::vec((0u8..5, 0u8..5), 0..8),
        g in prop::collection::vec((0u8..5, 0u8..5), 0..8),
    ) {
        let to_edges = |v: &[(u8, u8)]| v.iter().filter(|(a, b)| a != b).map(|(a, b)| TextEdge::new(a.to_string(), b.to_string())).collect::<Vec<_>>();
        let (p, g) = (to_edges(&p), to_edges(&g));
        let m = match_edges(&p, &g, &exact(), None).unwrap();
        let labels = |v: &[TextEdge]| v.iter().map(TextEdge::label).collect::<Vec<_>>();
        let r = precision_recall(&m, &labels(&p), &labels(&g)).with_direction(&m);
        prop_assert!(r.direction_total <= r.true_positive);
        prop_assert!(r.direction_correct <= r.direction_total);
    }
}
