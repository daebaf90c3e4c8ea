mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use gqe_core::automaton::CapExceeded;
use gqe_core::engine::{prepare_sampler_with_cap, MAX_LENGTH};
use gqe_core::{
    count_approx, count_exact, enumerate, pairs, prepare_sampler, reachable_from, CountRequest, EngineError, Path,
};
use proptest::prelude::*;

#[test]
fn enumeration_matches_definition() {
    let mut rng = rng(11);
    for _ in 0..150 {
        let g = random_labeled(&mut rng, 5, 7);
        let r = random_regex(&mut rng, 4, true);
        let got: Vec<Path> = enumerate(&g, &r, 3).unwrap().collect();
        assert_eq!(got, brute_enumeration(&g, &r, 3), "{r}");
    }
}

#[test]
fn counts_match_definition() {
    let mut rng = rng(12);
    for _ in 0..150 {
        let g = random_labeled(&mut rng, 6, 9);
        let r = random_regex(&mut rng, 4, true);
        let k = rand::Rng::gen_range(&mut rng, 0..=4);
        match count_exact(&CountRequest::new(&g, &r, k)) {
            Ok(c) => assert_eq!(c, brute_count(&g, &r, k), "{r} k={k}"),
            Err(EngineError::CapExceeded(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn reachability_and_pairs_match_definition() {
    let mut rng = rng(13);
    for _ in 0..100 {
        let g = random_labeled(&mut rng, 5, 7);
        let r = random_regex(&mut rng, 3, false);
        // star-free expressions of depth 3 have paths of at most 4 edges
        let paths = semantics(&g, &r, 4);
        let starts: BTreeSet<usize> = paths.iter().map(Path::start).collect();
        let ends: BTreeSet<(usize, usize)> = paths.iter().map(|p| (p.start(), p.end())).collect();
        assert_eq!(reachable_from(&g, &r), starts, "{r}");
        assert_eq!(pairs(&g, &r), ends, "{r}");
    }
}

#[test]
fn pairs_with_star_are_finite() {
    let mut rng = rng(14);
    for _ in 0..40 {
        let g = random_labeled(&mut rng, 5, 8);
        let r = random_regex(&mut rng, 3, true);
        let ends = endpoint_relation(&g, &r);
        let starts: BTreeSet<usize> = ends.iter().map(|&(a, _)| a).collect();
        assert_eq!(pairs(&g, &r), ends, "{r}");
        assert_eq!(reachable_from(&g, &r), starts, "{r}");
    }
}

#[test]
fn enumeration_is_lazy_on_infinite_languages() {
    let g = gqe_core::fixtures::fig1a();
    let r = gqe_core::parse_regex("(_ + _^-)*", gqe_core::Flavor::Labeled).unwrap();
    let first: Vec<Path> = enumerate(&g, &r, MAX_LENGTH).unwrap().take(50).collect();
    assert_eq!(first.len(), 50);
    assert!(first.windows(2).all(|w| w[0].order_key() < w[1].order_key()));
}

#[test]
fn estimator_is_close_on_random_instances() {
    let mut rng = rng(15);
    let mut checked = 0;
    while checked < 25 {
        let g = random_labeled(&mut rng, 6, 10);
        let r = random_regex(&mut rng, 4, true);
        let Ok(exact) = count_exact(&CountRequest::new(&g, &r, 3)) else { continue };
        let est = count_approx(&CountRequest::new(&g, &r, 3).epsilon(0.2).seed(checked)).unwrap();
        if exact == 0 {
            assert_eq!(est.estimate, 0.0);
        } else {
            let rel = (est.estimate - exact as f64).abs() / exact as f64;
            assert!(rel <= 0.2, "{r}: {} vs {exact}", est.estimate);
        }
        checked += 1;
    }
}

#[test]
fn sampler_stays_in_support_and_covers_it() {
    let mut rng = rng(16);
    let mut checked = 0;
    while checked < 30 {
        let g = random_labeled(&mut rng, 5, 8);
        let r = random_regex(&mut rng, 4, true);
        let support: BTreeSet<Path> = semantics(&g, &r, 2).into_iter().filter(|p| p.len() == 2).collect();
        if support.is_empty() || support.len() > 12 {
            continue;
        }
        for cap in [gqe_core::automaton::DEFAULT_CAP, 1] {
            let mut s = prepare_sampler_with_cap(&g, &r, 2, checked, cap).unwrap();
            let mut seen = BTreeMap::new();
            for _ in 0..400 {
                let p = s.draw();
                assert!(support.contains(&p), "{r}");
                *seen.entry(p).or_insert(0) += 1;
            }
            assert_eq!(seen.len(), support.len(), "{r}");
        }
        checked += 1;
    }
}

#[test]
fn empty_support_is_an_error() {
    let g = gqe_core::fixtures::fig1a();
    let r = gqe_core::parse_regex("?bus/contact", gqe_core::Flavor::Labeled).unwrap();
    assert!(matches!(prepare_sampler(&g, &r, 1, 0), Err(EngineError::EmptySupport(1))));
    assert_eq!(count_exact(&CountRequest::new(&g, &r, 1)).unwrap(), 0);
}

#[test]
fn cap_is_reported() {
    let g = gqe_core::fixtures::fig1a();
    let r = gqe_core::parse_regex("(_ + _^-)*", gqe_core::Flavor::Labeled).unwrap();
    assert_eq!(count_exact(&CountRequest::new(&g, &r, 2).cap(2)), Err(EngineError::CapExceeded(CapExceeded(2))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_same_draws(seed in any::<u64>(), gseed in 0u64..1000) {
        let mut rng = rng(gseed);
        let g = random_labeled(&mut rng, 5, 8);
        let r = random_regex(&mut rng, 3, true);
        if let Ok(mut a) = prepare_sampler(&g, &r, 2, seed) {
            let mut b = prepare_sampler(&g, &r, 2, seed).unwrap();
            for _ in 0..10 {
                prop_assert_eq!(a.draw(), b.draw());
            }
        }
    }

    #[test]
    fn enumeration_respects_length_bound(gseed in 0u64..1000, k in 0usize..4) {
        let mut rng = rng(gseed);
        let g = random_labeled(&mut rng, 5, 8);
        let r = random_regex(&mut rng, 3, true);
        let mut last = None;
        for p in enumerate(&g, &r, k).unwrap() {
            prop_assert!(p.len() <= k);
            prop_assert!(p.is_walk_in(&g));
            let key = p.order_key();
            prop_assert!(last.as_ref().is_none_or(|l| *l < key));
            last = Some(key);
        }
    }

    #[test]
    fn exact_count_equals_enumeration_layer(gseed in 0u64..1000, k in 0usize..4) {
        let mut rng = rng(gseed);
        let g = random_labeled(&mut rng, 5, 8);
        let r = random_regex(&mut rng, 3, true);
        if let Ok(c) = count_exact(&CountRequest::new(&g, &r, k)) {
            let n = enumerate(&g, &r, k).unwrap().filter(|p| p.len() == k).count();
            prop_assert_eq!(c, n as u128);
        }
    }
}
