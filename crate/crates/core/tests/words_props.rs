use std::collections::BTreeSet;

use fgcert::grounded::{is_grounded, GroundedSet};
use fgcert::words::{Factor, GroupSpec, Letter, Word};
use proptest::prelude::*;

fn specs() -> [GroupSpec; 3] {
    [
        GroupSpec::free(3),
        GroupSpec::cyclic(3, 4),
        GroupSpec::product(Factor::Free { rank: 2 }, Factor::CyclicFreeProduct { factors: 2, order: 3 }),
    ]
}

fn letters(generators: u32) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((1..=generators, prop_oneof![-3i32..=-1, 1i32..=3]), 0..8)
        .prop_map(|v| v.into_iter().map(|(g, e)| Letter::new(g, e)).collect())
}

fn word(spec: GroupSpec) -> BoxedStrategy<Word> {
    let (left, right) = spec.factors();
    let right_gens = right.map_or(1, |f| f.generators());
    (letters(left.generators()), letters(right_gens))
        .prop_map(move |(a, b)| {
            if spec.is_product() {
                Word::from_pair(spec, &a, &b).unwrap()
            } else {
                Word::from_letters(spec, &a).unwrap()
            }
        })
        .boxed()
}

fn spec_and_words(count: usize) -> impl Strategy<Value = (GroupSpec, Vec<Word>)> {
    (0..3usize).prop_flat_map(move |k| {
        let spec = specs()[k];
        (Just(spec), prop::collection::vec(word(spec), count))
    })
}

fn is_reduced(w: &Word) -> bool {
    let (left, right) = w.spec().factors();
    let check = |ls: &[Letter], f: Factor| {
        ls.windows(2).all(|p| p[0].generator != p[1].generator)
            && ls.iter().all(|l| {
                l.generator >= 1
                    && l.generator <= f.generators()
                    && match f.order() {
                        None => l.exponent != 0,
                        Some(m) => l.exponent >= 1 && (l.exponent as u32) < m,
                    }
            })
    };
    check(w.left(), left) && right.is_none_or(|r| check(w.right(), r))
}

proptest! {
    #[test]
    fn multiplication_is_associative((_, ws) in spec_and_words(3)) {
        let (a, b, c) = (&ws[0], &ws[1], &ws[2]);
        let left = a.multiply(b).unwrap().multiply(c).unwrap();
        let right = a.multiply(&b.multiply(c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn inverses_cancel((spec, ws) in spec_and_words(1)) {
        let a = &ws[0];
        prop_assert!(a.multiply(&a.inverse()).unwrap().is_unit());
        prop_assert!(a.inverse().multiply(a).unwrap().is_unit());
        prop_assert_eq!(a.inverse().inverse(), a.clone());
        prop_assert_eq!(Word::unit(spec).multiply(a).unwrap(), a.clone());
    }

    #[test]
    fn conjugacy_canonical_is_a_class_invariant((_, ws) in spec_and_words(2)) {
        let (g, a) = (&ws[0], &ws[1]);
        let conj = g.multiply(&a.multiply(&g.inverse()).unwrap()).unwrap();
        prop_assert_eq!(conj.conjugacy_canonical(), a.conjugacy_canonical());
        let c = a.conjugacy_canonical();
        prop_assert_eq!(c.conjugacy_canonical(), c);
    }

    #[test]
    fn operations_keep_words_reduced((_, ws) in spec_and_words(2)) {
        let (a, b) = (&ws[0], &ws[1]);
        for w in [a.clone(), a.multiply(b).unwrap(), a.inverse(), a.quotient(b).unwrap(), a.conjugacy_canonical()] {
            prop_assert!(is_reduced(&w), "{}", w);
        }
    }

    #[test]
    fn text_form_round_trips((spec, ws) in spec_and_words(1)) {
        let a = &ws[0];
        prop_assert_eq!(Word::parse(spec, &a.to_string()).unwrap(), a.clone());
    }

    #[test]
    fn hull_is_grounded(ws in prop::collection::vec(word(GroupSpec::free(2)), 1..5)) {
        let hull = GroundedSet::hull(GroupSpec::free(2), ws.clone()).unwrap();
        prop_assert!(is_grounded(hull.elements()));
        for w in &ws {
            prop_assert!(hull.contains(w));
        }
    }

    #[test]
    fn every_chain_prefix_is_grounded(seed in 0u64..10_000, size in 1usize..6, extra in 0usize..6) {
        let mut rng = fgcert::rng::seeded(seed);
        let set = GroundedSet::random(GroupSpec::free(2), size, &mut rng).unwrap();
        let target = set.grow(extra, &mut rng).unwrap();
        prop_assert!(target.len() <= 10);
        let chain = set.extension_chain(&target).unwrap();
        let mut cur: Vec<Word> = set.elements().to_vec();
        for t in chain {
            cur.push(t);
            prop_assert!(is_grounded(&cur));
        }
        prop_assert_eq!(cur.len(), target.len());
    }

    #[test]
    fn double_set_matches_brute_force(seed in 0u64..10_000, size in 1usize..8) {
        let mut rng = fgcert::rng::seeded(seed);
        let set = GroundedSet::random(GroupSpec::free(2), size, &mut rng).unwrap();
        let mut brute = BTreeSet::new();
        for s in set.elements() {
            for t in set.elements() {
                brute.insert(s.inverse().multiply(t).unwrap());
            }
        }
        let double: BTreeSet<Word> = set.double_set().into_iter().collect();
        prop_assert_eq!(&double, &brute);
        for w in &double {
            prop_assert!(double.contains(&w.inverse()));
        }
    }
}
