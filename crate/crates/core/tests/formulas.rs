use std::sync::Arc;

use modal_homotopy::factorization::graded_bisimilar;
use modal_homotopy::formula::{
    characteristic_formula, existential_characteristic, parse_unchecked, Evaluator, Formula,
};
use modal_homotopy::kripke::{pathwise_embedding_exists, Vocabulary};
use modal_homotopy::random::{random_model, rng};
use modal_homotopy::unravel::unravel;
use proptest::prelude::*;
use rand::Rng;

fn formula() -> impl Strategy<Value = Arc<Formula>> {
    let leaf = prop_oneof![
        Just(Formula::top()),
        Just(Formula::bottom()),
        Just(Formula::prop("p")),
        Just(Formula::prop("q")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::boxed),
            inner.clone().prop_map(Formula::diamond),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::or(a, b)),
        ]
    })
}

fn vocab() -> Vocabulary {
    Vocabulary::new(["p", "q"])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printing_then_parsing_is_the_identity(f in formula()) {
        let text = f.to_string();
        prop_assert_eq!(parse_unchecked(&text).unwrap(), f);
    }

    #[test]
    fn box_is_dual_to_diamond(f in formula(), seed in any::<u64>()) {
        let m = random_model(&mut rng(seed), 5, &vocab(), 0.35);
        let boxed = Formula::boxed(f.clone());
        let dual = Formula::not(Formula::diamond(Formula::not(f)));
        let mut ev = Evaluator::new(&m);
        for w in 0..m.len() {
            prop_assert_eq!(ev.eval(&boxed, w), ev.eval(&dual, w));
        }
    }

    #[test]
    fn characteristic_formula_depths(seed in any::<u64>(), k in 0usize..4) {
        let m = random_model(&mut rng(seed), 5, &vocab(), 0.35);
        prop_assert!(existential_characteristic(&m, m.root(), k).depth() <= k);
        let chi = characteristic_formula(&m, m.root(), k);
        prop_assert!(chi.depth() <= k);
        let serial = m.reachable().iter().all(|&w| !m.successors(w).is_empty());
        if serial {
            prop_assert_eq!(chi.depth(), k);
        }
    }

    #[test]
    fn characteristic_formulas_match_their_oracles(seed in any::<u64>(), k in 0usize..4) {
        let mut r = rng(seed);
        let edge_prob = r.gen_range(0.15..0.5);
        let a = random_model(&mut r, 5, &vocab(), edge_prob);
        let b = random_model(&mut r, 5, &vocab(), edge_prob);
        let chi = characteristic_formula(&a, a.root(), k);
        prop_assert_eq!(chi.holds_at(&b, b.root()), graded_bisimilar(&a, &b, k));

        let e = existential_characteristic(&a, a.root(), k);
        let ra = unravel(&a, k + 1).unwrap();
        let rb = unravel(&b, k + 1).unwrap();
        prop_assert_eq!(e.holds_at(&b, b.root()), pathwise_embedding_exists(&ra, &rb).is_some());
    }
}
