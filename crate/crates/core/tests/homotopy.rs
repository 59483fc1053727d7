use std::sync::Arc;

use modal_homotopy::factorization::{bisimilar, factorize, graded_bisimilar, morita_span_k};
use modal_homotopy::formula::{Evaluator, Formula};
use modal_homotopy::hennessy_milner::{global_section, joint_monic_reduce, strongly_non_empty};
use modal_homotopy::kripke::{as_sync_tree, Vocabulary};
use modal_homotopy::preservation::is_preserved_under_extensions;
use modal_homotopy::random::{
    bisimilar_variant, random_model, random_pathwise_embedding, random_tree, rng, EmbeddingMode,
};
use modal_homotopy::unravel::unravelling_size;
use proptest::prelude::*;
use rand::Rng;

fn vocab() -> Vocabulary {
    Vocabulary::new(["p"])
}

fn formula() -> impl Strategy<Value = Arc<Formula>> {
    let leaf = prop_oneof![Just(Formula::top()), Just(Formula::prop("p"))];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::boxed),
            inner.clone().prop_map(Formula::diamond),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::or(a, b)),
        ]
    })
}

/// Existential formulas: no boxes, negation only on propositions.
fn existential() -> impl Strategy<Value = Arc<Formula>> {
    let leaf = prop_oneof![
        Just(Formula::top()),
        Just(Formula::bottom()),
        Just(Formula::prop("p")),
        Just(Formula::not(Formula::prop("p"))),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::diamond),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::or(a, b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_morphisms_preserve_and_reflect_truth(seed in any::<u64>(), f in formula()) {
        let mut r = rng(seed);
        let b = random_tree(&mut r, 3, 2, &vocab());
        let t = random_pathwise_embedding(&mut r, &b, EmbeddingMode::Covering);
        prop_assert!(t.is_p_morphism() && t.is_surjective());
        let mut src = Evaluator::new(t.source());
        let mut tgt = Evaluator::new(t.target());
        for x in 0..t.source().len() {
            prop_assert_eq!(src.eval(&f, x), tgt.eval(&f, t.apply(x)));
        }
    }

    #[test]
    fn factorization_stays_among_trees_of_bounded_height(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = r.gen_range(0..=3);
        let b = random_tree(&mut r, h, 2, &vocab());
        let f = random_pathwise_embedding(&mut r, &b, EmbeddingMode::Free);
        let fac = factorize(&f, h + 1).unwrap();
        prop_assert!(as_sync_tree(fac.apex.model()).is_ok());
        prop_assert!(fac.apex.height() <= b.height());
        prop_assert_eq!(fac.j.then(&fac.t).unwrap(), f);
    }

    #[test]
    fn morita_span_matches_graded_bisimilarity(seed in any::<u64>(), k in 1usize..4) {
        let mut r = rng(seed);
        let a = random_model(&mut r, 4, &vocab(), 0.35);
        let b = if r.gen_bool(0.5) { bisimilar_variant(&mut r, &a) } else { random_model(&mut r, 4, &vocab(), 0.35) };
        let span = morita_span_k(&a, &b, k).unwrap();
        prop_assert_eq!(span.is_some(), graded_bisimilar(&a, &b, k - 1));
        if let Some(s) = span {
            let ps = s.to_presheaf_span(k).unwrap();
            prop_assert!(ps.is_morita());
            let reduced = joint_monic_reduce(&ps).unwrap();
            prop_assert!(reduced.is_morita() && reduced.is_jointly_monic());
            prop_assert!(reduced.apex.size() <= ps.apex.size());
        }
    }

    #[test]
    fn strong_non_emptiness_tracks_grades(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let a = random_model(&mut r, 3, &vocab(), 0.3);
        let b = if r.gen_bool(0.5) { bisimilar_variant(&mut r, &a) } else { random_model(&mut r, 3, &vocab(), 0.3) };
        prop_assume!(unravelling_size(&a, n) <= 60 && unravelling_size(&b, n) <= 60);
        prop_assert_eq!(strongly_non_empty(&a, &b, n).unwrap(), graded_bisimilar(&a, &b, n - 1));
    }

    #[test]
    fn both_hennessy_milner_checkers_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_model(&mut r, 3, &vocab(), 0.3);
        let b = if r.gen_bool(0.5) { bisimilar_variant(&mut r, &a) } else { random_model(&mut r, 3, &vocab(), 0.3) };
        let n = a.len() * b.len() + 1;
        prop_assume!(unravelling_size(&a, n) <= 120 && unravelling_size(&b, n) <= 120);
        // modal equivalence implies bisimilarity on {A, B}
        let classical = !graded_bisimilar(&a, &b, n - 1) || bisimilar(&a, &b).is_some();
        // strong non-emptiness implies a global section
        let strong = strongly_non_empty(&a, &b, n).unwrap();
        let homotopical = !strong || global_section(&a, &b, n).unwrap().is_some();
        prop_assert!(classical && homotopical);
    }

    #[test]
    fn existential_formulas_are_preserved(seed in any::<u64>(), f in existential()) {
        let mut r = rng(seed);
        let universe: Vec<_> = (0..6).map(|_| random_model(&mut r, 4, &vocab(), 0.35)).collect();
        prop_assert!(is_preserved_under_extensions(&f, &universe).unwrap().is_preserved());
    }
}
