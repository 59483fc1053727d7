use modal_homotopy::kripke::{
    as_sync_tree, pathwise_embedding_exists, KripkeModel, SyncTree, TreeMorphism, Vocabulary,
};
use modal_homotopy::random::{random_pathwise_embedding, random_tree, rng, EmbeddingMode, Rng64};
use proptest::prelude::*;
use rand::Rng;

fn vocab() -> Vocabulary {
    Vocabulary::new(["p"])
}

/// Any total map between the trees, not necessarily structure preserving.
fn random_map(r: &mut Rng64, a: &SyncTree, b: &SyncTree) -> TreeMorphism {
    let map = (0..a.len()).map(|_| r.gen_range(0..b.len())).collect();
    let mut f = TreeMorphism::from_indices(a.model().clone(), b.model().clone(), map).unwrap();
    if r.gen_bool(0.5) {
        let mut idx = f.indices().to_vec();
        idx[a.root()] = b.root();
        f = TreeMorphism::from_indices(a.model().clone(), b.model().clone(), idx).unwrap();
    }
    f
}

fn any_map(seed: u64) -> TreeMorphism {
    let mut r = rng(seed);
    let b = random_tree(&mut r, 3, 2, &vocab());
    match r.gen_range(0..4) {
        0 => random_pathwise_embedding(&mut r, &b, EmbeddingMode::Free),
        1 => random_pathwise_embedding(&mut r, &b, EmbeddingMode::Injective),
        2 => random_pathwise_embedding(&mut r, &b, EmbeddingMode::Covering),
        _ => {
            let a = random_tree(&mut r, 2, 2, &vocab());
            random_map(&mut r, &a, &b)
        }
    }
}

/// Pathwise embedding existence by trying every total map.
fn brute_force_exists(a: &SyncTree, b: &SyncTree) -> bool {
    let n = a.len();
    let m = b.len();
    let mut idx = vec![0usize; n];
    loop {
        let f =
            TreeMorphism::from_indices(a.model().clone(), b.model().clone(), idx.clone()).unwrap();
        if f.is_pathwise_embedding() {
            return true;
        }
        let mut i = 0;
        loop {
            if i == n {
                return false;
            }
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn class_implications(seed in any::<u64>()) {
        let f = any_map(seed);
        if f.is_embedding() {
            prop_assert!(f.is_pathwise_embedding());
        }
        if f.is_pathwise_embedding() {
            prop_assert!(f.is_homomorphism());
        }
        if f.is_p_morphism() {
            prop_assert!(f.is_pathwise_embedding());
            // a p-morphism onto a tree reaches every node
            prop_assert!(f.is_surjective());
        }
    }

    #[test]
    fn injective_pathwise_embeddings_of_trees_are_embeddings(seed in any::<u64>()) {
        let f = any_map(seed);
        if f.is_pathwise_embedding() {
            prop_assert_eq!(f.is_embedding(), f.is_injective());
        }
    }

    #[test]
    fn embedding_search_is_sound_and_complete(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_tree(&mut r, 2, 2, &vocab());
        let b = random_tree(&mut r, 2, 2, &vocab());
        prop_assume!(a.len() <= 6 && b.len() <= 6);
        let found = pathwise_embedding_exists(&a, &b);
        if let Some(f) = &found {
            prop_assert!(f.is_pathwise_embedding());
        }
        prop_assert_eq!(found.is_some(), brute_force_exists(&a, &b));
    }
}

fn no_labels(worlds: &[&str], edges: &[(&str, &str)], root: &str) -> KripkeModel {
    KripkeModel::new(
        worlds.iter().copied(),
        edges.iter().copied(),
        Vec::<(String, Vec<String>)>::new(),
        root,
    )
    .unwrap()
}

#[test]
fn fold_of_a_disjoint_sum() {
    let sum = KripkeModel::new(
        ["w0", "w1", "v0", "v1"],
        [("w0", "w1"), ("v0", "v1")],
        vec![("p".to_string(), vec!["w1", "v1"])],
        "w0",
    )
    .unwrap();
    let one = KripkeModel::new(
        ["w0", "w1"],
        [("w0", "w1")],
        vec![("p".to_string(), vec!["w1"])],
        "w0",
    )
    .unwrap();
    assert!(as_sync_tree(&sum).is_err());
    // sorted worlds: v0, v1, w0, w1
    let fold = TreeMorphism::from_indices(sum, one, vec![0, 1, 0, 1]).unwrap();
    assert!(fold.is_pathwise_embedding());
    assert!(!fold.is_injective() && !fold.is_embedding());
}

#[test]
fn injective_without_reflecting_edges_off_trees() {
    let a = no_labels(&["r", "x"], &[], "r");
    let b = no_labels(&["r", "x"], &[("r", "x")], "r");
    let f = TreeMorphism::from_indices(a, b, vec![0, 1]).unwrap();
    assert!(f.is_pathwise_embedding() && f.is_injective());
    assert!(!f.is_embedding());
}
