//! Depth-bounded tree unravellings.
//!
//! `unravel(A, k)` has as worlds the non-empty accessibility paths from the
//! root of length at most `k` (so the tree has height at most `k - 1`).
//! Such a tree agrees with `A` on modal formulas of depth at most `k - 1`,
//! and not in general at depth `k`; see [`captured_depth`].

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kripke::{as_sync_tree, KripkeModel, SyncTree, TreeMorphism};

/// Modal depth on which `unravel(A, len)` is guaranteed to agree with `A`.
pub fn captured_depth(len: usize) -> usize {
    len.saturating_sub(1)
}

/// Smallest sequence-length bound whose unravelling captures formulas of
/// depth `depth`.
pub fn length_for_depth(depth: usize) -> usize {
    depth + 1
}

/// Node id of the sequence `seq` of worlds of `model`: `[w0,w1,...]`.
pub fn sequence_id(model: &KripkeModel, seq: &[usize]) -> String {
    let names: Vec<&str> = seq.iter().map(|&w| model.name(w)).collect();
    format!("[{}]", names.join(","))
}

/// An unravelling together with the world sequence behind each node.
#[derive(Clone, Debug)]
pub struct Unravelling {
    pub tree: SyncTree,
    /// `sequences[node]` is the accessibility path (by world index) that
    /// node stands for.
    pub sequences: Vec<Vec<usize>>,
}

/// Unravels `model` from its root into sequences of length at most `k`.
pub fn unravel_with_paths(model: &KripkeModel, k: usize) -> Result<Unravelling> {
    if k == 0 {
        return Err(Error::InvalidBound(
            "unravelling length must be at least 1".into(),
        ));
    }
    let mut seqs: Vec<Vec<usize>> = vec![vec![model.root()]];
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    for _ in 1..k {
        let mut next = Vec::new();
        for &node in &frontier {
            let last = *seqs[node].last().expect("sequences are non-empty");
            for &s in model.successors(last) {
                let mut seq = seqs[node].clone();
                seq.push(s);
                let id = seqs.len();
                seqs.push(seq);
                edges.push((node, id));
                next.push(id);
            }
        }
        frontier = next;
    }
    let names = seqs.iter().map(|s| sequence_id(model, s)).collect();
    let labels = seqs
        .iter()
        .map(|s| model.label(*s.last().expect("non-empty")).clone())
        .collect();
    let (tree_model, position) =
        KripkeModel::from_indexed(names, edges, labels, model.vocabulary().clone(), 0)?;
    let mut sequences = vec![Vec::new(); seqs.len()];
    for (old, seq) in seqs.into_iter().enumerate() {
        sequences[position[old]] = seq;
    }
    let tree = as_sync_tree(&tree_model).expect("unravellings are trees");
    Ok(Unravelling { tree, sequences })
}

/// The depth-`k` unravelling of `model` as a synchronization tree.
pub fn unravel(model: &KripkeModel, k: usize) -> Result<SyncTree> {
    unravel_with_paths(model, k).map(|u| u.tree)
}

/// Number of nodes `unravel(model, k)` would have, without building it.
pub fn unravelling_size(model: &KripkeModel, k: usize) -> u128 {
    let mut counts = vec![0u128; model.len()];
    counts[model.root()] = 1;
    let mut total = 1u128;
    for _ in 1..k {
        let mut next = vec![0u128; model.len()];
        for (w, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &s in model.successors(w) {
                next[s] = next[s].saturating_add(c);
            }
        }
        total = total.saturating_add(next.iter().fold(0u128, |a, &b| a.saturating_add(b)));
        counts = next;
    }
    total
}

/// The induced map between unravellings, `[a0..aj] ↦ [f a0..f aj]`.
pub fn unravel_morphism(f: &TreeMorphism, k: usize) -> Result<TreeMorphism> {
    if !f.is_homomorphism() {
        return Err(Error::Precondition(
            "unravel_morphism needs a homomorphism".into(),
        ));
    }
    let src = unravel_with_paths(f.source(), k)?;
    let tgt = unravel_with_paths(f.target(), k)?;
    let index: HashMap<&[usize], usize> = tgt
        .sequences
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let map = src
        .sequences
        .iter()
        .map(|seq| {
            let image: Vec<usize> = seq.iter().map(|&w| f.apply(w)).collect();
            index[image.as_slice()]
        })
        .collect();
    TreeMorphism::from_indices(src.tree.into_model(), tgt.tree.into_model(), map)
}

/// The last-element map `unravel(model, k) → model`.
pub fn counit(model: &KripkeModel, k: usize) -> Result<TreeMorphism> {
    let u = unravel_with_paths(model, k)?;
    let map = u
        .sequences
        .iter()
        .map(|s| *s.last().expect("non-empty"))
        .collect();
    TreeMorphism::from_indices(u.tree.into_model(), model.clone(), map)
}

/// The unique `h: C → unravel(A, k)` with `counit ∘ h = g`, for a
/// homomorphism `g: C → A` out of a tree of height below `k`. Each node goes
/// to the `g`-image of its branch.
pub fn factor_through_counit(tree: &SyncTree, g: &TreeMorphism, k: usize) -> Result<TreeMorphism> {
    if tree.model() != g.source() {
        return Err(Error::Precondition("g must start at the given tree".into()));
    }
    if !g.is_homomorphism() {
        return Err(Error::Precondition("g must be a homomorphism".into()));
    }
    if tree.height() >= k {
        return Err(Error::Precondition(format!(
            "tree height {} is not below {k}",
            tree.height()
        )));
    }
    let u = unravel_with_paths(g.target(), k)?;
    let index: HashMap<&[usize], usize> = u
        .sequences
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let map = (0..tree.len())
        .map(|x| {
            let image: Vec<usize> = tree.branch(x).into_iter().map(|w| g.apply(w)).collect();
            index[image.as_slice()]
        })
        .collect();
    TreeMorphism::from_indices(tree.model().clone(), u.tree.into_model(), map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn is_chain(t: &SyncTree, len: usize) -> bool {
        t.len() == len && (0..t.len()).all(|w| t.children(w).len() <= 1) && t.height() + 1 == len
    }

    #[test]
    fn unravel_examples() {
        let t = unravel(&m1(), 2).unwrap();
        assert!(is_chain(&t, 2));
        let leaf = t.model().index_of("[w0,w1]").unwrap();
        assert!(t.model().holds("p", leaf));

        let loop3 = unravel(&m2(), 3).unwrap();
        assert!(is_chain(&loop3, 3));
        assert!((0..loop3.len()).all(|w| loop3.model().label(w).is_empty()));

        assert_eq!(unravel(&m4(), 1).unwrap().len(), 1);
        assert!(matches!(unravel(&m4(), 0), Err(Error::InvalidBound(_))));
    }

    #[test]
    fn size_prediction_matches() {
        for m in [m0(), m1(), m2(), m3(), m4(), m2_doubled()] {
            for k in 1..6 {
                assert_eq!(
                    unravelling_size(&m, k),
                    unravel(&m, k).unwrap().len() as u128
                );
            }
        }
    }

    #[test]
    fn morphism_functoriality() {
        let id = TreeMorphism::identity(&m1());
        let r = unravel_morphism(&id, 2).unwrap();
        assert_eq!(r, TreeMorphism::identity(r.source()));

        // the collapse M3 → M2 followed by the identity of M2
        let collapse = TreeMorphism::from_indices(m3(), m2(), vec![0, 0, 0]).unwrap();
        let id2 = TreeMorphism::identity(&m2());
        let composite = collapse.then(&id2).unwrap();
        let lhs = unravel_morphism(&composite, 3).unwrap();
        let rhs = unravel_morphism(&collapse, 3)
            .unwrap()
            .then(&unravel_morphism(&id2, 3).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
        // the 3-chain maps bijectively onto the 3-chain
        assert!(lhs.is_injective() && lhs.is_surjective());
        assert!(
            unravel_morphism(&TreeMorphism::from_indices(m0(), m1(), vec![1]).unwrap(), 2).is_err()
        );
    }

    #[test]
    fn counit_examples() {
        let c = counit(&m2(), 3).unwrap();
        assert!(c.is_homomorphism());
        assert!(c.indices().iter().all(|&w| w == 0));

        let tree = as_sync_tree(&m1()).unwrap();
        let g = TreeMorphism::identity(&m1());
        let h = factor_through_counit(&tree, &g, 2).unwrap();
        let back = h.then(&counit(&m1(), 2).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
