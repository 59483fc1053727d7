//! Seeded generators for models, trees, tree morphisms, presheaves and
//! spans. Everything is driven by a ChaCha stream, so a seed fixes the
//! output on every platform.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kripke::{as_sync_tree, KripkeModel, Label, SyncTree, TreeMorphism, Vocabulary};
use crate::presheaf::{LabelPath, PathPresheaf, PresheafMorphism, Span};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_label(rng: &mut Rng64, vocab: &Vocabulary) -> Label {
    Label::from_props(vocab.props().iter().filter(|_| rng.gen_bool(0.5)).cloned())
}

fn assemble(
    names: Vec<String>,
    edges: &[(usize, usize)],
    labels: &[Label],
    vocab: &Vocabulary,
    root: usize,
) -> KripkeModel {
    let edges: Vec<(&str, &str)> = edges
        .iter()
        .map(|&(a, b)| (names[a].as_str(), names[b].as_str()))
        .collect();
    let valuation: Vec<(String, Vec<String>)> = vocab
        .props()
        .iter()
        .map(|p| {
            let holds = (0..names.len())
                .filter(|&w| labels[w].contains(p))
                .map(|w| names[w].clone())
                .collect();
            (p.clone(), holds)
        })
        .collect();
    KripkeModel::new(names.iter().cloned(), edges, valuation, &names[root])
        .expect("generated models are well formed")
        .with_vocabulary(vocab)
}

/// A model on `w0..w{n-1}` rooted at `w0`, with `n` uniform in
/// `1..=max_worlds` and each ordered pair an edge with probability
/// `edge_prob`.
pub fn random_model(
    rng: &mut Rng64,
    max_worlds: usize,
    vocab: &Vocabulary,
    edge_prob: f64,
) -> KripkeModel {
    let n = rng.gen_range(1..=max_worlds.max(1));
    let names: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let labels: Vec<Label> = (0..n).map(|_| random_label(rng, vocab)).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(edge_prob) {
                edges.push((a, b));
            }
        }
    }
    assemble(names, &edges, &labels, vocab, 0)
}

/// A bisimilar model obtained by splitting a random world into two copies
/// with the same label and successors. Each predecessor keeps at least one
/// of the copies.
pub fn bisimilar_variant(rng: &mut Rng64, model: &KripkeModel) -> KripkeModel {
    let n = model.len();
    let w = rng.gen_range(0..n);
    let mut names: Vec<String> = model.worlds().to_vec();
    let mut copy = format!("{}'", model.name(w));
    while names.contains(&copy) {
        copy.push('\'');
    }
    names.push(copy);
    let mut labels: Vec<Label> = (0..n).map(|v| model.label(v).clone()).collect();
    labels.push(model.label(w).clone());
    let mut edges = Vec::new();
    for (a, b) in model.edges() {
        let a_copies: &[usize] = if a == w {
            &[a, n]
        } else {
            std::slice::from_ref(&a)
        };
        for &src in a_copies {
            if b == w {
                match rng.gen_range(0..3) {
                    0 => edges.push((src, b)),
                    1 => edges.push((src, n)),
                    _ => edges.extend([(src, b), (src, n)]),
                }
            } else {
                edges.push((src, b));
            }
        }
    }
    assemble(names, &edges, &labels, model.vocabulary(), model.root())
}

/// A synchronization tree of height at most `max_height`, each node having
/// up to `max_children` children.
pub fn random_tree(
    rng: &mut Rng64,
    max_height: usize,
    max_children: usize,
    vocab: &Vocabulary,
) -> SyncTree {
    let mut labels = vec![random_label(rng, vocab)];
    let mut edges = Vec::new();
    let mut frontier = vec![0];
    for _ in 0..max_height {
        let mut next = Vec::new();
        for &x in &frontier {
            for _ in 0..rng.gen_range(0..=max_children) {
                let id = labels.len();
                labels.push(random_label(rng, vocab));
                edges.push((x, id));
                next.push(id);
            }
        }
        frontier = next;
    }
    let names = (0..labels.len()).map(|i| format!("n{i}")).collect();
    as_sync_tree(&assemble(names, &edges, &labels, vocab, 0)).expect("generated trees are trees")
}

/// Shape of the maps [`random_pathwise_embedding`] produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingMode {
    /// Children of each source node map to arbitrary children of its image.
    Free,
    /// Distinct children map to distinct children.
    Injective,
    /// Every child of each image is hit at least once.
    Covering,
}

/// A pathwise embedding into `target` out of a freshly grown source tree.
pub fn random_pathwise_embedding(
    rng: &mut Rng64,
    target: &SyncTree,
    mode: EmbeddingMode,
) -> TreeMorphism {
    let tm = target.model();
    let mut image = vec![target.root()];
    let mut edges = Vec::new();
    let mut frontier = vec![0];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &x in &frontier {
            let kids = target.children(image[x]);
            let chosen: Vec<usize> = match mode {
                EmbeddingMode::Free => (0..rng.gen_range(0..=kids.len() + 1))
                    .filter_map(|_| kids.choose(rng).copied())
                    .collect(),
                EmbeddingMode::Injective => {
                    kids.iter().copied().filter(|_| rng.gen_bool(0.6)).collect()
                }
                EmbeddingMode::Covering => {
                    let mut c = kids.to_vec();
                    for _ in 0..rng.gen_range(0..=1) {
                        if let Some(&k) = kids.choose(rng) {
                            c.push(k);
                        }
                    }
                    c
                }
            };
            for y in chosen {
                let id = image.len();
                image.push(y);
                edges.push((x, id));
                next.push(id);
            }
        }
        frontier = next;
    }
    let names: Vec<String> = (0..image.len()).map(|i| format!("s{i}")).collect();
    let labels: Vec<Label> = image.iter().map(|&y| tm.label(y).clone()).collect();
    let source = assemble(names.clone(), &edges, &labels, tm.vocabulary(), 0);
    let map: BTreeMap<String, String> = names
        .into_iter()
        .zip(&image)
        .map(|(n, &y)| (n, tm.name(y).to_string()))
        .collect();
    TreeMorphism::new(source, tm.clone(), &map).expect("total map")
}

/// All paths of length at most `bound` over `vocab`, prefixes first.
fn all_paths(vocab: &Vocabulary, bound: usize) -> Vec<LabelPath> {
    let labels = vocab.all_labels();
    let mut out: Vec<LabelPath> = labels.iter().cloned().map(LabelPath::single).collect();
    let mut layer = out.clone();
    for _ in 1..bound {
        layer = layer
            .iter()
            .flat_map(|p| labels.iter().map(move |l| p.child(l.clone())))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// A presheaf with up to `max_per_path` elements on each path, each with a
/// uniformly chosen restriction.
pub fn random_presheaf(
    rng: &mut Rng64,
    vocab: &Vocabulary,
    bound: usize,
    max_per_path: usize,
) -> PathPresheaf {
    let mut names: BTreeMap<LabelPath, Vec<String>> = BTreeMap::new();
    let mut triples = Vec::new();
    let mut counter = 0;
    for path in all_paths(vocab, bound) {
        let parents = match path.parent() {
            None => None,
            Some(pp) => match names.get(&pp) {
                Some(v) => Some(v.clone()),
                None => continue,
            },
        };
        let count = rng.gen_range(0..=max_per_path);
        let mut here = Vec::new();
        for _ in 0..count {
            let name = format!("e{counter}");
            counter += 1;
            let parent = parents
                .as_ref()
                .map(|ps| ps.choose(rng).expect("non-empty").clone());
            triples.push((path.clone(), name.clone(), parent));
            here.push(name);
        }
        if !here.is_empty() {
            names.insert(path, here);
        }
    }
    PathPresheaf::from_elements(bound, triples).expect("generated presheaves are well formed")
}

/// A morphism into `target` from a presheaf grown over it: each element of
/// the source gets up to two preimages of every child of its image, with no
/// preimage at all with probability `gap_prob`.
pub fn random_presheaf_over(
    rng: &mut Rng64,
    target: &PathPresheaf,
    gap_prob: f64,
) -> Result<PresheafMorphism> {
    // (name, image index) per path
    let mut made: BTreeMap<LabelPath, Vec<(String, usize)>> = BTreeMap::new();
    let mut triples = Vec::new();
    let mut counter = 0;
    let mut grow = |rng: &mut Rng64,
                    path: &LabelPath,
                    parent: Option<&str>,
                    ys: Vec<usize>,
                    made: &mut BTreeMap<LabelPath, Vec<(String, usize)>>| {
        for y in ys {
            let copies = if rng.gen_bool(gap_prob) {
                0
            } else {
                rng.gen_range(1..=2)
            };
            for _ in 0..copies {
                let name = format!("a{counter}");
                counter += 1;
                triples.push((path.clone(), name.clone(), parent.map(str::to_string)));
                made.entry(path.clone()).or_default().push((name, y));
            }
        }
    };
    let paths: Vec<LabelPath> = target.paths().cloned().collect();
    for path in &paths {
        match path.parent() {
            None => grow(
                rng,
                path,
                None,
                (0..target.count(path)).collect(),
                &mut made,
            ),
            Some(pp) => {
                let parents = made.get(&pp).cloned().unwrap_or_default();
                for (pname, py) in parents {
                    let kids = target.children_of(path, py);
                    grow(rng, path, Some(&pname), kids, &mut made);
                }
            }
        }
    }
    let source = PathPresheaf::from_elements(target.bound(), triples)?;
    let mut components = BTreeMap::new();
    for (path, items) in &made {
        let map: BTreeMap<String, String> = items
            .iter()
            .map(|(n, y)| (n.clone(), target.elements(path)[*y].clone()))
            .collect();
        components.insert(path.clone(), map);
    }
    PresheafMorphism::from_names(source, target.clone(), &components)
}

/// An epimorphism out of `source` onto a random quotient: each element
/// joins an existing class over its parent's class with probability
/// `merge_prob`.
pub fn random_quotient(
    rng: &mut Rng64,
    source: &PathPresheaf,
    merge_prob: f64,
) -> Result<PresheafMorphism> {
    let mut class: BTreeMap<LabelPath, Vec<usize>> = BTreeMap::new();
    // per path: parent class of each class
    let mut class_parent: BTreeMap<LabelPath, Vec<Option<usize>>> = BTreeMap::new();
    for path in source.paths() {
        let mut assign = Vec::new();
        let mut parents: Vec<Option<usize>> = Vec::new();
        for i in 0..source.count(path) {
            let pc = path
                .parent()
                .map(|pp| class[&pp][source.parent(path, i).expect("has parent")]);
            let candidates: Vec<usize> = (0..parents.len()).filter(|&c| parents[c] == pc).collect();
            let c = match candidates.choose(rng) {
                Some(&c) if rng.gen_bool(merge_prob) => c,
                _ => {
                    parents.push(pc);
                    parents.len() - 1
                }
            };
            assign.push(c);
        }
        class.insert(path.clone(), assign);
        class_parent.insert(path.clone(), parents);
    }
    let name = |path: &LabelPath, c: usize| format!("{}#{c}", path.len());
    let mut triples = Vec::new();
    for (path, parents) in &class_parent {
        for (c, pc) in parents.iter().enumerate() {
            let parent = pc.map(|p| name(&path.parent().expect("has parent"), p));
            triples.push((path.clone(), name(path, c), parent));
        }
    }
    let target = PathPresheaf::from_elements(source.bound(), triples)?;
    let mut components = BTreeMap::new();
    for path in source.paths() {
        let map = source
            .elements(path)
            .iter()
            .zip(&class[path])
            .map(|(e, &c)| (e.clone(), name(path, c)))
            .collect();
        components.insert(path.clone(), map);
    }
    PresheafMorphism::from_names(source.clone(), target, &components)
}

/// A span `Y₁ ← X → Y₂` where the left leg is grown over a random presheaf
/// and the right leg is a random quotient of its apex.
pub fn random_span(
    rng: &mut Rng64,
    vocab: &Vocabulary,
    bound: usize,
    max_per_path: usize,
) -> Result<Span> {
    let base = random_presheaf(rng, vocab, bound, max_per_path);
    let gap = if rng.gen_bool(0.5) { 0.0 } else { 0.2 };
    let left = random_presheaf_over(rng, &base, gap)?;
    let merge = rng.gen_range(0.0..0.9);
    let right = random_quotient(rng, left.source(), merge)?;
    Span::new(left, right)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::new(["p"])
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = random_model(&mut rng(7), 5, &vocab(), 0.3);
        let b = random_model(&mut rng(7), 5, &vocab(), 0.3);
        assert_eq!(a, b);
        let s1 = random_span(&mut rng(3), &vocab(), 3, 2).unwrap();
        let s2 = random_span(&mut rng(3), &vocab(), 3, 2).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn variants_are_bisimilar() {
        let mut r = rng(11);
        for _ in 0..30 {
            let m = random_model(&mut r, 4, &vocab(), 0.4);
            let v = bisimilar_variant(&mut r, &m);
            assert_eq!(v.len(), m.len() + 1);
            assert!(crate::factorization::bisimilar(&m, &v).is_some());
        }
    }

    #[test]
    fn generated_maps_have_their_shape() {
        let mut r = rng(5);
        for _ in 0..40 {
            let t = random_tree(&mut r, 3, 2, &vocab());
            assert!(t.height() <= 3);
            for (mode, check) in [
                (EmbeddingMode::Free, None),
                (EmbeddingMode::Injective, Some(true)),
                (EmbeddingMode::Covering, None),
            ] {
                let f = random_pathwise_embedding(&mut r, &t, mode);
                assert!(f.is_pathwise_embedding());
                if let Some(inj) = check {
                    assert_eq!(f.is_injective(), inj);
                }
                if mode == EmbeddingMode::Covering {
                    assert!(f.is_p_morphism());
                }
            }
        }
    }

    #[test]
    fn presheaf_morphisms_are_natural() {
        let mut r = rng(9);
        for _ in 0..40 {
            let y = random_presheaf(&mut r, &vocab(), 3, 2);
            let f = random_presheaf_over(&mut r, &y, 0.0).unwrap();
            assert!(f.is_trivial_fibration());
            let q = random_quotient(&mut r, &y, 0.5).unwrap();
            assert!(q.is_epi());
        }
    }
}
