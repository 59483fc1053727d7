//! Finite pointed Kripke models, synchronization trees and the morphism
//! classes between them.
//!
//! Worlds are identified by opaque string ids. A model stores its worlds in
//! ascending id order and every other structure is index based, so all
//! iteration orders are deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The set of propositions true at a world.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label(BTreeSet<String>);

impl Label {
    pub fn empty() -> Self {
        Label(BTreeSet::new())
    }

    pub fn from_props<I, S>(props: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Label(props.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, prop: &str) -> bool {
        self.0.contains(prop)
    }

    pub fn props(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_subset(&self, other: &Label) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// An ordered finite set of proposition names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Vocabulary {
    props: Vec<String>,
}

impl Vocabulary {
    pub fn new<I, S>(props: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = props.into_iter().map(Into::into).collect();
        Vocabulary {
            props: set.into_iter().collect(),
        }
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn contains(&self, prop: &str) -> bool {
        self.props
            .binary_search_by(|p| p.as_str().cmp(prop))
            .is_ok()
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn union(&self, other: &Vocabulary) -> Vocabulary {
        Vocabulary::new(self.props.iter().chain(other.props.iter()).cloned())
    }

    /// All labels over this vocabulary, in a fixed order.
    pub fn all_labels(&self) -> Vec<Label> {
        let n = self.props.len();
        (0..1usize << n)
            .map(|mask| {
                Label::from_props(
                    (0..n)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| self.props[i].clone()),
                )
            })
            .collect()
    }
}

/// A finite pointed Kripke model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KripkeModel {
    worlds: Vec<String>,
    succ: Vec<Vec<usize>>,
    labels: Vec<Label>,
    vocabulary: Vocabulary,
    root: usize,
}

impl KripkeModel {
    /// Builds a model from world ids, accessibility pairs, a valuation
    /// (proposition to the worlds where it holds) and the root id.
    pub fn new<W, E, V, P>(worlds: W, edges: E, valuation: V, root: &str) -> Result<Self>
    where
        W: IntoIterator,
        W::Item: Into<String>,
        E: IntoIterator,
        E::Item: EdgeLike,
        V: IntoIterator<Item = (String, P)>,
        P: IntoIterator,
        P::Item: Into<String>,
    {
        let mut names: Vec<String> = worlds.into_iter().map(Into::into).collect();
        let count = names.len();
        names.sort();
        names.dedup();
        if names.len() != count {
            return Err(Error::MalformedModel("duplicate world id".into()));
        }
        if names.is_empty() {
            return Err(Error::MalformedModel(
                "a model needs at least one world".into(),
            ));
        }
        let lookup = |name: &str| names.binary_search_by(|w| w.as_str().cmp(name)).ok();

        let root = lookup(root)
            .ok_or_else(|| Error::MalformedModel(format!("root `{root}` is not a world")))?;

        let mut succ = vec![Vec::new(); names.len()];
        for (i, edge) in edges.into_iter().enumerate() {
            let (from, to) = edge.endpoints();
            let a = lookup(&from).ok_or_else(|| {
                Error::MalformedModel(format!("edge {i}: unknown world `{from}`"))
            })?;
            let b = lookup(&to)
                .ok_or_else(|| Error::MalformedModel(format!("edge {i}: unknown world `{to}`")))?;
            succ[a].push(b);
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }

        let mut labels = vec![BTreeSet::new(); names.len()];
        let mut props = Vec::new();
        for (prop, holds) in valuation {
            for w in holds {
                let w: String = w.into();
                let i = lookup(&w).ok_or_else(|| {
                    Error::MalformedModel(format!("valuation of `{prop}`: unknown world `{w}`"))
                })?;
                labels[i].insert(prop.clone());
            }
            props.push(prop);
        }

        Ok(KripkeModel {
            worlds: names,
            succ,
            labels: labels.into_iter().map(Label).collect(),
            vocabulary: Vocabulary::new(props),
            root,
        })
    }

    /// Builds a model from index-based data. Names are re-sorted; the
    /// returned vector maps each input index to its index in the model.
    pub(crate) fn from_indexed(
        names: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        labels: Vec<Label>,
        vocabulary: Vocabulary,
        root: usize,
    ) -> Result<(Self, Vec<usize>)> {
        debug_assert_eq!(names.len(), labels.len());
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| names[a].cmp(&names[b]));
        for pair in order.windows(2) {
            if names[pair[0]] == names[pair[1]] {
                return Err(Error::MalformedModel(format!(
                    "duplicate world id `{}`",
                    names[pair[0]]
                )));
            }
        }
        let mut position = vec![0; names.len()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let mut succ = vec![Vec::new(); names.len()];
        for (a, b) in edges {
            succ[position[a]].push(position[b]);
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        let mut sorted_labels = vec![Label::empty(); names.len()];
        let mut sorted_names = vec![String::new(); names.len()];
        for (old, (name, label)) in names.into_iter().zip(labels).enumerate() {
            sorted_names[position[old]] = name;
            sorted_labels[position[old]] = label;
        }
        let model = KripkeModel {
            worlds: sorted_names,
            succ,
            labels: sorted_labels,
            vocabulary,
            root: position[root],
        };
        Ok((model, position))
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn name(&self, world: usize) -> &str {
        &self.worlds[world]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.worlds
            .binary_search_by(|w| w.as_str().cmp(name))
            .map_err(|_| Error::UnknownWorld(name.to_string()))
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn successors(&self, world: usize) -> &[usize] {
        &self.succ[world]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, s)| s.iter().map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn label(&self, world: usize) -> &Label {
        &self.labels[world]
    }

    pub fn holds(&self, prop: &str, world: usize) -> bool {
        self.labels[world].contains(prop)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Same model over a larger vocabulary (propositions not mentioned are
    /// false everywhere).
    pub fn with_vocabulary(mut self, vocabulary: &Vocabulary) -> Self {
        self.vocabulary = self.vocabulary.union(vocabulary);
        self
    }

    /// Proposition to worlds (by id) where it holds, over the whole vocabulary.
    pub fn valuation(&self) -> BTreeMap<String, Vec<String>> {
        self.vocabulary
            .props()
            .iter()
            .map(|p| {
                let holds = (0..self.len())
                    .filter(|&w| self.holds(p, w))
                    .map(|w| self.worlds[w].clone())
                    .collect();
                (p.clone(), holds)
            })
            .collect()
    }

    /// Worlds reachable from the root, root included, ascending.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(w) = stack.pop() {
            for &v in &self.succ[w] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        (0..self.len()).filter(|&w| seen[w]).collect()
    }

    /// The induced submodel on `keep` (which must contain the root).
    pub fn induced(&self, keep: &[usize]) -> Result<Self> {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.binary_search(&self.root).is_err() {
            return Err(Error::Precondition(
                "induced submodel must contain the root".into(),
            ));
        }
        let position: HashMap<usize, usize> =
            keep.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let succ = keep
            .iter()
            .map(|&w| {
                self.succ[w]
                    .iter()
                    .filter_map(|v| position.get(v).copied())
                    .collect()
            })
            .collect();
        Ok(KripkeModel {
            worlds: keep.iter().map(|&w| self.worlds[w].clone()).collect(),
            succ,
            labels: keep.iter().map(|&w| self.labels[w].clone()).collect(),
            vocabulary: self.vocabulary.clone(),
            root: position[&self.root],
        })
    }

    /// Same structure, different root.
    pub fn rerooted(&self, root: usize) -> Self {
        let mut m = self.clone();
        m.root = root;
        m
    }
}

/// Anything usable as an accessibility pair when building a model.
pub trait EdgeLike {
    fn endpoints(self) -> (String, String);
}

impl<A: Into<String>, B: Into<String>> EdgeLike for (A, B) {
    fn endpoints(self) -> (String, String) {
        (self.0.into(), self.1.into())
    }
}

impl EdgeLike for [String; 2] {
    fn endpoints(self) -> (String, String) {
        let [a, b] = self;
        (a, b)
    }
}

/// A Kripke model whose accessibility graph is a tree rooted at the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyncTree {
    model: KripkeModel,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
}

impl SyncTree {
    pub fn model(&self) -> &KripkeModel {
        &self.model
    }

    pub fn into_model(self) -> KripkeModel {
        self.model
    }

    pub fn root(&self) -> usize {
        self.model.root
    }

    pub fn len(&self) -> usize {
        self.model.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        self.model.successors(node)
    }

    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    /// Maximum depth of a node; a one-node tree has height 0.
    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Nodes on the path from the root to `node`, root first.
    pub fn branch(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Labels along the root-to-`node` branch.
    pub fn branch_labels(&self, node: usize) -> Vec<Label> {
        self.branch(node)
            .into_iter()
            .map(|w| self.model.label(w).clone())
            .collect()
    }

    /// The path-shaped subtree on the branch from the root to `x`.
    pub fn down_set(&self, x: &str) -> Result<SyncTree> {
        let x = self.model.index_of(x)?;
        let sub = self.model.induced(&self.branch(x))?;
        as_sync_tree(&sub)
    }

    /// `x` together with all its descendants, by id.
    pub fn up_closure(&self, x: &str) -> Result<BTreeSet<String>> {
        let x = self.model.index_of(x)?;
        Ok(self
            .descendants(x)
            .into_iter()
            .map(|w| self.model.name(w).to_string())
            .collect())
    }

    /// `x` together with all its descendants, by index, in preorder.
    pub fn descendants(&self, x: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![x];
        while let Some(w) = stack.pop() {
            out.push(w);
            for &c in self.children(w).iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Nodes ordered by depth, then index.
    pub fn breadth_first(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = (0..self.len()).collect();
        nodes.sort_by_key(|&w| (self.depth[w], w));
        nodes
    }
}

/// Checks the unique-path property and computes parent and depth maps.
pub fn as_sync_tree(model: &KripkeModel) -> Result<SyncTree> {
    let n = model.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut indegree = vec![0usize; n];
    for (a, b) in model.edges() {
        indegree[b] += 1;
        parent[b] = Some(a);
    }
    if indegree[model.root] > 0 {
        return Err(Error::NotATree(format!(
            "root `{}` has an incoming edge (cycle)",
            model.name(model.root)
        )));
    }
    if let Some(w) = (0..n).find(|&w| indegree[w] > 1) {
        return Err(Error::NotATree(format!(
            "world `{}` has several incoming edges",
            model.name(w)
        )));
    }
    let mut depth = vec![usize::MAX; n];
    depth[model.root] = 0;
    let mut queue = std::collections::VecDeque::from([model.root]);
    while let Some(w) = queue.pop_front() {
        for &c in model.successors(w) {
            if depth[c] == usize::MAX {
                depth[c] = depth[w] + 1;
                queue.push_back(c);
            }
        }
    }
    if let Some(w) = (0..n).find(|&w| depth[w] == usize::MAX) {
        return Err(Error::NotATree(format!(
            "world `{}` is unreachable from the root (or lies on a cycle)",
            model.name(w)
        )));
    }
    Ok(SyncTree {
        model: model.clone(),
        parent,
        depth,
    })
}

/// A total map between the worlds of two models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeMorphism {
    source: KripkeModel,
    target: KripkeModel,
    map: Vec<usize>,
}

impl TreeMorphism {
    /// Builds a morphism from an id-to-id map, which must be total on the
    /// source and land in the target.
    pub fn new(
        source: KripkeModel,
        target: KripkeModel,
        map: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut indices = Vec::with_capacity(source.len());
        for w in source.worlds() {
            let image = map
                .get(w)
                .ok_or_else(|| Error::MalformedMorphism(format!("no image for world `{w}`")))?;
            let j = target.index_of(image).map_err(|_| {
                Error::MalformedMorphism(format!("image `{image}` of `{w}` is not a target world"))
            })?;
            indices.push(j);
        }
        if let Some(extra) = map.keys().find(|k| source.index_of(k).is_err()) {
            return Err(Error::MalformedMorphism(format!(
                "`{extra}` is not a source world"
            )));
        }
        Ok(TreeMorphism {
            source,
            target,
            map: indices,
        })
    }

    pub fn from_indices(source: KripkeModel, target: KripkeModel, map: Vec<usize>) -> Result<Self> {
        if map.len() != source.len() {
            return Err(Error::MalformedMorphism(format!(
                "map has {} entries for {} source worlds",
                map.len(),
                source.len()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&j| j >= target.len()) {
            return Err(Error::MalformedMorphism(format!(
                "target index {bad} out of range"
            )));
        }
        Ok(TreeMorphism {
            source,
            target,
            map,
        })
    }

    pub fn identity(model: &KripkeModel) -> Self {
        TreeMorphism {
            source: model.clone(),
            target: model.clone(),
            map: (0..model.len()).collect(),
        }
    }

    pub fn source(&self) -> &KripkeModel {
        &self.source
    }

    pub fn target(&self) -> &KripkeModel {
        &self.target
    }

    pub fn apply(&self, world: usize) -> usize {
        self.map[world]
    }

    pub fn indices(&self) -> &[usize] {
        &self.map
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.map
            .iter()
            .enumerate()
            .map(|(w, &j)| {
                (
                    self.source.name(w).to_string(),
                    self.target.name(j).to_string(),
                )
            })
            .collect()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &TreeMorphism) -> Result<TreeMorphism> {
        if self.target != other.source {
            return Err(Error::MalformedMorphism(
                "composition of non-adjacent morphisms".into(),
            ));
        }
        Ok(TreeMorphism {
            source: self.source.clone(),
            target: other.target.clone(),
            map: self.map.iter().map(|&j| other.map[j]).collect(),
        })
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.target.len()];
        self.map
            .iter()
            .all(|&j| !std::mem::replace(&mut seen[j], true))
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.target.len()];
        for &j in &self.map {
            hit[j] = true;
        }
        hit.into_iter().all(|h| h)
    }

    /// Root, edges and valuation are preserved.
    pub fn is_homomorphism(&self) -> bool {
        if self.map[self.source.root()] != self.target.root() {
            return false;
        }
        let edges_ok = self
            .source
            .edges()
            .all(|(a, b)| self.target.has_edge(self.map[a], self.map[b]));
        let labels_ok = (0..self.source.len()).all(|w| {
            self.source
                .label(w)
                .is_subset(self.target.label(self.map[w]))
        });
        edges_ok && labels_ok
    }

    /// A homomorphism that also reflects every proposition.
    pub fn is_pathwise_embedding(&self) -> bool {
        self.is_homomorphism()
            && (0..self.source.len()).all(|w| {
                self.target
                    .label(self.map[w])
                    .is_subset(self.source.label(w))
            })
    }

    /// An injective homomorphism reflecting propositions and edges.
    pub fn is_embedding(&self) -> bool {
        if !self.is_pathwise_embedding() || !self.is_injective() {
            return false;
        }
        let n = self.source.len();
        (0..n).all(|a| {
            (0..n).all(|b| {
                !self.target.has_edge(self.map[a], self.map[b]) || self.source.has_edge(a, b)
            })
        })
    }

    /// A pathwise embedding with the back condition: whenever `f(x) ⤳ y`
    /// some successor of `x` maps to `y`.
    pub fn is_p_morphism(&self) -> bool {
        self.is_pathwise_embedding() && self.back_condition_failure().is_none()
    }

    /// First `(x, y)` with `f(x) ⤳ y` and no successor of `x` over `y`.
    pub fn back_condition_failure(&self) -> Option<(usize, usize)> {
        for x in 0..self.source.len() {
            let images: BTreeSet<usize> = self
                .source
                .successors(x)
                .iter()
                .map(|&s| self.map[s])
                .collect();
            for &y in self.target.successors(self.map[x]) {
                if !images.contains(&y) {
                    return Some((x, y));
                }
            }
        }
        None
    }
}

/// Decides whether a pathwise embedding `s → t` exists and returns one.
///
/// Root labels must agree and each child of a node must be matched by some
/// equally labelled child of its image whose subtree again admits a
/// pathwise embedding. Decisions are memoized per node pair.
pub fn pathwise_embedding_exists(s: &SyncTree, t: &SyncTree) -> Option<TreeMorphism> {
    let mut memo: HashMap<(usize, usize), bool> = HashMap::new();
    let (sr, tr) = (s.root(), t.root());
    if !simulates(s, t, sr, tr, &mut memo) {
        return None;
    }
    let mut map = vec![usize::MAX; s.len()];
    let mut stack = vec![(sr, tr)];
    while let Some((x, y)) = stack.pop() {
        map[x] = y;
        for &c in s.children(x) {
            let d = t
                .children(y)
                .iter()
                .copied()
                .find(|&d| simulates(s, t, c, d, &mut memo))
                .expect("memoized decision guarantees a matching child");
            stack.push((c, d));
        }
    }
    Some(
        TreeMorphism::from_indices(s.model().clone(), t.model().clone(), map)
            .expect("witness is total"),
    )
}

fn simulates(
    s: &SyncTree,
    t: &SyncTree,
    x: usize,
    y: usize,
    memo: &mut HashMap<(usize, usize), bool>,
) -> bool {
    if let Some(&v) = memo.get(&(x, y)) {
        return v;
    }
    let result = s.model().label(x) == t.model().label(y)
        && s.children(x)
            .iter()
            .all(|&c| t.children(y).iter().any(|&d| simulates(s, t, c, d, memo)));
    memo.insert((x, y), result);
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn morphism(src: &KripkeModel, tgt: &KripkeModel, pairs: &[(&str, &str)]) -> TreeMorphism {
        let map = pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        TreeMorphism::new(src.clone(), tgt.clone(), &map).unwrap()
    }

    fn collapse_m3_m2() -> TreeMorphism {
        morphism(&m3(), &m2(), &[("w0", "w0"), ("w1", "w0"), ("w2", "w0")])
    }

    #[test]
    fn homomorphism_examples() {
        assert!(TreeMorphism::identity(&m1()).is_homomorphism());
        assert!(!morphism(&m0(), &m1(), &[("w0", "w1")]).is_homomorphism());
        assert!(collapse_m3_m2().is_homomorphism());
    }

    #[test]
    fn pathwise_embedding_examples() {
        assert!(TreeMorphism::identity(&m4()).is_pathwise_embedding());
        assert!(!morphism(&m0(), &m1(), &[("w0", "w1")]).is_pathwise_embedding());
        assert!(collapse_m3_m2().is_pathwise_embedding());
    }

    #[test]
    fn embedding_examples() {
        assert!(TreeMorphism::identity(&m3()).is_embedding());
        assert!(!collapse_m3_m2().is_embedding());
        let sub = m3().induced(&[0, 1]).unwrap();
        assert!(morphism(&sub, &m3(), &[("w0", "w0"), ("w1", "w1")]).is_embedding());
    }

    #[test]
    fn p_morphism_examples() {
        assert!(TreeMorphism::identity(&m4()).is_p_morphism());
        let root_only = m3().induced(&[0]).unwrap();
        assert!(!morphism(&root_only, &m3(), &[("w0", "w0")]).is_p_morphism());
        let collapse = collapse_m3_m2();
        assert!(!collapse.is_p_morphism());
        // the chain's last world w2 has no successor, its image has one
        assert_eq!(collapse.back_condition_failure(), Some((2, 0)));
    }

    #[test]
    fn malformed_morphisms_are_rejected() {
        let partial: BTreeMap<String, String> = [("w0".into(), "w0".into())].into();
        assert!(matches!(
            TreeMorphism::new(m3(), m2(), &partial),
            Err(Error::MalformedMorphism(_))
        ));
        let stray: BTreeMap<String, String> = [("w0".into(), "nowhere".into())].into();
        assert!(matches!(
            TreeMorphism::new(m0(), m2(), &stray),
            Err(Error::MalformedMorphism(_))
        ));
    }

    #[test]
    fn sync_tree_examples() {
        assert_eq!(as_sync_tree(&m1()).unwrap().height(), 1);
        assert!(matches!(as_sync_tree(&m2()), Err(Error::NotATree(_))));
        let t = as_sync_tree(&m3()).unwrap();
        assert_eq!(t.height(), 2);
        assert_eq!(t.depth(t.model().index_of("w2").unwrap()), 2);
        assert_eq!(as_sync_tree(&m0()).unwrap().height(), 0);
    }

    #[test]
    fn non_trees_are_rejected() {
        let diamond = KripkeModel::new(
            ["r", "a", "b", "c"],
            [("r", "a"), ("r", "b"), ("a", "c"), ("b", "c")],
            Vec::<(String, Vec<String>)>::new(),
            "r",
        )
        .unwrap();
        assert!(as_sync_tree(&diamond).is_err());
        let unreachable = KripkeModel::new(
            ["r", "x"],
            Vec::<(&str, &str)>::new(),
            Vec::<(String, Vec<String>)>::new(),
            "r",
        )
        .unwrap();
        assert!(as_sync_tree(&unreachable).is_err());
    }

    #[test]
    fn down_set_and_up_closure() {
        let t = as_sync_tree(&m3()).unwrap();
        let d = t.down_set("w1").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.height(), 1);
        assert_eq!(t.down_set("w0").unwrap().len(), 1);
        let up: Vec<String> = t.up_closure("w1").unwrap().into_iter().collect();
        assert_eq!(up, ["w1", "w2"]);
        assert!(matches!(t.down_set("zz"), Err(Error::UnknownWorld(_))));
    }

    #[test]
    fn pathwise_embedding_search_examples() {
        let t1 = as_sync_tree(&m1()).unwrap();
        let t0 = as_sync_tree(&m0()).unwrap();
        let id = pathwise_embedding_exists(&t1, &t1).unwrap();
        assert_eq!(id, TreeMorphism::identity(&m1()));
        assert!(pathwise_embedding_exists(&t1, &t0).is_none());
        // M4 has a p-free child that M1 cannot match
        let t4 = as_sync_tree(&m4()).unwrap();
        assert!(pathwise_embedding_exists(&t4, &t1).is_none());
        let f = pathwise_embedding_exists(&t1, &t4).unwrap();
        assert!(f.is_pathwise_embedding());
    }

    #[test]
    fn fold_of_disjoint_sum_is_pathwise_but_not_embedding() {
        // two copies of the loop, only the first reachable; fold onto the loop
        let sum = KripkeModel::new(
            ["a", "b"],
            [("a", "a"), ("b", "b")],
            Vec::<(String, Vec<String>)>::new(),
            "a",
        )
        .unwrap();
        let fold = morphism(&sum, &m2(), &[("a", "w0"), ("b", "w0")]);
        assert!(fold.is_pathwise_embedding());
        assert!(!fold.is_injective());
        assert!(!fold.is_embedding());

        // injective but not edge-reflecting into a non-tree
        let chain = KripkeModel::new(
            ["r", "x"],
            [("r", "x")],
            Vec::<(String, Vec<String>)>::new(),
            "r",
        )
        .unwrap();
        let target = KripkeModel::new(
            ["r", "x"],
            [("r", "x"), ("x", "r")],
            Vec::<(String, Vec<String>)>::new(),
            "r",
        )
        .unwrap();
        let f = morphism(&chain, &target, &[("r", "r"), ("x", "x")]);
        assert!(f.is_injective() && f.is_pathwise_embedding());
        assert!(!f.is_embedding());
    }
}
