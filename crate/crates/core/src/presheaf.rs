//! Finite presheaves over the poset of label paths.
//!
//! A label path is a non-empty sequence of labels; the paths of length at
//! most `k` form a forest under the prefix order. A [`PathPresheaf`] assigns
//! a finite set of named elements to each path and a parent (restriction)
//! map along each one-step prefix. Only non-empty fibres are stored, and the
//! elements of a fibre are kept sorted by name, so two presheaves are equal
//! exactly when they agree element for element.
//!
//! The lifting checks lift against the boundary inclusions: the empty
//! presheaf into each length-1 representable, and each one-step prefix
//! inclusion of representables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::kripke::{as_sync_tree, Label, SyncTree, TreeMorphism, Vocabulary};

/// A non-empty sequence of labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelPath(Vec<Label>);

#[allow(clippy::len_without_is_empty)]
impl LabelPath {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::MalformedPresheaf("label paths are non-empty".into()));
        }
        Ok(LabelPath(labels))
    }

    pub fn single(label: Label) -> Self {
        LabelPath(vec![label])
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn last(&self) -> &Label {
        self.0.last().expect("label paths are non-empty")
    }

    /// The one-step prefix, if the path is longer than one.
    pub fn parent(&self) -> Option<LabelPath> {
        self.prefix(self.len() - 1)
    }

    /// The prefix of length `m`, for `1 <= m <= len`.
    pub fn prefix(&self, m: usize) -> Option<LabelPath> {
        (m >= 1 && m <= self.len()).then(|| LabelPath(self.0[..m].to_vec()))
    }

    pub fn child(&self, label: Label) -> LabelPath {
        let mut labels = self.0.clone();
        labels.push(label);
        LabelPath(labels)
    }

    pub fn is_prefix_of(&self, other: &LabelPath) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for LabelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Whether the path `p` embeds into `q`. There is at most one such
/// embedding, and it exists exactly when `p` is a prefix of `q`.
pub fn path_embedding_exists(p: &LabelPath, q: &LabelPath) -> bool {
    p.is_prefix_of(q)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Fibre {
    names: Vec<String>,
    /// Index of each element's restriction in the parent fibre; empty for
    /// length-1 paths.
    parents: Vec<usize>,
}

/// Raw fibre contents handed to [`PathPresheaf::from_indexed`]: element
/// names and, for paths longer than one, raw parent indices.
pub(crate) type RawFibres = BTreeMap<LabelPath, (Vec<String>, Vec<usize>)>;

/// Per-path permutation from raw to canonical element positions.
pub(crate) type Reindex = BTreeMap<LabelPath, Vec<usize>>;

/// A finitely supported presheaf on label paths of length at most `bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathPresheaf {
    bound: usize,
    fibres: BTreeMap<LabelPath, Fibre>,
}

impl PathPresheaf {
    pub fn empty(bound: usize) -> Result<Self> {
        check_bound(bound)?;
        Ok(PathPresheaf {
            bound,
            fibres: BTreeMap::new(),
        })
    }

    /// Builds a presheaf from `(path, element, parent element)` triples.
    /// Parents are named in the fibre of the one-step prefix and must be
    /// absent exactly for length-1 paths.
    pub fn from_elements<I>(bound: usize, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LabelPath, String, Option<String>)>,
    {
        let mut grouped: BTreeMap<LabelPath, Vec<(String, Option<String>)>> = BTreeMap::new();
        for (path, name, parent) in elements {
            grouped.entry(path).or_default().push((name, parent));
        }
        let mut raw: RawFibres = BTreeMap::new();
        for (path, items) in &grouped {
            let mut names = Vec::new();
            let mut parents = Vec::new();
            for (name, parent) in items {
                names.push(name.clone());
                match (path.parent(), parent) {
                    (None, None) => {}
                    (None, Some(_)) => {
                        return Err(Error::MalformedPresheaf(format!(
                            "element `{name}` at {path} cannot have a parent"
                        )))
                    }
                    (Some(_), None) => {
                        return Err(Error::MalformedPresheaf(format!(
                            "element `{name}` at {path} needs a parent"
                        )))
                    }
                    (Some(pp), Some(parent)) => {
                        let pos = grouped
                            .get(&pp)
                            .and_then(|v| v.iter().position(|(n, _)| n == parent))
                            .ok_or_else(|| {
                                Error::MalformedPresheaf(format!(
                                    "parent `{parent}` of `{name}` is not an element at {pp}"
                                ))
                            })?;
                        parents.push(pos);
                    }
                }
            }
            raw.insert(path.clone(), (names, parents));
        }
        Self::from_indexed(bound, raw).map(|(x, _)| x)
    }

    /// Validates and canonicalizes raw fibres. Empty fibres are dropped.
    pub(crate) fn from_indexed(bound: usize, raw: RawFibres) -> Result<(Self, Reindex)> {
        check_bound(bound)?;
        let mut fibres: BTreeMap<LabelPath, Fibre> = BTreeMap::new();
        let mut reindex: Reindex = BTreeMap::new();
        // Prefixes sort before their extensions, so parents are processed first.
        for (path, (names, parents)) in raw {
            if names.is_empty() {
                continue;
            }
            if path.len() > bound {
                return Err(Error::MalformedPresheaf(format!(
                    "path {path} is longer than the bound {bound}"
                )));
            }
            let mut order: Vec<usize> = (0..names.len()).collect();
            order.sort_by(|&a, &b| names[a].cmp(&names[b]));
            if let Some(w) = order.windows(2).find(|w| names[w[0]] == names[w[1]]) {
                return Err(Error::MalformedPresheaf(format!(
                    "element `{}` occurs twice at {path}",
                    names[w[0]]
                )));
            }
            let mut perm = vec![0; names.len()];
            for (pos, &r) in order.iter().enumerate() {
                perm[r] = pos;
            }
            let canonical_parents = match path.parent() {
                None => Vec::new(),
                Some(pp) => {
                    let parent_perm = reindex.get(&pp).ok_or_else(|| {
                        Error::MalformedPresheaf(format!(
                            "{path} is inhabited but its prefix {pp} is not"
                        ))
                    })?;
                    if parents.len() != names.len() {
                        return Err(Error::MalformedPresheaf(format!(
                            "every element at {path} needs a parent"
                        )));
                    }
                    let mut out = Vec::with_capacity(names.len());
                    for &r in &order {
                        let p = *parent_perm.get(parents[r]).ok_or_else(|| {
                            Error::MalformedPresheaf(format!("parent index out of range at {path}"))
                        })?;
                        out.push(p);
                    }
                    out
                }
            };
            let sorted_names = order.iter().map(|&r| names[r].clone()).collect();
            fibres.insert(
                path.clone(),
                Fibre {
                    names: sorted_names,
                    parents: canonical_parents,
                },
            );
            reindex.insert(path, perm);
        }
        Ok((PathPresheaf { bound, fibres }, reindex))
    }

    /// The representable presheaf of `path`: one element `*` at each prefix.
    pub fn representable(path: &LabelPath, bound: usize) -> Result<Self> {
        if path.len() > bound {
            return Err(Error::InvalidBound(format!(
                "{path} is longer than {bound}"
            )));
        }
        let raw = (1..=path.len())
            .map(|m| {
                let parents = if m == 1 { vec![] } else { vec![0] };
                (
                    path.prefix(m).expect("in range"),
                    (vec!["*".to_string()], parents),
                )
            })
            .collect();
        Self::from_indexed(bound, raw).map(|(x, _)| x)
    }

    /// The terminal presheaf: one element `*` on every path over `vocabulary`.
    pub fn terminal(vocabulary: &Vocabulary, bound: usize) -> Result<Self> {
        check_bound(bound)?;
        let labels = vocabulary.all_labels();
        let mut raw: RawFibres = BTreeMap::new();
        let mut layer: Vec<LabelPath> = labels.iter().cloned().map(LabelPath::single).collect();
        for m in 1..=bound {
            let mut next = Vec::new();
            for p in layer {
                let parents = if m == 1 { vec![] } else { vec![0] };
                for l in &labels {
                    if m < bound {
                        next.push(p.child(l.clone()));
                    }
                }
                raw.insert(p, (vec!["*".to_string()], parents));
            }
            layer = next;
        }
        Self::from_indexed(bound, raw).map(|(x, _)| x)
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    /// Inhabited paths in ascending order (prefixes first).
    pub fn paths(&self) -> impl Iterator<Item = &LabelPath> {
        self.fibres.keys()
    }

    /// Elements at `path`, sorted by name.
    pub fn elements(&self, path: &LabelPath) -> &[String] {
        self.fibres.get(path).map_or(&[], |f| f.names.as_slice())
    }

    pub fn count(&self, path: &LabelPath) -> usize {
        self.elements(path).len()
    }

    pub fn index_of(&self, path: &LabelPath, name: &str) -> Option<usize> {
        self.fibres
            .get(path)?
            .names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
    }

    /// Restriction of element `i` at `path` to the one-step prefix.
    pub fn parent(&self, path: &LabelPath, i: usize) -> Option<usize> {
        self.fibres
            .get(path)
            .and_then(|f| f.parents.get(i).copied())
    }

    /// Restriction of element `i` at `path` to the prefix of length `m`.
    pub fn restrict_element(&self, path: &LabelPath, i: usize, m: usize) -> usize {
        assert!(m >= 1 && m <= path.len(), "prefix length out of range");
        let mut cur = path.clone();
        let mut idx = i;
        while cur.len() > m {
            idx = self
                .parent(&cur, idx)
                .expect("inhabited paths have parents");
            cur = cur.parent().expect("longer than one");
        }
        idx
    }

    /// Total number of elements.
    pub fn size(&self) -> usize {
        self.fibres.values().map(|f| f.names.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fibres.is_empty()
    }

    /// Inhabited one-step extensions of `path`.
    pub fn extensions<'a>(
        &'a self,
        path: &'a LabelPath,
    ) -> impl Iterator<Item = &'a LabelPath> + 'a {
        self.fibres
            .range(path.clone()..)
            .skip(1)
            .take_while(move |(q, _)| path.is_prefix_of(q))
            .filter(move |(q, _)| q.len() == path.len() + 1)
            .map(|(q, _)| q)
    }

    /// Elements at `ext` whose parent is element `i` of its prefix.
    pub fn children_of(&self, ext: &LabelPath, i: usize) -> Vec<usize> {
        self.fibres.get(ext).map_or_else(Vec::new, |f| {
            (0..f.names.len()).filter(|&c| f.parents[c] == i).collect()
        })
    }

    /// All labels occurring on inhabited paths, as a vocabulary.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::new(self.fibres.keys().flat_map(|p| {
            p.labels()
                .iter()
                .flat_map(|l| l.props().map(str::to_string))
                .collect::<Vec<_>>()
        }))
    }

    /// `(path, element, parent)` triples in canonical order.
    pub fn triples(&self) -> Vec<(LabelPath, String, Option<String>)> {
        let mut out = Vec::new();
        for (path, f) in &self.fibres {
            let pp = path.parent();
            for (i, name) in f.names.iter().enumerate() {
                let parent = pp
                    .as_ref()
                    .map(|pp| self.elements(pp)[f.parents[i]].clone());
                out.push((path.clone(), name.clone(), parent));
            }
        }
        out
    }
}

impl fmt::Display for PathPresheaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bound {}", self.bound)?;
        for (path, fibre) in &self.fibres {
            write!(f, "{path}:")?;
            let pp = path.parent();
            for (i, name) in fibre.names.iter().enumerate() {
                match &pp {
                    Some(pp) => write!(f, " {name}<-{}", self.elements(pp)[fibre.parents[i]])?,
                    None => write!(f, " {name}")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check_bound(bound: usize) -> Result<()> {
    if bound == 0 {
        Err(Error::InvalidBound("path bounds start at 1".into()))
    } else {
        Ok(())
    }
}

/// A natural transformation between path presheaves of the same bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresheafMorphism {
    source: PathPresheaf,
    target: PathPresheaf,
    components: BTreeMap<LabelPath, Vec<usize>>,
}

impl PresheafMorphism {
    /// Checks totality and naturality.
    pub fn new(
        source: PathPresheaf,
        target: PathPresheaf,
        components: BTreeMap<LabelPath, Vec<usize>>,
    ) -> Result<Self> {
        if source.bound != target.bound {
            return Err(Error::Precondition(format!(
                "bounds differ: {} and {}",
                source.bound, target.bound
            )));
        }
        if let Some(p) = components.keys().find(|p| !source.fibres.contains_key(*p)) {
            return Err(Error::NotNatural(format!(
                "component at uninhabited path {p}"
            )));
        }
        for (path, fibre) in &source.fibres {
            let comp = components
                .get(path)
                .ok_or_else(|| Error::NotNatural(format!("missing component at {path}")))?;
            if comp.len() != fibre.names.len() {
                return Err(Error::NotNatural(format!(
                    "component at {path} is not total"
                )));
            }
            let n = target.count(path);
            if comp.iter().any(|&y| y >= n) {
                return Err(Error::NotNatural(format!(
                    "component at {path} leaves the target"
                )));
            }
        }
        let m = PresheafMorphism {
            source,
            target,
            components,
        };
        if let Some(msg) = m.naturality_failure() {
            return Err(Error::NotNatural(msg));
        }
        Ok(m)
    }

    /// Builds a morphism from element names.
    pub fn from_names(
        source: PathPresheaf,
        target: PathPresheaf,
        map: &BTreeMap<LabelPath, BTreeMap<String, String>>,
    ) -> Result<Self> {
        let mut components = BTreeMap::new();
        for path in source.paths() {
            let names = map
                .get(path)
                .ok_or_else(|| Error::NotNatural(format!("missing component at {path}")))?;
            let mut comp = Vec::new();
            for x in source.elements(path) {
                let y = names
                    .get(x)
                    .ok_or_else(|| Error::NotNatural(format!("no image for `{x}` at {path}")))?;
                comp.push(target.index_of(path, y).ok_or_else(|| {
                    Error::NotNatural(format!("image `{y}` is not an element at {path}"))
                })?);
            }
            components.insert(path.clone(), comp);
        }
        Self::new(source, target, components)
    }

    fn naturality_failure(&self) -> Option<String> {
        for (path, comp) in &self.components {
            let Some(pp) = path.parent() else { continue };
            for (x, &y) in comp.iter().enumerate() {
                let via_source = self.components[&pp][self.source.fibres[path].parents[x]];
                let via_target = self.target.fibres[path].parents[y];
                if via_source != via_target {
                    return Some(format!(
                        "square at {pp} ⊂ {path} fails for `{}`",
                        self.source.fibres[path].names[x]
                    ));
                }
            }
        }
        None
    }

    pub fn identity(x: &PathPresheaf) -> Self {
        let components = x
            .fibres
            .iter()
            .map(|(p, f)| (p.clone(), (0..f.names.len()).collect()))
            .collect();
        PresheafMorphism {
            source: x.clone(),
            target: x.clone(),
            components,
        }
    }

    pub fn source(&self) -> &PathPresheaf {
        &self.source
    }

    pub fn target(&self) -> &PathPresheaf {
        &self.target
    }

    pub fn apply(&self, path: &LabelPath, i: usize) -> usize {
        self.components[path][i]
    }

    pub fn component(&self, path: &LabelPath) -> &[usize] {
        self.components.get(path).map_or(&[], Vec::as_slice)
    }

    pub fn components(&self) -> &BTreeMap<LabelPath, Vec<usize>> {
        &self.components
    }

    /// Components by element name.
    pub fn named_components(&self) -> BTreeMap<LabelPath, BTreeMap<String, String>> {
        self.components
            .iter()
            .map(|(p, comp)| {
                let src = self.source.elements(p);
                let tgt = self.target.elements(p);
                (
                    p.clone(),
                    comp.iter()
                        .enumerate()
                        .map(|(x, &y)| (src[x].clone(), tgt[y].clone()))
                        .collect(),
                )
            })
            .collect()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &PresheafMorphism) -> Result<PresheafMorphism> {
        if self.target != other.source {
            return Err(Error::Precondition("composed morphisms do not meet".into()));
        }
        let components = self
            .components
            .iter()
            .map(|(p, comp)| {
                (
                    p.clone(),
                    comp.iter().map(|&y| other.components[p][y]).collect(),
                )
            })
            .collect();
        Ok(PresheafMorphism {
            source: self.source.clone(),
            target: other.target.clone(),
            components,
        })
    }

    /// Every component injective.
    pub fn is_mono(&self) -> bool {
        self.components.values().all(|comp| {
            let set: BTreeSet<usize> = comp.iter().copied().collect();
            set.len() == comp.len()
        })
    }

    /// Every component surjective.
    pub fn is_epi(&self) -> bool {
        self.target.fibres.iter().all(|(p, f)| {
            let hit: BTreeSet<usize> = self.component(p).iter().copied().collect();
            hit.len() == f.names.len()
        })
    }

    /// Right lifting against the boundary inclusions.
    pub fn is_trivial_fibration(&self) -> bool {
        self.trivial_fibration_failure().is_none()
    }

    /// A description of the first lifting problem without a solution.
    pub fn trivial_fibration_failure(&self) -> Option<String> {
        for (path, fibre) in &self.target.fibres {
            let comp = self.component(path);
            match path.parent() {
                None => {
                    let hit: BTreeSet<usize> = comp.iter().copied().collect();
                    if let Some(y) = (0..fibre.names.len()).find(|y| !hit.contains(y)) {
                        return Some(format!("`{}` at {path} has no preimage", fibre.names[y]));
                    }
                }
                Some(pp) => {
                    let source_parents = self.source.fibres.get(path).map(|f| f.parents.as_slice());
                    for (y, &y_parent) in fibre.parents.iter().enumerate() {
                        for (x, &image) in self.component(&pp).iter().enumerate() {
                            if image != y_parent {
                                continue;
                            }
                            let lifted = source_parents.is_some_and(|ps| {
                                comp.iter()
                                    .enumerate()
                                    .any(|(x2, &img)| img == y && ps[x2] == x)
                            });
                            if !lifted {
                                return Some(format!(
                                    "`{}` at {pp} has no extension over `{}` at {path}",
                                    self.source.fibres[&pp].names[x], fibre.names[y]
                                ));
                            }
                        }
                    }
                }
            }
        }
        None
    }
}

/// A span `left: apex → X`, `right: apex → Y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Span {
    pub apex: PathPresheaf,
    pub left: PresheafMorphism,
    pub right: PresheafMorphism,
}

impl Span {
    pub fn new(left: PresheafMorphism, right: PresheafMorphism) -> Result<Self> {
        if left.source != right.source {
            return Err(Error::Precondition(
                "span legs have different sources".into(),
            ));
        }
        Ok(Span {
            apex: left.source.clone(),
            left,
            right,
        })
    }

    /// Both legs are trivial fibrations.
    pub fn is_morita(&self) -> bool {
        self.left.is_trivial_fibration() && self.right.is_trivial_fibration()
    }

    /// The pairing into the product is injective at every path.
    pub fn is_jointly_monic(&self) -> bool {
        self.apex.fibres.keys().all(|p| {
            let pairs: BTreeSet<(usize, usize)> = self
                .left
                .component(p)
                .iter()
                .copied()
                .zip(self.right.component(p).iter().copied())
                .collect();
            pairs.len() == self.apex.count(p)
        })
    }

    pub fn restrict(&self, m: usize) -> Result<Span> {
        Span::new(
            restrict_morphism(&self.left, m)?,
            restrict_morphism(&self.right, m)?,
        )
    }

    pub fn extend(&self, n: usize) -> Result<Span> {
        Span::new(
            extend_morphism(&self.left, n)?,
            extend_morphism(&self.right, n)?,
        )
    }
}

/// The presheaf of path embeddings into a tree: the elements at `P` are the
/// nodes whose branch is labelled by `P`, and restriction is the parent map.
pub fn tree_to_presheaf(tree: &SyncTree, k: usize) -> Result<PathPresheaf> {
    check_bound(k)?;
    if tree.height() + 1 > k {
        return Err(Error::InvalidBound(format!(
            "tree of height {} needs a bound of at least {}",
            tree.height(),
            tree.height() + 1
        )));
    }
    let m = tree.model();
    PathPresheaf::from_elements(
        k,
        (0..tree.len()).map(|w| {
            (
                LabelPath(tree.branch_labels(w)),
                m.name(w).to_string(),
                tree.parent(w).map(|p| m.name(p).to_string()),
            )
        }),
    )
}

/// The presheaf morphism induced by a pathwise embedding of trees.
pub fn tree_morphism_image(f: &TreeMorphism, k: usize) -> Result<PresheafMorphism> {
    let s = as_sync_tree(f.source())?;
    let t = as_sync_tree(f.target())?;
    if !f.is_pathwise_embedding() {
        return Err(Error::Precondition(
            "only pathwise embeddings induce presheaf maps".into(),
        ));
    }
    let x = tree_to_presheaf(&s, k)?;
    let y = tree_to_presheaf(&t, k)?;
    let mut components: BTreeMap<LabelPath, Vec<usize>> = BTreeMap::new();
    for path in x.paths() {
        let comp = x
            .elements(path)
            .iter()
            .map(|name| {
                let w = s.model().index_of(name).expect("element names are worlds");
                let image = t.model().name(f.apply(w));
                y.index_of(path, image)
                    .expect("pathwise embeddings preserve branch labels")
            })
            .collect();
        components.insert(path.clone(), comp);
    }
    PresheafMorphism::new(x, y, components)
}

/// Drops every path longer than `m`.
pub fn restrict(x: &PathPresheaf, m: usize) -> Result<PathPresheaf> {
    if m == 0 || m > x.bound {
        return Err(Error::InvalidBound(format!(
            "cannot restrict a bound-{} presheaf to {m}",
            x.bound
        )));
    }
    Ok(PathPresheaf {
        bound: m,
        fibres: x
            .fibres
            .iter()
            .filter(|(p, _)| p.len() <= m)
            .map(|(p, f)| (p.clone(), f.clone()))
            .collect(),
    })
}

/// Raises the bound to `n`; the new paths are uninhabited.
pub fn extend(x: &PathPresheaf, n: usize) -> Result<PathPresheaf> {
    if n < x.bound {
        return Err(Error::InvalidBound(format!(
            "cannot extend a bound-{} presheaf to {n}",
            x.bound
        )));
    }
    Ok(PathPresheaf {
        bound: n,
        fibres: x.fibres.clone(),
    })
}

pub fn restrict_morphism(f: &PresheafMorphism, m: usize) -> Result<PresheafMorphism> {
    Ok(PresheafMorphism {
        source: restrict(&f.source, m)?,
        target: restrict(&f.target, m)?,
        components: f
            .components
            .iter()
            .filter(|(p, _)| p.len() <= m)
            .map(|(p, c)| (p.clone(), c.clone()))
            .collect(),
    })
}

pub fn extend_morphism(f: &PresheafMorphism, n: usize) -> Result<PresheafMorphism> {
    Ok(PresheafMorphism {
        source: extend(&f.source, n)?,
        target: extend(&f.target, n)?,
        components: f.components.clone(),
    })
}

/// Whether every inhabited one-step extension restricts onto its prefix.
pub fn is_fibrant(x: &PathPresheaf) -> bool {
    fibrancy_failure(x).is_none()
}

/// A witness of non-fibrancy: an inhabited extension `q` of `p` and an
/// element of `x(p)` outside the image of the restriction.
pub fn fibrancy_failure(x: &PathPresheaf) -> Option<(LabelPath, LabelPath, usize)> {
    for (q, f) in &x.fibres {
        let Some(p) = q.parent() else { continue };
        let hit: BTreeSet<usize> = f.parents.iter().copied().collect();
        if let Some(i) = (0..x.count(&p)).find(|i| !hit.contains(i)) {
            return Some((p, q.clone(), i));
        }
    }
    None
}

/// Fibrancy by raw lifting: for every prefix `p` of an inhabited path `q`
/// (of any length difference) and every element of `x(p)`, search for a
/// diagonal in the square `y(p) → x`, `y(q) → 1` against `x → 1`.
pub fn is_fibrant_by_lifting(x: &PathPresheaf) -> Result<bool> {
    let one = PathPresheaf::terminal(&x.vocabulary(), x.bound)?;
    let bang = to_terminal(x, &one)?;
    for q in x.paths() {
        let yq = PathPresheaf::representable(q, x.bound)?;
        let v = to_terminal(&yq, &one)?;
        for m in 1..q.len() {
            let p = q.prefix(m).expect("in range");
            let i = prefix_inclusion(&p, q, x.bound)?;
            for e in 0..x.count(&p) {
                let u = element_arrow(x, &p, e)?;
                if has_lifting(&i, &bang, &u, &v)?.is_none() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn to_terminal(x: &PathPresheaf, one: &PathPresheaf) -> Result<PresheafMorphism> {
    let components = x
        .fibres
        .iter()
        .map(|(p, f)| (p.clone(), vec![0; f.names.len()]))
        .collect();
    PresheafMorphism::new(x.clone(), one.clone(), components)
}

/// The arrow `y(path) → x` picking out element `i` of `x(path)`.
pub fn element_arrow(x: &PathPresheaf, path: &LabelPath, i: usize) -> Result<PresheafMorphism> {
    if i >= x.count(path) {
        return Err(Error::Precondition(format!("no element {i} at {path}")));
    }
    let y = PathPresheaf::representable(path, x.bound)?;
    let components = (1..=path.len())
        .map(|m| {
            (
                path.prefix(m).expect("in range"),
                vec![x.restrict_element(path, i, m)],
            )
        })
        .collect();
    PresheafMorphism::new(y, x.clone(), components)
}

/// The inclusion `y(p) → y(q)` for a prefix `p` of `q`.
pub fn prefix_inclusion(p: &LabelPath, q: &LabelPath, bound: usize) -> Result<PresheafMorphism> {
    if !p.is_prefix_of(q) {
        return Err(Error::Precondition(format!("{p} is not a prefix of {q}")));
    }
    let yp = PathPresheaf::representable(p, bound)?;
    let yq = PathPresheaf::representable(q, bound)?;
    let components = yp.fibres.keys().map(|r| (r.clone(), vec![0])).collect();
    PresheafMorphism::new(yp, yq, components)
}

/// The unique map out of the empty presheaf.
pub fn from_empty(x: &PathPresheaf) -> PresheafMorphism {
    PresheafMorphism {
        source: PathPresheaf {
            bound: x.bound,
            fibres: BTreeMap::new(),
        },
        target: x.clone(),
        components: BTreeMap::new(),
    }
}

/// Searches for `d: B → X` with `d ∘ i = u` and `g ∘ d = v`, given the
/// square `i: A → B`, `g: X → Y`, `u: A → X`, `v: B → Y`.
///
/// Elements of `B` only constrain each other through restriction, so the
/// search is a bottom-up feasibility pass over `B`'s forest of elements
/// followed by a top-down choice.
pub fn has_lifting(
    i: &PresheafMorphism,
    g: &PresheafMorphism,
    u: &PresheafMorphism,
    v: &PresheafMorphism,
) -> Result<Option<PresheafMorphism>> {
    if u.source != i.source || u.target != g.source || v.source != i.target || v.target != g.target
    {
        return Err(Error::NonCommutingSquare(
            "the four arrows do not form a square".into(),
        ));
    }
    if u.then(g)? != i.then(v)? {
        return Err(Error::NonCommutingSquare("g ∘ u differs from v ∘ i".into()));
    }
    let b = &i.target;
    let x = &g.source;

    // forced[path][b] = the value u prescribes for b, if b is in the image of i
    let mut forced: BTreeMap<&LabelPath, Vec<Option<usize>>> = BTreeMap::new();
    for (path, f) in &b.fibres {
        let mut slot = vec![None; f.names.len()];
        for (a, &bi) in i.component(path).iter().enumerate() {
            let ux = u.apply(path, a);
            match slot[bi] {
                Some(prev) if prev != ux => return Ok(None),
                _ => slot[bi] = Some(ux),
            }
        }
        forced.insert(path, slot);
    }

    // feasible[path][b][x]
    let mut feasible: HashMap<&LabelPath, Vec<Vec<bool>>> = HashMap::new();
    for (path, f) in b.fibres.iter().rev() {
        let nx = x.count(path);
        let mut table = vec![vec![false; nx]; f.names.len()];
        for (bi, row) in table.iter_mut().enumerate() {
            for (xi, cell) in row.iter_mut().enumerate() {
                *cell = g.apply(path, xi) == v.apply(path, bi)
                    && forced[path][bi].is_none_or(|fx| fx == xi);
            }
        }
        for ext in b.extensions(path) {
            let child_table = &feasible[ext];
            let ext_parents = &b.fibres[ext].parents;
            let x_parents = x
                .fibres
                .get(ext)
                .map(|f| f.parents.as_slice())
                .unwrap_or(&[]);
            for (c, &cb) in ext_parents.iter().enumerate() {
                // x-elements at `path` that have a feasible child for c
                let mut ok = vec![false; nx];
                for (x2, &xp) in x_parents.iter().enumerate() {
                    if child_table[c][x2] {
                        ok[xp] = true;
                    }
                }
                for (xi, cell) in table[cb].iter_mut().enumerate() {
                    *cell = *cell && ok[xi];
                }
            }
        }
        feasible.insert(path, table);
    }

    let mut components: BTreeMap<LabelPath, Vec<usize>> = BTreeMap::new();
    for (path, f) in &b.fibres {
        let table = &feasible[path];
        let mut comp = Vec::with_capacity(f.names.len());
        for bi in 0..f.names.len() {
            let choice = match path.parent() {
                None => (0..x.count(path)).find(|&xi| table[bi][xi]),
                Some(pp) => {
                    let want = components[&pp][f.parents[bi]];
                    (0..x.count(path))
                        .find(|&xi| table[bi][xi] && x.fibres[path].parents[xi] == want)
                }
            };
            match choice {
                Some(xi) => comp.push(xi),
                None => return Ok(None),
            }
        }
        components.insert(path.clone(), comp);
    }
    PresheafMorphism::new(b.clone(), x.clone(), components).map(Some)
}

/// Number of natural transformations `x → y`.
pub fn count_morphisms(x: &PathPresheaf, y: &PathPresheaf) -> u128 {
    // ways[path][xi][yi]: extensions of xi ↦ yi to everything above xi
    let mut ways: HashMap<&LabelPath, Vec<Vec<u128>>> = HashMap::new();
    for (path, f) in x.fibres.iter().rev() {
        let ny = y.count(path);
        let mut table = vec![vec![1u128; ny]; f.names.len()];
        for ext in x.extensions(path) {
            let child = &ways[ext];
            let y_parents = y
                .fibres
                .get(ext)
                .map(|f| f.parents.as_slice())
                .unwrap_or(&[]);
            for (c, &cx) in x.fibres[ext].parents.iter().enumerate() {
                let mut sums = vec![0u128; ny];
                for (y2, &yp) in y_parents.iter().enumerate() {
                    sums[yp] = sums[yp].saturating_add(child[c][y2]);
                }
                for (yi, cell) in table[cx].iter_mut().enumerate() {
                    *cell = cell.saturating_mul(sums[yi]);
                }
            }
        }
        ways.insert(path, table);
    }
    let mut total = 1u128;
    for path in x.fibres.keys().filter(|p| p.len() == 1) {
        for row in &ways[path] {
            total = total.saturating_mul(row.iter().fold(0u128, |a, &b| a.saturating_add(b)));
        }
    }
    total
}

/// The product presheaf with its two projections.
pub fn product(
    x: &PathPresheaf,
    y: &PathPresheaf,
) -> Result<(PathPresheaf, PresheafMorphism, PresheafMorphism)> {
    if x.bound != y.bound {
        return Err(Error::Precondition(
            "product of presheaves with different bounds".into(),
        ));
    }
    let mut raw: RawFibres = BTreeMap::new();
    let mut pairs: BTreeMap<LabelPath, Vec<(usize, usize)>> = BTreeMap::new();
    for (path, fx) in &x.fibres {
        let Some(fy) = y.fibres.get(path) else {
            continue;
        };
        let ny = fy.names.len();
        let mut items = Vec::new();
        let mut parents = Vec::new();
        for xi in 0..fx.names.len() {
            for yi in 0..ny {
                items.push((xi, yi));
                if path.len() > 1 {
                    let py = y.count(&path.parent().expect("len > 1"));
                    parents.push(fx.parents[xi] * py + fy.parents[yi]);
                }
            }
        }
        let mut names: Vec<String> = items
            .iter()
            .map(|&(a, b)| format!("({},{})", fx.names[a], fy.names[b]))
            .collect();
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() < names.len() {
            names = items
                .iter()
                .map(|&(a, b)| format!("({}:{},{})", fx.names[a].len(), fx.names[a], fy.names[b]))
                .collect();
        }
        raw.insert(path.clone(), (names, parents));
        pairs.insert(path.clone(), items);
    }
    let (z, reindex) = PathPresheaf::from_indexed(x.bound, raw)?;
    let mut left = BTreeMap::new();
    let mut right = BTreeMap::new();
    for (path, items) in &pairs {
        let perm = &reindex[path];
        let mut l = vec![0; items.len()];
        let mut r = vec![0; items.len()];
        for (raw_i, &(a, b)) in items.iter().enumerate() {
            l[perm[raw_i]] = a;
            r[perm[raw_i]] = b;
        }
        left.insert(path.clone(), l);
        right.insert(path.clone(), r);
    }
    let pl = PresheafMorphism::new(z.clone(), x.clone(), left)?;
    let pr = PresheafMorphism::new(z, y.clone(), right)?;
    Ok((pl.source.clone(), pl, pr))
}

/// The subpresheaf on the kept elements, with its inclusion. The kept set
/// must be closed under restriction.
pub fn subpresheaf(
    x: &PathPresheaf,
    keep: &BTreeMap<LabelPath, Vec<bool>>,
) -> Result<(PathPresheaf, PresheafMorphism)> {
    let mut raw: RawFibres = BTreeMap::new();
    let mut kept: BTreeMap<LabelPath, Vec<usize>> = BTreeMap::new();
    let mut position: BTreeMap<LabelPath, Vec<Option<usize>>> = BTreeMap::new();
    for (path, f) in &x.fibres {
        let flags = keep.get(path);
        let mut pos = vec![None; f.names.len()];
        let mut names = Vec::new();
        let mut parents = Vec::new();
        let mut idx = Vec::new();
        for xi in 0..f.names.len() {
            if !flags.is_some_and(|v| v.get(xi).copied().unwrap_or(false)) {
                continue;
            }
            if let Some(pp) = path.parent() {
                let p = position[&pp][f.parents[xi]].ok_or_else(|| {
                    Error::Precondition(format!(
                        "kept element `{}` at {path} has a dropped restriction",
                        f.names[xi]
                    ))
                })?;
                parents.push(p);
            }
            pos[xi] = Some(names.len());
            names.push(f.names[xi].clone());
            idx.push(xi);
        }
        position.insert(path.clone(), pos);
        if !names.is_empty() {
            raw.insert(path.clone(), (names, parents));
            kept.insert(path.clone(), idx);
        }
    }
    // names are a sorted subsequence already, so canonical order is kept order
    let (s, _) = PathPresheaf::from_indexed(x.bound, raw)?;
    let inclusion = PresheafMorphism::new(s.clone(), x.clone(), kept)?;
    Ok((s, inclusion))
}

/// Epi-mono factorization `x → image → y`.
pub fn image(f: &PresheafMorphism) -> Result<(PresheafMorphism, PresheafMorphism)> {
    let mut keep: BTreeMap<LabelPath, Vec<bool>> = BTreeMap::new();
    for (path, fib) in &f.target.fibres {
        let mut flags = vec![false; fib.names.len()];
        for &y in f.component(path) {
            flags[y] = true;
        }
        keep.insert(path.clone(), flags);
    }
    let (im, inclusion) = subpresheaf(&f.target, &keep)?;
    let mut components = BTreeMap::new();
    for (path, comp) in &f.components {
        let inc = inclusion.component(path);
        components.insert(
            path.clone(),
            comp.iter()
                .map(|&y| inc.iter().position(|&t| t == y).expect("in image"))
                .collect(),
        );
    }
    let epi = PresheafMorphism::new(f.source.clone(), im, components)?;
    Ok((epi, inclusion))
}

/// The pairing `⟨f, g⟩: apex → X × Y` into a product built by [`product`].
pub fn pairing(
    f: &PresheafMorphism,
    g: &PresheafMorphism,
    prod: &(PathPresheaf, PresheafMorphism, PresheafMorphism),
) -> Result<PresheafMorphism> {
    let (z, pl, pr) = prod;
    if f.source != g.source || f.target != pl.target || g.target != pr.target {
        return Err(Error::Precondition(
            "pairing arrows do not match the product".into(),
        ));
    }
    let mut components = BTreeMap::new();
    for (path, comp) in &f.components {
        let lookup: HashMap<(usize, usize), usize> = (0..z.count(path))
            .map(|zi| ((pl.apply(path, zi), pr.apply(path, zi)), zi))
            .collect();
        components.insert(
            path.clone(),
            comp.iter()
                .zip(g.component(path))
                .map(|(&a, &b)| lookup[&(a, b)])
                .collect(),
        );
    }
    PresheafMorphism::new(f.source.clone(), z.clone(), components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::kripke::KripkeModel;

    fn l(props: &[&str]) -> Label {
        Label::from_props(props.iter().copied())
    }

    fn path(labels: &[&[&str]]) -> LabelPath {
        LabelPath::new(labels.iter().map(|p| l(p)).collect()).unwrap()
    }

    fn tree(m: &KripkeModel) -> SyncTree {
        as_sync_tree(m).unwrap()
    }

    /// root {} with two {}-children, one of which has a {}-child
    fn two_children() -> KripkeModel {
        KripkeModel::new(
            ["r", "a", "b", "c"],
            [("r", "a"), ("r", "b"), ("a", "c")],
            Vec::<(String, Vec<String>)>::new(),
            "r",
        )
        .unwrap()
        .with_vocabulary(&Vocabulary::new(["p"]))
    }

    #[test]
    fn path_embedding_examples() {
        assert!(path_embedding_exists(&path(&[&[]]), &path(&[&[], &["p"]])));
        assert!(!path_embedding_exists(
            &path(&[&["p"]]),
            &path(&[&[], &["p"]])
        ));
        let q = path(&[&[], &["p"]]);
        assert!(path_embedding_exists(&q, &q));
    }

    #[test]
    fn tree_presheaf_examples() {
        let x = tree_to_presheaf(&tree(&m1()), 2).unwrap();
        assert_eq!(x.elements(&path(&[&[]])), ["w0"]);
        assert_eq!(x.elements(&path(&[&[], &["p"]])), ["w1"]);
        assert_eq!(x.size(), 2);

        let y = tree_to_presheaf(&tree(&m4()), 2).unwrap();
        assert_eq!(y.elements(&path(&[&[], &[]])), ["w2"]);
        assert_eq!(y.elements(&path(&[&[], &["p"]])), ["w1"]);

        assert!(matches!(
            tree_to_presheaf(&tree(&m3()), 2),
            Err(Error::InvalidBound(_))
        ));
    }

    #[test]
    fn malformed_presheaves_are_rejected() {
        let p = path(&[&[]]);
        let q = path(&[&[], &[]]);
        let orphan = PathPresheaf::from_elements(2, [(q.clone(), "x".into(), Some("nope".into()))]);
        assert!(matches!(orphan, Err(Error::MalformedPresheaf(_))));
        let twice = PathPresheaf::from_elements(
            1,
            [(p.clone(), "x".into(), None), (p.clone(), "x".into(), None)],
        );
        assert!(matches!(twice, Err(Error::MalformedPresheaf(_))));
        let too_long = PathPresheaf::from_elements(
            1,
            [(p, "x".into(), None), (q, "y".into(), Some("x".into()))],
        );
        assert!(matches!(too_long, Err(Error::MalformedPresheaf(_))));
    }

    #[test]
    fn restrict_and_extend() {
        let x = tree_to_presheaf(&tree(&m3()), 3).unwrap();
        let r1 = restrict(&x, 1).unwrap();
        assert_eq!(r1.paths().count(), 1);
        assert_eq!(r1.size(), 1);
        assert_eq!(restrict(&restrict(&x, 2).unwrap(), 1).unwrap(), r1);
        assert!(restrict(&x, 0).is_err());
        assert!(restrict(&x, 4).is_err());

        let e = extend(&restrict(&x, 2).unwrap(), 3).unwrap();
        assert_eq!(restrict(&e, 2).unwrap(), restrict(&x, 2).unwrap());
        let t1 = tree_to_presheaf(&tree(&m1()), 2).unwrap();
        assert_eq!(
            extend(&t1, 4).unwrap(),
            tree_to_presheaf(&tree(&m1()), 4).unwrap()
        );
        assert!(extend(&t1, 1).is_err());
    }

    #[test]
    fn mono_examples() {
        let x = tree_to_presheaf(&tree(&m3()), 3).unwrap();
        assert!(PresheafMorphism::identity(&x).is_mono());

        let sub = m3().induced(&[0, 1]).unwrap();
        let inc = TreeMorphism::from_indices(sub, m3(), vec![0, 1]).unwrap();
        assert!(tree_morphism_image(&inc, 3).unwrap().is_mono());

        // two same-label children folded onto one
        let two = KripkeModel::new(
            ["r", "a", "b"],
            [("r", "a"), ("r", "b")],
            Vec::<(String, Vec<String>)>::new(),
            "r",
        )
        .unwrap();
        let one = KripkeModel::new(
            ["r", "a"],
            [("r", "a")],
            Vec::<(String, Vec<String>)>::new(),
            "r",
        )
        .unwrap();
        let fold = TreeMorphism::from_indices(two, one, vec![0, 0, 1]).unwrap();
        let img = tree_morphism_image(&fold, 2).unwrap();
        assert!(!img.is_mono());
        assert!(img.is_trivial_fibration());
    }

    #[test]
    fn trivial_fibration_examples() {
        let x = tree_to_presheaf(&tree(&m1()), 2).unwrap();
        assert!(PresheafMorphism::identity(&x).is_trivial_fibration());

        let root = m1().induced(&[0]).unwrap();
        let inc = TreeMorphism::from_indices(root, m1(), vec![0]).unwrap();
        let img = tree_morphism_image(&inc, 2).unwrap();
        assert!(!img.is_trivial_fibration());
        assert!(img.trivial_fibration_failure().unwrap().contains("w1"));
    }

    #[test]
    fn fibrancy_examples() {
        let one = PathPresheaf::terminal(&Vocabulary::new(["p"]), 3).unwrap();
        assert_eq!(one.size(), 2 + 4 + 8);
        assert!(is_fibrant(&one));

        let chain = KripkeModel::new(
            ["a", "b"],
            [("a", "b")],
            Vec::<(String, Vec<String>)>::new(),
            "a",
        )
        .unwrap()
        .with_vocabulary(&Vocabulary::new(["p"]));
        assert!(is_fibrant(&tree_to_presheaf(&tree(&chain), 2).unwrap()));

        let x = tree_to_presheaf(&tree(&two_children()), 3).unwrap();
        assert!(!is_fibrant(&x));
        let (p, q, i) = fibrancy_failure(&x).unwrap();
        assert_eq!(p, path(&[&[], &[]]));
        assert_eq!(q, path(&[&[], &[], &[]]));
        assert_eq!(x.elements(&p)[i], "b");
        assert!(!is_fibrant_by_lifting(&x).unwrap());
        assert!(is_fibrant_by_lifting(&one).unwrap());
    }

    #[test]
    fn lifting_examples() {
        let x = tree_to_presheaf(&tree(&m4()), 2).unwrap();
        let id = PresheafMorphism::identity(&x);
        // identity on the left: the filler is u itself
        let u = id.clone();
        let d = has_lifting(&id, &id, &u, &id).unwrap().unwrap();
        assert_eq!(d, id);

        // ∅ → y(P) against a trivial fibration
        let fold_src = tree_to_presheaf(&tree(&m2_doubled_tree()), 2).unwrap();
        let target = tree_to_presheaf(&tree(&unravel_chain(2)), 2).unwrap();
        let g = PresheafMorphism::new(
            fold_src.clone(),
            target.clone(),
            fold_src
                .paths()
                .map(|p| (p.clone(), vec![0; fold_src.count(p)]))
                .collect(),
        )
        .unwrap();
        assert!(g.is_trivial_fibration());
        let p = path(&[&[]]);
        let yp = PathPresheaf::representable(&p, 2).unwrap();
        let i = from_empty(&yp);
        let u = from_empty(&fold_src);
        let v = element_arrow(&target, &p, 0).unwrap();
        assert!(has_lifting(&i, &g, &u, &v).unwrap().is_some());

        // a square against the non-p-morphism inclusion {w0} ↪ M1
        let root = m1().induced(&[0]).unwrap();
        let inc = tree_morphism_image(&TreeMorphism::from_indices(root, m1(), vec![0]).unwrap(), 2)
            .unwrap();
        let q = path(&[&[], &["p"]]);
        let i = prefix_inclusion(&p, &q, 2).unwrap();
        let u = element_arrow(inc.source(), &p, 0).unwrap();
        let v = element_arrow(inc.target(), &q, 0).unwrap();
        assert!(has_lifting(&i, &inc, &u, &v).unwrap().is_none());

        // a square that does not commute is an error
        let bad_v = element_arrow(&x, &path(&[&[], &[]]), 0).unwrap();
        let u = element_arrow(&x, &p, 0).unwrap();
        let i = prefix_inclusion(&p, &path(&[&[], &[]]), 2).unwrap();
        assert!(has_lifting(&i, &id, &u, &bad_v).is_ok());
        let wrong = prefix_inclusion(&p, &path(&[&[], &["p"]]), 2).unwrap();
        assert!(has_lifting(&wrong, &id, &u, &bad_v).is_err());
    }

    fn m2_doubled_tree() -> KripkeModel {
        KripkeModel::new(
            ["r", "a", "b"],
            [("r", "a"), ("r", "b")],
            Vec::<(String, Vec<String>)>::new(),
            "r",
        )
        .unwrap()
        .with_vocabulary(&Vocabulary::new(["p"]))
    }

    fn unravel_chain(len: usize) -> KripkeModel {
        crate::unravel::unravel(&m2(), len).unwrap().into_model()
    }

    #[test]
    fn counting_matches_pathwise_embeddings() {
        let x = tree_to_presheaf(&tree(&m1()), 2).unwrap();
        let y = tree_to_presheaf(&tree(&m4()), 2).unwrap();
        assert_eq!(count_morphisms(&x, &y), 1);
        assert_eq!(count_morphisms(&y, &x), 0);
        let a = tree_to_presheaf(&tree(&m2_doubled_tree()), 2).unwrap();
        assert_eq!(count_morphisms(&a, &a), 4);
        assert_eq!(count_morphisms(&PathPresheaf::empty(2).unwrap(), &a), 1);
    }

    #[test]
    fn product_and_image() {
        let a = tree_to_presheaf(&tree(&m2_doubled_tree()), 2).unwrap();
        let prod = product(&a, &a).unwrap();
        assert_eq!(prod.0.size(), 1 + 4);
        let id = PresheafMorphism::identity(&a);
        let diag = pairing(&id, &id, &prod).unwrap();
        assert!(diag.is_mono());
        let (epi, mono) = image(&diag).unwrap();
        assert!(epi.is_epi() && mono.is_mono());
        assert_eq!(epi.target().size(), 3);
        assert_eq!(epi.then(&mono).unwrap(), diag);
        let span = Span::new(prod.1.clone(), prod.2.clone()).unwrap();
        assert!(span.is_jointly_monic());
        assert!(span.is_morita());
    }
}
