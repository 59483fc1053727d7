//! Graded and full bisimilarity, spans of p-morphisms between unravellings,
//! and the factorization of a pathwise embedding of trees into an embedding
//! followed by a surjective p-morphism.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::kripke::{as_sync_tree, KripkeModel, Label, SyncTree, TreeMorphism};
use crate::presheaf::{tree_morphism_image, LabelPath, Span};
use crate::unravel::unravel_with_paths;

/// The relations `∼_0 ⊇ ∼_1 ⊇ … ⊇ ∼_k` between the worlds of two models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedBisim {
    grades: Vec<Vec<Vec<bool>>>,
    root_a: usize,
    root_b: usize,
}

impl GradedBisim {
    /// Highest computed grade.
    pub fn k(&self) -> usize {
        self.grades.len() - 1
    }

    pub fn related(&self, grade: usize, a: usize, b: usize) -> bool {
        self.grades[grade][a][b]
    }

    pub fn roots_related(&self, grade: usize) -> bool {
        self.related(grade, self.root_a, self.root_b)
    }

    /// The pairs related at `grade`, by index.
    pub fn pairs(&self, grade: usize) -> Vec<(usize, usize)> {
        let g = &self.grades[grade];
        (0..g.len())
            .flat_map(|a| {
                (0..g[a].len())
                    .filter(move |&b| g[a][b])
                    .map(move |b| (a, b))
            })
            .collect()
    }
}

fn refine(a: &KripkeModel, b: &KripkeModel, prev: &[Vec<bool>]) -> Vec<Vec<bool>> {
    (0..a.len())
        .map(|x| {
            (0..b.len())
                .map(|y| {
                    prev[x][y]
                        && a.successors(x)
                            .iter()
                            .all(|&x2| b.successors(y).iter().any(|&y2| prev[x2][y2]))
                        && b.successors(y)
                            .iter()
                            .all(|&y2| a.successors(x).iter().any(|&x2| prev[x2][y2]))
                })
                .collect()
        })
        .collect()
}

fn label_equality(a: &KripkeModel, b: &KripkeModel) -> Vec<Vec<bool>> {
    (0..a.len())
        .map(|x| (0..b.len()).map(|y| a.label(x) == b.label(y)).collect())
        .collect()
}

/// Computes `∼_0, …, ∼_k` by naive refinement.
pub fn graded_bisim(a: &KripkeModel, b: &KripkeModel, k: usize) -> GradedBisim {
    let mut grades = vec![label_equality(a, b)];
    for j in 0..k {
        let next = refine(a, b, &grades[j]);
        grades.push(next);
    }
    GradedBisim {
        grades,
        root_a: a.root(),
        root_b: b.root(),
    }
}

/// Whether the roots are `k`-bisimilar.
pub fn graded_bisimilar(a: &KripkeModel, b: &KripkeModel, k: usize) -> bool {
    graded_bisim(a, b, k).roots_related(k)
}

/// The largest bisimulation between `a` and `b` (greatest fixpoint of the
/// refinement), as a relation matrix.
pub fn largest_bisimulation(a: &KripkeModel, b: &KripkeModel) -> Vec<Vec<bool>> {
    let mut rel = label_equality(a, b);
    loop {
        let next = refine(a, b, &rel);
        if next == rel {
            return rel;
        }
        rel = next;
    }
}

/// The largest bisimulation as a set of world-id pairs, if it relates the
/// roots.
pub fn bisimilar(a: &KripkeModel, b: &KripkeModel) -> Option<BTreeSet<(String, String)>> {
    let rel = largest_bisimulation(a, b);
    if !rel[a.root()][b.root()] {
        return None;
    }
    let mut out = BTreeSet::new();
    for (x, row) in rel.iter().enumerate() {
        for (y, &r) in row.iter().enumerate() {
            if r {
                out.insert((a.name(x).to_string(), b.name(y).to_string()));
            }
        }
    }
    Some(out)
}

/// Bisimilarity of the roots by signature-based partition refinement on the
/// disjoint union. Independent of [`bisimilar`].
pub fn bisimilar_by_partition(a: &KripkeModel, b: &KripkeModel) -> bool {
    let n = a.len() + b.len();
    let succ = |v: usize| -> Vec<usize> {
        if v < a.len() {
            a.successors(v).to_vec()
        } else {
            b.successors(v - a.len())
                .iter()
                .map(|&w| w + a.len())
                .collect()
        }
    };
    let label = |v: usize| -> &Label {
        if v < a.len() {
            a.label(v)
        } else {
            b.label(v - a.len())
        }
    };
    let mut ids: HashMap<&Label, usize> = HashMap::new();
    let mut block: Vec<usize> = (0..n)
        .map(|v| {
            let next = ids.len();
            *ids.entry(label(v)).or_insert(next)
        })
        .collect();
    let mut count = ids.len();
    loop {
        let mut sigs: HashMap<(usize, BTreeSet<usize>), usize> = HashMap::new();
        let next: Vec<usize> = (0..n)
            .map(|v| {
                let sig = (block[v], succ(v).into_iter().map(|w| block[w]).collect());
                let id = sigs.len();
                *sigs.entry(sig).or_insert(id)
            })
            .collect();
        let new_count = sigs.len();
        block = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    block[a.root()] == block[a.len() + b.root()]
}

/// A span of tree morphisms `left: apex → R_k A`, `right: apex → R_k B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeSpan {
    pub apex: SyncTree,
    pub left: TreeMorphism,
    pub right: TreeMorphism,
}

impl TreeSpan {
    /// Both legs are p-morphisms.
    pub fn legs_are_p_morphisms(&self) -> bool {
        self.left.is_p_morphism() && self.right.is_p_morphism()
    }

    /// Distinct apex nodes have distinct image pairs.
    pub fn is_jointly_injective(&self) -> bool {
        let pairs: HashSet<(usize, usize)> = (0..self.apex.len())
            .map(|w| (self.left.apply(w), self.right.apply(w)))
            .collect();
        pairs.len() == self.apex.len()
    }

    /// The span of presheaf morphisms between the tree presheaves.
    pub fn to_presheaf_span(&self, k: usize) -> Result<Span> {
        Span::new(
            tree_morphism_image(&self.left, k)?,
            tree_morphism_image(&self.right, k)?,
        )
    }
}

/// A span of surjective p-morphisms `R_k A ← W → R_k B`, which exists
/// exactly when the roots are `(k-1)`-bisimilar.
///
/// The apex consists of pairs `(s, t)` of equally long sequences whose last
/// worlds are related at grade `k - 1 - d`, `d` being the depth of the pair.
pub fn morita_span_k(a: &KripkeModel, b: &KripkeModel, k: usize) -> Result<Option<TreeSpan>> {
    if k == 0 {
        return Err(Error::InvalidBound("span levels start at 1".into()));
    }
    let top = k - 1;
    let rel = graded_bisim(a, b, top);
    if !rel.roots_related(top) {
        return Ok(None);
    }
    let ua = unravel_with_paths(a, k)?;
    let ub = unravel_with_paths(b, k)?;
    let (ta, tb) = (&ua.tree, &ub.tree);
    let last = |seqs: &Vec<Vec<usize>>, node: usize| *seqs[node].last().expect("non-empty");

    let mut nodes: Vec<(usize, usize)> = vec![(ta.root(), tb.root())];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    while let Some((id, d)) = queue.pop_front() {
        if d + 1 > top {
            continue;
        }
        let (s, t) = nodes[id];
        let grade = top - (d + 1);
        for &s2 in ta.children(s) {
            for &t2 in tb.children(t) {
                if rel.related(grade, last(&ua.sequences, s2), last(&ub.sequences, t2)) {
                    let child = nodes.len();
                    nodes.push((s2, t2));
                    edges.push((id, child));
                    queue.push_back((child, d + 1));
                }
            }
        }
    }
    let names = nodes
        .iter()
        .map(|&(s, t)| format!("({},{})", ta.model().name(s), tb.model().name(t)))
        .collect();
    let labels = nodes
        .iter()
        .map(|&(s, _)| ta.model().label(s).clone())
        .collect();
    let vocabulary = a.vocabulary().union(b.vocabulary());
    let (model, position) = KripkeModel::from_indexed(names, edges, labels, vocabulary, 0)?;
    let mut left = vec![0; nodes.len()];
    let mut right = vec![0; nodes.len()];
    for (old, &(s, t)) in nodes.iter().enumerate() {
        left[position[old]] = s;
        right[position[old]] = t;
    }
    let apex = as_sync_tree(&model)?;
    let left = TreeMorphism::from_indices(model.clone(), ta.model().clone(), left)?;
    let right = TreeMorphism::from_indices(model, tb.model().clone(), right)?;
    Ok(Some(TreeSpan { apex, left, right }))
}

/// Which back-and-forth clause failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clause {
    Root,
    Forth,
    Back,
}

/// A failed back-and-forth clause with a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseViolation {
    pub clause: Clause,
    pub witness: String,
}

impl fmt::Display for ClauseViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.clause {
            Clause::Root => "root",
            Clause::Forth => "forth",
            Clause::Back => "back",
        };
        write!(f, "{name} clause fails: {}", self.witness)
    }
}

/// The relation extracted from a span of presheaf maps between tree
/// presheaves: element pairs `(path, x, y)` jointly hit by an apex element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackAndForth {
    pub pairs: BTreeSet<(LabelPath, String, String)>,
}

/// Extracts the pairs `(α(m), β(m))` from a span `X ← W → Y` and checks the
/// root, forth and back clauses against the restriction structure of `X`
/// and `Y`.
pub fn span_to_back_and_forth(span: &Span) -> std::result::Result<BackAndForth, ClauseViolation> {
    let x = span.left.target();
    let y = span.right.target();
    let mut pairs: BTreeSet<(LabelPath, usize, usize)> = BTreeSet::new();
    for path in span.apex.paths() {
        for m in 0..span.apex.count(path) {
            pairs.insert((
                path.clone(),
                span.left.apply(path, m),
                span.right.apply(path, m),
            ));
        }
    }

    let roots = |z: &crate::presheaf::PathPresheaf| -> Vec<(LabelPath, usize)> {
        z.paths()
            .filter(|p| p.len() == 1)
            .flat_map(|p| (0..z.count(p)).map(move |i| (p.clone(), i)))
            .collect()
    };
    let (rx, ry) = (roots(x), roots(y));
    match (rx.as_slice(), ry.as_slice()) {
        ([(px, ix)], [(py, iy)]) if px == py && pairs.contains(&(px.clone(), *ix, *iy)) => {}
        _ => {
            return Err(ClauseViolation {
                clause: Clause::Root,
                witness: "the roots of the two trees are not paired".into(),
            })
        }
    }

    let describe = |p: &LabelPath, i: usize, j: usize| {
        format!("({}, {}) at {p}", x.elements(p)[i], y.elements(p)[j])
    };
    for (path, i, j) in &pairs {
        for ext in x.extensions(path) {
            for c in x.children_of(ext, *i) {
                let matched = y
                    .children_of(ext, *j)
                    .into_iter()
                    .any(|d| pairs.contains(&(ext.clone(), c, d)));
                if !matched {
                    return Err(ClauseViolation {
                        clause: Clause::Forth,
                        witness: format!(
                            "{} has no partner for `{}` at {ext}",
                            describe(path, *i, *j),
                            x.elements(ext)[c]
                        ),
                    });
                }
            }
        }
        for ext in y.extensions(path) {
            for d in y.children_of(ext, *j) {
                let matched = x
                    .children_of(ext, *i)
                    .into_iter()
                    .any(|c| pairs.contains(&(ext.clone(), c, d)));
                if !matched {
                    return Err(ClauseViolation {
                        clause: Clause::Back,
                        witness: format!(
                            "{} has no partner for `{}` at {ext}",
                            describe(path, *i, *j),
                            y.elements(ext)[d]
                        ),
                    });
                }
            }
        }
    }
    Ok(BackAndForth {
        pairs: pairs
            .into_iter()
            .map(|(p, i, j)| {
                let xs = x.elements(&p)[i].clone();
                let ys = y.elements(&p)[j].clone();
                (p, xs, ys)
            })
            .collect(),
    })
}

/// `f = t ∘ j` with `j: A ↪ A°` an embedding and `t: A° ↠ B` a surjective
/// p-morphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub j: TreeMorphism,
    pub apex: SyncTree,
    pub t: TreeMorphism,
}

/// Predicted `|A°|`: `|A|` plus, for every `x`, the size of the strict
/// up-set of `f(x)`.
pub fn factorization_size(f: &TreeMorphism) -> Result<usize> {
    let b = as_sync_tree(f.target())?;
    Ok(f.source().len()
        + (0..f.source().len())
            .map(|x| b.descendants(f.apply(x)).len() - 1)
            .sum::<usize>())
}

/// Factors a pathwise embedding of trees of height below `k`. Every world
/// `x` of `A` receives a fresh copy of the strict up-set of `f(x)` in `B`,
/// hung below `x`; copies are named `x~y`.
pub fn factorize(f: &TreeMorphism, k: usize) -> Result<Factorization> {
    let a = as_sync_tree(f.source())?;
    let b = as_sync_tree(f.target())?;
    if !f.is_pathwise_embedding() {
        return Err(Error::Precondition(
            "factorize needs a pathwise embedding".into(),
        ));
    }
    for (side, t) in [("source", &a), ("target", &b)] {
        if t.height() >= k {
            return Err(Error::Precondition(format!(
                "{side} height {} is not below {k}",
                t.height()
            )));
        }
    }
    let am = a.model();
    let bm = b.model();
    let mut taken: HashSet<String> = am.worlds().iter().cloned().collect();
    let mut names: Vec<String> = am.worlds().to_vec();
    let mut labels: Vec<Label> = (0..am.len()).map(|x| am.label(x).clone()).collect();
    let mut edges: Vec<(usize, usize)> = am.edges().collect();
    let mut t_map: Vec<usize> = (0..am.len()).map(|x| f.apply(x)).collect();

    for x in 0..am.len() {
        let fx = f.apply(x);
        // copy[y] = new index of the copy of y under x
        let mut copy: BTreeMap<usize, usize> = BTreeMap::new();
        copy.insert(fx, x);
        for y in b.descendants(fx).into_iter().skip(1) {
            let mut name = format!("{}~{}", am.name(x), bm.name(y));
            while taken.contains(&name) {
                name.push('\'');
            }
            taken.insert(name.clone());
            let id = names.len();
            names.push(name);
            labels.push(bm.label(y).clone());
            t_map.push(y);
            let parent = b.parent(y).expect("strict descendants have parents");
            edges.push((copy[&parent], id));
            copy.insert(y, id);
        }
    }

    let vocabulary = am.vocabulary().union(bm.vocabulary());
    let (model, position) = KripkeModel::from_indexed(names, edges, labels, vocabulary, am.root())?;
    let apex = as_sync_tree(&model).expect("attaching subtrees keeps a tree");
    let j_map = (0..am.len()).map(|x| position[x]).collect();
    let mut t_sorted = vec![0; t_map.len()];
    for (old, &y) in t_map.iter().enumerate() {
        t_sorted[position[old]] = y;
    }
    let j = TreeMorphism::from_indices(am.clone(), model.clone(), j_map)?;
    let t = TreeMorphism::from_indices(model, bm.clone(), t_sorted)?;
    Ok(Factorization { j, apex, t })
}
