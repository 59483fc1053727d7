//! Deterministic enumeration of existential formulas in disjunctive normal
//! form.
//!
//! Atoms are literals and `◇ψ` for previously enumerated normal forms `ψ`;
//! conjunctive terms are sets of atoms and normal forms are sets of terms.
//! Every item has a weight (literals, `⊤` and `⊥` weigh 1, `◇` adds 1,
//! conjunction and disjunction add up their parts) and items are produced
//! in order of weight. Depth-0 items are deduplicated by truth table over
//! the vocabulary; deeper items are deduplicated only when a model universe
//! is supplied, by their truth values at every world of the universe.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use super::Formula;
use crate::kripke::{KripkeModel, Vocabulary};

type Bits = Vec<u64>;

fn zeros(len: usize) -> Bits {
    vec![0; len.div_ceil(64).max(1)]
}

fn ones(len: usize) -> Bits {
    let mut b = zeros(len);
    for i in 0..len {
        b[i / 64] |= 1 << (i % 64);
    }
    b
}

fn get(b: &Bits, i: usize) -> bool {
    b[i / 64] & (1 << (i % 64)) != 0
}

fn set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn and(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn or(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x | y).collect()
}

/// A semantic space: a flat list of "worlds" with successor lists and the
/// propositions true at each.
struct Space {
    len: usize,
    succ: Vec<Vec<usize>>,
    props: Vec<Bits>,
}

impl Space {
    fn truth_table(vocab: &Vocabulary) -> Space {
        let n = vocab.len();
        let len = 1usize << n;
        let props = (0..n)
            .map(|i| {
                let mut b = zeros(len);
                for a in 0..len {
                    if a & (1 << i) != 0 {
                        set(&mut b, a);
                    }
                }
                b
            })
            .collect();
        Space {
            len,
            succ: vec![Vec::new(); len],
            props,
        }
    }

    fn universe(vocab: &Vocabulary, models: &[KripkeModel]) -> Space {
        let mut succ = Vec::new();
        let mut offset = 0;
        let mut flat_labels = Vec::new();
        for m in models {
            for w in 0..m.len() {
                succ.push(m.successors(w).iter().map(|&s| s + offset).collect());
                flat_labels.push(m.label(w).clone());
            }
            offset += m.len();
        }
        let len = offset;
        let props = vocab
            .props()
            .iter()
            .map(|p| {
                let mut b = zeros(len);
                for (i, l) in flat_labels.iter().enumerate() {
                    if l.contains(p) {
                        set(&mut b, i);
                    }
                }
                b
            })
            .collect();
        Space { len, succ, props }
    }

    fn negate(&self, b: &Bits) -> Bits {
        let all = ones(self.len);
        b.iter().zip(&all).map(|(x, m)| !x & m).collect()
    }

    fn diamond(&self, b: &Bits) -> Bits {
        let mut out = zeros(self.len);
        for w in 0..self.len {
            if self.succ[w].iter().any(|&s| get(b, s)) {
                set(&mut out, w);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    TruthTable(Bits),
    Universe(usize, Bits),
}

struct Node {
    formula: Arc<Formula>,
    parts: Vec<usize>,
    depth: usize,
    table: Option<Bits>,
    signature: Option<Bits>,
}

#[derive(Default)]
struct Layer {
    nodes: Vec<Node>,
    by_weight: Vec<Vec<usize>>,
    seen: HashSet<Key>,
}

impl Layer {
    fn at(&self, weight: usize) -> &[usize] {
        self.by_weight.get(weight).map_or(&[], Vec::as_slice)
    }

    fn insert(&mut self, weight: usize, node: Node, key: Option<Key>) -> Option<usize> {
        if let Some(k) = key {
            if !self.seen.insert(k) {
                return None;
            }
        }
        if self.by_weight.len() <= weight {
            self.by_weight.resize_with(weight + 1, Vec::new);
        }
        let id = self.nodes.len();
        self.nodes.push(node);
        self.by_weight[weight].push(id);
        Some(id)
    }
}

/// Streams existential formulas of bounded depth in normal form.
pub struct ExistentialEnumerator {
    vocab: Vocabulary,
    max_depth: usize,
    budget: usize,
    table: Space,
    universe: Option<Space>,
    atoms: Layer,
    conjs: Layer,
    dnfs: Layer,
    emitted_keys: HashSet<Key>,
    pending: VecDeque<Arc<Formula>>,
    weight: usize,
    max_weight: usize,
    emitted: usize,
    complete: bool,
    truncated: bool,
}

impl ExistentialEnumerator {
    /// `universe`, when given, switches on semantic deduplication of formulas
    /// of positive depth.
    pub fn new(
        vocab: &Vocabulary,
        max_depth: usize,
        budget: usize,
        universe: Option<&[KripkeModel]>,
    ) -> Self {
        ExistentialEnumerator {
            vocab: vocab.clone(),
            max_depth,
            budget,
            table: Space::truth_table(vocab),
            universe: universe.map(|u| Space::universe(vocab, u)),
            atoms: Layer::default(),
            conjs: Layer::default(),
            dnfs: Layer::default(),
            emitted_keys: HashSet::new(),
            pending: VecDeque::new(),
            weight: 0,
            max_weight: 0,
            emitted: 0,
            complete: false,
            truncated: false,
        }
    }

    /// Whether the stream stopped because the budget ran out.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Whether every normal form has been produced.
    pub fn is_complete(&self) -> bool {
        self.complete && self.pending.is_empty()
    }

    fn key(&self, depth: usize, table: &Option<Bits>, signature: &Option<Bits>) -> Option<Key> {
        if depth == 0 {
            table.clone().map(Key::TruthTable)
        } else {
            signature.clone().map(|s| Key::Universe(depth, s))
        }
    }

    fn emission_key(&self, node: &Node) -> Option<Key> {
        match (&node.signature, node.depth) {
            (Some(s), _) => Some(Key::Universe(0, s.clone())),
            (None, 0) => node.table.clone().map(Key::TruthTable),
            (None, _) => None,
        }
    }

    fn literal(&self, index: usize, positive: bool) -> Node {
        let name = &self.vocab.props()[index];
        let pick = |space: &Space| {
            let b = space.props[index].clone();
            if positive {
                b
            } else {
                space.negate(&b)
            }
        };
        let p = Formula::prop(name.clone());
        Node {
            formula: if positive { p } else { Formula::not(p) },
            parts: Vec::new(),
            depth: 0,
            table: Some(pick(&self.table)),
            signature: self.universe.as_ref().map(pick),
        }
    }

    fn generate_level(&mut self) {
        let w = self.weight + 1;
        self.weight = w;

        // atoms
        let mut new_atoms = Vec::new();
        if w == 1 {
            for i in 0..self.vocab.len() {
                new_atoms.push(self.literal(i, true));
                new_atoms.push(self.literal(i, false));
            }
        } else {
            for &d in self.dnfs.at(w - 1) {
                let inner = &self.dnfs.nodes[d];
                if inner.depth >= self.max_depth {
                    continue;
                }
                new_atoms.push(Node {
                    formula: Formula::diamond(inner.formula.clone()),
                    parts: Vec::new(),
                    depth: inner.depth + 1,
                    table: None,
                    signature: self
                        .universe
                        .as_ref()
                        .zip(inner.signature.as_ref())
                        .map(|(u, s)| u.diamond(s)),
                });
            }
        }
        for node in new_atoms {
            let key = self.key(node.depth, &node.table, &node.signature);
            self.atoms.insert(w, node, key);
        }

        // conjunctive terms
        let mut new_conjs = Vec::new();
        if w == 1 {
            new_conjs.push(vec![]);
        }
        for &a in self.atoms.at(w) {
            new_conjs.push(vec![a]);
        }
        for wa in 1..w {
            for &a in self.atoms.at(wa) {
                for &c in self.conjs.at(w - wa) {
                    let rest = &self.conjs.nodes[c].parts;
                    if rest.first().is_some_and(|&first| first > a) {
                        let mut parts = vec![a];
                        parts.extend_from_slice(rest);
                        new_conjs.push(parts);
                    }
                }
            }
        }
        for parts in new_conjs {
            let node = self.combine(&parts, true);
            let key = self.key(node.depth, &node.table, &node.signature);
            self.conjs.insert(w, node, key);
        }

        // normal forms
        let mut new_dnfs = Vec::new();
        if w == 1 {
            new_dnfs.push(vec![]);
        }
        for &c in self.conjs.at(w) {
            new_dnfs.push(vec![c]);
        }
        for wc in 1..w {
            for &c in self.conjs.at(wc) {
                for &d in self.dnfs.at(w - wc) {
                    let rest = &self.dnfs.nodes[d].parts;
                    if rest.first().is_some_and(|&first| first > c) {
                        let mut parts = vec![c];
                        parts.extend_from_slice(rest);
                        new_dnfs.push(parts);
                    }
                }
            }
        }
        for parts in new_dnfs {
            let node = self.combine(&parts, false);
            let key = self.key(node.depth, &node.table, &node.signature);
            let emit_key = self.emission_key(&node);
            let formula = node.formula.clone();
            if self.dnfs.insert(w, node, key).is_some() {
                let fresh = match emit_key {
                    Some(k) => self.emitted_keys.insert(k),
                    None => true,
                };
                if fresh {
                    self.pending.push_back(formula);
                }
            }
        }

        let produced = !self.atoms.at(w).is_empty()
            || !self.conjs.at(w).is_empty()
            || !self.dnfs.at(w).is_empty();
        if produced {
            self.max_weight = w;
        }
        // later items combine stored parts, so their weight is at most
        // twice the largest stored weight
        if w > 2 * self.max_weight + 1 {
            self.complete = true;
        }
    }

    /// Builds a conjunction of atoms (`conjunction == true`) or a
    /// disjunction of terms.
    fn combine(&self, parts: &[usize], conjunction: bool) -> Node {
        let source = if conjunction {
            &self.atoms
        } else {
            &self.conjs
        };
        let members: Vec<&Node> = parts.iter().map(|&i| &source.nodes[i]).collect();
        let depth = members.iter().map(|n| n.depth).max().unwrap_or(0);
        let fold = |bits: Vec<Option<&Bits>>, len: usize| -> Option<Bits> {
            let init = if conjunction { ones(len) } else { zeros(len) };
            bits.into_iter().try_fold(init, |acc, b| {
                b.map(|b| {
                    if conjunction {
                        and(&acc, b)
                    } else {
                        or(&acc, b)
                    }
                })
            })
        };
        let table = if depth == 0 {
            fold(
                members.iter().map(|n| n.table.as_ref()).collect(),
                self.table.len,
            )
        } else {
            None
        };
        let signature = self.universe.as_ref().and_then(|u| {
            fold(
                members.iter().map(|n| n.signature.as_ref()).collect(),
                u.len,
            )
        });
        let formulas = members.iter().map(|n| n.formula.clone());
        Node {
            formula: if conjunction {
                Formula::conj(formulas)
            } else {
                Formula::disj(formulas)
            },
            parts: parts.to_vec(),
            depth,
            table,
            signature,
        }
    }
}

impl Iterator for ExistentialEnumerator {
    type Item = Arc<Formula>;

    fn next(&mut self) -> Option<Arc<Formula>> {
        loop {
            if self.emitted == self.budget {
                while self.pending.is_empty() && !self.complete {
                    self.generate_level();
                }
                self.truncated = !self.pending.is_empty();
                return None;
            }
            if let Some(f) = self.pending.pop_front() {
                self.emitted += 1;
                return Some(f);
            }
            if self.complete {
                return None;
            }
            self.generate_level();
        }
    }
}

/// A finished enumeration.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub formulas: Vec<Arc<Formula>>,
    pub truncated: bool,
}

/// Collects up to `budget` existential formulas of depth at most `max_depth`
/// over `vocab`. See [`ExistentialEnumerator`].
pub fn enumerate_existential(
    vocab: &Vocabulary,
    max_depth: usize,
    budget: usize,
    universe: Option<&[KripkeModel]>,
) -> Enumeration {
    let mut it = ExistentialEnumerator::new(vocab, max_depth, budget, universe);
    let formulas: Vec<_> = it.by_ref().collect();
    Enumeration {
        formulas,
        truncated: it.truncated(),
    }
}
