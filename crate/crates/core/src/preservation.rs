//! Existential transfer between models, preservation under extensions over
//! finite universes, search for existential equivalents, and the transport
//! of truth along `R_k A ↪ A° ↠ R_k B`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::factorization::{factorize, Factorization};
use crate::formula::{existential_characteristic, Evaluator, ExistentialEnumerator, Formula};
use crate::kripke::{pathwise_embedding_exists, KripkeModel, TreeMorphism, Vocabulary};
use crate::unravel::{captured_depth, unravel};

/// Largest model whose induced submodels are enumerated.
pub const MAX_SUBMODEL_WORLDS: usize = 16;

/// Whether every existential formula of depth below `k` true at the root of
/// `a` is true at the root of `b`.
pub fn existential_transfer(a: &KripkeModel, b: &KripkeModel, k: usize) -> Result<bool> {
    if k == 0 {
        return Err(Error::InvalidBound("transfer levels start at 1".into()));
    }
    let chi = existential_characteristic(a, a.root(), captured_depth(k));
    Ok(chi.holds_in(b))
}

/// The same question answered by searching for a pathwise embedding
/// `R_k A → R_k B`.
pub fn existential_transfer_by_embedding(
    a: &KripkeModel,
    b: &KripkeModel,
    k: usize,
) -> Result<bool> {
    Ok(pathwise_embedding_exists(&unravel(a, k)?, &unravel(b, k)?).is_some())
}

/// All induced submodels on root-containing world sets in which every world
/// is reachable from the root, the full model included. Order follows the
/// bitmask of kept worlds.
pub fn induced_submodels(model: &KripkeModel) -> Result<Vec<KripkeModel>> {
    let n = model.len();
    if n > MAX_SUBMODEL_WORLDS {
        return Err(Error::TooLarge(format!(
            "{n} worlds; submodels are enumerated up to {MAX_SUBMODEL_WORLDS}"
        )));
    }
    let root = model.root();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        if mask & (1 << root) == 0 {
            continue;
        }
        let mut seen = 1u32 << root;
        let mut stack = vec![root];
        while let Some(w) = stack.pop() {
            for &s in model.successors(w) {
                let bit = 1u32 << s;
                if mask & bit != 0 && seen & bit == 0 {
                    seen |= bit;
                    stack.push(s);
                }
            }
        }
        if seen == mask {
            let keep: Vec<usize> = (0..n).filter(|&w| mask & (1 << w) != 0).collect();
            out.push(model.induced(&keep)?);
        }
    }
    Ok(out)
}

/// Some root-preserving embedding `small ↪ large`, by backtracking.
pub fn find_embedding(small: &KripkeModel, large: &KripkeModel) -> Option<TreeMorphism> {
    if small.len() > large.len() || small.label(small.root()) != large.label(large.root()) {
        return None;
    }
    let mut order = vec![small.root()];
    order.extend((0..small.len()).filter(|&w| w != small.root()));
    let mut map = vec![usize::MAX; small.len()];
    let mut used = vec![false; large.len()];

    fn consistent(
        small: &KripkeModel,
        large: &KripkeModel,
        map: &[usize],
        w: usize,
        v: usize,
    ) -> bool {
        if small.label(w) != large.label(v) {
            return false;
        }
        if small.has_edge(w, w) != large.has_edge(v, v) {
            return false;
        }
        (0..small.len())
            .filter(|&u| u != w && map[u] != usize::MAX)
            .all(|u| {
                small.has_edge(w, u) == large.has_edge(v, map[u])
                    && small.has_edge(u, w) == large.has_edge(map[u], v)
            })
    }

    fn go(
        i: usize,
        order: &[usize],
        small: &KripkeModel,
        large: &KripkeModel,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let Some(&w) = order.get(i) else { return true };
        let candidates: Vec<usize> = if i == 0 {
            vec![large.root()]
        } else {
            (0..large.len()).collect()
        };
        for v in candidates {
            if used[v] || !consistent(small, large, map, w, v) {
                continue;
            }
            map[w] = v;
            used[v] = true;
            if go(i + 1, order, small, large, map, used) {
                return true;
            }
            map[w] = usize::MAX;
            used[v] = false;
        }
        false
    }

    if go(0, &order, small, large, &mut map, &mut used) {
        TreeMorphism::from_indices(small.clone(), large.clone(), map).ok()
    } else {
        None
    }
}

/// A universe closed under induced submodels, with one witness embedding
/// for every pair of members that admits one.
#[derive(Clone, Debug)]
pub struct EmbeddingUniverse {
    models: Vec<KripkeModel>,
    pairs: Vec<(usize, usize, TreeMorphism)>,
}

impl EmbeddingUniverse {
    pub fn new(universe: &[KripkeModel]) -> Result<Self> {
        let mut models: Vec<KripkeModel> = Vec::new();
        for m in universe {
            for sub in induced_submodels(m)? {
                if !models.contains(&sub) {
                    models.push(sub);
                }
            }
        }
        let mut pairs = Vec::new();
        for (i, small) in models.iter().enumerate() {
            for (j, large) in models.iter().enumerate() {
                if let Some(e) = find_embedding(small, large) {
                    pairs.push((i, j, e));
                }
            }
        }
        Ok(EmbeddingUniverse { models, pairs })
    }

    pub fn models(&self) -> &[KripkeModel] {
        &self.models
    }

    /// Number of embeddable ordered pairs.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// The first embedding `B ↪ A` with `B ⊨ φ` and `A ⊭ φ`, if any.
    pub fn check(&self, formula: &Formula) -> Preservation {
        let truth: Vec<bool> = self.models.iter().map(|m| formula.holds_in(m)).collect();
        for (i, j, e) in &self.pairs {
            if truth[*i] && !truth[*j] {
                return Preservation::Counterexample {
                    small: self.models[*i].clone(),
                    large: self.models[*j].clone(),
                    embedding: e.clone(),
                };
            }
        }
        Preservation::Preserved {
            pairs_checked: self.pairs.len(),
        }
    }
}

/// Outcome of a preservation check.
#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Preservation {
    Preserved {
        pairs_checked: usize,
    },
    Counterexample {
        small: KripkeModel,
        large: KripkeModel,
        embedding: TreeMorphism,
    },
}

impl Preservation {
    pub fn is_preserved(&self) -> bool {
        matches!(self, Preservation::Preserved { .. })
    }
}

/// Checks preservation of `formula` along every embedding between members
/// of `universe` and their induced submodels.
pub fn is_preserved_under_extensions(
    formula: &Formula,
    universe: &[KripkeModel],
) -> Result<Preservation> {
    Ok(EmbeddingUniverse::new(universe)?.check(formula))
}

/// Outcome of [`find_existential_equivalent`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivalentSearch {
    /// An existential formula agreeing with the input at the root of every
    /// universe member.
    Found(Arc<Formula>),
    /// The enumeration finished without a match.
    NotFound { candidates: usize },
    /// The budget ran out first.
    BudgetExhausted { candidates: usize },
}

/// Searches the existential formulas of depth at most `k` for one that
/// agrees with `formula` at the roots of the universe. Agreement is relative
/// to the universe only.
pub fn find_existential_equivalent(
    formula: &Formula,
    k: usize,
    universe: &[KripkeModel],
    budget: usize,
) -> Result<EquivalentSearch> {
    if formula.depth() > k {
        return Err(Error::Precondition(format!(
            "formula depth {} exceeds {k}",
            formula.depth()
        )));
    }
    let vocab = universe
        .iter()
        .fold(Vocabulary::new(formula.props()), |v, m| {
            v.union(m.vocabulary())
        });
    let target: Vec<bool> = universe.iter().map(|m| formula.holds_in(m)).collect();
    let mut it = ExistentialEnumerator::new(&vocab, k, budget, Some(universe));
    let mut candidates = 0;
    for psi in it.by_ref() {
        candidates += 1;
        if universe
            .iter()
            .zip(&target)
            .all(|(m, &t)| psi.holds_in(m) == t)
        {
            return Ok(EquivalentSearch::Found(psi));
        }
    }
    if it.truncated() {
        Ok(EquivalentSearch::BudgetExhausted { candidates })
    } else {
        Ok(EquivalentSearch::NotFound { candidates })
    }
}

/// Where the chain `R_k A ⊨ φ ⇒ A° ⊨ φ ⇒ R_k B ⊨ φ` fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrokenStep {
    /// Along the embedding `R_k A ↪ A°`.
    Embedding,
    /// Along the p-morphism `A° ↠ R_k B`.
    PMorphism,
}

/// Truth of a formula at each stage of the factorization.
#[derive(Clone, Debug)]
pub struct TransportReport {
    pub at_source: bool,
    pub at_apex: bool,
    pub at_target: bool,
    pub existential: bool,
    pub broken_step: Option<BrokenStep>,
    pub factorization: Factorization,
}

impl TransportReport {
    /// All three verdicts true.
    pub fn fully_true(&self) -> bool {
        self.at_source && self.at_apex && self.at_target
    }
}

/// Transports `formula` along the factorization of the pathwise embedding
/// `R_k A → R_k B`. Requires existential transfer from `a` to `b` and a
/// formula of depth below `k`.
pub fn homotopical_transport(
    a: &KripkeModel,
    b: &KripkeModel,
    formula: &Formula,
    k: usize,
) -> Result<TransportReport> {
    if formula.depth() > captured_depth(k) {
        return Err(Error::Precondition(format!(
            "formula depth {} exceeds {}",
            formula.depth(),
            captured_depth(k)
        )));
    }
    let ra = unravel(a, k)?;
    let rb = unravel(b, k)?;
    let f = pathwise_embedding_exists(&ra, &rb).ok_or_else(|| {
        Error::Precondition("no existential transfer from the first model".into())
    })?;
    transport_along(&f, formula, k)
}

/// Transports `formula` along the factorization of a given pathwise
/// embedding of trees.
pub fn transport_along(f: &TreeMorphism, formula: &Formula, k: usize) -> Result<TransportReport> {
    let fac = factorize(f, k)?;
    let at_source = Evaluator::new(f.source()).eval(formula, f.source().root());
    let apex = fac.apex.model();
    let at_apex = Evaluator::new(apex).eval(formula, apex.root());
    let at_target = Evaluator::new(f.target()).eval(formula, f.target().root());
    let broken_step = if at_source && !at_apex {
        Some(BrokenStep::Embedding)
    } else if at_apex != at_target {
        Some(BrokenStep::PMorphism)
    } else {
        None
    };
    Ok(TransportReport {
        at_source,
        at_apex,
        at_target,
        existential: formula.is_existential(),
        broken_step,
        factorization: fac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::formula::parse;

    fn v() -> Vocabulary {
        Vocabulary::new(["p"])
    }

    #[test]
    fn transfer_examples() {
        assert!(existential_transfer(&m1(), &m4(), 2).unwrap());
        assert!(!existential_transfer(&m4(), &m1(), 2).unwrap());
        for m in [m0(), m1(), m2(), m3(), m4()] {
            for k in 1..4 {
                assert!(existential_transfer(&m, &m, k).unwrap());
                assert!(existential_transfer_by_embedding(&m, &m, k).unwrap());
            }
        }
        assert!(existential_transfer_by_embedding(&m1(), &m4(), 2).unwrap());
        assert!(!existential_transfer_by_embedding(&m4(), &m1(), 2).unwrap());
    }

    #[test]
    fn submodels_are_reachable_and_rooted() {
        let subs = induced_submodels(&m4()).unwrap();
        assert_eq!(subs.len(), 4);
        assert!(subs.iter().all(|s| s.reachable().len() == s.len()));
        assert_eq!(induced_submodels(&m3()).unwrap().len(), 3);
        assert_eq!(induced_submodels(&m2()).unwrap().len(), 1);
    }

    #[test]
    fn embedding_search() {
        let sub = m4().induced(&[0, 1]).unwrap();
        let e = find_embedding(&sub, &m4()).unwrap();
        assert!(e.is_embedding());
        assert!(find_embedding(&m4(), &sub).is_none());
        // a loop does not embed into a chain
        assert!(find_embedding(&m2(), &m3()).is_none());
    }

    #[test]
    fn preservation_examples() {
        let universe = [m0(), m1(), m4()];
        let diamond = parse("<>p", &v()).unwrap();
        assert!(is_preserved_under_extensions(&diamond, &universe)
            .unwrap()
            .is_preserved());
        assert!(is_preserved_under_extensions(&Formula::Top, &universe)
            .unwrap()
            .is_preserved());

        let boxp = parse("[]p", &v()).unwrap();
        match is_preserved_under_extensions(&boxp, &universe).unwrap() {
            Preservation::Counterexample {
                small,
                large,
                embedding,
            } => {
                assert!(boxp.holds_in(&small) && !boxp.holds_in(&large));
                assert!(embedding.is_embedding());
            }
            other => panic!("expected a counterexample, got {other:?}"),
        }
    }

    #[test]
    fn equivalent_search_examples() {
        let universe = [m0(), m1(), m2(), m3(), m4(), m4().induced(&[0, 1]).unwrap()];
        let diamond = parse("<>p", &v()).unwrap();
        let Ok(EquivalentSearch::Found(psi)) =
            find_existential_equivalent(&diamond, 1, &universe, 1000)
        else {
            panic!("no equivalent for <>p");
        };
        assert_eq!(psi, diamond);

        let dual = parse("~[]~p", &v()).unwrap();
        let Ok(EquivalentSearch::Found(psi)) =
            find_existential_equivalent(&dual, 1, &universe, 1000)
        else {
            panic!("no equivalent for ~[]~p");
        };
        assert!(psi.is_existential());
        assert!(universe.iter().all(|m| psi.holds_in(m) == dual.holds_in(m)));

        let boxp = parse("[]p", &v()).unwrap();
        assert!(matches!(
            find_existential_equivalent(&boxp, 1, &universe, 100_000).unwrap(),
            EquivalentSearch::NotFound { .. }
        ));
        assert!(matches!(
            find_existential_equivalent(&boxp, 1, &universe, 3).unwrap(),
            EquivalentSearch::BudgetExhausted { candidates: 3 }
        ));
    }

    #[test]
    fn transport_examples() {
        let diamond = parse("<>p", &v()).unwrap();
        let r = homotopical_transport(&m1(), &m4(), &diamond, 2).unwrap();
        assert!(r.fully_true() && r.broken_step.is_none());

        let r = homotopical_transport(&m4(), &m4(), &parse("[]p", &v()).unwrap(), 3).unwrap();
        assert_eq!(r.at_source, r.at_apex);
        assert_eq!(r.at_apex, r.at_target);

        let r = homotopical_transport(&m1(), &m4(), &parse("[]p", &v()).unwrap(), 2).unwrap();
        assert!(r.at_source && !r.at_apex && !r.at_target);
        assert_eq!(r.broken_step, Some(BrokenStep::Embedding));
        assert!(!r.existential);

        assert!(homotopical_transport(&m4(), &m1(), &diamond, 2).is_err());
        assert!(homotopical_transport(&m1(), &m4(), &parse("<><>p", &v()).unwrap(), 2).is_err());
    }
}
