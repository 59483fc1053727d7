use std::collections::HashMap;
use std::sync::Arc;

use super::Formula;
use crate::kripke::KripkeModel;

fn literals(model: &KripkeModel, world: usize) -> Arc<Formula> {
    Formula::conj(model.vocabulary().props().iter().map(|p| {
        if model.holds(p, world) {
            Formula::prop(p.clone())
        } else {
            Formula::not(Formula::prop(p.clone()))
        }
    }))
}

/// Conjunction that drops `⊤` conjuncts unless nothing else is left.
fn conj_nontrivial(items: Vec<Arc<Formula>>) -> Arc<Formula> {
    Formula::conj(items.into_iter().filter(|f| **f != Formula::Top))
}

/// The depth-`k` characteristic formula of `(model, world)` over the model's
/// vocabulary. For a finite `B`, `(B, b)` satisfies it exactly when it is
/// `k`-bisimilar to `(model, world)`.
pub fn characteristic_formula(model: &KripkeModel, world: usize, k: usize) -> Arc<Formula> {
    let mut memo: HashMap<(usize, usize), Arc<Formula>> = HashMap::new();
    chi(model, world, k, &mut memo)
}

fn chi(
    model: &KripkeModel,
    world: usize,
    k: usize,
    memo: &mut HashMap<(usize, usize), Arc<Formula>>,
) -> Arc<Formula> {
    if let Some(f) = memo.get(&(world, k)) {
        return f.clone();
    }
    let base = literals(model, world);
    let f = if k == 0 {
        base
    } else {
        let next: Vec<Arc<Formula>> = model
            .successors(world)
            .iter()
            .map(|&s| chi(model, s, k - 1, memo))
            .collect();
        let mut parts = vec![base];
        parts.extend(next.iter().cloned().map(Formula::diamond));
        parts.push(Formula::boxed(Formula::disj(next)));
        conj_nontrivial(parts)
    };
    memo.insert((world, k), f.clone());
    f
}

/// The depth-`k` existential characteristic formula: literals at `world`
/// and, recursively, a `◇` conjunct per successor. It is existential, of
/// depth at most `k`, and entails every existential formula of depth at most
/// `k` true at `(model, world)`.
pub fn existential_characteristic(model: &KripkeModel, world: usize, k: usize) -> Arc<Formula> {
    let mut memo: HashMap<(usize, usize), Arc<Formula>> = HashMap::new();
    exist(model, world, k, &mut memo)
}

fn exist(
    model: &KripkeModel,
    world: usize,
    k: usize,
    memo: &mut HashMap<(usize, usize), Arc<Formula>>,
) -> Arc<Formula> {
    if let Some(f) = memo.get(&(world, k)) {
        return f.clone();
    }
    let base = literals(model, world);
    let f = if k == 0 {
        base
    } else {
        let mut parts = vec![base];
        for &s in model.successors(world) {
            parts.push(Formula::diamond(exist(model, s, k - 1, memo)));
        }
        conj_nontrivial(parts)
    };
    memo.insert((world, k), f.clone());
    f
}
