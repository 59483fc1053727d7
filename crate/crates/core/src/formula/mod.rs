//! Modal formulas: syntax, printing, semantics, depth and the existential
//! fragment.
//!
//! Subformulas are reference counted so that large formulas (characteristic
//! formulas in particular) can share structure. Equality is structural.

mod characteristic;
mod enumerate;
mod parser;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub use characteristic::{characteristic_formula, existential_characteristic};
pub use enumerate::{enumerate_existential, Enumeration, ExistentialEnumerator};
pub use parser::{parse, parse_unchecked};

use crate::error::Result;
use crate::kripke::KripkeModel;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Top,
    Bottom,
    Prop(String),
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Box(Arc<Formula>),
    Diamond(Arc<Formula>),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Arc<Formula> {
        Arc::new(Formula::Prop(name.into()))
    }

    pub fn top() -> Arc<Formula> {
        Arc::new(Formula::Top)
    }

    pub fn bottom() -> Arc<Formula> {
        Arc::new(Formula::Bottom)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Not(inner))
    }

    pub fn and(a: Arc<Formula>, b: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::And(a, b))
    }

    pub fn or(a: Arc<Formula>, b: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Or(a, b))
    }

    pub fn boxed(inner: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Box(inner))
    }

    pub fn diamond(inner: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Diamond(inner))
    }

    /// Left-nested conjunction; `⊤` when empty.
    pub fn conj(items: impl IntoIterator<Item = Arc<Formula>>) -> Arc<Formula> {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or_else(Formula::top)
    }

    /// Left-nested disjunction; `⊥` when empty.
    pub fn disj(items: impl IntoIterator<Item = Arc<Formula>>) -> Arc<Formula> {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(Formula::bottom)
    }

    fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Top | Formula::Bottom | Formula::Prop(_) => vec![],
            Formula::Not(a) | Formula::Box(a) | Formula::Diamond(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) => vec![a, b],
        }
    }

    /// Nesting depth of modalities.
    pub fn depth(&self) -> usize {
        let mut memo = HashMap::new();
        depth_memo(self, &mut memo)
    }

    /// No `□`, and `¬` applied only to propositions.
    pub fn is_existential(&self) -> bool {
        match self {
            Formula::Top | Formula::Bottom | Formula::Prop(_) => true,
            Formula::Not(a) => matches!(**a, Formula::Prop(_)),
            Formula::Box(_) => false,
            Formula::Diamond(a) => a.is_existential(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_existential() && b.is_existential(),
        }
    }

    /// Propositions mentioned, sorted and deduplicated.
    pub fn props(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if let Formula::Prop(p) = f {
                out.push(p.clone());
            }
            stack.extend(f.children());
        }
        out.sort();
        out.dedup();
        out
    }

    /// Truth at the world with index `world`.
    pub fn holds_at(&self, model: &KripkeModel, world: usize) -> bool {
        Evaluator::new(model).eval(self, world)
    }

    /// Truth at the root, i.e. `(A, a) ⊨ φ`.
    pub fn holds_in(&self, model: &KripkeModel) -> bool {
        self.holds_at(model, model.root())
    }
}

fn depth_memo(f: &Formula, memo: &mut HashMap<*const Formula, usize>) -> usize {
    let key = f as *const Formula;
    if let Some(&d) = memo.get(&key) {
        return d;
    }
    let d = match f {
        Formula::Top | Formula::Bottom | Formula::Prop(_) => 0,
        Formula::Not(a) => depth_memo(a, memo),
        Formula::And(a, b) | Formula::Or(a, b) => depth_memo(a, memo).max(depth_memo(b, memo)),
        Formula::Box(a) | Formula::Diamond(a) => depth_memo(a, memo) + 1,
    };
    memo.insert(key, d);
    d
}

/// Evaluates formulas on one model, memoizing shared subformulas.
pub struct Evaluator<'m> {
    model: &'m KripkeModel,
    memo: HashMap<(*const Formula, usize), bool>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m KripkeModel) -> Self {
        Evaluator {
            model,
            memo: HashMap::new(),
        }
    }

    pub fn eval(&mut self, f: &Formula, world: usize) -> bool {
        let key = (f as *const Formula, world);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let m = self.model;
        let v = match f {
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::Prop(p) => m.holds(p, world),
            Formula::Not(a) => !self.eval(a, world),
            Formula::And(a, b) => self.eval(a, world) && self.eval(b, world),
            Formula::Or(a, b) => self.eval(a, world) || self.eval(b, world),
            Formula::Box(a) => m.successors(world).iter().all(|&s| self.eval(a, s)),
            Formula::Diamond(a) => m.successors(world).iter().any(|&s| self.eval(a, s)),
        };
        self.memo.insert(key, v);
        v
    }
}

/// Truth of `formula` at the world named `world`.
pub fn eval(formula: &Formula, model: &KripkeModel, world: &str) -> Result<bool> {
    let w = model.index_of(world)?;
    Ok(formula.holds_at(model, w))
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNARY: u8 = 3;

fn write_prec(f: &Formula, out: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
    let own = match f {
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    };
    let paren = own < ctx;
    if paren {
        write!(out, "(")?;
    }
    match f {
        Formula::Top => write!(out, "true")?,
        Formula::Bottom => write!(out, "false")?,
        Formula::Prop(p) => write!(out, "{p}")?,
        Formula::Not(a) => {
            write!(out, "~")?;
            write_prec(a, out, PREC_UNARY)?;
        }
        Formula::Box(a) => {
            write!(out, "[]")?;
            write_prec(a, out, PREC_UNARY)?;
        }
        Formula::Diamond(a) => {
            write!(out, "<>")?;
            write_prec(a, out, PREC_UNARY)?;
        }
        Formula::And(a, b) => {
            write_prec(a, out, PREC_AND)?;
            write!(out, " & ")?;
            write_prec(b, out, PREC_AND + 1)?;
        }
        Formula::Or(a, b) => {
            write_prec(a, out, PREC_OR)?;
            write!(out, " | ")?;
            write_prec(b, out, PREC_OR + 1)?;
        }
    }
    if paren {
        write!(out, ")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::kripke::Vocabulary;

    fn pq() -> Vocabulary {
        Vocabulary::new(["p", "q"])
    }

    #[test]
    fn eval_examples() {
        let v = Vocabulary::new(["p"]);
        let dp = parse("<>p", &v).unwrap();
        let bp = parse("[]p", &v).unwrap();
        assert!(eval(&dp, &m1(), "w0").unwrap());
        assert!(eval(&bp, &m1(), "w0").unwrap());
        assert!(!eval(&bp, &m4(), "w0").unwrap());
        assert!(eval(&dp, &m1(), "nope").is_err());
    }

    #[test]
    fn depth_examples() {
        let v = pq();
        assert_eq!(parse("p | ~q", &v).unwrap().depth(), 0);
        assert_eq!(parse("<>p", &v).unwrap().depth(), 1);
        assert_eq!(parse("[](<>p & q) | <>false", &v).unwrap().depth(), 2);
    }

    #[test]
    fn existential_examples() {
        let v = pq();
        assert!(parse("<>(p & ~q)", &v).unwrap().is_existential());
        assert!(!parse("[]p", &v).unwrap().is_existential());
        assert!(!parse("~<>p", &v).unwrap().is_existential());
    }

    #[test]
    fn printing_respects_precedence() {
        let v = pq();
        for text in [
            "p | q & ~p",
            "(p | q) & p",
            "[](p | ~q)",
            "<>[]~p",
            "p | (q | p)",
            "~(p & q)",
        ] {
            let f = parse(text, &v).unwrap();
            assert_eq!(f.to_string(), text);
        }
    }

    #[test]
    fn box_is_dual_of_diamond_on_fixtures() {
        let v = Vocabulary::new(["p"]);
        let b = parse("[]p", &v).unwrap();
        let d = parse("~<>~p", &v).unwrap();
        for m in [m0(), m1(), m2(), m3(), m4()] {
            for w in 0..m.len() {
                assert_eq!(b.holds_at(&m, w), d.holds_at(&m, w));
            }
        }
    }
}
