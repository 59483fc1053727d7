//! Morita sets between path presheaves, strong non-emptiness, global
//! sections built from bisimulations, and the back-and-forth game on
//! fibrant presheaves.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::factorization::largest_bisimulation;
use crate::kripke::{KripkeModel, TreeMorphism};
use crate::presheaf::{
    image, is_fibrant, pairing, product, restrict, subpresheaf, tree_morphism_image,
    tree_to_presheaf, LabelPath, PathPresheaf, PresheafMorphism, Span,
};
use crate::unravel::{unravel, unravel_morphism};

/// Largest product presheaf (in elements) that exhaustive mode enumerates.
pub const MAX_EXHAUSTIVE_ELEMENTS: usize = 16;

/// Replaces a span of trivial fibrations by its image in the product of
/// the feet, which is jointly monic and again a span of trivial fibrations.
pub fn joint_monic_reduce(span: &Span) -> Result<Span> {
    if !span.is_morita() {
        return Err(Error::Precondition(
            "both legs must be trivial fibrations".into(),
        ));
    }
    let prod = product(span.left.target(), span.right.target())?;
    let pair = pairing(&span.left, &span.right, &prod)?;
    let (_, inclusion) = image(&pair)?;
    Span::new(inclusion.then(&prod.1)?, inclusion.then(&prod.2)?)
}

/// How [`morita_set`] searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoritaMode {
    /// Every jointly monic span, by enumerating subobjects of the product.
    Exhaustive,
    /// Only the largest jointly monic span, by greatest-fixpoint pruning.
    Maximal,
}

/// Jointly monic spans of trivial fibrations at one level.
#[derive(Clone, Debug)]
pub struct MoritaSet {
    pub level: usize,
    pub spans: Vec<Span>,
}

impl MoritaSet {
    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

type Flags = BTreeMap<LabelPath, Vec<bool>>;

/// Whether every lifting problem for `leg` at element `zi` of `z(path)` is
/// solved inside the `alive` elements.
fn lifts_inside(
    z: &PathPresheaf,
    leg: &PresheafMorphism,
    alive: &Flags,
    path: &LabelPath,
    zi: usize,
) -> bool {
    let target = leg.target();
    let t = leg.apply(path, zi);
    target.extensions(path).all(|ext| {
        target.children_of(ext, t).into_iter().all(|c| {
            z.children_of(ext, zi)
                .into_iter()
                .any(|z2| alive.get(ext).is_some_and(|a| a[z2]) && leg.apply(ext, z2) == c)
        })
    })
}

/// Every length-1 element of the leg's target is hit by an alive element.
fn roots_covered(z: &PathPresheaf, leg: &PresheafMorphism, alive: &Flags) -> bool {
    let target = leg.target();
    target.paths().filter(|p| p.len() == 1).all(|p| {
        (0..target.count(p)).all(|t| {
            (0..z.count(p)).any(|zi| alive.get(p).is_some_and(|a| a[zi]) && leg.apply(p, zi) == t)
        })
    })
}

fn is_valid_subobject(
    z: &PathPresheaf,
    pl: &PresheafMorphism,
    pr: &PresheafMorphism,
    alive: &Flags,
) -> bool {
    roots_covered(z, pl, alive)
        && roots_covered(z, pr, alive)
        && z.paths().all(|p| {
            (0..z.count(p)).all(|zi| {
                !alive[p][zi]
                    || (lifts_inside(z, pl, alive, p, zi) && lifts_inside(z, pr, alive, p, zi))
            })
        })
}

fn span_from_flags(
    prod: &(PathPresheaf, PresheafMorphism, PresheafMorphism),
    alive: &Flags,
) -> Result<Span> {
    let (_, inclusion) = subpresheaf(&prod.0, alive)?;
    Span::new(inclusion.then(&prod.1)?, inclusion.then(&prod.2)?)
}

/// The largest jointly monic span of trivial fibrations between `x` and
/// `y`, if there is one.
///
/// Pruning starts from the whole product and deletes elements whose
/// restriction is gone or which leave a lifting problem of either
/// projection unsolved. Valid subobjects are closed under unions, and
/// pruning never deletes an element of one, so what remains contains all of
/// them; it is itself valid once the length-1 fibres are covered.
pub fn maximal_span(x: &PathPresheaf, y: &PathPresheaf) -> Result<Option<Span>> {
    let prod = product(x, y)?;
    let (z, pl, pr) = &prod;
    let mut alive: Flags = z
        .paths()
        .map(|p| (p.clone(), vec![true; z.count(p)]))
        .collect();
    loop {
        let mut changed = false;
        for path in z.paths() {
            for zi in 0..z.count(path) {
                if !alive[path][zi] {
                    continue;
                }
                let parent_dead = path
                    .parent()
                    .is_some_and(|pp| !alive[&pp][z.parent(path, zi).expect("has parent")]);
                if parent_dead
                    || !lifts_inside(z, pl, &alive, path, zi)
                    || !lifts_inside(z, pr, &alive, path, zi)
                {
                    alive.get_mut(path).expect("present")[zi] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if !(roots_covered(z, pl, &alive) && roots_covered(z, pr, &alive)) {
        return Ok(None);
    }
    span_from_flags(&prod, &alive).map(Some)
}

/// All jointly monic spans of trivial fibrations, as subobjects of the
/// product, in a fixed order.
pub fn all_spans(x: &PathPresheaf, y: &PathPresheaf) -> Result<Vec<Span>> {
    let prod = product(x, y)?;
    let z = &prod.0;
    if z.size() > MAX_EXHAUSTIVE_ELEMENTS {
        return Err(Error::TooLarge(format!(
            "product has {} elements; exhaustive mode allows {MAX_EXHAUSTIVE_ELEMENTS}",
            z.size()
        )));
    }
    let elements: Vec<(LabelPath, usize)> = z
        .paths()
        .flat_map(|p| (0..z.count(p)).map(move |i| (p.clone(), i)))
        .collect();
    let mut flags: Flags = z
        .paths()
        .map(|p| (p.clone(), vec![false; z.count(p)]))
        .collect();
    let mut out = Vec::new();

    fn go(
        i: usize,
        elements: &[(LabelPath, usize)],
        prod: &(PathPresheaf, PresheafMorphism, PresheafMorphism),
        flags: &mut Flags,
        out: &mut Vec<Span>,
    ) -> Result<()> {
        let z = &prod.0;
        let Some((path, zi)) = elements.get(i) else {
            if is_valid_subobject(z, &prod.1, &prod.2, flags) {
                out.push(span_from_flags(prod, flags)?);
            }
            return Ok(());
        };
        go(i + 1, elements, prod, flags, out)?;
        let parent_in = path
            .parent()
            .is_none_or(|pp| flags[&pp][z.parent(path, *zi).expect("has parent")]);
        if parent_in {
            flags.get_mut(path).expect("present")[*zi] = true;
            go(i + 1, elements, prod, flags, out)?;
            flags.get_mut(path).expect("present")[*zi] = false;
        }
        Ok(())
    }

    go(0, &elements, &prod, &mut flags, &mut out)?;
    Ok(out)
}

/// The Morita set between the level-`n` restrictions of `x` and `y`.
pub fn morita_set(
    x: &PathPresheaf,
    y: &PathPresheaf,
    n: usize,
    mode: MoritaMode,
) -> Result<MoritaSet> {
    let xn = restrict(x, n)?;
    let yn = restrict(y, n)?;
    let spans = match mode {
        MoritaMode::Maximal => maximal_span(&xn, &yn)?.into_iter().collect(),
        MoritaMode::Exhaustive => all_spans(&xn, &yn)?,
    };
    Ok(MoritaSet { level: n, spans })
}

/// Tree presheaf of `unravel(model, n)` with bound `n`.
pub fn unravelling_presheaf(model: &KripkeModel, n: usize) -> Result<PathPresheaf> {
    tree_to_presheaf(&unravel(model, n)?, n)
}

/// Whether the Morita set at every level `1..=n_max` is non-empty.
pub fn strongly_non_empty(a: &KripkeModel, b: &KripkeModel, n_max: usize) -> Result<bool> {
    for n in 1..=n_max {
        let x = unravelling_presheaf(a, n)?;
        let y = unravelling_presheaf(b, n)?;
        if maximal_span(&x, &y)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The bisimulation `Z ⊆ A × B` restricted to pairs reachable from the root
/// pair, as a model, with its two projections (both p-morphisms).
pub fn bisimulation_model(
    a: &KripkeModel,
    b: &KripkeModel,
) -> Result<Option<(TreeMorphism, TreeMorphism)>> {
    let rel = largest_bisimulation(a, b);
    let root = (a.root(), b.root());
    if !rel[root.0][root.1] {
        return Ok(None);
    }
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::from([(root, 0)]);
    let mut nodes = vec![root];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some((x, y)) = queue.pop_front() {
        let from = index[&(x, y)];
        for &x2 in a.successors(x) {
            for &y2 in b.successors(y) {
                if !rel[x2][y2] {
                    continue;
                }
                let to = *index.entry((x2, y2)).or_insert_with(|| {
                    nodes.push((x2, y2));
                    queue.push_back((x2, y2));
                    nodes.len() - 1
                });
                edges.push((from, to));
            }
        }
    }
    let names = nodes
        .iter()
        .map(|&(x, y)| format!("({},{})", a.name(x), b.name(y)))
        .collect();
    let labels = nodes.iter().map(|&(x, _)| a.label(x).clone()).collect();
    let vocabulary = a.vocabulary().union(b.vocabulary());
    let (z, position) = KripkeModel::from_indexed(names, edges, labels, vocabulary, 0)?;
    let mut left = vec![0; nodes.len()];
    let mut right = vec![0; nodes.len()];
    for (old, &(x, y)) in nodes.iter().enumerate() {
        left[position[old]] = x;
        right[position[old]] = y;
    }
    Ok(Some((
        TreeMorphism::from_indices(z.clone(), a.clone(), left)?,
        TreeMorphism::from_indices(z, b.clone(), right)?,
    )))
}

/// A prefix-compatible family of Morita spans at levels `1..=N`.
#[derive(Clone, Debug)]
pub struct GlobalSection {
    /// `levels[n - 1]` is the span at level `n`.
    pub levels: Vec<Span>,
}

impl GlobalSection {
    /// For each `n < N`: the level-`n+1` span restricts to the level-`n`
    /// span.
    pub fn compatibility_witnesses(&self) -> Vec<bool> {
        self.levels
            .windows(2)
            .enumerate()
            .map(|(i, w)| w[1].restrict(i + 1).is_ok_and(|r| r == w[0]))
            .collect()
    }

    /// Every level is a jointly monic span of trivial fibrations and all
    /// compatibility witnesses hold.
    pub fn verify(&self) -> bool {
        self.levels
            .iter()
            .all(|s| s.is_morita() && s.is_jointly_monic())
            && self.compatibility_witnesses().into_iter().all(|ok| ok)
    }
}

/// A global section up to level `n_max`, obtained by unravelling the
/// bisimulation span levelwise; `None` when the models are not bisimilar.
pub fn global_section(
    a: &KripkeModel,
    b: &KripkeModel,
    n_max: usize,
) -> Result<Option<GlobalSection>> {
    let Some((pa, pb)) = bisimulation_model(a, b)? else {
        return Ok(None);
    };
    let mut levels = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let left = tree_morphism_image(&unravel_morphism(&pa, n)?, n)?;
        let right = tree_morphism_image(&unravel_morphism(&pb, n)?, n)?;
        levels.push(Span::new(left, right)?);
    }
    Ok(Some(GlobalSection { levels }))
}

/// Searches for a compatible family among the exhaustive Morita sets,
/// level by level from 1. Only for tiny instances.
pub fn global_section_by_search(
    a: &KripkeModel,
    b: &KripkeModel,
    n_max: usize,
) -> Result<Option<GlobalSection>> {
    let mut sets = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        sets.push(all_spans(
            &unravelling_presheaf(a, n)?,
            &unravelling_presheaf(b, n)?,
        )?);
    }

    fn extend_from(sets: &[Vec<Span>], chosen: &mut Vec<Span>) -> Result<bool> {
        let n = chosen.len();
        let Some(candidates) = sets.get(n) else {
            return Ok(true);
        };
        for s in candidates {
            if n > 0 && s.restrict(n)? != chosen[n - 1] {
                continue;
            }
            chosen.push(s.clone());
            if extend_from(sets, chosen)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }

    let mut chosen = Vec::new();
    Ok(extend_from(&sets, &mut chosen)?.then_some(GlobalSection { levels: chosen }))
}

/// The side a move is made on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    X,
    Y,
}

impl Side {
    fn other(self) -> Side {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }
}

/// How Spoiler picks moves.
#[derive(Clone, Debug)]
pub enum Spoiler {
    /// Fixed moves `(side, path, element)`; the first picks a length-1
    /// element, every later one extends the current element on its side.
    Scripted(Vec<(Side, LabelPath, String)>),
    /// Always the first available extension, preferring side X.
    DepthFirst,
    /// Looks ahead for a move that leaves Duplicator without an answer,
    /// falling back to depth-first.
    Adversarial,
}

/// How Duplicator found its answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Through an apex element of the current level's span that lies over
    /// both the new move and the current position.
    Span,
    /// Any extension of the current element, which fibrancy provides.
    Fibrancy,
}

/// One round of play.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Round {
    pub round: usize,
    pub path: String,
    pub spoiler_side: Side,
    pub spoiler_element: String,
    pub response: Option<String>,
    pub route: Option<Route>,
}

/// How the game ended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Outcome {
    DuplicatorSurvived { rounds: usize },
    SpoilerCannotMove { round: usize },
    DuplicatorStuck { round: usize, failing_lift: String },
}

/// Append-only record of a game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub rounds: Vec<Round>,
    pub outcome: Outcome,
}

impl Transcript {
    pub fn duplicator_survived(&self) -> bool {
        !matches!(self.outcome, Outcome::DuplicatorStuck { .. })
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rounds {
            let side = match r.spoiler_side {
                Side::X => "X",
                Side::Y => "Y",
            };
            write!(
                f,
                "round {} at {}: spoiler {} {}",
                r.round, r.path, side, r.spoiler_element
            )?;
            match (&r.response, r.route) {
                (Some(e), Some(route)) => writeln!(f, ", duplicator {e} via {route:?}")?,
                _ => writeln!(f, ", duplicator has no answer")?,
            }
        }
        write!(f, "{:?}", self.outcome)
    }
}

struct Game<'a> {
    x: &'a PathPresheaf,
    y: &'a PathPresheaf,
    /// spans[n - 1] is the maximal span at level n, when it exists
    spans: Vec<Option<Span>>,
}

/// A position: a common path and an element on each side.
#[derive(Clone, Debug)]
struct Position {
    path: LabelPath,
    x: usize,
    y: usize,
}

impl Game<'_> {
    fn side(&self, s: Side) -> &PathPresheaf {
        match s {
            Side::X => self.x,
            Side::Y => self.y,
        }
    }

    fn current(pos: &Position, s: Side) -> usize {
        match s {
            Side::X => pos.x,
            Side::Y => pos.y,
        }
    }

    /// Duplicator's answer on the side opposite to `s` for Spoiler's
    /// element `e` at `path`, extending `prev` (absent at length 1).
    fn answer(
        &self,
        s: Side,
        path: &LabelPath,
        e: usize,
        prev: Option<&Position>,
    ) -> Option<(usize, Route)> {
        let other = self.side(s.other());
        if let Some(Some(span)) = self.spans.get(path.len() - 1) {
            let (mine, theirs) = match s {
                Side::X => (&span.left, &span.right),
                Side::Y => (&span.right, &span.left),
            };
            for w in 0..span.apex.count(path) {
                if mine.apply(path, w) != e {
                    continue;
                }
                let r = theirs.apply(path, w);
                let coherent =
                    prev.is_none_or(|p| other.parent(path, r) == Some(Self::current(p, s.other())));
                if coherent {
                    return Some((r, Route::Span));
                }
            }
        }
        match prev {
            None => (other.count(path) > 0).then_some((0, Route::Fibrancy)),
            Some(p) => other
                .children_of(path, Self::current(p, s.other()))
                .first()
                .map(|&r| (r, Route::Fibrancy)),
        }
    }

    /// Moves available to Spoiler from `pos` (or opening moves).
    fn moves(&self, pos: Option<&Position>) -> Vec<(Side, LabelPath, usize)> {
        let mut out = Vec::new();
        for s in [Side::X, Side::Y] {
            let z = self.side(s);
            match pos {
                None => {
                    for p in z.paths().filter(|p| p.len() == 1) {
                        out.extend((0..z.count(p)).map(|i| (s, p.clone(), i)));
                    }
                }
                Some(pos) => {
                    if pos.path.len() >= z.bound() {
                        continue;
                    }
                    let cur = Self::current(pos, s);
                    for ext in z.extensions(&pos.path) {
                        out.extend(
                            z.children_of(ext, cur)
                                .into_iter()
                                .map(|c| (s, ext.clone(), c)),
                        );
                    }
                }
            }
        }
        out
    }

    fn step(&self, pos: Option<&Position>, mv: &(Side, LabelPath, usize)) -> Option<Position> {
        let (s, path, e) = mv;
        let (r, _) = self.answer(*s, path, *e, pos)?;
        let (x, y) = match s {
            Side::X => (*e, r),
            Side::Y => (r, *e),
        };
        Some(Position {
            path: path.clone(),
            x,
            y,
        })
    }

    /// A Spoiler move from `pos` that wins within `depth` rounds.
    fn winning_move(
        &self,
        pos: Option<&Position>,
        depth: usize,
    ) -> Option<(Side, LabelPath, usize)> {
        if depth == 0 {
            return None;
        }
        for mv in self.moves(pos) {
            match self.step(pos, &mv) {
                None => return Some(mv),
                Some(next) => {
                    if self.winning_move(Some(&next), depth - 1).is_some() {
                        return Some(mv);
                    }
                }
            }
        }
        None
    }
}

/// Plays `rounds` rounds after the opening move, without checking any
/// precondition. Duplicator answers through the maximal span of the level
/// when it can and otherwise extends its current element if possible.
pub fn play_game(
    x: &PathPresheaf,
    y: &PathPresheaf,
    spoiler: &Spoiler,
    rounds: usize,
) -> Result<Transcript> {
    if x.bound() != y.bound() {
        return Err(Error::Precondition(
            "game presheaves have different bounds".into(),
        ));
    }
    let top = x.bound().min(rounds + 1);
    let mut spans = Vec::with_capacity(top);
    for n in 1..=top {
        spans.push(maximal_span(&restrict(x, n)?, &restrict(y, n)?)?);
    }
    let game = Game { x, y, spans };
    let mut transcript = Vec::new();
    let mut pos: Option<Position> = None;
    for round in 0..=rounds {
        let mv = match spoiler {
            Spoiler::Scripted(script) => match script.get(round) {
                None => break,
                Some((s, path, name)) => {
                    let z = game.side(*s);
                    let e = z.index_of(path, name).ok_or_else(|| {
                        Error::Precondition(format!("`{name}` is not an element at {path}"))
                    })?;
                    let legal = match &pos {
                        None => path.len() == 1,
                        Some(p) => {
                            path.parent().as_ref() == Some(&p.path)
                                && z.parent(path, e) == Some(Game::current(p, *s))
                        }
                    };
                    if !legal {
                        return Err(Error::Precondition(format!(
                            "spoiler move `{name}` at {path} is not a one-step extension"
                        )));
                    }
                    Some((*s, path.clone(), e))
                }
            },
            Spoiler::DepthFirst => game.moves(pos.as_ref()).into_iter().next(),
            Spoiler::Adversarial => game
                .winning_move(pos.as_ref(), rounds + 1 - round)
                .or_else(|| game.moves(pos.as_ref()).into_iter().next()),
        };
        let Some(mv) = mv else {
            return Ok(Transcript {
                rounds: transcript,
                outcome: Outcome::SpoilerCannotMove { round },
            });
        };
        let (s, path, e) = &mv;
        let answer = game.answer(*s, path, *e, pos.as_ref());
        let side_name = game.side(*s).elements(path)[*e].clone();
        let other = game.side(s.other());
        transcript.push(Round {
            round,
            path: path.to_string(),
            spoiler_side: *s,
            spoiler_element: side_name.clone(),
            response: answer.map(|(r, _)| other.elements(path)[r].clone()),
            route: answer.map(|(_, route)| route),
        });
        match answer {
            None => {
                let failing_lift = match &pos {
                    None => format!("nothing at {path} answers `{side_name}`"),
                    Some(p) => format!(
                        "no element at {path} extends `{}`",
                        other.elements(&p.path)[Game::current(p, s.other())]
                    ),
                };
                return Ok(Transcript {
                    rounds: transcript,
                    outcome: Outcome::DuplicatorStuck {
                        round,
                        failing_lift,
                    },
                });
            }
            Some(_) => pos = game.step(pos.as_ref(), &mv),
        }
    }
    Ok(Transcript {
        rounds: transcript.clone(),
        outcome: Outcome::DuplicatorSurvived {
            rounds: transcript.len(),
        },
    })
}

/// [`play_game`] after checking that both presheaves are fibrant and that
/// their Morita sets are non-empty at every level the game can reach.
pub fn fibrancy_game(
    x: &PathPresheaf,
    y: &PathPresheaf,
    spoiler: &Spoiler,
    rounds: usize,
) -> Result<Transcript> {
    for (name, z) in [("X", x), ("Y", y)] {
        if !is_fibrant(z) {
            return Err(Error::Precondition(format!("{name} is not fibrant")));
        }
    }
    if x.bound() != y.bound() {
        return Err(Error::Precondition(
            "game presheaves have different bounds".into(),
        ));
    }
    for n in 1..=x.bound().min(rounds + 1) {
        if maximal_span(&restrict(x, n)?, &restrict(y, n)?)?.is_none() {
            return Err(Error::Precondition(format!(
                "no Morita equivalence at level {n}"
            )));
        }
    }
    play_game(x, y, spoiler, rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::kripke::{as_sync_tree, Label, Vocabulary};

    fn tree_presheaf(m: &KripkeModel, k: usize) -> PathPresheaf {
        tree_to_presheaf(&as_sync_tree(m).unwrap(), k).unwrap()
    }

    fn no_props(worlds: &[&str], edges: &[(&str, &str)], root: &str) -> KripkeModel {
        KripkeModel::new(
            worlds.iter().copied(),
            edges.iter().copied(),
            Vec::<(String, Vec<String>)>::new(),
            root,
        )
        .unwrap()
        .with_vocabulary(&Vocabulary::new(["p"]))
    }

    #[test]
    fn reduce_examples() {
        let s = crate::factorization::morita_span_k(&m2(), &m3(), 3)
            .unwrap()
            .unwrap()
            .to_presheaf_span(3)
            .unwrap();
        let r = joint_monic_reduce(&s).unwrap();
        assert_eq!(r.apex.size(), s.apex.size());
        assert!(r.is_morita() && r.is_jointly_monic());

        // a diagonal span whose apex has a duplicated element
        let two = no_props(&["r", "a", "b"], &[("r", "a"), ("r", "b")], "r");
        let one = no_props(&["r", "a"], &[("r", "a")], "r");
        let fold = TreeMorphism::from_indices(two, one, vec![0, 0, 1]).unwrap();
        let leg = tree_morphism_image(&fold, 2).unwrap();
        let s = Span::new(leg.clone(), leg).unwrap();
        assert!(s.is_morita() && !s.is_jointly_monic());
        let r = joint_monic_reduce(&s).unwrap();
        assert_eq!(r.apex.size(), s.apex.size() - 1);
        assert!(r.is_morita() && r.is_jointly_monic());

        let inc = tree_morphism_image(
            &TreeMorphism::from_indices(m1().induced(&[0]).unwrap(), m1(), vec![0]).unwrap(),
            2,
        )
        .unwrap();
        assert!(joint_monic_reduce(&Span::new(inc.clone(), inc).unwrap()).is_err());
    }

    #[test]
    fn morita_set_examples() {
        let one = tree_presheaf(&m0(), 1);
        let e = morita_set(&one, &one, 1, MoritaMode::Exhaustive).unwrap();
        assert_eq!(e.spans.len(), 1);

        let x = unravelling_presheaf(&m2(), 3).unwrap();
        let y = unravelling_presheaf(&m3(), 3).unwrap();
        assert!(!morita_set(&x, &y, 3, MoritaMode::Maximal)
            .unwrap()
            .is_empty());
        assert!(!morita_set(&x, &y, 3, MoritaMode::Exhaustive)
            .unwrap()
            .is_empty());

        let x = unravelling_presheaf(&m1(), 2).unwrap();
        let y = unravelling_presheaf(&m4(), 2).unwrap();
        assert!(morita_set(&x, &y, 2, MoritaMode::Maximal)
            .unwrap()
            .is_empty());
        assert!(morita_set(&x, &y, 2, MoritaMode::Exhaustive)
            .unwrap()
            .is_empty());
        assert!(!morita_set(&x, &y, 1, MoritaMode::Maximal)
            .unwrap()
            .is_empty());

        let big = unravelling_presheaf(&m2_doubled(), 4).unwrap();
        assert!(matches!(
            morita_set(&big, &big, 4, MoritaMode::Exhaustive),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn maximal_contains_every_exhaustive_span() {
        let x = unravelling_presheaf(&m2_doubled(), 3).unwrap();
        let y = unravelling_presheaf(&m2(), 3).unwrap();
        let all = all_spans(&x, &y).unwrap();
        let max = maximal_span(&x, &y).unwrap().unwrap();
        assert!(all.iter().any(|s| s.apex == max.apex));
        assert!(all.iter().all(|s| s.apex.size() <= max.apex.size()));
    }

    #[test]
    fn strong_non_emptiness() {
        assert!(strongly_non_empty(&m2(), &m3(), 2).unwrap());
        assert!(strongly_non_empty(&m2(), &m3(), 3).unwrap());
        assert!(!strongly_non_empty(&m2(), &m3(), 4).unwrap());
        for m in [m0(), m1(), m4()] {
            assert!(strongly_non_empty(&m, &m, 4).unwrap());
        }
    }

    #[test]
    fn global_section_examples() {
        let g = global_section(&m2(), &m2_doubled(), 3).unwrap().unwrap();
        assert_eq!(g.levels.len(), 3);
        assert!(g.verify());
        assert_eq!(g.compatibility_witnesses(), vec![true, true]);
        assert!(global_section(&m2(), &m3(), 3).unwrap().is_none());

        assert!(global_section_by_search(&m2(), &m2_doubled(), 3)
            .unwrap()
            .is_some());
        assert!(global_section_by_search(&m2(), &m3(), 4).unwrap().is_none());
    }

    #[test]
    fn game_on_terminal_presheaf() {
        let one = PathPresheaf::terminal(&Vocabulary::new(["p"]), 6).unwrap();
        let t = fibrancy_game(&one, &one, &Spoiler::DepthFirst, 5).unwrap();
        assert_eq!(t.outcome, Outcome::DuplicatorSurvived { rounds: 6 });
        assert!(t.rounds.iter().all(|r| r.response.as_deref() == Some("*")));
    }

    #[test]
    fn game_on_bisimilar_unravellings() {
        let x = unravelling_presheaf(&m2(), 5).unwrap();
        let y = unravelling_presheaf(&m2_doubled(), 5).unwrap();
        assert!(x != y);
        for spoiler in [Spoiler::DepthFirst, Spoiler::Adversarial] {
            let t = fibrancy_game(&x, &y, &spoiler, 4).unwrap();
            assert!(t.duplicator_survived());
            assert!(t.rounds.iter().all(|r| r.route == Some(Route::Span)));
        }
    }

    #[test]
    fn game_against_a_non_fibrant_presheaf() {
        let x = tree_presheaf(
            &no_props(&["r", "a", "c"], &[("r", "a"), ("a", "c")], "r"),
            3,
        );
        let y = tree_presheaf(
            &no_props(
                &["r", "a", "b", "c"],
                &[("r", "a"), ("r", "b"), ("a", "c")],
                "r",
            ),
            3,
        );
        assert!(is_fibrant(&x) && !is_fibrant(&y));
        assert!(fibrancy_game(&x, &y, &Spoiler::DepthFirst, 2).is_err());

        let e = Label::empty();
        let p1 = LabelPath::single(e.clone());
        let p2 = p1.child(e.clone());
        let p3 = p2.child(e);
        let script = Spoiler::Scripted(vec![
            (Side::X, p1.clone(), "r".into()),
            (Side::Y, p2.clone(), "b".into()),
            (Side::X, p3.clone(), "c".into()),
        ]);
        let t = play_game(&x, &y, &script, 2).unwrap();
        match &t.outcome {
            Outcome::DuplicatorStuck {
                round,
                failing_lift,
            } => {
                assert_eq!(*round, 2);
                assert!(failing_lift.contains("`b`"));
            }
            other => panic!("unexpected outcome {other:?}"),
        }

        let t = play_game(&x, &y, &Spoiler::Adversarial, 2).unwrap();
        assert!(!t.duplicator_survived());

        let illegal = Spoiler::Scripted(vec![(Side::X, p1, "r".into()), (Side::X, p3, "c".into())]);
        assert!(play_game(&x, &y, &illegal, 2).is_err());
    }
}
