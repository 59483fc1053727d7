//! Small named models over the vocabulary `{p}`, shared by tests, the CLI
//! and the verification suite.

use crate::kripke::KripkeModel;

fn build(worlds: &[&str], edges: &[(&str, &str)], p: &[&str]) -> KripkeModel {
    KripkeModel::new(
        worlds.iter().copied(),
        edges.iter().copied(),
        [("p".to_string(), p.to_vec())],
        worlds[0],
    )
    .expect("fixture is well formed")
}

/// One world, no edges, `p` false.
pub fn m0() -> KripkeModel {
    build(&["w0"], &[], &[])
}

/// `w0 → w1` with `p` at `w1`.
pub fn m1() -> KripkeModel {
    build(&["w0", "w1"], &[("w0", "w1")], &["w1"])
}

/// A single world with a self-loop.
pub fn m2() -> KripkeModel {
    build(&["w0"], &[("w0", "w0")], &[])
}

/// The chain `w0 → w1 → w2`.
pub fn m3() -> KripkeModel {
    build(&["w0", "w1", "w2"], &[("w0", "w1"), ("w1", "w2")], &[])
}

/// `w0 → w1`, `w0 → w2` with `p` at `w1` only.
pub fn m4() -> KripkeModel {
    build(&["w0", "w1", "w2"], &[("w0", "w1"), ("w0", "w2")], &["w1"])
}

/// Two worlds with all four edges between them; bisimilar to [`m2`].
pub fn m2_doubled() -> KripkeModel {
    build(
        &["u0", "u1"],
        &[("u0", "u0"), ("u0", "u1"), ("u1", "u0"), ("u1", "u1")],
        &[],
    )
}

pub fn by_name(name: &str) -> Option<KripkeModel> {
    match name {
        "M0" | "m0" => Some(m0()),
        "M1" | "m1" => Some(m1()),
        "M2" | "m2" => Some(m2()),
        "M3" | "m3" => Some(m3()),
        "M4" | "m4" => Some(m4()),
        _ => None,
    }
}
