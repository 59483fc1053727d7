use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modal_homotopy::fixtures;
use modal_homotopy::io::{save_model, to_pretty};
use modal_homotopy::KripkeModel;
use serde_json::json;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modal-homotopy"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_model(dir: &TempDir, name: &str, m: &KripkeModel) -> PathBuf {
    let p = dir.path().join(name);
    save_model(m, &p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(worlds: &[&str], edges: &[(&str, &str)]) -> KripkeModel {
    KripkeModel::new(
        worlds.iter().copied(),
        edges.iter().copied(),
        Vec::<(String, Vec<String>)>::new(),
        worlds[0],
    )
    .unwrap()
}

#[test]
fn kbisim_exit_codes_follow_the_grade() {
    let dir = TempDir::new().unwrap();
    let a = write_model(&dir, "m2.json", &fixtures::m2());
    let b = write_model(&dir, "m3.json", &fixtures::m3());
    assert_eq!(code(&run(&["kbisim", s(&a), s(&b), "--k", "2"])), 0);
    assert_eq!(code(&run(&["kbisim", s(&a), s(&b), "--k", "3"])), 1);
    assert_eq!(code(&run(&["bisim", s(&a), s(&b)])), 1);
    assert_eq!(code(&run(&["bisim", s(&a), s(&a)])), 0);
}

#[test]
fn factorize_emits_annotated_dot() {
    let dir = TempDir::new().unwrap();
    let target = tree(&["r", "a", "b"], &[("r", "a"), ("r", "b")]);
    let source = tree(&["r"], &[]);
    write_model(&dir, "a.json", &source);
    write_model(&dir, "b.json", &target);
    let f = dir.path().join("f.json");
    let doc = json!({ "source": "a.json", "target": "b.json", "map": { "r": "r" } });
    std::fs::write(&f, to_pretty(&doc)).unwrap();

    let out = run(&["factorize", s(&f), "--k", "3", "--format", "dot"]);
    assert_eq!(code(&out), 0);
    let dot = stdout(&out);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("peripheries=2"));
    assert!(dot.contains("j: r"));
    assert!(dot.contains("t: a") && dot.contains("t: b"));
    assert!(dot.contains("[label=\"t\", style=dashed]"));

    let out = run(&["check-morphism", s(&f), "--class", "p-morphism"]);
    assert_eq!(code(&out), 1);
    let out = run(&["check-morphism", s(&f), "--class", "embedding"]);
    assert_eq!(code(&out), 0);
    let out = run(&["trivial-fib", s(&f)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"worlds":["a"],"root":"a","edges":[["a","b"]],"valuation":{}}"#,
    )
    .unwrap();
    let out = run(&["eval", s(&bad), "p"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("edges[0]"));

    let ok = write_model(&dir, "m1.json", &fixtures::m1());
    assert_eq!(code(&run(&["eval", s(&ok), "<>("])), 2);
    assert_eq!(code(&run(&["kbisim", s(&ok)])), 2);
    assert_eq!(code(&run(&["unravel", s(&ok), "--k", "0"])), 2);
}

#[test]
fn eval_and_unravel() {
    let dir = TempDir::new().unwrap();
    let m1 = write_model(&dir, "m1.json", &fixtures::m1());
    assert_eq!(code(&run(&["eval", s(&m1), "<>p"])), 0);
    assert_eq!(code(&run(&["eval", s(&m1), "p"])), 1);
    let out = run(&["unravel", s(&m1), "--k", "2", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["worlds"], json!(["[w0,w1]", "[w0]"]));
    assert_eq!(v["root"], json!("[w0]"));
}

#[test]
fn presheaf_commands() {
    let dir = TempDir::new().unwrap();
    let broken = write_model(
        &dir,
        "two.json",
        &tree(&["r", "a", "b", "c"], &[("r", "a"), ("r", "b"), ("a", "c")]),
    );
    let out = run(&["fibrant", s(&broken)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("`b`"));
    let m2 = write_model(&dir, "m2.json", &fixtures::m2());
    assert_eq!(code(&run(&["fibrant", s(&m2), "--k", "4"])), 0);

    let doubled = write_model(&dir, "d.json", &fixtures::m2_doubled());
    let m3 = write_model(&dir, "m3.json", &fixtures::m3());
    assert_eq!(code(&run(&["hm-section", s(&m2), s(&doubled)])), 0);
    assert_eq!(code(&run(&["hm-section", s(&m2), s(&m3)])), 1);
    assert_eq!(code(&run(&["morita-span", s(&m2), s(&m3), "--k", "3"])), 0);
    assert_eq!(code(&run(&["morita-span", s(&m2), s(&m3), "--k", "4"])), 1);
}

#[test]
fn game_commands() {
    let dir = TempDir::new().unwrap();
    let x = write_model(
        &dir,
        "x.json",
        &tree(&["r", "a", "c"], &[("r", "a"), ("a", "c")]),
    );
    let y = write_model(
        &dir,
        "y.json",
        &tree(&["r", "a", "b", "c"], &[("r", "a"), ("r", "b"), ("a", "c")]),
    );
    // the checked game refuses a non-fibrant side
    assert_eq!(code(&run(&["game", s(&x), s(&y), "--rounds", "2"])), 2);
    let out = run(&[
        "game",
        s(&x),
        s(&y),
        "--rounds",
        "2",
        "--unchecked",
        "--spoiler",
        "adversarial",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["outcome"]["result"], json!("duplicator_stuck"));

    let m2 = write_model(&dir, "m2.json", &fixtures::m2());
    let doubled = write_model(&dir, "d.json", &fixtures::m2_doubled());
    let out = run(&["game", s(&m2), s(&doubled), "--k", "5", "--rounds", "4"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn preservation_commands() {
    let universe = ["--random", "30", "--seed", "3"];
    let mut args = vec!["preservation", "[]p"];
    args.extend(universe);
    assert_eq!(code(&run(&args)), 1);
    let mut args = vec!["preservation", "<>p"];
    args.extend(universe);
    assert_eq!(code(&run(&args)), 0);
    let mut args = vec!["existential-search", "~[]~p", "--k", "1"];
    args.extend(universe);
    let out = run(&args);
    assert_eq!(code(&out), 0);
}

#[test]
fn verify_is_reproducible() {
    let a = run(&[
        "verify",
        "--seed",
        "17",
        "--criterion",
        "4",
        "--format",
        "json",
    ]);
    let b = run(&[
        "verify",
        "--seed",
        "17",
        "--criterion",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["depth_convention"]["offset"], json!(1));
    assert_eq!(code(&run(&["verify", "--criterion", "12"])), 2);
}
