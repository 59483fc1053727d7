use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use modal_homotopy::factorization::{bisimilar, factorize, graded_bisimilar, morita_span_k};
use modal_homotopy::formula::{parse, Formula};
use modal_homotopy::hennessy_milner::{
    fibrancy_game, global_section, play_game, strongly_non_empty, unravelling_presheaf, Side,
    Spoiler,
};
use modal_homotopy::io::{
    self, factorization_to_dot, label_path_from_value, model_to_dot, model_to_value,
    presheaf_morphism_to_value, to_pretty, Document,
};
use modal_homotopy::kripke::{as_sync_tree, KripkeModel, Vocabulary};
use modal_homotopy::preservation::{
    find_existential_equivalent, is_preserved_under_extensions, EquivalentSearch, Preservation,
};
use modal_homotopy::presheaf::{
    fibrancy_failure, tree_morphism_image, tree_to_presheaf, PathPresheaf, PresheafMorphism,
};
use modal_homotopy::random::{random_model, rng};
use modal_homotopy::unravel::unravel;
use modal_homotopy::verify;

#[derive(Parser)]
#[command(
    name = "modal-homotopy",
    version,
    about = "Modal logic on Kripke models through unravellings and path presheaves"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpoilerKind {
    DepthFirst,
    Adversarial,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula at a world (the root by default).
    Eval {
        model: PathBuf,
        formula: String,
        #[arg(long)]
        world: Option<String>,
    },
    /// Unravel a model into sequences of length at most k.
    Unravel {
        model: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Report the morphism classes a tree morphism belongs to.
    CheckMorphism {
        morphism: PathBuf,
        /// Exit 0 only if the morphism is of this class.
        #[arg(long, value_enum)]
        class: Option<MorphismClass>,
    },
    /// Factor a pathwise embedding into an embedding and a surjective p-morphism.
    Factorize {
        morphism: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Graded bisimilarity of the roots at grade k.
    Kbisim {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Bisimilarity of the roots, with the largest bisimulation.
    Bisim { a: PathBuf, b: PathBuf },
    /// A span of p-morphisms between the level-k unravellings.
    MoritaSpan {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Fibrancy of a presheaf, or of the presheaf of a model's level-k unravelling.
    Fibrant {
        document: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Whether a presheaf morphism (or the image of a tree morphism) is a trivial fibration.
    TrivialFib {
        morphism: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Check preservation of a formula under extensions over a universe.
    Preservation {
        formula: String,
        /// Model files in the universe.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Add this many seeded random models to the universe.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for an existential formula agreeing with the input over a universe.
    ExistentialSearch {
        formula: String,
        #[arg(long)]
        k: usize,
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
    },
    /// Strong non-emptiness and a global section of Morita spans up to level n.
    HmSection {
        a: PathBuf,
        b: PathBuf,
        /// Highest level; defaults to |A|·|B| + 1.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Play the back-and-forth game between two presheaves.
    Game {
        x: PathBuf,
        y: PathBuf,
        /// Bound used when a model is given instead of a presheaf.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 4)]
        rounds: usize,
        #[arg(long, value_enum, default_value_t = SpoilerKind::DepthFirst)]
        spoiler: SpoilerKind,
        /// JSON list of `{"side", "path", "element"}` moves; overrides --spoiler.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Skip the fibrancy and Morita checks.
        #[arg(long)]
        unchecked: bool,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only this criterion.
        #[arg(long)]
        criterion: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MorphismClass {
    Homomorphism,
    PathwiseEmbedding,
    Embedding,
    PMorphism,
}

/// What a command found: a verdict, plus what to print.
struct Outcome {
    verdict: bool,
    text: String,
    json: Value,
    dot: Option<String>,
}

impl Outcome {
    fn new(verdict: bool, text: impl Into<String>, json: Value) -> Self {
        Outcome {
            verdict,
            text: text.into(),
            json,
            dot: None,
        }
    }

    fn with_dot(mut self, dot: String) -> Self {
        self.dot = Some(dot);
        self
    }

    fn with_json_extra(mut self, key: &str, value: Value) -> Self {
        if let Value::Object(map) = &mut self.json {
            map.insert(key.to_string(), value);
        }
        self
    }
}

fn load_model(path: &Path) -> Result<KripkeModel> {
    io::load_model(path).with_context(|| format!("reading model {}", path.display()))
}

fn load_document(path: &Path) -> Result<Document> {
    io::load_document(path).with_context(|| format!("reading {}", path.display()))
}

fn presheaf_of(path: &Path, k: Option<usize>) -> Result<PathPresheaf> {
    match load_document(path)? {
        Document::Presheaf(x) => Ok(x),
        Document::Model(m) => match k {
            Some(k) => Ok(unravelling_presheaf(&m, k)?),
            None => {
                let tree = as_sync_tree(&m).context("a model without --k must be a tree")?;
                Ok(tree_to_presheaf(&tree, tree.height() + 1)?)
            }
        },
        _ => bail!("{} is not a presheaf or model document", path.display()),
    }
}

fn parse_formula(text: &str, vocab: &Vocabulary) -> Result<std::sync::Arc<Formula>> {
    parse(text, vocab).with_context(|| format!("parsing formula `{text}`"))
}

fn universe(models: &[PathBuf], random: usize, seed: u64) -> Result<Vec<KripkeModel>> {
    let mut out = models
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<Vec<_>>>()?;
    let vocab = out
        .iter()
        .fold(Vocabulary::new(["p"]), |v, m| v.union(m.vocabulary()));
    let mut r = rng(seed);
    out.extend((0..random).map(|_| random_model(&mut r, 4, &vocab, 0.35)));
    if out.is_empty() {
        bail!("the universe is empty; pass --model files or --random N");
    }
    Ok(out)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    Ok(match &cli.command {
        Command::Eval {
            model,
            formula,
            world,
        } => {
            let m = load_model(model)?;
            let f = parse_formula(formula, m.vocabulary())?;
            let w = world
                .clone()
                .unwrap_or_else(|| m.name(m.root()).to_string());
            let v = modal_homotopy::formula::eval(&f, &m, &w)?;
            Outcome::new(
                v,
                format!("{f} at {w}: {v}"),
                json!({ "formula": f.to_string(), "world": w, "holds": v }),
            )
        }
        Command::Unravel { model, k } => {
            let t = unravel(&load_model(model)?, *k)?;
            let m = t.model();
            let text = format!(
                "{} nodes, height {}\n{}",
                t.len(),
                t.height(),
                model_to_dot(m, "unravelling")
            );
            Outcome::new(true, text, model_to_value(m)).with_dot(model_to_dot(m, "unravelling"))
        }
        Command::CheckMorphism { morphism, class } => {
            let f = io::load_morphism(morphism)
                .with_context(|| format!("reading {}", morphism.display()))?;
            let verdicts = [
                ("homomorphism", f.is_homomorphism()),
                ("pathwise_embedding", f.is_pathwise_embedding()),
                ("embedding", f.is_embedding()),
                ("p_morphism", f.is_p_morphism()),
                ("injective", f.is_injective()),
                ("surjective", f.is_surjective()),
            ];
            let verdict = match class {
                None => true,
                Some(MorphismClass::Homomorphism) => verdicts[0].1,
                Some(MorphismClass::PathwiseEmbedding) => verdicts[1].1,
                Some(MorphismClass::Embedding) => verdicts[2].1,
                Some(MorphismClass::PMorphism) => verdicts[3].1,
            };
            let mut text: Vec<String> = verdicts
                .iter()
                .map(|(n, v)| format!("{n}: {}", yes_no(*v)))
                .collect();
            if let Some(fail) = f.back_condition_failure() {
                text.push(format!("back condition fails: {fail:?}"));
            }
            let json = Value::Object(
                verdicts
                    .iter()
                    .map(|(n, v)| (n.to_string(), json!(v)))
                    .collect(),
            );
            Outcome::new(verdict, text.join("\n"), json)
        }
        Command::Factorize { morphism, k } => {
            let f = io::load_morphism(morphism)
                .with_context(|| format!("reading {}", morphism.display()))?;
            let fac = factorize(&f, *k)?;
            let text = format!(
                "apex has {} nodes\nj: {:?}\nt: {:?}",
                fac.apex.len(),
                fac.j.to_map(),
                fac.t.to_map()
            );
            let json = json!({
                "apex": model_to_value(fac.apex.model()),
                "j": fac.j.to_map(),
                "t": fac.t.to_map(),
            });
            Outcome::new(true, text, json).with_dot(factorization_to_dot(&fac))
        }
        Command::Kbisim { a, b, k } => {
            let v = graded_bisimilar(&load_model(a)?, &load_model(b)?, *k);
            Outcome::new(
                v,
                format!("{k}-bisimilar: {}", yes_no(v)),
                json!({ "k": k, "bisimilar": v }),
            )
        }
        Command::Bisim { a, b } => {
            let rel = bisimilar(&load_model(a)?, &load_model(b)?);
            let pairs: Vec<Value> = rel.iter().flatten().map(|(x, y)| json!([x, y])).collect();
            let text = match &rel {
                None => "not bisimilar".to_string(),
                Some(r) => format!(
                    "bisimilar; largest bisimulation:\n{}",
                    r.iter()
                        .map(|(x, y)| format!("  {x} ~ {y}"))
                        .collect::<Vec<_>>()
                        .join("\n")
                ),
            };
            Outcome::new(
                rel.is_some(),
                text,
                json!({ "bisimilar": rel.is_some(), "relation": pairs }),
            )
        }
        Command::MoritaSpan { a, b, k } => {
            match morita_span_k(&load_model(a)?, &load_model(b)?, *k)? {
                None => Outcome::new(false, "no span", json!({ "span": null })),
                Some(s) => {
                    let apex = s.apex.model();
                    let json = json!({
                        "apex": model_to_value(apex),
                        "left": s.left.to_map(),
                        "right": s.right.to_map(),
                    });
                    let text = format!(
                        "apex with {} nodes\n{}",
                        s.apex.len(),
                        model_to_dot(apex, "span")
                    );
                    Outcome::new(true, text, json).with_dot(model_to_dot(apex, "span"))
                }
            }
        }
        Command::Fibrant { document, k } => {
            let x = presheaf_of(document, *k)?;
            match fibrancy_failure(&x) {
                None => Outcome::new(true, "fibrant", json!({ "fibrant": true })),
                Some((p, q, i)) => {
                    let e = &x.elements(&p)[i];
                    Outcome::new(
                        false,
                        format!("not fibrant: `{e}` at {p} has no extension along {q}"),
                        json!({ "fibrant": false, "prefix": p.to_string(), "extension": q.to_string(), "element": e }),
                    )
                }
            }
        }
        Command::TrivialFib { morphism, k } => {
            let f: PresheafMorphism = match load_document(morphism)? {
                Document::PresheafMorphism(f) => f,
                Document::Morphism(t) => {
                    let k = match k {
                        Some(k) => *k,
                        None => {
                            let hs = as_sync_tree(t.source())?
                                .height()
                                .max(as_sync_tree(t.target())?.height());
                            hs + 1
                        }
                    };
                    tree_morphism_image(&t, k)?
                }
                _ => bail!("{} is not a morphism document", morphism.display()),
            };
            match f.trivial_fibration_failure() {
                None => Outcome::new(
                    true,
                    "trivial fibration",
                    json!({ "trivial_fibration": true }),
                )
                .with_json_extra("morphism", presheaf_morphism_to_value(&f)),
                Some(why) => Outcome::new(
                    false,
                    format!("not a trivial fibration: {why}"),
                    json!({ "trivial_fibration": false, "reason": why }),
                ),
            }
        }
        Command::Preservation {
            formula,
            models,
            random,
            seed,
        } => {
            let u = universe(models, *random, *seed)?;
            let vocab = u
                .iter()
                .fold(Vocabulary::new(["p"]), |v, m| v.union(m.vocabulary()));
            let f = parse_formula(formula, &vocab)?;
            match is_preserved_under_extensions(&f, &u)? {
                Preservation::Preserved { pairs_checked } => Outcome::new(
                    true,
                    format!("preserved along {pairs_checked} embeddings"),
                    json!({ "preserved": true, "pairs_checked": pairs_checked }),
                ),
                Preservation::Counterexample {
                    small,
                    large,
                    embedding,
                } => Outcome::new(
                    false,
                    format!(
                        "not preserved: true in\n{}but false in\n{}along {:?}",
                        to_pretty(&model_to_value(&small)),
                        to_pretty(&model_to_value(&large)),
                        embedding.to_map()
                    ),
                    json!({
                        "preserved": false,
                        "small": model_to_value(&small),
                        "large": model_to_value(&large),
                        "embedding": embedding.to_map(),
                    }),
                ),
            }
        }
        Command::ExistentialSearch {
            formula,
            k,
            models,
            random,
            seed,
            budget,
        } => {
            let u = universe(models, *random, *seed)?;
            let vocab = u
                .iter()
                .fold(Vocabulary::new(["p"]), |v, m| v.union(m.vocabulary()));
            let f = parse_formula(formula, &vocab)?;
            match find_existential_equivalent(&f, *k, &u, *budget)? {
                EquivalentSearch::Found(g) => Outcome::new(
                    true,
                    format!("{g}"),
                    json!({ "found": true, "formula": g.to_string() }),
                ),
                EquivalentSearch::NotFound { candidates } => Outcome::new(
                    false,
                    format!("none among {candidates} candidates"),
                    json!({ "found": false, "candidates": candidates, "exhausted_budget": false }),
                ),
                EquivalentSearch::BudgetExhausted { candidates } => Outcome::new(
                    false,
                    format!("budget exhausted after {candidates} candidates"),
                    json!({ "found": false, "candidates": candidates, "exhausted_budget": true }),
                ),
            }
        }
        Command::HmSection { a, b, n } => {
            let (a, b) = (load_model(a)?, load_model(b)?);
            let n = n.unwrap_or(a.len() * b.len() + 1);
            let strong = strongly_non_empty(&a, &b, n)?;
            let section = global_section(&a, &b, n)?;
            let witnesses = section.as_ref().map(|s| s.compatibility_witnesses());
            let verified = section.as_ref().map(|s| s.verify());
            let text = format!(
                "levels 1..={n}\nstrongly non-empty: {}\nglobal section: {}{}",
                yes_no(strong),
                yes_no(section.is_some()),
                match verified {
                    Some(v) => format!("\nall compatibility witnesses pass: {}", yes_no(v)),
                    None => String::new(),
                }
            );
            let json = json!({
                "levels": n,
                "strongly_non_empty": strong,
                "global_section": section.is_some(),
                "compatibility_witnesses": witnesses,
                "level_apex_sizes": section.as_ref().map(|s| s.levels.iter().map(|l| l.apex.size()).collect::<Vec<_>>()),
            });
            Outcome::new(section.is_some(), text, json)
        }
        Command::Game {
            x,
            y,
            k,
            rounds,
            spoiler,
            script,
            unchecked,
        } => {
            let (px, py) = (presheaf_of(x, *k)?, presheaf_of(y, *k)?);
            let strategy = match script {
                Some(path) => read_script(path)?,
                None => match spoiler {
                    SpoilerKind::DepthFirst => Spoiler::DepthFirst,
                    SpoilerKind::Adversarial => Spoiler::Adversarial,
                },
            };
            let t = if *unchecked {
                play_game(&px, &py, &strategy, *rounds)?
            } else {
                fibrancy_game(&px, &py, &strategy, *rounds)?
            };
            Outcome::new(
                t.duplicator_survived(),
                t.to_string(),
                serde_json::to_value(&t)?,
            )
        }
        Command::Verify { seed, criterion } => {
            let report = match criterion {
                None => verify::run_all(*seed),
                Some(id) => {
                    let c = verify::run_criterion(*id, *seed).with_context(|| {
                        format!("no criterion {id}; they run from 1 to {}", verify::CRITERIA)
                    })?;
                    verify::Report {
                        seed: *seed,
                        depth_convention: verify::depth_convention(),
                        all_passed: c.passed,
                        criteria: vec![c],
                    }
                }
            };
            let text = report
                .criteria
                .iter()
                .map(|c| c.line())
                .collect::<Vec<_>>()
                .join("\n");
            Outcome::new(report.all_passed, text, serde_json::to_value(&report)?)
        }
    })
}

fn read_script(path: &Path) -> Result<Spoiler> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let moves = v.as_array().context("a script is a JSON array of moves")?;
    let mut out = Vec::new();
    for (i, m) in moves.iter().enumerate() {
        let side = match m.get("side").and_then(Value::as_str) {
            Some("x") | Some("X") => Side::X,
            Some("y") | Some("Y") => Side::Y,
            _ => bail!("script move {i}: `side` must be \"x\" or \"y\""),
        };
        let path = label_path_from_value(
            m.get("path").unwrap_or(&Value::Null),
            &format!("[{i}].path"),
        )?;
        let element = m
            .get("element")
            .and_then(Value::as_str)
            .with_context(|| format!("script move {i}: missing `element`"))?;
        out.push((side, path, element.to_string()));
    }
    Ok(Spoiler::Scripted(out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            match cli.format {
                Format::Text => println!("{}", outcome.text),
                Format::Json => print!("{}", to_pretty(&outcome.json)),
                Format::Dot => match &outcome.dot {
                    Some(d) => print!("{d}"),
                    None => {
                        eprintln!("error: this command has no DOT output");
                        return ExitCode::from(2);
                    }
                },
            }
            if outcome.verdict {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
