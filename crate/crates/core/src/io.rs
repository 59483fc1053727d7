//! JSON documents for models, morphisms and presheaves, and DOT export.
//!
//! A model document looks like
//! `{"worlds": [..], "root": "w", "edges": [["u","v"], ..], "valuation": {"p": [..]}}`.
//! Canonical output sorts every array and pretty-prints with sorted keys.
//! Morphism documents add `map`, and `source`/`target`, each either an
//! inline model document or a path to one (relative to the morphism file).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::factorization::Factorization;
use crate::kripke::{KripkeModel, Label, TreeMorphism};
use crate::presheaf::{LabelPath, PathPresheaf, PresheafMorphism};

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn object<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| schema(at, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| schema(join(at, key), "missing field"))
}

fn join(at: &str, key: &str) -> String {
    if at.is_empty() {
        key.to_string()
    } else {
        format!("{at}.{key}")
    }
}

fn string(v: &Value, at: &str) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(at, "expected a string"))
}

fn array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(at, "expected an array"))
}

fn strings(v: &Value, at: &str) -> Result<Vec<String>> {
    array(v, at)?
        .iter()
        .enumerate()
        .map(|(i, s)| string(s, &format!("{at}[{i}]")))
        .collect()
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Reads a model document, reporting problems with their field path.
pub fn model_from_value(v: &Value, at: &str) -> Result<KripkeModel> {
    let obj = object(v, if at.is_empty() { "$" } else { at })?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "worlds" | "root" | "edges" | "valuation") {
            return Err(schema(join(at, key), "unknown field"));
        }
    }
    let worlds_at = join(at, "worlds");
    let worlds = strings(field(obj, at, "worlds")?, &worlds_at)?;
    let root = string(field(obj, at, "root")?, &join(at, "root"))?;
    let known = |w: &str| worlds.iter().any(|x| x == w);
    if let Some(i) = (1..worlds.len()).find(|&i| worlds[..i].contains(&worlds[i])) {
        return Err(schema(
            format!("{worlds_at}[{i}]"),
            format!("duplicate world `{}`", worlds[i]),
        ));
    }
    if worlds.is_empty() {
        return Err(schema(worlds_at, "a model needs at least one world"));
    }
    if !known(&root) {
        return Err(schema(join(at, "root"), format!("`{root}` is not a world")));
    }

    let edges_at = join(at, "edges");
    let mut edges = Vec::new();
    for (i, e) in array(field(obj, at, "edges")?, &edges_at)?
        .iter()
        .enumerate()
    {
        let here = format!("{edges_at}[{i}]");
        let pair = strings(e, &here)?;
        let [from, to]: [String; 2] = pair
            .try_into()
            .map_err(|_| schema(here.clone(), "an edge is a pair of world ids"))?;
        for w in [&from, &to] {
            if !known(w) {
                return Err(schema(here.clone(), format!("unknown world `{w}`")));
            }
        }
        edges.push((from, to));
    }

    let val_at = join(at, "valuation");
    let mut valuation = Vec::new();
    let val = match obj.get("valuation") {
        Some(v) => object(v, &val_at)?.clone(),
        None => Map::new(),
    };
    for (prop, holds) in &val {
        let here = join(&val_at, prop);
        let holds = strings(holds, &here)?;
        if let Some((i, w)) = holds.iter().enumerate().find(|(_, w)| !known(w)) {
            return Err(schema(
                format!("{here}[{i}]"),
                format!("unknown world `{w}`"),
            ));
        }
        valuation.push((prop.clone(), holds));
    }
    KripkeModel::new(worlds, edges, valuation, &root)
}

/// Canonical document for a model.
pub fn model_to_value(model: &KripkeModel) -> Value {
    let mut edges: Vec<[&str; 2]> = model
        .edges()
        .map(|(a, b)| [model.name(a), model.name(b)])
        .collect();
    edges.sort();
    json!({
        "worlds": model.worlds(),
        "root": model.name(model.root()),
        "edges": edges,
        "valuation": model.valuation(),
    })
}

pub fn model_from_str(text: &str) -> Result<KripkeModel> {
    model_from_value(&parse_json(text)?, "")
}

pub fn model_to_string(model: &KripkeModel) -> String {
    to_pretty(&model_to_value(model))
}

pub fn load_model(path: &Path) -> Result<KripkeModel> {
    model_from_str(&read(path)?)
}

pub fn save_model(model: &KripkeModel, path: &Path) -> Result<()> {
    write(path, &model_to_string(model))
}

fn model_or_reference(v: &Value, at: &str, base: Option<&Path>) -> Result<KripkeModel> {
    match v {
        Value::String(file) => {
            let p = PathBuf::from(file);
            let p = match base {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            };
            load_model(&p).map_err(|e| match e {
                Error::Schema { path, message } => {
                    schema(format!("{at} ({file}): {path}"), message)
                }
                other => other,
            })
        }
        other => model_from_value(other, at),
    }
}

/// Reads a morphism document; file references resolve against `base`.
pub fn morphism_from_value(v: &Value, base: Option<&Path>) -> Result<TreeMorphism> {
    let obj = object(v, "$")?;
    let source = model_or_reference(field(obj, "", "source")?, "source", base)?;
    let target = model_or_reference(field(obj, "", "target")?, "target", base)?;
    let map_obj = object(field(obj, "", "map")?, "map")?;
    let mut map = BTreeMap::new();
    for (k, v) in map_obj {
        map.insert(k.clone(), string(v, &join("map", k))?);
    }
    TreeMorphism::new(source, target, &map)
}

/// Canonical document for a morphism, with inline source and target.
pub fn morphism_to_value(f: &TreeMorphism) -> Value {
    json!({
        "source": model_to_value(f.source()),
        "target": model_to_value(f.target()),
        "map": f.to_map(),
    })
}

pub fn load_morphism(path: &Path) -> Result<TreeMorphism> {
    morphism_from_value(&parse_json(&read(path)?)?, path.parent())
}

pub fn save_morphism(f: &TreeMorphism, path: &Path) -> Result<()> {
    write(path, &to_pretty(&morphism_to_value(f)))
}

pub fn label_path_to_value(p: &LabelPath) -> Value {
    Value::Array(
        p.labels()
            .iter()
            .map(|l| Value::Array(l.props().map(|s| Value::String(s.into())).collect()))
            .collect(),
    )
}

pub fn label_path_from_value(v: &Value, at: &str) -> Result<LabelPath> {
    let labels = array(v, at)?
        .iter()
        .enumerate()
        .map(|(i, l)| strings(l, &format!("{at}[{i}]")).map(Label::from_props))
        .collect::<Result<Vec<_>>>()?;
    LabelPath::new(labels).map_err(|_| schema(at, "a path has at least one label"))
}

/// Presheaf document: `{"bound": k, "elements": [{"path", "name", "parent"}]}`
/// where a path is a list of labels and each label a list of propositions.
pub fn presheaf_to_value(x: &PathPresheaf) -> Value {
    let elements: Vec<Value> = x
        .triples()
        .into_iter()
        .map(|(path, name, parent)| {
            json!({ "path": label_path_to_value(&path), "name": name, "parent": parent })
        })
        .collect();
    json!({ "bound": x.bound(), "elements": elements })
}

pub fn presheaf_from_value(v: &Value, at: &str) -> Result<PathPresheaf> {
    let obj = object(v, if at.is_empty() { "$" } else { at })?;
    let bound = field(obj, at, "bound")?
        .as_u64()
        .ok_or_else(|| schema(join(at, "bound"), "expected a natural number"))?
        as usize;
    let el_at = join(at, "elements");
    let mut triples = Vec::new();
    for (i, e) in array(field(obj, at, "elements")?, &el_at)?
        .iter()
        .enumerate()
    {
        let here = format!("{el_at}[{i}]");
        let eo = object(e, &here)?;
        let path = label_path_from_value(field(eo, &here, "path")?, &join(&here, "path"))?;
        let name = string(field(eo, &here, "name")?, &join(&here, "name"))?;
        let parent = match eo.get("parent") {
            None | Some(Value::Null) => None,
            Some(p) => Some(string(p, &join(&here, "parent"))?),
        };
        triples.push((path, name, parent));
    }
    PathPresheaf::from_elements(bound, triples)
}

pub fn load_presheaf(path: &Path) -> Result<PathPresheaf> {
    presheaf_from_value(&parse_json(&read(path)?)?, "")
}

/// Presheaf morphism document: `{"source", "target", "components": [{"path", "map"}]}`.
pub fn presheaf_morphism_to_value(f: &PresheafMorphism) -> Value {
    let components: Vec<Value> = f
        .named_components()
        .into_iter()
        .map(|(path, map)| json!({ "path": label_path_to_value(&path), "map": map }))
        .collect();
    json!({
        "source": presheaf_to_value(f.source()),
        "target": presheaf_to_value(f.target()),
        "components": components,
    })
}

pub fn presheaf_morphism_from_value(v: &Value) -> Result<PresheafMorphism> {
    let obj = object(v, "$")?;
    let source = presheaf_from_value(field(obj, "", "source")?, "source")?;
    let target = presheaf_from_value(field(obj, "", "target")?, "target")?;
    let mut components = BTreeMap::new();
    for (i, c) in array(field(obj, "", "components")?, "components")?
        .iter()
        .enumerate()
    {
        let here = format!("components[{i}]");
        let co = object(c, &here)?;
        let path = label_path_from_value(field(co, &here, "path")?, &join(&here, "path"))?;
        let map_at = join(&here, "map");
        let mut map = BTreeMap::new();
        for (k, v) in object(field(co, &here, "map")?, &map_at)? {
            map.insert(k.clone(), string(v, &join(&map_at, k))?);
        }
        components.insert(path, map);
    }
    PresheafMorphism::from_names(source, target, &components)
}

/// What a JSON document on disk contains.
#[derive(Clone, Debug)]
pub enum Document {
    Model(KripkeModel),
    Morphism(TreeMorphism),
    Presheaf(PathPresheaf),
    PresheafMorphism(PresheafMorphism),
}

/// Loads any supported document, telling kinds apart by their keys.
pub fn load_document(path: &Path) -> Result<Document> {
    let v = parse_json(&read(path)?)?;
    let obj = object(&v, "$")?;
    if obj.contains_key("components") {
        presheaf_morphism_from_value(&v).map(Document::PresheafMorphism)
    } else if obj.contains_key("map") {
        morphism_from_value(&v, path.parent()).map(Document::Morphism)
    } else if obj.contains_key("elements") {
        presheaf_from_value(&v, "").map(Document::Presheaf)
    } else {
        model_from_value(&v, "").map(Document::Model)
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn dot_nodes(out: &mut String, model: &KripkeModel, indent: &str) {
    for w in 0..model.len() {
        let name = model.name(w);
        let label = format!("{name} {}", model.label(w));
        let extra = if w == model.root() {
            ", peripheries=2"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{indent}{} [label={}{extra}];",
            quote(name),
            quote(&label)
        );
    }
}

/// DOT digraph of a model; the root gets a doubled border.
pub fn model_to_dot(model: &KripkeModel, graph_name: &str) -> String {
    let mut out = format!("digraph {} {{\n", quote(graph_name));
    dot_nodes(&mut out, model, "  ");
    for (a, b) in model.edges() {
        let _ = writeln!(
            out,
            "  {} -> {};",
            quote(model.name(a)),
            quote(model.name(b))
        );
    }
    out.push_str("}\n");
    out
}

/// DOT digraph of the factorization apex. Nodes in the image of `j` are
/// annotated `j` with their source world, every node carries `t` and its
/// image in the target, and the edges copied in are drawn dashed.
pub fn factorization_to_dot(fac: &Factorization) -> String {
    let apex = fac.apex.model();
    let a = fac.j.source();
    let b = fac.t.target();
    let mut from_j: Vec<Option<usize>> = vec![None; apex.len()];
    for x in 0..a.len() {
        from_j[fac.j.apply(x)] = Some(x);
    }
    let mut out = String::from("digraph \"factorization\" {\n");
    for (w, source) in from_j.iter().enumerate() {
        let name = apex.name(w);
        let mut label = format!("{name} {}\\nt: {}", apex.label(w), b.name(fac.t.apply(w)));
        if let Some(x) = *source {
            let _ = write!(label, "\\nj: {}", a.name(x));
        }
        let extra = if w == apex.root() {
            ", peripheries=2"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  {} [label=\"{}\"{extra}];",
            quote(name),
            label.replace('"', "\\\"")
        );
    }
    for (u, v) in apex.edges() {
        let style = match (from_j[u], from_j[v]) {
            (Some(_), Some(_)) => "label=\"j\"",
            _ => "label=\"t\", style=dashed",
        };
        let _ = writeln!(
            out,
            "  {} -> {} [{style}];",
            quote(apex.name(u)),
            quote(apex.name(v))
        );
    }
    out.push_str("}\n");
    out
}
