//! JSON file formats.
//!
//! A metric file is `{"labels": [...], "d": [[...], ...]}` and a graph file
//! is `{"labels": [...], "edges": [{"u": .., "v": .., "w": ..}, ...]}`.
//! Scalars may be JSON numbers, decimal strings or `"p/q"` strings; for the
//! rational backend numbers are read from their decimal text, exactly.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::metric::MetricSpace;
use crate::numeric::{Scalar, Tolerance};

fn malformed(what: &str, v: &Value) -> Error {
    Error::Parse {
        literal: truncate(&v.to_string()),
        reason: what.to_string(),
    }
}

fn truncate(s: &str) -> String {
    if s.chars().count() > 60 {
        format!("{}…", s.chars().take(60).collect::<String>())
    } else {
        s.to_string()
    }
}

pub fn parse_scalar<T: Scalar>(v: &Value) -> Result<T> {
    match v {
        Value::Number(n) => T::parse_literal(&n.to_string()),
        Value::String(s) => T::parse_literal(s),
        _ => Err(malformed("expected a number or a numeric string", v)),
    }
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        literal: truncate(text.lines().next().unwrap_or("")),
        reason: e.to_string(),
    })
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text)
}

fn labels_field(obj: &Value) -> Result<Option<Vec<String>>> {
    match obj.get("labels") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .map(|l| match l {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                other => Err(malformed("labels must be strings", other)),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(other) => Err(malformed("labels must be an array", other)),
    }
}

fn label_of(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(malformed("vertex must be a string", other)),
    }
}

/// Parses and validates a metric document.
pub fn metric_from_json<T: Scalar>(doc: &Value, tol: Tolerance) -> Result<MetricSpace<T>> {
    let rows = doc
        .get("d")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing distance matrix \"d\"", doc))?;
    let rows = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| malformed("each row of \"d\" must be an array", r))?
                .iter()
                .map(parse_scalar)
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = labels_field(doc)?.unwrap_or_else(|| (0..rows.len()).map(|k| format!("v{k}")).collect());
    MetricSpace::validate(labels, rows, tol)
}

/// Parses a graph document. Without `labels`, vertices are listed in order
/// of first appearance.
pub fn graph_from_json<T: Scalar>(doc: &Value) -> Result<WeightedGraph<T>> {
    let items = doc
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing edge list \"edges\"", doc))?;
    let edges = items
        .iter()
        .map(|e| {
            let field = |k: &str| e.get(k).ok_or_else(|| malformed(&format!("edge without \"{k}\""), e));
            Ok(Edge::new(label_of(field("u")?)?, label_of(field("v")?)?, parse_scalar(field("w")?)?))
        })
        .collect::<Result<Vec<Edge<T>>>>()?;
    let labels = match labels_field(doc)? {
        Some(l) => l,
        None => {
            let mut l: Vec<String> = Vec::new();
            for e in &edges {
                for v in [&e.u, &e.v] {
                    if !l.contains(v) {
                        l.push(v.clone());
                    }
                }
            }
            l
        }
    };
    WeightedGraph::build(labels, &edges)
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, contents).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
