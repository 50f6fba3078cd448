//! JSON hypergraph files:
//! `{"n_qudits": N, "edges": [[a, b, ...], ...], "meta": {...}}`.
//!
//! Qudit `a` is the `a`-th tensor factor counted from the least significant
//! end when states are indexed as integers (little-endian).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{HypergraphError, InteractionHypergraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypergraphFile {
    pub n_qudits: usize,
    pub edges: Vec<Vec<usize>>,
    #[serde(default = "empty_meta")]
    pub meta: Value,
}

fn empty_meta() -> Value {
    Value::Object(Default::default())
}

impl HypergraphFile {
    pub fn new(h: &InteractionHypergraph, meta: Value) -> Self {
        Self {
            n_qudits: h.n_qudits(),
            edges: h.edges().to_vec(),
            meta,
        }
    }

    pub fn to_hypergraph(&self) -> Result<InteractionHypergraph, HypergraphError> {
        InteractionHypergraph::new(self.n_qudits, self.edges.clone())
    }
}

fn format_err(location: impl Into<String>, message: impl Into<String>) -> HypergraphError {
    HypergraphError::Format {
        location: location.into(),
        message: message.into(),
    }
}

/// Parses a hypergraph file. Errors name the offending line/column for
/// syntax problems and the JSON field (e.g. `edges[3][1]`) for semantic ones.
pub fn parse_hypergraph(text: &str) -> Result<(InteractionHypergraph, Value), HypergraphError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| format_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| format_err("<root>", "expected a JSON object"))?;
    let n_qudits = obj
        .get("n_qudits")
        .ok_or_else(|| format_err("n_qudits", "missing field"))?
        .as_u64()
        .ok_or_else(|| format_err("n_qudits", "expected a nonnegative integer"))?
        as usize;
    let edges_val = obj
        .get("edges")
        .ok_or_else(|| format_err("edges", "missing field"))?
        .as_array()
        .ok_or_else(|| format_err("edges", "expected an array of arrays"))?;
    let mut edges = Vec::with_capacity(edges_val.len());
    for (i, e) in edges_val.iter().enumerate() {
        let arr = e
            .as_array()
            .ok_or_else(|| format_err(format!("edges[{i}]"), "expected an array"))?;
        let mut edge = Vec::with_capacity(arr.len());
        for (j, a) in arr.iter().enumerate() {
            let a = a.as_u64().ok_or_else(|| {
                format_err(format!("edges[{i}][{j}]"), "expected a nonnegative integer")
            })? as usize;
            if a >= n_qudits {
                return Err(format_err(
                    format!("edges[{i}][{j}]"),
                    format!("qudit index {a} out of range for n_qudits = {n_qudits}"),
                ));
            }
            edge.push(a);
        }
        edges.push(edge);
    }
    let meta = obj.get("meta").cloned().unwrap_or_else(empty_meta);
    let h = InteractionHypergraph::new(n_qudits, edges).map_err(|e| match e {
        HypergraphError::EmptyEdge { edge } => format_err(format!("edges[{edge}]"), "empty edge"),
        HypergraphError::RepeatedIndex { edge, index } => {
            format_err(format!("edges[{edge}]"), format!("qudit {index} repeated"))
        }
        other => other,
    })?;
    Ok((h, meta))
}

pub fn load_hypergraph(path: &Path) -> Result<(InteractionHypergraph, Value), HypergraphError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format_err(path.display().to_string(), e.to_string()))?;
    parse_hypergraph(&text).map_err(|e| match e {
        HypergraphError::Format { location, message } => {
            format_err(format!("{}: {location}", path.display()), message)
        }
        other => other,
    })
}
