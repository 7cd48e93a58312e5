//! File formats. The graph schema is
//! `{"p": real, "vertices": [{"id", "m", "c"}], "edges": [{"u", "v", "b"}]}`
//! with each unordered edge listed once. Vertex-function files are flat
//! `{"id": value}` maps.

use crate::error::{Error, Result};
use crate::graph::{GraphData, ValidationReport, VertexFunction, WeightedGraph};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Serialize, Deserialize)]
struct VertexRecord {
    id: String,
    m: f64,
    c: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    u: String,
    v: String,
    b: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    p: f64,
    vertices: Vec<VertexRecord>,
    edges: Vec<EdgeRecord>,
}

/// Parse raw graph data without validating the invariants.
pub fn parse_graph_data(text: &str) -> Result<GraphData> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(GraphData {
        p: file.p,
        vertices: file.vertices.into_iter().map(|v| (v.id, v.m, v.c)).collect(),
        edges: file.edges.into_iter().map(|e| (e.u, e.v, e.b)).collect(),
    })
}

/// Parse and validate; returns the validation report on defective inputs.
pub fn load_graph(text: &str) -> std::result::Result<WeightedGraph, LoadError> {
    let data = parse_graph_data(text).map_err(LoadError::Parse)?;
    let report = crate::graph::validate(&data);
    if !report.is_structurally_valid() {
        return Err(LoadError::Invalid(report));
    }
    WeightedGraph::from_data(data).map_err(LoadError::Parse)
}

#[derive(Debug)]
pub enum LoadError {
    Parse(Error),
    Invalid(ValidationReport),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Parse(e) => write!(f, "{e}"),
            LoadError::Invalid(report) => {
                let msgs: Vec<String> =
                    report.violations.iter().map(|v| v.to_string()).collect();
                write!(f, "invalid graph: {}", msgs.join("; "))
            }
        }
    }
}

impl std::error::Error for LoadError {}

/// Serialize a graph to the schema with deterministic float formatting.
/// `load(save(g))` reproduces `g` field for field.
pub fn save_graph(g: &WeightedGraph) -> String {
    use crate::report::Rep;
    let data = g.to_data();
    let vertices: Vec<Rep> = data
        .vertices
        .iter()
        .map(|(id, m, c)| {
            Rep::map([
                ("id", Rep::Str(id.clone())),
                ("m", Rep::Num(*m)),
                ("c", Rep::Num(*c)),
            ])
        })
        .collect();
    let edges: Vec<Rep> = data
        .edges
        .iter()
        .map(|(u, v, b)| {
            Rep::map([
                ("u", Rep::Str(u.clone())),
                ("v", Rep::Str(v.clone())),
                ("b", Rep::Num(*b)),
            ])
        })
        .collect();
    Rep::map([
        ("p", Rep::Num(data.p)),
        ("vertices", Rep::List(vertices)),
        ("edges", Rep::List(edges)),
    ])
    .to_json_pretty()
}

/// Parse a vertex-function file (`{"id": value}`) against a graph.
/// Ids missing from the map read as zero; unknown ids are an error.
pub fn parse_vertex_function(g: &WeightedGraph, text: &str) -> Result<VertexFunction> {
    let map: BTreeMap<String, f64> =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    VertexFunction::from_map(g, &map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_everything() {
        let g = crate::generate::parse_generator_spec("tree:2:2:killed:p=1.5:b=0.75")
            .and_then(|s| crate::generate::generate(&s))
            .unwrap();
        let text = save_graph(&g);
        let back = load_graph(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn rejects_malformed_json() {
        assert!(load_graph("{").is_err());
        assert!(load_graph("{\"p\": 2.0}").is_err());
    }

    #[test]
    fn surfaces_validation_report() {
        let text = r#"{"p": 2.0,
            "vertices": [{"id": "a", "m": 1.0, "c": 0.0}, {"id": "b", "m": -1.0, "c": 0.0}],
            "edges": [{"u": "a", "v": "b", "b": 1.0}]}"#;
        match load_graph(text) {
            Err(LoadError::Invalid(report)) => assert_eq!(report.violations.len(), 1),
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn vertex_function_from_json() {
        let g = crate::generate::path(3, false, false).unwrap();
        let f = parse_vertex_function(&g, r#"{"v0": 1.5, "v2": -2.0}"#).unwrap();
        assert_eq!(f.values(), &[1.5, 0.0, -2.0]);
        assert!(parse_vertex_function(&g, r#"{"zz": 1.0}"#).is_err());
    }
}
