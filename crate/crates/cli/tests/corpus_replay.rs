//! Replay the checked-in fuzz corpus seeds through the parser entry points,
//! so the seeds stay green even where cargo-fuzz is unavailable.

use std::fs;
use std::path::PathBuf;

fn corpus_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(name)
}

fn seeds(name: &str) -> Vec<(PathBuf, String)> {
    let dir = corpus_dir(name);
    let mut out = Vec::new();
    for entry in fs::read_dir(&dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())) {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        out.push((path, text));
    }
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out.sort();
    out
}

#[test]
fn graph_json_seeds() {
    for (path, text) in seeds("graph_json") {
        // must never panic; validity depends on the seed
        let _ = hardy_graph::io::load_graph(&text);
        let _ = path;
    }
}

#[test]
fn graph_roundtrip_seeds() {
    for (path, text) in seeds("graph_roundtrip") {
        let Ok(g) = hardy_graph::io::load_graph(&text) else {
            panic!("roundtrip seed must be valid: {}", path.display())
        };
        let back = hardy_graph::io::load_graph(&hardy_graph::io::save_graph(&g)).unwrap();
        assert_eq!(back, g, "{}", path.display());
    }
}

#[test]
fn vertex_function_seeds() {
    let g = hardy_graph::generate::path(4, true, false).unwrap();
    for (_, text) in seeds("vertex_function_json") {
        let _ = hardy_graph::io::parse_vertex_function(&g, &text);
    }
}

#[test]
fn family_spec_seeds() {
    for (path, text) in seeds("family_spec") {
        let spec = hardy_graph::generate::parse_generator_spec(&text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let g = hardy_graph::generate::generate(&spec).unwrap();
        assert!(g.validation_report().is_valid());
    }
}

#[test]
fn exhaustion_spec_seeds() {
    let g = hardy_graph::generate::path(6, false, false).unwrap();
    for (path, text) in seeds("exhaustion_spec") {
        hardy_graph_cli::parse_exhaustion(&g, &text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
