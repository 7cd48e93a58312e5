//! End-to-end tests of the command-line surface: exit codes, file
//! round-trips, deterministic output, and the CSV rendering.

use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hardygraph")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_clean_graph_exits_zero() {
    let dir = std::env::temp_dir().join("hg_cli_valid");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("two.json");
    std::fs::write(
        &path,
        r#"{"p": 2.0,
            "vertices": [{"id": "1", "m": 1.0, "c": 0.0}, {"id": "2", "m": 1.0, "c": 0.0}],
            "edges": [{"u": "1", "v": "2", "b": 1.0}]}"#,
    )
    .unwrap();
    let out = run(&["validate", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("\"violations\": []"));
}

#[test]
fn validate_defective_graph_exits_one() {
    let dir = std::env::temp_dir().join("hg_cli_defect");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{"p": 2.0,
            "vertices": [{"id": "1", "m": 1.0, "c": 0.0}, {"id": "2", "m": -1.0, "c": 0.0}],
            "edges": [{"u": "1", "v": "2", "b": 1.0}]}"#,
    )
    .unwrap();
    let out = run(&["validate", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unparseable_input_exits_two() {
    let dir = std::env::temp_dir().join("hg_cli_parse");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.json");
    std::fs::write(&path, "{not json").unwrap();
    let out = run(&["hardy", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["hardy", "--generate", "noodle:4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["hardy"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hardy_dirichlet_path_matches_eigenvalue() {
    let out = run(&["hardy", "--generate", "path:3:kill=both"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let expect = 2.0 - std::f64::consts::SQRT_2;
    let lambda = extract_number(&text, "\"lambda0\": ");
    assert!((lambda - expect).abs() < 1e-8, "{lambda} vs {expect}");
}

fn extract_number(text: &str, key: &str) -> f64 {
    let at = text.find(key).unwrap_or_else(|| panic!("missing {key}"));
    let rest = &text[at + key.len()..];
    let end = rest.find([',', '\n', '}']).unwrap();
    rest[..end].trim().parse().expect("numeric field")
}

#[test]
fn graph_file_round_trip_is_exact() {
    let spec = "tree:3:2:killed:p=1.5:b=0.7:m=1.3";
    let g = hardy_graph::generate::generate(
        &hardy_graph::generate::parse_generator_spec(spec).unwrap(),
    )
    .unwrap();
    let back = hardy_graph_cli::graph_round_trip(&g).unwrap();
    assert_eq!(back, g);
}

#[test]
fn fixed_seed_reports_are_byte_identical() {
    let args = ["mazya-check", "--generate", "path:4:kill=left:p=3", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_output_has_stable_rows() {
    let args = [
        "energy",
        "--generate",
        "path:2",
        "--phi",
        "indicator:v0",
        "--output",
        "csv",
    ];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("instance,quantity,value\n"));
    assert!(text.contains("results.total,1.0000000000000000e0"));
    let again = run(&args);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn out_file_flag_writes_report() {
    let dir = std::env::temp_dir().join("hg_cli_out");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = run(&[
        "energy",
        "--generate",
        "path:2",
        "--out-file",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.contains("\"subcommand\": \"energy\""));
}

#[test]
fn exhaustion_specs_parse() {
    for spec in ["prefix:1,2,3", "balls:v2:0,1", "sets:v0;v0|v1"] {
        let out = run(&[
            "lambda-infty",
            "--generate",
            "path:6:kill=both",
            "--exhaustion",
            spec,
        ]);
        assert_eq!(out.status.code(), Some(0), "spec {spec}");
    }
    let out = run(&[
        "lambda-infty",
        "--generate",
        "path:6:kill=both",
        "--exhaustion",
        "bogus:1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nullseq_line_truncation_energies() {
    // symmetric segment, ends outside the plan union are pinned to zero;
    // stage energies are the two-sided tents
    let out = run(&[
        "nullseq",
        "--generate",
        "path:9",
        "--exhaustion",
        "balls:v4:0,1,3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let at = text.find("\"energies\"").unwrap();
    let seg = &text[at..at + 200];
    // N = 4 (center to pinned end), radii 0,1,3 -> 2/4, 2/3, 2/1
    assert!(seg.contains("5.0000000000000"), "{seg}");
}

#[test]
fn gst_variant_with_unit_function_matches_general_bounds() {
    let base = [
        "cheeger-bounds",
        "--generate",
        "tree:2:4:killed",
        "--subset-cap",
        "8",
        "--connected-only",
        "--admissible",
        "interior",
    ];
    let general = run(&[&base[..], &["--variant", "general"]].concat());
    let gst = run(&[&base[..], &["--variant", "gst", "--u", "const:1"]].concat());
    assert_eq!(general.status.code(), Some(0));
    assert_eq!(gst.status.code(), Some(0));
    let pick = |s: &str| -> Vec<String> {
        s.lines()
            .skip_while(|l| !l.contains("\"assertions\""))
            .filter(|l| l.contains("cheeger_"))
            .map(|l| l.trim().to_string())
            .collect()
    };
    let a = pick(&stdout(&general));
    let b = pick(&stdout(&gst));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
