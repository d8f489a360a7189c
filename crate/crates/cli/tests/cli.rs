use std::path::PathBuf;
use std::process::Command;

use nfg_cli::document::{FactorGraphDoc, NfgDocument};
use nfg_cli::examples::{example, EXAMPLES};
use nfg_cli::{run, EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn documents() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("documents")
}

fn doc(name: &str) -> String {
    documents().join(name).to_string_lossy().into_owned()
}

/// Exit code, stdout and stderr of an in-process run.
fn nfg(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("nfg").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn nfg_json(args: &[&str]) -> Value {
    let (code, out, err) = nfg(args);
    assert_eq!(code, EXIT_OK, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap()
}

fn graph_documents() -> Vec<&'static str> {
    EXAMPLES
        .iter()
        .map(|e| e.1)
        .filter(|f| f.ends_with(".json") && !["fg.json", "cfg.json", "cdn.json", "fourier_spec.json"].contains(f))
        .collect()
}

fn flatten(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Array(items) => items.iter().for_each(|i| flatten(i, out)),
        Value::Number(n) => out.push(n.as_f64().unwrap()),
        other => panic!("unexpected table entry {other}"),
    }
}

fn entries(table: &Value) -> Vec<f64> {
    let mut out = Vec::new();
    flatten(&table["values"], &mut out);
    out
}

#[test]
fn shipped_documents_match_the_gallery() {
    for (name, file, _) in EXAMPLES {
        let text = std::fs::read_to_string(documents().join(file)).unwrap();
        assert_eq!(
            text,
            example(name).unwrap(),
            "{file} is stale; regenerate with `nfg gallery {name}`"
        );
    }
}

#[test]
fn documents_round_trip() {
    for file in graph_documents() {
        let text = std::fs::read_to_string(documents().join(file)).unwrap();
        let parsed = NfgDocument::parse(&text).unwrap();
        let g = parsed.to_graph().unwrap();
        assert_eq!(NfgDocument::from_graph(&g), parsed, "{file}");
        assert_eq!(parsed.to_json() + "\n", text, "{file}");
    }
}

#[test]
fn bruteforce_and_elimination_agree() {
    for file in graph_documents() {
        let brute = nfg_json(&["exterior", &doc(file), "--algo", "bruteforce"]);
        for extra in [&[][..], &["--dense"][..]] {
            let path = doc(file);
            let mut args = vec!["exterior", &path, "--algo", "eliminate"];
            args.extend_from_slice(extra);
            let elim = nfg_json(&args);
            assert_eq!(brute["table"]["axes"], elim["table"]["axes"], "{file}");
            let (a, b) = (entries(&brute["table"]), entries(&elim["table"]));
            let scale = a.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-9 * scale, "{file}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn spa_agrees_on_trees() {
    for file in ["spa_tree.json", "derivative_tree.json"] {
        let brute = entries(&nfg_json(&["exterior", &doc(file), "--algo", "bruteforce"])["table"]);
        let spa = entries(&nfg_json(&["exterior", &doc(file), "--algo", "spa"])["table"]);
        for (x, y) in brute.iter().zip(&spa) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{file}");
        }
    }
    let (code, _, err) = nfg(&["exterior", &doc("triangle.json"), "--algo", "spa"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("cycle"), "{err}");
}

#[test]
fn classification_of_shipped_models() {
    let flags = nfg_json(&["classify", &doc("fg_constrained.json")]);
    assert_eq!(flags["constrained"], true);
    assert_eq!(flags["interface_set"], serde_json::json!(["x1", "x2", "x3"]));
    let flags = nfg_json(&["classify", &doc("independence_generative.json")]);
    assert_eq!(flags["generative"], true);
    assert_eq!(flags["tree"], true);
    let flags = nfg_json(&["classify", &doc("triangle.json")]);
    assert_eq!(flags["nfg_model"], false);
}

#[test]
fn cyclic_generative_models_get_a_notice() {
    let (code, out, err) = nfg(&["classify", &doc("cfg_generative.json")]);
    assert_eq!(code, EXIT_OK);
    let flags: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(
        (flags["generative"].as_bool(), flags["tree"].as_bool()),
        (Some(true), Some(false))
    );
    assert!(err.contains("cyclic"), "{err}");
    let (_, _, err) = nfg(&["classify", &doc("independence_generative.json")]);
    assert!(err.is_empty());
}

#[test]
fn alphabet_mismatch_names_the_edge() {
    let text = std::fs::read_to_string(documents().join("four_vertex.json")).unwrap();
    let mut d = NfgDocument::parse(&text).unwrap();
    let wide = nfg_cli::document::AlphabetDoc {
        name: "wide".into(),
        kind: nfg_cli::document::AlphabetKind::Plain,
        size: Some(3),
        moduli: None,
    };
    d.alphabets.push(wide);
    let e = d.edges.iter_mut().find(|e| e.id == "s4").unwrap();
    e.alphabet = Some("wide".into());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, d.to_json()).unwrap();
    let (code, out, err) = nfg(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(out.is_empty());
    assert!(err.contains("`s4`"), "{err}");

    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(nfg(&["validate", path.to_str().unwrap()]).0, EXIT_INPUT);
    let summary = nfg_json(&["validate", &doc("four_vertex.json")]);
    assert_eq!(summary["internal_edges"], 5);
}

#[test]
fn usage_errors() {
    assert_eq!(nfg(&[]).0, EXIT_USAGE);
    assert_eq!(nfg(&["bogus"]).0, EXIT_USAGE);
    assert_eq!(
        nfg(&["exterior", &doc("triangle.json"), "--algo", "magic"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        nfg(&["infer", &doc("rejection.json"), "--evidence", "x1"]).0,
        EXIT_USAGE
    );
    let (code, out, _) = nfg(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("exterior"));
}

#[test]
fn numerical_failures() {
    let (code, _, err) = nfg(&["sample", &doc("rejection.json"), "--count", "500", "--max-rejects", "0"]);
    assert_eq!(code, EXIT_NUMERIC, "{err}");
    let path = doc("hamming_parity.json");
    let mut args = vec!["infer", &path, "--normalize"];
    let word = ["c1=1", "c2=0", "c3=0", "c4=0", "c5=0", "c6=0", "c7=0"];
    for w in &word {
        args.extend(["--evidence", w]);
    }
    let (code, _, err) = nfg(&args);
    assert_eq!(code, EXIT_NUMERIC, "{err}");
    assert!(err.contains("too small"), "{err}");
}

#[test]
fn inference_shortcuts_match_direct_answers() {
    let cases = [
        ("rejection.json", vec!["--evidence", "x1=1"]),
        ("split_interface.json", vec!["--evidence", "y=0"]),
        (
            "independence_generative.json",
            vec!["--marginalize", "x2", "--evidence", "x3=1"],
        ),
        (
            "independence_constrained.json",
            vec!["--marginalize", "x1", "--evidence", "x2=0"],
        ),
    ];
    for (file, extra) in cases {
        let path = doc(file);
        let mut args = vec!["infer", &path, "--normalize"];
        args.extend(extra.iter().copied());
        let direct = nfg_json(&args);
        args.push("--shortcut");
        let short = nfg_json(&args);
        assert!(short["shortcut"].is_string(), "{file}");
        for (x, y) in entries(&direct["table"]).iter().zip(entries(&short["table"])) {
            assert!((x - y).abs() <= 1e-9, "{file}: {x} vs {y}");
        }
        let total: f64 = entries(&short["table"]).iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn independence_verdicts() {
    let v = nfg_json(&[
        "independence",
        &doc("independence_constrained.json"),
        "--a",
        "x1",
        "--b",
        "x3",
        "--given",
        "x2",
    ]);
    assert_eq!(v["verdict"], "conditional");
    assert!(v["conditional_residual"].as_f64().unwrap() <= 1e-12);
    let v = nfg_json(&[
        "independence",
        &doc("independence_generative.json"),
        "--a",
        "x1",
        "--b",
        "x3",
        "--given",
        "x2",
    ]);
    assert_eq!(v["verdict"], "marginal");
    assert!(v["marginal_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn sampling_is_seeded_and_close() {
    let args = ["sample", &doc("rejection.json"), "--seed", "11", "--count", "20000"];
    let a = nfg_json(&args);
    assert_eq!(a, nfg_json(&args));
    assert!(a["total_variation"].as_f64().unwrap() < 0.02);
    assert!(a["acceptance_rate"].as_f64().unwrap() < 1.0);
    let g = nfg_json(&[
        "sample",
        &doc("independence_generative.json"),
        "--count",
        "20000",
        "--mode",
        "generative",
    ]);
    assert_eq!(g["acceptance_rate"], 1.0);
    assert!(g["total_variation"].as_f64().unwrap() < 0.02);
}

#[test]
fn conversions_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, file) in [("fg", "fg.json"), ("cfg", "cfg.json"), ("cdn", "cdn.json")] {
        let (code, nfg_text, err) = nfg(&["convert", &doc(file), "--kind", kind]);
        assert_eq!(code, EXIT_OK, "{kind}: {err}");
        let path = dir.path().join(format!("{kind}.json"));
        std::fs::write(&path, &nfg_text).unwrap();
        let (code, back, err) = nfg(&[
            "convert",
            path.to_str().unwrap(),
            "--kind",
            kind,
            "--direction",
            "from-nfg",
        ]);
        assert_eq!(code, EXIT_OK, "{kind}: {err}");
        let original = FactorGraphDoc::parse(&std::fs::read_to_string(documents().join(file)).unwrap()).unwrap();
        let back = FactorGraphDoc::parse(&back).unwrap();
        let (a, b) = (original.to_desc().unwrap(), back.to_desc().unwrap());
        let (fa, fb) = (a.global_function().unwrap(), b.global_function().unwrap());
        let fb = fb.permute(&fa.labels()).unwrap();
        assert!(fb.rel_diff(&fa).unwrap() <= 1e-9, "{kind}");
    }
}

#[test]
fn holographic_transform_preserves_the_exterior() {
    let r = nfg_json(&[
        "transform",
        &doc("four_vertex.json"),
        "--spec",
        &doc("fourier_spec.json"),
        "--compare",
    ]);
    assert!(r["relative_difference"].as_f64().unwrap() <= 1e-9);
    let (code, text, _) = nfg(&[
        "transform",
        &doc("four_vertex.json"),
        "--spec",
        &doc("fourier_spec.json"),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_ne!(
        text,
        std::fs::read_to_string(documents().join("four_vertex.json")).unwrap()
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transformed.json");
    std::fs::write(&path, &text).unwrap();
    let before = entries(&nfg_json(&["exterior", &doc("four_vertex.json")])["table"]);
    let after = entries(&nfg_json(&["exterior", path.to_str().unwrap()])["table"]);
    for (x, y) in before.iter().zip(&after) {
        assert!((x - y).abs() <= 1e-9 * x.abs(), "{x} vs {y}");
    }
}

#[test]
fn hamming_codes() {
    let g = nfg_json(&["codes", &doc("hamming.txt"), "--words"]);
    assert_eq!(g["weight_distribution"], serde_json::json!([1, 0, 0, 7, 7, 0, 0, 1]));
    let h = nfg_json(&["codes", &doc("hamming_parity.txt"), "--words"]);
    assert_eq!(h["words"], g["words"]);
    let d = nfg_json(&["codes", &doc("hamming_parity.txt"), "--words", "--dual"]);
    assert_eq!(d["weight_distribution"], serde_json::json!([1, 0, 0, 0, 7, 0, 0, 0]));
    let (code, text, _) = nfg(&["codes", &doc("hamming_parity.txt"), "--dual"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        text,
        std::fs::read_to_string(documents().join("hamming_dual.json")).unwrap()
    );
}

#[test]
fn binary_end_to_end() {
    let out = Command::new(env!("CARGO_BIN_EXE_nfg"))
        .args(["exterior", &doc("four_vertex.json"), "--digits", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(entries(&v["table"]), [340.0, 386.0, 384.0, 402.0]);
    let out = Command::new(env!("CARGO_BIN_EXE_nfg")).arg("nope").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}
