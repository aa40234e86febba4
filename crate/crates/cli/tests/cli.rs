use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bipartite"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_json(args: &[&str]) -> (i32, Value, String) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = run(&full);
    let text = String::from_utf8(out.stdout).unwrap();
    let value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("bad JSON ({e}): {text}"));
    (out.status.code().unwrap(), value, text)
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

/// Every float-looking token, e.g. `0.25`, `-1e-12`, `2.5e-17`.
fn float_tokens(text: &str) -> Vec<f64> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let starts = bytes[i].is_ascii_digit()
            && (i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'.'));
        if !starts {
            i += 1;
            continue;
        }
        let begin = if i > 0 && bytes[i - 1] == b'-' {
            i - 1
        } else {
            i
        };
        let mut j = i;
        while j < bytes.len()
            && (bytes[j].is_ascii_digit()
                || bytes[j] == b'.'
                || bytes[j] == b'e'
                || (bytes[j] == b'-' && bytes[j - 1] == b'e'))
        {
            j += 1;
        }
        let token = &text[begin..j];
        if token.contains('.') || token.contains('e') {
            if let Ok(x) = token.parse::<f64>() {
                out.push(x);
            }
        }
        i = j.max(i + 1);
    }
    out
}

fn json_numbers(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => out.push(n.as_f64().unwrap()),
        Value::Array(a) => a.iter().for_each(|x| json_numbers(x, out)),
        Value::Object(o) => o.values().for_each(|x| json_numbers(x, out)),
        _ => {}
    }
}

fn assert_text_is_projection(args: &[&str]) {
    let text = String::from_utf8(run(args).stdout).unwrap();
    let (_, json, _) = run_json(args);
    let mut numbers = Vec::new();
    json_numbers(&json, &mut numbers);
    for x in float_tokens(&text) {
        let found = numbers.iter().any(|&y| y == x || y == -x);
        assert!(
            found,
            "{x} printed in text report but missing from JSON for {args:?}\n{text}"
        );
    }
}

#[test]
fn analyze_bell_is_entangled() {
    let (code, v, _) = run_json(&["analyze", "--input", &corpus("bell.json")]);
    assert_eq!(code, 1);
    assert!((f(&v["entanglement"]["total"]) - 0.25).abs() < 1e-12);
    assert_eq!(v["separability"]["separable"], false);
    assert_eq!(v["separability"]["witness"], "1,2,1,2");
    assert!(v.get("factorization").is_none());
    assert!(v.get("timings_ms").is_none());
}

#[test]
fn analyze_product_prints_factorization() {
    let out = run(&["analyze", "--input", &corpus("product_2x2.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("verdict: separable"));
    assert!(text.contains("factorization: a = ["));
    let (_, v, _) = run_json(&["analyze", "--input", &corpus("product_2x2.json")]);
    assert_eq!(v["factorization"]["a"].as_array().unwrap().len(), 2);
    assert!(f(&v["factorization"]["residual"]) < 1e-12);
}

#[test]
fn analyze_reports_top_parameters_or_all() {
    let input = corpus("maxent_3x3.json");
    let (_, v, _) = run_json(&["analyze", "--input", &input, "--top", "2"]);
    assert_eq!(v["entanglement"]["params"].as_array().unwrap().len(), 2);
    assert_eq!(v["entanglement"]["param_count"], 9);
    let (_, v, _) = run_json(&["analyze", "--input", &input, "--all-params"]);
    let params = v["entanglement"]["params"].as_array().unwrap();
    assert_eq!(params.len(), 9);
    let values: Vec<f64> = params.iter().map(|p| f(&p["value"])).collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn json_reports_are_byte_identical() {
    for args in [
        vec![
            "analyze",
            "--input",
            &corpus("bell.json"),
            "--ppt",
            "--chsh",
            "--budget",
            "3",
            "--seed",
            "4",
        ],
        vec![
            "sweep", "--n", "2", "--m", "3", "--count", "20", "--seed", "5",
        ],
        vec!["maxent", "--n", "2", "--m", "5", "--seed", "8"],
    ] {
        let (_, _, first) = run_json(&args);
        let (_, _, second) = run_json(&args);
        assert_eq!(first, second, "{args:?}");
        assert!(first.ends_with('\n'));
    }
}

#[test]
fn timings_only_with_flag() {
    let (_, v, _) = run_json(&["analyze", "--input", &corpus("bell.json"), "--timings"]);
    assert!(v["timings_ms"]["separability"].is_number());
}

#[test]
fn ppt_bell_and_product() {
    let (code, v, _) = run_json(&["ppt", "--input", &corpus("bell.json")]);
    assert_eq!(code, 1);
    let eig: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(f).collect();
    for (got, want) in eig.iter().zip([0.5, 0.5, 0.5, -0.5]) {
        assert!((got - want).abs() < 1e-10);
    }
    let (code, v, _) = run_json(&["ppt", "--input", &corpus("product_3x3.json"), "--side", "b"]);
    assert_eq!(code, 0);
    let eig: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(f).collect();
    assert_eq!(eig.len(), 9);
    assert!((eig[0] - 1.0).abs() < 1e-10 && eig[1..].iter().all(|x| x.abs() < 1e-10));
    assert_eq!(v["side"], "B");
}

#[test]
fn ppt_closed_form_comparison() {
    let dir = std::env::temp_dir().join(format!("bipartite-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("two_by_four.txt");
    std::fs::write(&path, "1 2i 0 -1\n0.5 1-1i 3 0\n").unwrap();
    let p = path.display().to_string();
    let (code, v, _) = run_json(&["ppt", "--input", &p, "--normalize", "--closed-form"]);
    assert_eq!(code, 1);
    assert_eq!(v["closed_form"]["kind"], "2xm");
    assert_eq!(v["closed_form"]["values"].as_array().unwrap().len(), 8);
    assert!(f(&v["closed_form"]["max_deviation"]) < 1e-8);

    // Unnormalized input is rejected without --normalize.
    let out = run(&["ppt", "--input", &p]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&path, "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n").unwrap();
    let out = run(&["ppt", "--input", &p, "--normalize", "--closed-form"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn chsh_violation_exit_codes() {
    let (code, v, _) = run_json(&[
        "chsh",
        "--input",
        &corpus("bell.json"),
        "--budget",
        "5",
        "--grid",
        "6",
    ]);
    assert_eq!(code, 1);
    assert!((f(&v["achieved"]) - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-6);
    assert!(f(&v["grid"]["value"]) <= f(&v["achieved"]) + 1e-9);
    let (code, v, _) = run_json(&[
        "chsh",
        "--input",
        &corpus("product_2x2.json"),
        "--budget",
        "5",
    ]);
    assert_eq!(code, 0);
    assert!(f(&v["achieved"]) <= 2.0 + 1e-9);
    let (code, v, _) = run_json(&[
        "chsh",
        "--input",
        &corpus("maxent_3x3.json"),
        "--selector",
        "1,2,1,2",
        "--budget",
        "5",
    ]);
    assert_eq!(code, 1);
    assert!((f(&v["closed_form_max"]) - 4.0 / 3.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    assert_eq!(
        run(&["chsh", "--input", &corpus("maxent_3x3.json")])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["chsh", "--input", &corpus("bell.json"), "--selector", "1,2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn maxent_generates_and_certifies() {
    let dir = std::env::temp_dir().join(format!("bipartite-maxent-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("state.json").display().to_string();
    let (code, v, _) = run_json(&[
        "maxent", "--n", "3", "--m", "4", "--seed", "1", "--output", &path,
    ]);
    assert_eq!(code, 0);
    assert!((f(&v["e_total"]) - 1.0 / 3.0).abs() < 1e-10);
    assert_eq!(v["certified"], true);
    let (code, v, _) = run_json(&["maxent", "--input", &path]);
    assert_eq!(code, 0);
    assert_eq!(v["rows"], 3);

    let (code, v, _) = run_json(&["maxent", "--input", &corpus("product_3x3.json")]);
    assert_eq!(code, 1);
    assert_eq!(v["certified"], false);
    assert_eq!(run(&["maxent", "--n", "3"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_reports_oracle_agreement() {
    let (code, v, _) = run_json(&[
        "sweep", "--n", "4", "--m", "4", "--count", "500", "--seed", "9",
    ]);
    assert_eq!(code, 0);
    let checks = v["checks"].as_array().unwrap();
    let gram = checks
        .iter()
        .find(|c| c["name"] == "e_total_vs_gram_relative")
        .unwrap();
    assert!(f(&gram["worst"]) <= 1e-10);
    assert_eq!(gram["samples"], 500);
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn sweep_covers_chsh_on_qubit_pairs() {
    let (code, v, _) = run_json(&[
        "sweep",
        "--n",
        "2",
        "--m",
        "2",
        "--count",
        "10",
        "--chsh-count",
        "3",
        "--budget",
        "5",
    ]);
    assert_eq!(code, 0);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for want in [
        "chsh_optimizer_gap",
        "grid_exceeds_optimizer",
        "closed_form_spectrum",
        "two_row_identity_relative",
    ] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
}

#[test]
fn verify_passes_on_golden_corpus() {
    let out = run(&["verify", "--count", "50"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("zero_column_3x3.json: reduces to 3x2 without zeros"));
    let dir = corpus("");
    assert_eq!(
        run(&["verify", "--count", "0", "--corpus", &dir])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn errors_exit_with_two() {
    let out = run(&["analyze", "--input", "/nonexistent/state.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
    assert!(out.stdout.is_empty());

    let dir = std::env::temp_dir().join(format!("bipartite-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"rows": 2, "cols": 2, "data": [[1, 0]]}"#).unwrap();
    assert_eq!(
        run(&["analyze", "--input", &path.display().to_string()])
            .status
            .code(),
        Some(2)
    );
    std::fs::write(&path, "1 2 / 3").unwrap();
    assert_eq!(
        run(&["analyze", "--input", &path.display().to_string()])
            .status
            .code(),
        Some(2)
    );
    std::fs::remove_dir_all(&dir).unwrap();

    assert_eq!(run(&["analyze"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "analyze",
            "--input",
            &corpus("bell.json"),
            "--format",
            "xml"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["sweep", "--n", "0", "--m", "2"]).status.code(),
        Some(2)
    );
}

#[test]
fn text_reports_are_projections_of_json() {
    assert_text_is_projection(&[
        "analyze",
        "--input",
        &corpus("bell.json"),
        "--ppt",
        "--chsh",
        "--budget",
        "2",
    ]);
    assert_text_is_projection(&[
        "analyze",
        "--input",
        &corpus("product_3x3.json"),
        "--all-params",
    ]);
    assert_text_is_projection(&[
        "ppt",
        "--input",
        &corpus("zero_column_3x3.json"),
        "--closed-form",
    ]);
    assert_text_is_projection(&[
        "chsh",
        "--input",
        &corpus("bell.json"),
        "--budget",
        "2",
        "--grid",
        "4",
    ]);
    assert_text_is_projection(&["maxent", "--input", &corpus("maxent_3x3.json")]);
    assert_text_is_projection(&["sweep", "--n", "2", "--m", "3", "--count", "10"]);
}
