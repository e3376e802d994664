use std::path::Path;
use std::process::{Command, Output};

fn regionbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regionbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(out: &Path, kind: &str, seed: &str) {
    let o = regionbench(&["gen-proxy", "--synthetic", "48x32x3", "--kind", kind, "--seed", seed, "--out", s(out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_check_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    gen(&corpus, "reveal", "3");
    gen(&corpus, "expand", "4");
    gen(&corpus, "reconstruct", "5");
    let cases: Vec<_> = std::fs::read_dir(&corpus).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(cases.len(), 5);
    for c in &cases {
        let o = regionbench(&["check-case", s(c)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }

    let one = dir.path().join("one.json");
    let four = dir.path().join("four.json");
    for (out, w) in [(&one, "1"), (&four, "4")] {
        let o = regionbench(&["eval", "--cases", s(&corpus), "--out", s(out), "--workers", w]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&one).unwrap();
    assert_eq!(text, std::fs::read_to_string(&four).unwrap());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["case_count"], 5);
    assert_eq!(v["backends"]["perceptual"], "reference-perceptual");
    assert_eq!(v["aggregate"]["r_ghost"]["count"], 2);
    let ghost = v["cases"].as_array().unwrap().iter().find(|c| c["case_id"] == "reveal-3-ghost_copy").unwrap();
    assert_eq!(ghost["metrics"]["r_ghost"].as_f64(), Some(1.0));

    let csv_out = dir.path().join("report.csv");
    let o = regionbench(&["eval", "--cases", s(&corpus), "--out", s(&csv_out), "--format", "csv"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&csv_out).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().last().unwrap().starts_with("aggregate,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    gen(&corpus, "reconstruct", "1");

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"sigma": -1}"#).unwrap();
    let out = dir.path().join("r.json");
    let o = regionbench(&["eval", "--cases", s(&corpus), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = regionbench(&["eval", "--cases", s(&corpus), "--config", s(&dir.path().join("missing.json")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    // a second, broken case: its preserve masks are missing
    gen(&corpus, "reconstruct", "2");
    std::fs::remove_dir_all(corpus.join("reconstruct-2-reconstruct/masks/preserve")).unwrap();
    let o = regionbench(&["eval", "--cases", s(&corpus), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["failed_cases"], 1);
    assert_eq!(v["cases"][0]["status"], "ok");

    let o = regionbench(&["check-case", s(&corpus.join("reconstruct-2-reconstruct"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = regionbench(&["gen-proxy", "--synthetic", "8x8x2", "--kind", "sideways", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_pairs_file() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.csv");
    let mut text = String::from("pair_id,metric,m_A,m_B,votes_A,votes_B\n");
    for i in 0..15 {
        let (a, b) = if i < 11 { (0.2, 0.6) } else { (0.6, 0.2) };
        text += &format!("p{i},r_ghost,{a},{b},{},{}\n", 3 - i % 2, i % 2);
    }
    std::fs::write(&pairs, text).unwrap();
    let out = dir.path().join("validation.json");
    let o = regionbench(&["validate", "--pairs", s(&pairs), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let agreement = v[0]["agreement"]["agreement"].as_f64().unwrap();
    assert!((agreement - 11.0 / 15.0).abs() < 1e-12);
    assert_eq!(v[0]["pairs"], 15);
}
