use std::path::Path;
use std::process::{Command, Output};

fn dpcr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpcr")).args(args).output().expect("spawn dpcr")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let o = dpcr(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(dpcr(&["--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let o = dpcr(&["register", "--source", "/nonexistent.xyz", "--target", "/nonexistent.xyz", "--correspondences", "/x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn synth_train_register_bench_flow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.toml");
    std::fs::write(&cfg, "[pairs]\npair_count = 8\n[pairs.scene]\npoints_per_view = 600\ninlier_ratio = 0.1\n").unwrap();
    let base = ["--config", p(&cfg), "--seed", "3"];
    let run = |extra: &[&str]| dpcr(&[&base[..], extra].concat());

    stdout(&run(&["synth", "--out", p(&d.join("pairs"))]));
    stdout(&run(&["dataset-gen", "--pairs", p(&d.join("pairs")), "--out", p(&d.join("data"))]));
    stdout(&run(&["train", "--dataset", p(&d.join("data")), "--out", p(&d.join("model.txt"))]));
    let eval = stdout(&run(&["eval-scorer", "--dataset", p(&d.join("data")), "--model", p(&d.join("model.txt"))]));
    assert!(eval.contains("accuracy"), "{eval}");

    let pair = d.join("pairs/pair-0000");
    let reg = stdout(&run(&[
        "register",
        "--source",
        p(&pair.join("source.xyz")),
        "--target",
        p(&pair.join("target.xyz")),
        "--correspondences",
        p(&pair.join("correspondences.txt")),
        "--ground-truth",
        p(&pair.join("ground_truth.txt")),
        "--model",
        p(&d.join("model.txt")),
    ]));
    let transform = reg.lines().find(|l| l.starts_with("transform ")).expect("transform line");
    assert_eq!(transform.split_whitespace().count(), 13);
    assert!(reg.lines().any(|l| l.starts_with("score ")), "{reg}");

    let report = d.join("report.json");
    let out = stdout(&dpcr(&[
        &base[..],
        &["--report", p(&report), "bench", "--pairs", p(&d.join("pairs")), "--model", p(&d.join("model.txt"))],
    ]
    .concat()));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["pair_count"], 8);
    let rr = json["rr"].as_f64().unwrap();
    assert!(out.contains(&format!("rr={rr:.4}")), "{out}");
    assert!(json.get("runtime").is_none());
}
