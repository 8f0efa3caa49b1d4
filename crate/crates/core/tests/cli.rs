use std::path::Path;
use std::process::{Command, Output};

fn shadowlab(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shadowlab"));
    cmd.args(args).env_remove("OUTPUT_DIR");
    if let Some(p) = out_env {
        cmd.env("OUTPUT_DIR", p);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn list_plain_and_json() {
    let o = shadowlab(&["list"], None);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 10);
    let o = shadowlab(&["list", "--json"], None);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 10);
    assert!(v[0]["name"].is_string());
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&shadowlab(&["frobnicate"], None)), 64);
    assert_eq!(code(&shadowlab(&["run"], None)), 64);
    assert_eq!(code(&shadowlab(&["run", "no-such-scenario"], None)), 64);
    assert_eq!(code(&shadowlab(&["plot", "x.csv", "--kind", "pie"], None)), 64);
}

#[test]
fn run_writes_report_and_respects_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = shadowlab(&["run", "translation-adversarial", "--seed", "9"], Some(dir.path()));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("translation-adversarial/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "matches-paper");
    assert_eq!(report["seed"], 9);
    assert!(report.get("wall_time").is_none());

    let explicit = tempfile::tempdir().unwrap();
    let out = explicit.path().to_str().unwrap();
    let o = shadowlab(&["run", "translation-adversarial", "--out", out], Some(dir.path()));
    assert_eq!(code(&o), 0);
    assert!(explicit.path().join("translation-adversarial/certificate.json").exists());
}

#[test]
fn config_file_contradiction_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // A tiny jump on a short window is shadowed, which the verdict flags.
    let cfg = serde_json::json!({
        "name": "short-translation",
        "seed": 1,
        "experiment": {
            "kind": "adversarial",
            "map": {"kind": "diagonal_affine", "scales": [1.0, 1.0], "translation": [1.0, 0.0]},
            "epsilon": {"name": "decaying", "expr": {"op": "min", "args": [
                {"op": "const", "args": [1.0]},
                {"op": "recip", "args": [{"op": "add", "args": [{"op": "const", "args": [1.0]}, {"op": "norm", "args": ["sup"]}]}]}
            ]}},
            "forward_seed": [0.0, 0.0],
            "direction": [0.0, 1.0],
            "jump": {"rule": "fixed", "q": 0.001},
            "window": 8,
            "window_limit": 8,
            "oracle": null
        }
    });
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let out = dir.path().join("out");
    let o = shadowlab(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 2, "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"experiment\": {\"kind\": \"nope\"}\n}\n").unwrap();
    let o = shadowlab(&["run", path.to_str().unwrap()], None);
    assert_eq!(code(&o), 64);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn plot_renders_svg_and_rejects_wrong_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = shadowlab(&["run", "saddle-not-tsp", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(code(&o), 0);
    let csv = dir.path().join("saddle-not-tsp/boxwidth.csv");
    std::fs::remove_file(dir.path().join("saddle-not-tsp/boxwidth.boxwidth.svg")).unwrap();
    let o = shadowlab(&["plot", csv.to_str().unwrap(), "--kind", "boxwidth"], None);
    assert_eq!(code(&o), 0);
    let svg = std::fs::read_to_string(dir.path().join("saddle-not-tsp/boxwidth.boxwidth.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let o = shadowlab(&["plot", csv.to_str().unwrap(), "--kind", "orbit2d"], None);
    assert_eq!(code(&o), 64);
}

#[test]
fn window_override_changes_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = shadowlab(
        &["run", "translation-adversarial", "--window", "12", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let cfg: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("translation-adversarial/config.json")).unwrap()).unwrap();
    assert_eq!(cfg["experiment"]["window"], 12);
}
