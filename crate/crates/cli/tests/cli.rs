use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ehmec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehmec"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn fixture() -> String {
    configs().join("fixture_k1n2.json").display().to_string()
}

#[test]
fn solve_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = ehmec(&[
        "solve",
        "--instance",
        &fixture(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["scheme"], "proposed");
    assert_eq!(v["converged"], true);
    assert!(v["solver"]["relative_gap"].as_f64().unwrap() <= 1e-3);
    assert!(v["solver"]["users"][0].get("dual_trace").is_none());
}

#[test]
fn solve_trace_and_schemes() {
    let o = ehmec(&["solve", "--instance", &fixture(), "--trace"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!v["solver"]["users"][0]["dual_trace"]
        .as_array()
        .unwrap()
        .is_empty());
    for scheme in ["equal_energy", "local_only", "full_offload"] {
        let o = ehmec(&["solve", "--instance", &fixture(), "--scheme", scheme]);
        assert_eq!(code(&o), 0, "{scheme}");
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["scheme"], scheme);
        assert!(v["primal_value"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn solve_input_errors() {
    assert_eq!(
        code(&ehmec(&[
            "solve",
            "--instance",
            "/nonexistent/instance.json"
        ])),
        1
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"config\": {\n    \"num_users\": 1,,\n  }\n}\n").unwrap();
    let o = ehmec(&["solve", "--instance", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("line 3"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    assert_eq!(
        code(&ehmec(&[
            "solve",
            "--instance",
            &fixture(),
            "--scheme",
            "greedy"
        ])),
        1
    );
    assert_eq!(code(&ehmec(&["solve"])), 1);
    assert_eq!(
        code(&ehmec(&["solve", "--instance", &fixture(), "--step", "-1"])),
        1
    );
}

#[test]
fn forced_nonconvergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = ehmec(&[
        "solve",
        "--instance",
        &fixture(),
        "--max-iters",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["converged"], false);
}

#[test]
fn validate_fixture_and_negative_control() {
    let o = ehmec(&["validate", "--instance", &fixture()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for rule in ["constant", "diminishing"] {
        let o = ehmec(&[
            "validate",
            "--instance",
            &fixture(),
            "--step-rule",
            rule,
            "--step",
            "1e6",
        ]);
        assert_ne!(
            code(&o),
            0,
            "{rule}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
    }
    let zero = configs().join("zero_energy.json");
    let o = ehmec(&["validate", "--instance", zero.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn validate_falls_back_to_projected_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let o = ehmec(&[
        "--seed",
        "11",
        "gen",
        "--users",
        "2",
        "--slots",
        "5",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let o = ehmec(&["validate", "--instance", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stderr).contains("projected gradient"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ProjectedGradient"));
}

#[test]
fn gen_is_seeded() {
    let a = ehmec(&["--seed", "5", "gen", "--users", "2", "--slots", "4"]);
    let b = ehmec(&["gen", "--users", "2", "--slots", "4", "--seed", "5"]);
    let c = ehmec(&["--seed", "6", "gen", "--users", "2", "--slots", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["profiles"]["h"].as_array().unwrap().len(), 2);
    assert_eq!(v["profiles"]["harvest"][0].as_array().unwrap().len(), 3);
}

#[test]
fn compare_prints_all_schemes() {
    let o = ehmec(&["compare", "--instance", &fixture()]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8_lossy(&o.stdout);
    for id in ["proposed", "equal_energy", "local_only", "full_offload"] {
        assert!(s.contains(id), "{s}");
    }
}

#[test]
fn sweep_bundled_fig2_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig2.json");
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = ehmec(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--trials",
            "2",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read(out.join("fig2.csv")).unwrap(),
            out.join("fig2.json"),
        )
    };
    let (a, json) = run("a");
    let (b, _) = run("b");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("swept_value,scheme,trial,objective")
    );
    assert_eq!(text.lines().count() - 1, 4 * 6 * 2);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["metadata"]["seed"], 2);
}

#[test]
fn sweep_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"sweep": {"param": "N", "values": [], "trials": 1}}"#,
    )
    .unwrap();
    let o = ehmec(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let o = ehmec(&[
        "sweep",
        "--config",
        "/nonexistent.json",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
}
