use std::path::Path;
use std::process::Command;

use singular_drift::sde::PathEnsemble;
use singular_drift::spectral::read_time_field;

fn run(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_singular-drift"))
        .args(args)
        .env("SINGULAR_DRIFT_THREADS", "1")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn drift_to_ensemble_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("spec.json"),
        r#"{"family": "smooth-test", "seed": 2, "beta": 0.25, "eta": 0.5, "amplitude": 0.2,
            "grid": {"dim": 1, "n": 32, "intervals": 16}}"#,
    )
    .unwrap();
    run(&[
        "gen-drift",
        "--spec",
        s(&d.join("spec.json")),
        "--out",
        s(&d.join("b.bin")),
    ]);
    let (b, manifest) = read_time_field(&d.join("b.bin")).unwrap();
    assert_eq!((manifest.field.n, manifest.intervals), (32, 16));
    assert!(!b.is_zero());

    run(&[
        "calibrate",
        "--drift",
        s(&d.join("b.bin")),
        "--out",
        s(&d.join("cal.json")),
        "--u-out",
        s(&d.join("u.bin")),
    ]);
    let cal: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("cal.json")).unwrap()).unwrap();
    let lambda = cal["lambda"].as_f64().unwrap();
    let trace = std::fs::read_to_string(d.join("cal.csv")).unwrap();
    assert!(trace.starts_with("lambda,gradient_sup\n"));
    assert_eq!(trace.lines().count(), cal["trace"].as_array().unwrap().len() + 1);

    let l = lambda.to_string();
    run(&[
        "solve-pde",
        "--drift",
        s(&d.join("b.bin")),
        "--lambda",
        &l,
        "--out",
        s(&d.join("u2.bin")),
    ]);
    assert_eq!(
        std::fs::read(d.join("u.bin")).unwrap(),
        std::fs::read(d.join("u2.bin")).unwrap()
    );
    assert!(d.join("u2.bin.report.json").exists());

    std::fs::write(
        d.join("sim.json"),
        r#"{"x0": [0.5], "horizon": 1.0, "steps": 16, "paths": 50, "seed": 4}"#,
    )
    .unwrap();
    run(&[
        "simulate",
        "--u",
        s(&d.join("u.bin")),
        "--lambda",
        &l,
        "--config",
        s(&d.join("sim.json")),
        "--out",
        s(&d.join("x.bin")),
    ]);
    let x = PathEnsemble::read(&d.join("x.bin")).unwrap();
    assert_eq!((x.paths(), x.steps(), x.cfg.lambda), (50, 16, lambda));
    // X_0 = psi(x0 + u(0, x0)) recovers x0 up to the inverse tolerance
    assert!((x.state(7, 0)[0] - 0.5).abs() <= 1e-11);
}

#[test]
fn study_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("results");
    let cfg = serde_json::json!({
        "drift": {"trig": [{"component": 0, "k": [1], "sin": 0.2}]},
        "grid": {"dim": 1, "n": 16, "intervals": 20},
        "sim": {"x0": [0.0], "paths": 200},
        "consistency_steps": [20, 40],
        "bootstrap": 50,
        "output_dir": out,
        "seed": 8
    });
    std::fs::write(d.join("c.json"), serde_json::to_vec(&cfg).unwrap()).unwrap();
    run(&["study-consistency", "--config", s(&d.join("c.json"))]);
    let dirs: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1);
    let root = &dirs[0];
    assert_eq!(root.file_name().unwrap().len(), 64);
    let names = [
        "levels.csv",
        "marginals.csv",
        "calibration.csv",
        "deviations.csv",
        "drift.bin",
        "u.bin",
        "direct-40.bin",
        "report.json",
        "manifest.json",
    ];
    for n in names {
        assert!(root.join(n).exists(), "missing {n}");
    }
    let snapshot = |n: &str| std::fs::read(root.join(n)).unwrap();
    let first: Vec<Vec<u8>> = names[..7].iter().map(|n| snapshot(n)).collect();
    let manifest: serde_json::Value = serde_json::from_slice(&snapshot("manifest.json")).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f[0] == "u.bin.json"));
    assert_eq!(manifest["seeds"][0][1], 8);

    run(&["study-consistency", "--config", s(&d.join("c.json"))]);
    for (n, before) in names[..7].iter().zip(first) {
        assert_eq!(snapshot(n), before, "{n} changed on rerun");
    }
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"n_list": [4, 2]}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_singular-drift"))
        .args(["study-mollify", "--config", s(&p)])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_list"));
}
