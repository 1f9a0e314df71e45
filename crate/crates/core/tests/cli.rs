mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn faultcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faultcert"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(out: &Path, kind: &str) -> Output {
    let model = fixture("helicopter.toml");
    faultcert(&[
        "synth",
        "--model",
        p(&model),
        "--observer",
        kind,
        "--out",
        p(out),
    ])
}

fn synth_with(model: &Path, out: &Path) -> Output {
    faultcert(&[
        "synth",
        "--model",
        p(model),
        "--observer",
        "output",
        "--out",
        p(out),
    ])
}

#[test]
fn synth_then_verify_and_annotate() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("helicopter.toml");
    let o = synth(dir.path(), "uio");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"synth\""));
    let certs: Vec<String> = (1..=3)
        .map(|i| p(&dir.path().join(format!("uio{i}.fdcert"))).to_string())
        .collect();

    let mut args = vec!["verify", "--model", p(&model)];
    args.extend(certs.iter().map(String::as_str));
    let o = faultcert(&args);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        stdout
            .lines()
            .filter(|l| l.starts_with("verify ") && l.contains(" PASS "))
            .count(),
        3
    );

    let out = dir.path().join("annot");
    let o = faultcert(&[
        "annotate",
        "--model",
        p(&model),
        "--out",
        p(&out),
        &certs[0],
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(out.join("uio1.annot.c")).unwrap();
    assert!(text.contains("// uio1_nominal_step"));
    assert!(out.join("manifest.toml").exists());
}

#[test]
fn tampered_certificate_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("helicopter.toml");
    assert_eq!(code(&synth(dir.path(), "output")), 0);
    let path = dir.path().join("output1.fdcert");
    let text = std::fs::read_to_string(&path).unwrap();
    let line = text
        .lines()
        .position(|l| l.starts_with("ellipsoid E_n"))
        .unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let row = &mut lines[line + 2];
    let before = row.clone();
    *row = row.replacen('1', "2", 1);
    assert_ne!(*row, before);
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();

    let o = faultcert(&["verify", "--model", p(&model), p(&path)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
    let o = faultcert(&["annotate", "--model", p(&model), p(&path)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("helicopter.toml");
    let missing = dir.path().join("missing.fdcert");
    assert_eq!(
        code(&faultcert(&["verify", "--model", p(&model), p(&missing)])),
        2
    );

    let garbage = dir.path().join("garbage.fdcert");
    std::fs::write(&garbage, "fdcert\nschema_version 1\n").unwrap();
    assert_eq!(
        code(&faultcert(&["verify", "--model", p(&model), p(&garbage)])),
        2
    );

    let bad_model = dir.path().join("bad.toml");
    std::fs::write(
        &bad_model,
        "schema_version = 1\n[matrices]\na = [[1.0, 2.0]]\n",
    )
    .unwrap();
    let o = synth_with(&bad_model, dir.path());
    assert_eq!(code(&o), 2);

    assert_eq!(
        code(&faultcert(&[
            "synth",
            "--model",
            p(&model),
            "--observer",
            "uio",
            "--out",
            "x",
            "--bogus"
        ])),
        2
    );
    assert_eq!(
        code(&faultcert(&[
            "synth",
            "--model",
            p(&model),
            "--observer",
            "kalman",
            "--out",
            "x"
        ])),
        2
    );
    assert_eq!(code(&faultcert(&["frobnicate"])), 2);
    assert_eq!(code(&faultcert(&["--help"])), 0);
}

#[test]
fn seeded_simulations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("helicopter.toml");
    let scenario = fixture("nominal.toml");
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = faultcert(&[
            "simulate",
            "--model",
            p(&model),
            "--scenario",
            p(&scenario),
            "--observer",
            "output",
            "--out",
            p(&out),
            "--seed",
            seed,
            "--dt",
            "0.01",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b, c) = (run("a", "4"), run("b", "4"), run("c", "5"));
    for file in ["trace.csv", "verdicts_output1.csv", "report.txt"] {
        let fa = std::fs::read(a.join(file)).unwrap();
        assert_eq!(fa, std::fs::read(b.join(file)).unwrap(), "{file}");
        if file == "trace.csv" {
            assert_ne!(fa, std::fs::read(c.join(file)).unwrap());
        }
    }
    let manifest = std::fs::read_to_string(a.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 4"));
    assert!(manifest.contains("dt = 0.01"));
}

#[test]
fn report_prints_margins() {
    let model = fixture("helicopter.toml");
    let o = faultcert(&["report", "--model", p(&model), "--observer", "sliding"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("detector sliding1 ")));
    assert!(text.lines().any(|l| l.starts_with("verify sliding1 PASS")));
}
