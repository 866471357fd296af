use std::path::PathBuf;
use std::process::{Command, Output};

fn spectra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectra"))
        .args(args)
        .env("SPECTRA_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn field_reports_fibonacci_generator() {
    let o = spectra(&["field", "fibonacci"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("minimal polynomial = x^2 - x - 1"));
    assert!(text.contains("theta = (-1 + 2L)/5"));
}

#[test]
fn exit_codes() {
    let missing = spectra(&["field", "/no/such/file.rule"]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("hint:"));

    let path = tmp("reducible.rule");
    std::fs::write(&path, "a -> a\nb -> b\n").unwrap();
    let o = spectra(&["rule", "check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let path = tmp("garbled.rule");
    std::fs::write(&path, "a => ab\n").unwrap();
    assert_eq!(spectra(&["field", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn rule_check_emits_json() {
    let o = spectra(&["rule", "check", "tribonacci"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.is_object());
}

#[test]
fn cocycle_at_origin_gives_frequencies() {
    let o = spectra(&["cocycle", "fibonacci", "--y", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c = v["c"].as_array().unwrap();
    let tau = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((c[0][0].as_f64().unwrap() - 1.0 / tau).abs() < 1e-10);
    assert!((c[1][0].as_f64().unwrap() - 1.0 / (tau * tau)).abs() < 1e-10);
}

#[test]
fn outputs_are_deterministic() {
    let a = spectra(&["diffract", "tribonacci", "--kmax", "3"]);
    let b = spectra(&["diffract", "tribonacci", "--kmax", "3"]);
    let c = Command::new(env!("CARGO_BIN_EXE_spectra"))
        .args(["--threads", "4", "diffract", "tribonacci", "--kmax", "3"])
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert!(stdout(&a).starts_with("m0,m1,m2,k,"));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let run = |name: &str| {
        let p = tmp(name);
        let o = spectra(&[
            "windows",
            "tribonacci",
            "--samples",
            "20000",
            "--points",
            "2000",
            "--json",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("w1.json"), run("w2.json"));
}

#[test]
fn every_fixture_passes_verify() {
    let list = stdout(&spectra(&["fixtures"]));
    let names: Vec<&str> = list.lines().filter_map(|l| l.split_whitespace().next()).collect();
    assert_eq!(names.len(), 12);
    for name in names {
        let o = spectra(&["verify", name, "--r", "1e4"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["passed"], true, "{name}");
    }
}
