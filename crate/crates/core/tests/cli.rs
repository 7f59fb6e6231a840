mod common;

use std::process::Command;

use common::fixture_path;
use esm_refute::certificate::{verify_certificate, Certificate};
use esm_refute::frontend::compile;

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_esm-refute")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path(name: &str) -> String {
    fixture_path(name).display().to_string()
}

#[test]
fn similarity_run_writes_a_verifying_certificate_and_lp() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let lp = dir.path().join("problem.lp");
    let (code, stdout, _) = cli(&[
        "--program-a", &path("transmission_a.ppl"),
        "--program-b", &path("transmission_b.ppl"),
        "--mode", "similarity",
        "--metric", "l1",
        "--maximize",
        "--degree", "1",
        "--out", cert.to_str().unwrap(),
        "--emit-lp", lp.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let line = stdout.lines().last().unwrap();
    assert!(line.starts_with("VERDICT refuted mode=similarity epsilon="), "{line}");
    assert!(line.contains(" degree=1 time_ms="), "{line}");
    let c = Certificate::from_json(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    let a = compile(&std::fs::read_to_string(fixture_path("transmission_a.ppl")).unwrap()).unwrap();
    let b = compile(&std::fs::read_to_string(fixture_path("transmission_b.ppl")).unwrap()).unwrap();
    verify_certificate(&c, &a, &b).unwrap();
    let text = std::fs::read_to_string(&lp).unwrap();
    assert!(text.contains("Maximize") && text.contains("Subject To") && text.trim_end().ends_with("End"));
}

#[test]
fn identical_programs_are_unknown() {
    let a = path("transmission_a.ppl");
    let (code, stdout, _) = cli(&["--program-a", &a, "--program-b", &a, "--degree-max", "2"]);
    assert_eq!(code, 10);
    assert!(stdout.starts_with("VERDICT unknown mode=equivalence epsilon=- degree=- time_ms="), "{stdout}");
}

#[test]
fn unbounded_outputs_fail_the_first_moment_precondition() {
    let (code, stdout, stderr) = cli(&[
        "--program-a", &path("ost/c4_a.ppl"),
        "--program-b", &path("ost/c4_b.ppl"),
        "--mode", "similarity",
    ]);
    assert_eq!(code, 11);
    assert!(stdout.starts_with("VERDICT unknown"));
    assert!(stderr.contains("finite first moments"), "{stderr}");
}

#[test]
fn invariant_files_are_used_and_checked() {
    let (code, _, _) = cli(&[
        "--program-a", &path("bench/simple_example_a.ppl"),
        "--program-b", &path("bench/simple_example_b.ppl"),
        "--invariants-a", &path("bench/simple_example.inv"),
        "--invariants-b", &path("bench/simple_example.inv"),
        "--mode", "similarity",
        "--verify", "both",
        "--mc-samples", "2000",
    ]);
    assert_eq!(code, 0);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.inv");
    std::fs::write(&bad, "loc l_init: x <= 0\n").unwrap();
    let (code, _, stderr) = cli(&[
        "--program-a", &path("bench/simple_example_a.ppl"),
        "--program-b", &path("bench/simple_example_b.ppl"),
        "--invariants-a", bad.to_str().unwrap(),
    ]);
    assert_eq!(code, 11);
    assert!(stderr.contains("not inductive"), "{stderr}");
}

#[test]
fn bad_inputs_are_precondition_failures() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.ppl");
    std::fs::write(&broken, "x := \nreturn x\n").unwrap();
    let a = path("transmission_a.ppl");
    assert_eq!(cli(&["--program-a", broken.to_str().unwrap(), "--program-b", &a]).0, 11);
    assert_eq!(cli(&["--program-a", "/nonexistent.ppl", "--program-b", &a]).0, 11);
    let one = dir.path().join("one.ppl");
    std::fs::write(&one, "x := 1\nreturn x\n").unwrap();
    assert_eq!(cli(&["--program-a", one.to_str().unwrap(), "--program-b", &a]).0, 11);
    for eps in ["--epsilon=-1", "--epsilon=0"] {
        assert_eq!(cli(&["--program-a", &a, "--program-b", &a, "--mode", "similarity", eps]).0, 11);
    }
}

#[test]
fn timeout_exit_code() {
    let (code, stdout, _) = cli(&[
        "--program-a", &path("ost/c2_a.ppl"),
        "--program-b", &path("ost/c2_b.ppl"),
        "--timeout", "0",
    ]);
    assert_eq!(code, 12, "{stdout}");
}

#[test]
fn ost_override_and_fixed_epsilon() {
    let (code, stdout, stderr) = cli(&[
        "--program-a", &path("ost/c4_a.ppl"),
        "--program-b", &path("ost/c4_b.ppl"),
        "--ost", "c4",
        "--degree", "1",
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stderr.contains("c4 (user override)"));
    assert!(stdout.contains("degree=1"));
    let (code, stdout, _) = cli(&[
        "--program-a", &path("transmission_a.ppl"),
        "--program-b", &path("transmission_b.ppl"),
        "--mode", "similarity",
        "--epsilon", "950",
        "--degree-min", "1",
        "--degree-max", "1",
        "--handelman-degree", "2",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("epsilon=950 degree=1"), "{stdout}");
}
