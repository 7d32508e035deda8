//! End-to-end runs of the binary: exit codes, spec-file handling, and
//! byte-level determinism of the machine-readable reports.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diffinv"))
}

fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

#[test]
fn check_valid_spec_exits_zero() {
    let spec = spec_path("rotation.json");
    let out = run(&["check", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("check: PASS"));
    assert!(text.contains("ConformalSeparable"));
}

#[test]
fn check_with_non_invariant_exits_two_with_witness() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    // x is not invariant under the rotation
    write!(
        file,
        r#"{{
            "n": 1, "m": 1,
            "xi": ["u"], "eta": ["-x"],
            "invariants": ["x"],
            "J": "arcsin(x/sqrt(x^2+u^2))"
        }}"#
    )
    .unwrap();
    let out = run(&["check", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("not invariant"), "{text}");
    // a witness point is printed with the failing residual
    assert!(text.contains("at (u = "), "{text}");
}

#[test]
fn malformed_spec_exits_one() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "this is not json").unwrap();
    let out = run(&["check", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn bad_expression_exits_one() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(
        file,
        r#"{{ "n": 1, "m": 1, "xi": ["u +"], "eta": ["-x"] }}"#
    )
    .unwrap();
    let out = run(&["check", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let text = String::from_utf8(out.stderr).unwrap();
    assert!(text.contains("syntax error"), "{text}");
}

#[test]
fn usage_error_exits_sixty_four() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(64), "{out:?}");
}

#[test]
fn json_reports_are_byte_identical_across_runs() {
    let spec = spec_path("rotation.json");
    let args = [
        "--format",
        "json",
        "--seed",
        "7",
        "check",
        spec.to_str().unwrap(),
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert!(!first.stdout.is_empty());

    let args = ["--format", "json", "examples", "run", "2"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0), "{first:?}");
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn riccati_verify_prints_residual_table() {
    let spec = spec_path("scaling-k2.json");
    let out = run(&["--tol", "1e-7", "riccati", "verify", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("riccati system"), "{text}");
    assert!(text.contains("residual"), "{text}");
    assert!(text.contains("verify: PASS"), "{text}");
}

#[test]
fn riccati_solve_handles_integrand_only_companion() {
    let spec = spec_path("oscillator.json");
    let out = run(&["riccati", "solve", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("JC1"), "integrand route exposes JC1: {text}");
}

#[test]
fn quadrature_numeric_table() {
    let spec = spec_path("oscillator.json");
    let out = run(&["quadrature", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("flow time"), "{text}");
}

#[test]
fn quadrature_symbolic_route() {
    let spec = spec_path("exponential.json");
    let out = run(&["quadrature", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("J = "), "{text}");
    assert!(text.contains("QJ = 1"), "{text}");
}

#[test]
fn reconstruct_recovers_the_field() {
    let spec = spec_path("exponential.json");
    let out = run(&["reconstruct", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("xi^1"), "{text}");
    assert!(text.contains("reconstruct: PASS"), "{text}");
}

#[test]
fn prolong_lists_coefficients() {
    let spec = spec_path("rotation.json");
    let out = run(&["prolong", spec.to_str().unwrap(), "--order", "2"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("eta^1_[1] = -1 - u1[1]^2"), "{text}");
    assert!(text.contains("eta^1_[2]"), "{text}");
}

#[test]
fn first_order_command_reports_structure() {
    let spec = spec_path("rotation.json");
    let out = run(&["first-order", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("fractional-linear in the first jets: true"), "{text}");
    assert!(text.contains("first-order: PASS"), "{text}");
}

#[test]
fn invariants_command_counts_and_ranks() {
    let spec = spec_path("exponential.json");
    let out = run(&["invariants", spec.to_str().unwrap(), "--order", "2"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("count: 3 (expected 3)"), "{text}");
    assert!(text.contains("invariants: PASS"), "{text}");
}

#[test]
fn domain_flag_overrides_sampling() {
    let spec = spec_path("rotation.json");
    let out = run(&[
        "--domain",
        "u1[1]=-2.0:-1.0",
        "first-order",
        spec.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn examples_run_all_is_the_acceptance_entry_point() {
    let out = run(&["examples", "run", "all"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("examples: PASS"), "{text}");
    for name in [
        "example1",
        "example2",
        "example3-k-1",
        "example3-k2",
        "example4",
        "example5",
    ] {
        assert!(text.contains(name), "missing {name} in {text}");
    }
    assert!(!text.contains("[FAIL]"), "{text}");
}
