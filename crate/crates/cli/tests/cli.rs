use std::path::PathBuf;
use std::process::{Command, Output};

fn kpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpa"))
        .args(args)
        .env("KPA_COLOR", "0")
        .current_dir(repo_root())
        .output()
        .expect("spawn kpa")
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Terms of a printed sum, order-insensitive.
fn terms(s: &str) -> Vec<String> {
    let mut t: Vec<String> = s.trim().split(" + ").map(str::to_string).collect();
    t.sort();
    t
}

#[test]
fn bracket_examples() {
    let o = kpa(&["bracket", "n1", "x0", "--basis", "sr"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "x1");
    assert!(String::from_utf8_lossy(&o.stderr).contains("i{A,B}"));

    let o = kpa(&["bracket", "x1", "x2", "--basis", "sr"]);
    assert_eq!(stdout(&o).trim(), "0");

    for engine in ["poisson", "table"] {
        let o = kpa(&["bracket", "n1", "P0bar", "--basis", "dual", "--engine", engine]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(terms(&stdout(&o)), terms("P1bar + kappabar*n1"), "{engine}");
    }
}

#[test]
fn bracket_parse_error_is_usage_error() {
    let o = kpa(&["bracket", "n1 +", "x0", "--basis", "sr"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn derive_examples() {
    let o = kpa(&["derive", "--basis", "sr"]);
    let s = stdout(&o);
    assert!(s.contains("A = P0\nB = 0\nD = 1"), "{s}");

    let s = stdout(&kpa(&["derive", "--basis", "dual", "--what", "abd"]));
    assert!(s.contains("B = -kappabar"), "{s}");
    assert!(s.contains("value = 1  [pass]"), "{s}");
    assert!(s.contains("equal exactly"), "{s}");

    let s = stdout(&kpa(&["derive", "--basis", "dsr1"]));
    assert!(s.contains("B = -1/kappa"), "{s}");
    assert!(s.contains("equality modulo mass shell"), "{s}");

    let o = kpa(&["derive", "--basis", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_code_contract() {
    assert_eq!(kpa(&["verify", "--basis", "sr"]).status.code(), Some(0));
    assert_eq!(kpa(&["verify", "--basis", "nope"]).status.code(), Some(2));
    assert_eq!(kpa(&["verify", "--basis", "sr", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(kpa(&["verify", "--basis", "sr", "--mode", "fuzzy"]).status.code(), Some(2));
    let o = kpa(&["verify", "--basis", "configs/dsr1-flipped-b.kpa", "--suite", "constraint,jacobi"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_suite_list_is_empty_report() {
    let o = kpa(&["verify", "--basis", "dual", "--suite", "", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 0);
}

#[test]
fn dual_phase_space_json() {
    let o = kpa(&["verify", "--basis", "dual", "--suite", "phase-space", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 5);
    for e in entries {
        for key in ["suite", "relation", "paper_tag", "mode", "verdict", "residual", "evidence", "seed"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
        assert_eq!(e["verdict"], "pass");
        assert_eq!(e["residual"], "0");
    }
}

#[test]
fn mutant_json_carries_counterexample_points() {
    let o = kpa(&[
        "verify", "--basis", "configs/dsr1-flipped-b.kpa", "--suite", "constraint", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let failing: Vec<_> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["verdict"] == "fail")
        .collect();
    assert!(!failing.is_empty());
    for e in failing {
        assert_ne!(e["residual"], "0");
        assert!(e["evidence"]["worst_point"].as_object().is_some_and(|m| !m.is_empty()));
    }
}

#[test]
fn reports_are_deterministic_across_runs_and_jobs() {
    let a = kpa(&["verify", "--basis", "dsr1", "--suite", "phase-space,jacobi,coalgebra"]);
    let b = kpa(&["verify", "--basis", "dsr1", "--suite", "phase-space,jacobi,coalgebra", "--jobs", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let c = kpa(&["verify", "--basis", "dsr1", "--suite", "phase-space,jacobi,coalgebra", "--seed", "7"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn plain_output_has_no_escapes() {
    let o = kpa(&["verify", "--basis", "sr", "--suite", "lorentz"]);
    assert!(!stdout(&o).contains('\u{1b}'));
    let o = Command::new(env!("CARGO_BIN_EXE_kpa"))
        .args(["verify", "--basis", "sr", "--suite", "lorentz"])
        .env("KPA_COLOR", "1")
        .output()
        .unwrap();
    assert!(stdout(&o).contains('\u{1b}'));
}

#[test]
fn custom_config_basis() {
    let o = kpa(&["verify", "--basis", "configs/custom-momentum.kpa", "--suite", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("cfg:L12"));
}

#[test]
fn config_error_reports_line() {
    let dir = std::env::temp_dir().join(format!("kpa-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("bad.kpa");
    std::fs::write(&p, "[basis \"x\"]\nkind = momentum\nf = p0 +\ng = 1\nF = P0\nG = 1\n").unwrap();
    let o = kpa(&["verify", "--basis", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}
