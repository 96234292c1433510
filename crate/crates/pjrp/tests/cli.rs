//! End-to-end checks of the command-line surface: file formats, exit codes,
//! and byte-reproducible outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pjrp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pjrp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let path = std::env::temp_dir().join(format!("pjrp-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&path).unwrap();
        Self(path)
    }

    fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

#[test]
fn select_compile_solve_verify_roundtrip() {
    let dir = TempDir::new("roundtrip");

    // primes select: writes the pair set, prints the condition CSV.
    let out = pjrp(
        &[
            "primes", "select", "--n", "3", "--b", "2", "--start", "11", "--limit", "100",
            "--pp-cap", "5", "--out", "vp.json",
        ],
        &dir.0,
    );
    assert!(out.status.success(), "{out:?}");
    let csv = stdout(&out);
    assert!(csv.starts_with("condition,pass,margin\n"));
    assert!(csv.contains("condition1_gap_bound,true"));
    assert!(csv.contains("condition2_5_magnitude,false"));
    let vp_json = std::fs::read_to_string(dir.file("vp.json")).unwrap();
    let parsed = pjrp::VpSet::from_json(&vp_json).unwrap();
    assert_eq!(parsed.pairs[0].lower, 11);
    assert_eq!(parsed.pp, vec![2, 3]);

    // compile a one-clause formula.
    std::fs::write(dir.file("f.cnf"), "p cnf 3 1\n1 -2 3 0\n").unwrap();
    let out = pjrp(
        &[
            "compile", "--cnf", "f.cnf", "--vp", "vp.json", "--out", "gamma.json",
        ],
        &dir.0,
    );
    assert!(out.status.success(), "{out:?}");

    // Compilation is byte-reproducible.
    let first = std::fs::read(dir.file("gamma.json")).unwrap();
    let out = pjrp(
        &[
            "compile", "--cnf", "f.cnf", "--vp", "vp.json", "--out", "gamma2.json",
        ],
        &dir.0,
    );
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(dir.file("gamma2.json")).unwrap());

    // solve pinned; the result parses and re-evaluates to the same cost.
    let out = pjrp(&["solve", "--gamma", "gamma.json", "--pinned"], &dir.0);
    assert!(out.status.success(), "{out:?}");
    let solved: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let cost = solved["cost"].as_str().unwrap().to_string();
    std::fs::write(
        dir.file("policy.json"),
        serde_json::to_string(&serde_json::json!({ "cycles": solved["policy"]["cycles"] }))
            .unwrap(),
    )
    .unwrap();

    // eval agrees with the solver's cost.
    // The gamma file embeds the instance fields, so it parses as one.
    let out = pjrp(
        &[
            "eval", "--instance", "gamma.json", "--policy", "policy.json",
        ],
        &dir.0,
    );
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout(&out).trim(), cost);

    // verify all suites; CSV with the expected header.
    let out = pjrp(&["verify", "--gamma", "gamma.json", "--suite", "all"], &dir.0);
    assert!(out.status.success(), "{out:?}");
    let csv = stdout(&out);
    assert!(csv.starts_with("name,lhs,rhs,margin,pass,notes\n"));
    assert!(csv.contains("theta1_c_pv_1_1,"));
    assert!(csv.contains("delta_identity,"));
    for line in csv.lines().filter(|l| l.starts_with("theta")) {
        assert!(line.contains(",true,"), "constants pinning failed: {line}");
    }

    // curve CSV has b_i + 5 rows.
    let out = pjrp(&["curve", "--gamma", "gamma.json", "--var", "1"], &dir.0);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert_eq!(csv.lines().count(), 1 + 7);
    assert!(csv.starts_with("t,lb,ub\n"));

    // reduce-e2e emits the experiment report.
    let out = pjrp(
        &[
            "reduce-e2e", "--cnf", "f.cnf", "--vp", "vp.json", "--mode", "pinned",
        ],
        &dir.0,
    );
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["formula_satisfiable"], serde_json::json!(true));
    assert_eq!(report["satisfying_count"], serde_json::json!(7));
}

#[test]
fn eval_matches_hand_built_instance() {
    let dir = TempDir::new("eval");
    std::fs::write(
        dir.file("inst.json"),
        r#"{
            "K0": "1",
            "commodities": [
                {"id": "a", "kind": "generic", "K": "2", "h": "1", "lambda": "2"},
                {"id": "b", "kind": "generic", "K": "3", "h": "1", "lambda": "2"}
            ]
        }"#,
    )
    .unwrap();
    std::fs::write(dir.file("pol.json"), r#"{"cycles": {"a": 2, "b": 3}}"#).unwrap();
    let out = pjrp(
        &["eval", "--instance", "inst.json", "--policy", "pol.json"],
        &dir.0,
    );
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout(&out).trim(), "23/3");
}

#[test]
fn solve_with_explicit_windows() {
    let dir = TempDir::new("windows");
    std::fs::write(
        dir.file("inst.json"),
        r#"{
            "K0": "0",
            "commodities": [
                {"id": "a", "kind": "generic", "K": "71/2", "h": "1", "lambda": "2"}
            ]
        }"#,
    )
    .unwrap();
    std::fs::write(dir.file("win.json"), r#"{"a": [1,2,3,4,5,6,7,8,9,10]}"#).unwrap();
    let out = pjrp(
        &[
            "solve", "--instance", "inst.json", "--windows", "win.json",
        ],
        &dir.0,
    );
    assert!(out.status.success(), "{out:?}");
    let solved: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(solved["policy"]["cycles"]["a"], serde_json::json!(6));
    assert_eq!(solved["cost"], serde_json::json!("143/12"));
    assert_eq!(solved["explored"], serde_json::json!(10));
}

#[test]
fn validation_errors_exit_2() {
    let dir = TempDir::new("exit2");
    std::fs::write(dir.file("bad.cnf"), "p cnf 2 1\n1 1 2 0\n").unwrap();
    std::fs::write(dir.file("vp.json"), "{}").unwrap();
    let out = pjrp(
        &[
            "compile", "--cnf", "bad.cnf", "--vp", "vp.json", "--out", "g.json",
        ],
        &dir.0,
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // Unreadable input file.
    let out = pjrp(
        &["eval", "--instance", "missing.json", "--policy", "missing.json"],
        &dir.0,
    );
    assert_eq!(out.status.code(), Some(2));

    // Zero denominator in a rational.
    std::fs::write(
        dir.file("inst.json"),
        r#"{"K0": "1/0", "commodities": [{"id": "a", "kind": "generic", "K": "1", "h": "1", "lambda": "2"}]}"#,
    )
    .unwrap();
    std::fs::write(dir.file("pol.json"), r#"{"cycles": {"a": 1}}"#).unwrap();
    let out = pjrp(
        &["eval", "--instance", "inst.json", "--policy", "pol.json"],
        &dir.0,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cap_errors_exit_3() {
    let dir = TempDir::new("exit3");
    // Search cap.
    std::fs::write(
        dir.file("inst.json"),
        r#"{"K0": "0", "commodities": [{"id": "a", "kind": "generic", "K": "2", "h": "1", "lambda": "2"}]}"#,
    )
    .unwrap();
    let windows: Vec<u64> = (1..=100).collect();
    std::fs::write(
        dir.file("win.json"),
        serde_json::to_string(&serde_json::json!({ "a": windows })).unwrap(),
    )
    .unwrap();
    let out = pjrp(
        &[
            "solve", "--search-cap", "50", "--instance", "inst.json", "--windows", "win.json",
        ],
        &dir.0,
    );
    assert_eq!(out.status.code(), Some(3), "{out:?}");

    // Subset cap during evaluation: 22 cycle values of the form 6*prime are
    // pairwise non-coprime and none divides another, so nothing simplifies.
    let primes: [u64; 22] = [
        5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    ];
    let commodities: Vec<serde_json::Value> = (0..22)
        .map(|i| {
            serde_json::json!({
                "id": format!("c{i:02}"),
                "kind": "generic",
                "K": "2",
                "h": "1",
                "lambda": "2"
            })
        })
        .collect();
    std::fs::write(
        dir.file("big.json"),
        serde_json::to_string(&serde_json::json!({"K0": "1", "commodities": commodities}))
            .unwrap(),
    )
    .unwrap();
    let cycles: serde_json::Map<String, serde_json::Value> = primes
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("c{i:02}"), serde_json::json!(6 * p)))
        .collect();
    std::fs::write(
        dir.file("pol.json"),
        serde_json::to_string(&serde_json::json!({ "cycles": cycles })).unwrap(),
    )
    .unwrap();
    let out = pjrp(
        &["eval", "--instance", "big.json", "--policy", "pol.json"],
        &dir.0,
    );
    assert_eq!(out.status.code(), Some(3), "{out:?}");

    // Raising the cap makes the same evaluation succeed.
    let out = pjrp(
        &[
            "eval", "--subset-cap", "22", "--instance", "big.json", "--policy", "pol.json",
        ],
        &dir.0,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}
