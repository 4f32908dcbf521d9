use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stationary"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &[
            "build", "boundary", "--rank", "2", "--depth", "2", "-o", "bnd.json",
        ][..],
        &[
            "build", "boundary", "--rank", "2", "--depth", "1", "-o", "b1.json",
        ],
        &["build", "trivial", "--weights", "1", "-o", "triv.json"],
        &[
            "build",
            "bijective",
            "--perm",
            "a=1,0",
            "--perm",
            "b=0,1",
            "-o",
            "bij.json",
        ],
    ] {
        assert_eq!(code(&run(dir.path(), args)), 0, "{args:?}");
    }
    dir
}

#[test]
fn boundary_entropy_example() {
    let dir = workspace();
    let out = run(dir.path(), &["entropy", "bnd.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "0.549306144334");
}

#[test]
fn combination_entropy_is_scaled() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "build",
            "combine",
            "--t",
            "0.3",
            "bnd.json",
            "triv.json",
            "-o",
            "mix.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let out = run(dir.path(), &["entropy", "mix.json"]);
    assert_eq!(stdout(&out).trim(), "0.164791843300");
}

#[test]
fn build_prints_json_to_stdout_without_output_flag() {
    let dir = workspace();
    let out = run(dir.path(), &["build", "trivial", "--weights", "0.5,0.5"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.trim_start().starts_with('{'));
    assert!(text.contains("\"kind\": \"bijective\""));
}

#[test]
fn rn_tail_reports_thresholds() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &["rn-tail", "bnd.json", "--word", "a", "--threshold", "1,5"],
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("1.00000000000 0.250000000000"));
    assert!(text.lines().any(|l| l == "5.00000000000 0"));
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = workspace();
    let out = run(dir.path(), &["validate", "bnd.json"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("valid"));
    let text = std::fs::read_to_string(dir.path().join("bij.json")).unwrap();
    let broken = text
        .replacen(
            "\"weight\": 0.50000000000000000",
            "\"weight\": 0.30000000000000000",
            1,
        )
        .replacen(
            "\"weight\": 0.50000000000000000",
            "\"weight\": 0.70000000000000000",
            1,
        );
    std::fs::write(dir.path().join("broken.json"), broken).unwrap();
    let out = run(dir.path(), &["validate", "broken.json"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn nonstationary_build_is_a_validation_failure() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "build",
            "bijective",
            "--perm",
            "a=1,2,0",
            "--perm",
            "b=0,2,1",
            "--weights",
            "0.2,0.3,0.5",
            "-o",
            "x.json",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn delta_and_defect_report_truncation() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "delta",
            "b1.json",
            "triv.json",
            "--max-m",
            "2",
            "--max-n",
            "2",
        ],
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("tail bound: 0.437500"));
    let out = run(
        dir.path(),
        &[
            "defect", "b1.json", "b1.json", "--max-m", "3", "--max-n", "3", "--csv", "-",
        ],
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("m,n,weight,forward,backward,distance,points_a,points_b,error"));
    assert!(text.lines().any(|l| l.starts_with("# ")));
}

#[test]
fn budget_exhaustion_exits_two() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "delta",
            "bnd.json",
            "triv.json",
            "--max-m",
            "2",
            "--max-n",
            "2",
            "--budget",
            "10",
        ],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn prop2_examples() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &["prop2", "bij.json", "bij.json", "--words", "e,a,b"],
    );
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\ncertified"));
    let out = run(
        dir.path(),
        &[
            "build",
            "stabilize",
            "bij.json",
            "--weights",
            "0.5,0.5",
            "-o",
            "st.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let out = run(
        dir.path(),
        &["prop2", "bij.json", "st.json", "--words", "e,a,b"],
    );
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\ncertified"));
    let out = run(dir.path(), &["prop2", "bnd.json", "triv.json"]);
    assert_eq!(code(&out), 2);
    let out = run(
        dir.path(),
        &["prop2", "bij.json", "bij.json", "--words", "a"],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn malformed_input_exits_three() {
    let dir = workspace();
    std::fs::write(dir.path().join("bad.json"), "{\"nope\": 1}").unwrap();
    assert_eq!(code(&run(dir.path(), &["entropy", "bad.json"])), 3);
    assert_eq!(code(&run(dir.path(), &["entropy", "missing.json"])), 3);
    assert_eq!(
        code(&run(
            dir.path(),
            &["build", "trivial", "--weights", "0.5,0.6"]
        )),
        3
    );
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 3);
    assert_eq!(
        code(&run(
            dir.path(),
            &["delta", "b1.json", "triv.json", "--mode", "fuzzy"]
        )),
        3
    );
}

#[test]
fn experiments_write_self_describing_csv() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "experiment",
            "realization",
            "--target",
            "0.2747",
            "-o",
            "real.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("real.csv")).unwrap();
    assert!(text.starts_with("# tool=stationary"));
    assert!(text.contains("0.2747"));
    let out = run(
        dir.path(),
        &["experiment", "realization", "--target", "0.9"],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside achievable range"));

    let out = run(
        dir.path(),
        &[
            "experiment",
            "continuity",
            "--max-m",
            "2",
            "--max-n",
            "2",
            "--seed",
            "3",
            "-o",
            "c.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(text.contains("seed=3"));
    assert!(
        text.contains("t,delta,tail_bound,complete,entropy,expected_entropy,entropy_gap,rn_gap")
    );
    assert!(dir.path().join("c.rn_tail.csv").exists());

    std::fs::write(
        dir.path().join("suite.json"),
        r#"{"experiment": "prop2-suite", "trials": 6, "output": "suite.csv"}"#,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["experiment", "prop2-suite", "--config", "suite.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("suite.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
    let out = run(
        dir.path(),
        &["experiment", "continuity", "--config", "suite.json"],
    );
    assert_eq!(code(&out), 3);
}
