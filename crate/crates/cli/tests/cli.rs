//! End-to-end tests of the command-line surface and its exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxalm"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn proxalm")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn generate_writes_valid_problem_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["generate", "--kind", "rps", "--out", "game.json"]);
    assert_eq!(code(&out), 0, "{out:?}");
    let problem = proxalm::model::AnyProblem::from_json(&read(dir.path(), "game.json")).unwrap();
    assert!(problem.validate().is_empty());
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path(), "game.meta.json")).unwrap();
    assert_eq!(meta["spec"]["kind"], "rps");
}

#[test]
fn generate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--kind", "basis_pursuit", "--m", "10", "--n", "24", "--sparsity", "3", "--seed", "7"];
    assert_eq!(code(&run(dir.path(), &[&args[..], &["--out", "a.json"]].concat())), 0);
    assert_eq!(code(&run(dir.path(), &[&args[..], &["--out", "b.json"]].concat())), 0);
    assert_eq!(read(dir.path(), "a.json"), read(dir.path(), "b.json"));
}

#[test]
fn generate_rejects_bad_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    // negative dimensions never parse as usize: clap exits 2
    let out = run(dir.path(), &["generate", "--kind", "basis_pursuit", "--m", "-5", "--out", "x.json"]);
    assert_eq!(code(&out), 2);
    // zero-dimension specs are rejected by validation with the same code
    let out = run(dir.path(), &["generate", "--kind", "basis_pursuit", "--m", "0", "--out", "x.json"]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("x.json").exists());
}

fn generate_bp(dir: &Path) {
    let out = run(
        dir,
        &["generate", "--kind", "basis_pursuit", "--m", "16", "--n", "40", "--sparsity", "3", "--seed", "3", "--out", "bp.json"],
    );
    assert_eq!(code(&out), 0, "{out:?}");
}

#[test]
fn solve_writes_csv_with_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    generate_bp(dir.path());
    let out = run(dir.path(), &["solve", "--problem", "bp.json", "--solver", "palm", "--out", "t"]);
    assert_eq!(code(&out), 0, "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("status=converged"), "{stdout}");
    let iterations: usize = stdout
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("iterations="))
        .unwrap()
        .parse()
        .unwrap();
    let csv = read(dir.path(), "t.csv");
    assert_eq!(csv.lines().count(), iterations + 1); // header + rows
    assert!(csv.starts_with("k,primal_residual,objective,h_step,dual_residual"));
}

#[test]
fn solve_reports_max_iter_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    generate_bp(dir.path());
    let out = run(
        dir.path(),
        &["solve", "--problem", "bp.json", "--solver", "palm", "--max-iter", "3", "--out", "t"],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn classic_pdhg_on_the_game_fails_as_documented() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["generate", "--kind", "rps", "--out", "game.json"])), 0);
    let out = run(
        dir.path(),
        &["solve", "--problem", "game.json", "--solver", "pdhg", "--max-iter", "2000", "--out", "t"],
    );
    assert_eq!(code(&out), 3, "{out:?}");
    // the residual column never decays below 1e-3
    let csv = read(dir.path(), "t.csv");
    let min_residual = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(min_residual > 1e-3, "residual decayed to {min_residual:e}");
}

#[test]
fn gamma_one_flag_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    generate_bp(dir.path());
    let a = run(dir.path(), &["solve", "--problem", "bp.json", "--solver", "palm", "--out", "a"]);
    assert_eq!(code(&a), 0);
    let b = run(
        dir.path(),
        &["solve", "--problem", "bp.json", "--solver", "palm", "--gamma", "1.0", "--out", "b"],
    );
    assert_eq!(code(&b), 0);
    assert_eq!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"));
}

#[test]
fn incompatible_solver_and_problem_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    generate_bp(dir.path());
    let out = run(dir.path(), &["solve", "--problem", "bp.json", "--solver", "npdhg1", "--out", "t"]);
    assert_eq!(code(&out), 2);
    let out = run(dir.path(), &["solve", "--problem", "bp.json", "--solver", "nonsense", "--out", "t"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn certify_pipeline_pass_fail_and_missing_reference() {
    let dir = tempfile::tempdir().unwrap();
    generate_bp(dir.path());
    assert_eq!(
        code(&run(dir.path(), &["solve", "--problem", "bp.json", "--solver", "palm", "--out", "t"])),
        0
    );

    // without a reference the contraction check cannot run
    let out = run(dir.path(), &["certify", "--trace", "t.json", "--problem", "bp.json"]);
    assert_eq!(code(&out), 4, "{out:?}");

    assert_eq!(
        code(&run(dir.path(), &["reference", "--problem", "bp.json", "--out", "ref.json"])),
        0
    );
    let out = run(
        dir.path(),
        &["certify", "--trace", "t.json", "--problem", "bp.json", "--reference", "ref.json", "--out", "report.json"],
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "report.json")).unwrap();
    assert_eq!(report["all_pass"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 4);

    // corrupt one stored iterate: the contraction check must fail, naming it
    let mut trace: serde_json::Value = serde_json::from_str(&read(dir.path(), "t.json")).unwrap();
    trace["iterates"][5]["x"][0] = serde_json::json!(25.0);
    std::fs::write(dir.path().join("bad.json"), trace.to_string()).unwrap();
    let out = run(
        dir.path(),
        &["certify", "--trace", "bad.json", "--problem", "bp.json", "--reference", "ref.json", "--out", "bad_report.json"],
    );
    assert_eq!(code(&out), 5, "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("contraction"), "{stderr}");
}

#[test]
fn compare_emits_per_solver_columns_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    generate_bp(dir.path());
    let out = run(dir.path(), &["compare", "--problem", "bp.json", "--solvers", "palm,balm", "--out", "cmp"]);
    assert_eq!(code(&out), 0, "{out:?}");
    let csv = read(dir.path(), "cmp.csv");
    assert!(csv.starts_with("k,palm,balm"));
    let summary = read(dir.path(), "cmp_summary.csv");
    for line in summary.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], "converged", "{line}");
        let to_tol: usize = cols[4].parse().expect("iterations_to_1e-6 present");
        assert!(to_tol > 0);
    }
}

#[test]
fn compare_flags_the_nonconvergent_baseline() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["generate", "--kind", "rps", "--out", "game.json"])), 0);
    let out = run(
        dir.path(),
        &["compare", "--problem", "game.json", "--solvers", "npdhg1,npdhg2,pdhg", "--max-iter", "5000", "--out", "cmp"],
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let summary = read(dir.path(), "cmp_summary.csv");
    let pdhg_line = summary.lines().find(|l| l.starts_with("pdhg,")).unwrap();
    assert!(pdhg_line.contains("max_iter"), "{pdhg_line}");
    let npdhg1_line = summary.lines().find(|l| l.starts_with("npdhg1,")).unwrap();
    assert!(npdhg1_line.contains("converged"), "{npdhg1_line}");
}

#[test]
fn single_solver_compare_degenerates_to_solve_output() {
    let dir = tempfile::tempdir().unwrap();
    generate_bp(dir.path());
    let out = run(dir.path(), &["compare", "--problem", "bp.json", "--solvers", "palm", "--out", "solo"]);
    assert_eq!(code(&out), 0);
    assert!(read(dir.path(), "solo.csv").starts_with("k,palm"));
    assert_eq!(read(dir.path(), "solo_summary.csv").lines().count(), 2);
}

#[test]
fn env_defaults_file_is_honored_with_cli_precedence() {
    let dir = tempfile::tempdir().unwrap();
    generate_bp(dir.path());
    std::fs::write(dir.path().join("defaults.json"), r#"{"solver": "palm", "max_iter": 4}"#).unwrap();

    // env file supplies both the solver and the iteration cap
    let out = bin()
        .current_dir(dir.path())
        .env("PROXALM_DEFAULTS", dir.path().join("defaults.json"))
        .args(["solve", "--problem", "bp.json", "--out", "t"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("iterations=4"));

    // a command-line flag overrides the file
    let out = bin()
        .current_dir(dir.path())
        .env("PROXALM_DEFAULTS", dir.path().join("defaults.json"))
        .args(["solve", "--problem", "bp.json", "--max-iter", "100000", "--out", "t"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{out:?}");

    // an explicit --config file sits between the env defaults and the flags
    std::fs::write(dir.path().join("cfg.json"), r#"{"max_iter": 6}"#).unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("PROXALM_DEFAULTS", dir.path().join("defaults.json"))
        .args(["solve", "--problem", "bp.json", "--config", "cfg.json", "--out", "t"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("iterations=6"));
}

#[test]
fn solve_accepts_inline_generation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["solve", "--kind", "basis_pursuit", "--m", "12", "--n", "30", "--sparsity", "2", "--seed", "5", "--solver", "balm", "--out", "t"],
    );
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(dir.path().join("t.csv").exists());
    assert!(dir.path().join("t.json").exists());
}

#[test]
fn multiblock_problems_route_to_block_solvers() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["generate", "--kind", "multi_block_l1", "--blocks", "3", "--m", "10", "--block-n", "8", "--seed", "2", "--out", "mb.json"],
    );
    assert_eq!(code(&out), 0);
    for solver in ["pdalm", "dpalm"] {
        let out = run(dir.path(), &["solve", "--problem", "mb.json", "--solver", solver, "--out", solver]);
        assert_eq!(code(&out), 0, "{solver}: {out:?}");
    }
}
