use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
}

fn slice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slice")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn profile(lines: &str) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), lines).unwrap();
    f
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_cut_choose_with_uniform_agents() {
    let v = profile("0 1 1\n0 1 1\n");
    let o = slice(&["run", path(&corpus("cut_choose.slice")), path(v.path())]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("agent1: [1/2, 1]\n"), "{out}");
    assert!(out.contains("agent2: [0, 1/2]\n"), "{out}");
    assert!(out.contains("envy-free: yes"), "{out}");
}

#[test]
fn run_surplus_leaves_the_middle() {
    let v = profile("0 1 1\n0 2 1/2 0 1\n");
    let o = slice(&["run", path(&corpus("surplus.slice")), path(v.path())]);
    let out = stdout(&o);
    assert!(out.contains("agent1: [1/2, 1]\n"), "{out}");
    assert!(out.contains("agent2: [0, 1/4]\n"), "{out}");
}

#[test]
fn run_with_too_few_valuations_is_a_runtime_error() {
    let v = profile("0 1 1\n");
    let o = slice(&["run", path(&corpus("cut_choose.slice")), path(v.path())]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn run_rejects_bad_policies_and_profiles() {
    let v = profile("0 1 1\n0 1 1\n");
    let o = slice(&[
        "run",
        path(&corpus("cut_choose.slice")),
        path(v.path()),
        "--policy",
        "sideways",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let bad = profile("0 2 1\n0 1 1\n");
    let o = slice(&["run", path(&corpus("cut_choose.slice")), path(bad.path())]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn paths_of_the_corpus() {
    for (name, n) in [
        ("cut_choose.slice", "2"),
        ("selfridge_conway.slice", "1800"),
        ("selfridge_conway_surplus.slice", "216"),
        ("waste_makes_haste.slice", "6984"),
    ] {
        let o = slice(&["paths", path(&corpus(name))]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).trim(), n, "{name}");
    }
}

#[test]
fn emit_matches_golden_files() {
    for name in [
        "cut_choose",
        "surplus",
        "selfridge_conway",
        "selfridge_conway_surplus",
        "waste_makes_haste",
    ] {
        let o = slice(&["emit", path(&corpus(&format!("{name}.slice")))]);
        assert_eq!(o.status.code(), Some(0));
        let golden = std::fs::read(corpus(&format!("golden/{name}.smt2"))).unwrap();
        assert!(o.stdout == golden, "{name}");
    }
}

#[test]
fn emit_modes_differ_only_in_conditionals() {
    let file = corpus("cut_choose.slice");
    let core = stdout(&slice(&["emit", path(&file), "--ite", "core"]));
    let imp = stdout(&slice(&["emit", path(&file), "--ite", "impl"]));
    assert_ne!(core, imp);
    // the impl encoding names the conditional's value as a fresh variable
    assert!(imp.contains("(declare-const y2_1_lo "));
    assert!(!core.contains("y2_"));
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| l.starts_with("(declare-fun") || l.starts_with("(define-fun nu"))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(strip(&core), strip(&imp));
}

#[test]
fn emit_parse_error_exits_3() {
    let bad = profile("agents 2\nlet x = in x");
    let o = slice(&["emit", path(bad.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
    let o = slice(&["paths", path(bad.path())]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn type_errors_exit_3() {
    let bad = profile("agents 2\ndivide(cake, cake)");
    let o = slice(&["check", path(bad.path())]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bench_on_an_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = slice(&["bench", path(dir.path()), "--runs", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}

fn have_z3() -> bool {
    slice_core::smt::find_solver(slice_core::smt::SolverKind::Z3).is_some()
}

#[test]
fn check_verdicts_and_exit_codes() {
    if !have_z3() {
        eprintln!("z3 not found; skipping");
        return;
    }
    let o = slice(&["check", path(&corpus("cut_choose.slice")), "--timeout", "60"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verified"));
    let o = slice(&[
        "check",
        path(&corpus("mutants/broken_cut_choose.slice")),
        "--timeout",
        "60",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("counterexample") && out.contains("ret_1_lo ="), "{out}");
    let o = slice(&[
        "check",
        path(&corpus("mutants/divide_past_end.slice")),
        "--property",
        "progress",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_writes_machine_readable_reports() {
    if !have_z3() {
        return;
    }
    let out = tempfile::NamedTempFile::new().unwrap();
    let o = slice(&["check", path(&corpus("surplus.slice")), "--out", path(out.path())]);
    assert_eq!(o.status.code(), Some(0));
    let reports: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.path()).unwrap()).unwrap();
    let r = &reports[0];
    assert_eq!(r["protocol"], "surplus");
    assert_eq!(r["property"], "envy-free");
    assert_eq!(r["verdict"], "unsat");
    assert_eq!(r["paths"], "2");
    assert!(r["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(r["constraint_size"].as_u64().unwrap() > 0);
    let script = std::fs::read(r["script_path"].as_str().unwrap()).unwrap();
    let emitted = slice(&["emit", path(&corpus("surplus.slice"))]).stdout;
    assert!(script == emitted);
}

#[test]
fn missing_solver_is_inconclusive() {
    let empty = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_slice"))
        .args(["check", path(&corpus("cut_choose.slice")), "--solver", "cvc5"])
        .env("PATH", empty.path())
        .env("SLICE_SOLVER_PATH", empty.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("inconclusive"));
}

#[test]
fn solver_path_override_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let fake = dir.path().join("z3");
    std::fs::write(&fake, "#!/bin/sh\necho unknown\necho '(:reason-unknown \"canned\")'\n").unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&fake, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    let o = Command::new(env!("CARGO_BIN_EXE_slice"))
        .args(["check", path(&corpus("cut_choose.slice"))])
        .env("SLICE_SOLVER_PATH", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("canned"), "{}", stdout(&o));
}
