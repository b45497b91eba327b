//! Command-line behavior: outputs and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn selbox(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selbox"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const KB: &str = "cond 0.2 0.2 CS | S\ncond 0.8 0.8 UG | CS\ncond 1 1 S | CS\ncond 1 1 S | UG\n";

#[test]
fn oracle_and_pmp_on_a_small_kb() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("kb.tbox"), KB).unwrap();
    let o = selbox(&["oracle", "kb.tbox", "--query", "UG | S"], dir.path());
    assert!(o.status.success());
    let v: Vec<f64> = stdout(&o).split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert!((v[0] - 0.16).abs() < 1e-9 && (v[1] - 0.96).abs() < 1e-9);

    fs::write(dir.path().join("pmp.tbox"), format!("{KB}cond 0.8 0.8 UG | (and CS S)\n")).unwrap();
    let o = selbox(&["pmp", "pmp.tbox", "--query", "UG | S"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Vec<f64> = stdout(&o).split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert!((v[0] - 0.16).abs() < 1e-9 && (v[1] - 0.96).abs() < 1e-9);
}

#[test]
fn user_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.tbox"), "cond 0.5 B | A\n").unwrap();
    fs::write(dir.path().join("kb.tbox"), KB).unwrap();
    for args in [
        vec!["oracle", "missing.tbox", "--query", "A | B"],
        vec!["oracle", "bad.tbox", "--query", "A | B"],
        vec!["oracle", "kb.tbox", "--query", "not a query"],
        vec!["train", "kb.tbox", "-o", "e.json", "--dim", "0"],
        vec!["gen", "--concepts", "1", "-o", "g.tbox"],
        vec!["frobnicate"],
    ] {
        let o = selbox(&args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(selbox(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn inconsistent_and_vacuous_answers() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("inc.tbox"), "cond 1 1 B | top\ncond 0 0 B | top\n").unwrap();
    fs::write(dir.path().join("dis.tbox"), "cond 0 0 B | A\ncond 1 1 B | C\ncond 1 1 A | C\n").unwrap();
    let o = selbox(&["oracle", "inc.tbox", "--query", "B | A"], dir.path());
    assert_eq!(stdout(&o).trim(), "INCONSISTENT");
    let o = selbox(&["oracle", "dis.tbox", "--query", "B | C"], dir.path());
    assert_eq!(stdout(&o).trim(), "VACUOUS");
}

#[test]
fn generate_train_infer_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = selbox(args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["--seed", "2", "gen", "--concepts", "5", "--domain", "100", "-o", "g.tbox", "--ground-truth", "gt.json"]);
    assert!(dir.path().join("gt.json").exists());
    run(&["normalize", "g.tbox", "-o", "n.tbox", "--share"]);
    let fast = ["--dim", "4", "--epochs", "3"];
    run(&[&["train", "n.tbox", "-o", "one.json"][..], &fast].concat());
    run(&[&["--threads", "1", "train", "n.tbox", "-o", "ens", "--ensemble", "2"][..], &fast].concat());
    assert!(dir.path().join("ens/member_1.json").exists());
    let o = run(&["infer", "one.json", "ens/member_0.json", "ens/member_1.json", "--query", "C1 | C0"]);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 4, "{out}");
    assert!(out.lines().last().unwrap().starts_with("interval\t"));
    let o = run(&["emb-error", "g.tbox", "one.json", "--csv"]);
    assert!(stdout(&o).starts_with("metric,total,pnf1,pnf2,pnf3,pnf4,other"));
}

#[test]
fn eval_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = selbox(args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    run(&["gen", "--concepts", "5", "--domain", "100", "-o", "g.tbox"]);
    run(&["--threads", "1", "eval", "g.tbox", "-o", "out", "--ensemble", "2", "--dim", "4", "--epochs", "2"]);
    for f in ["metrics.csv", "ag_curve.csv", "runtime.csv", "summary.txt", "repeat_0/queries.csv", "repeat_0/training.tbox"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}
