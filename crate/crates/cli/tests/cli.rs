use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn nlbd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlbd"))
        .args(args)
        .env_remove("NLBD_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn correlated(dir: &Path, name: &str, alpha: f64, eps: f64) -> PathBuf {
    let path = dir.join(name);
    let text = format!(
        "kind=correlators\nalpha={alpha}\nbeta={alpha}\ngamma={alpha}\nomega={alpha}\nd1=1\nd2=1\nd3=1\neps={eps}\n"
    );
    fs::write(&path, text).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn value_of_correlated_box() {
    let dir = TempDir::new().unwrap();
    let f = correlated(dir.path(), "c.box", 0.5, 0.01);
    let o = nlbd(&["value", arg(&f)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "value=2.99");
}

#[test]
fn or_distillation_writes_a_box_that_reparses() {
    let dir = TempDir::new().unwrap();
    let f = correlated(dir.path(), "c.box", 0.5, 0.01);
    let out = dir.path().join("d.box");
    let o = nlbd(&["distill", "--protocol", "or", "--copies", "2", arg(&f), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "value=3.239975");
    let again = nlbd(&["value", arg(&out)]);
    assert_eq!(stdout(&again).trim(), "value=3.239975");
    assert!(nlbd(&["validate", arg(&out)]).status.success());
}

#[test]
fn invalid_box_is_reported() {
    let dir = TempDir::new().unwrap();
    let f = correlated(dir.path(), "bad.box", 0.5, -0.1);
    let o = nlbd(&["validate", arg(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("-0.025"), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_2() {
    let o = nlbd(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(nlbd(&["value", "--bogus", "x"]).status.code(), Some(2));
    assert_eq!(nlbd(&["tables", "--which", "7"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let f = correlated(dir.path(), "c.box", 0.5, 0.01);
    let o = nlbd(&["distill", "--protocol", "xor", arg(&f)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_and_parse_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.box");
    let o = nlbd(&["value", arg(&missing)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!stderr(&o).is_empty());
    let junk = dir.path().join("junk.box");
    fs::write(&junk, "kind=matrix\nrow00=1,2\n").unwrap();
    assert_eq!(nlbd(&["value", arg(&junk)]).status.code(), Some(3));
}

#[test]
fn budget_errors_exit_4() {
    let dir = TempDir::new().unwrap();
    let f = correlated(dir.path(), "c.box", 0.5, 0.01);
    let o = nlbd(&["search", "--class", "nonadaptive", "--m", "13", arg(&f)]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let f = correlated(dir.path(), "c.box", 0.45, 0.05);
    let runs: Vec<String> = ["1", "3", "8"]
        .iter()
        .map(|t| {
            let search = nlbd(&["--threads", t, "search", "--class", "nonadaptive", "--input-dependent", arg(&f)]);
            let adaptive = nlbd(&["--threads", t, "search", "--class", "adaptive", arg(&f)]);
            let scan = nlbd(&["--threads", t, "scan", "--alpha", "0.2:0.5:0.05", "--eps", "-0.3:0.3:0.05"]);
            assert!(search.status.success() && adaptive.status.success() && scan.status.success());
            stdout(&search) + &stdout(&adaptive) + &stdout(&scan)
        })
        .collect();
    assert!(runs.iter().all(|r| r == &runs[0]));
}

#[test]
fn threads_from_environment() {
    let dir = TempDir::new().unwrap();
    let f = correlated(dir.path(), "c.box", 0.5, 0.01);
    let o = Command::new(env!("CARGO_BIN_EXE_nlbd"))
        .args(["search", "--class", "nonadaptive", arg(&f)])
        .env("NLBD_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("best_value=3.239975"));
}

#[test]
fn scan_writes_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scan.csv");
    let o = nlbd(&["scan", "--alpha", "0.5", "--eps", "0.01", "--out", arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("alpha,beta,delta,eps,valid"));
    assert_eq!(lines.next().unwrap(), "0.5,0.5,1,0.01,true,2.99,2.9999,3.239975,2.992475,or,false");
}

#[test]
fn tables_print_diffs() {
    let o = nlbd(&["tables", "--which", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).trim_end().ends_with("flagged cells: 7"));
}

#[test]
fn equiv_writes_constructed_boxes() {
    let dir = TempDir::new().unwrap();
    let o = nlbd(&["equiv", "--delta", "0.3", "--out-dir", arg(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("proto=adaptive2;tables=56466b"));
    let n1 = dir.path().join("N1.box");
    let n2 = dir.path().join("N2.box");
    let wired = dir.path().join("w.box");
    let o = nlbd(&["distill", "--protocol", "parity", arg(&n1), arg(&n2), "--out", arg(&wired)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bs = dir.path().join("bs.box");
    let iso = dir.path().join("iso.box");
    fs::write(&iso, "kind=correlators\nalpha=0\nbeta=0\ngamma=0\nomega=0\nd1=0.3\nd2=0.3\nd3=0.3\neps=-0.3\n").unwrap();
    let o = nlbd(&["distill", "--protocol", "adaptive:56466b", arg(&iso), "--copies", "2", "--out", arg(&bs)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&nlbd(&["value", arg(&wired)])), stdout(&nlbd(&["value", arg(&bs)])));
}

#[test]
fn xor_parity_distillation() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("x.box");
    fs::write(&f, "kind=xor\nn=2\nf=0001\ndelta=0.5,0.5,0.5,-0.5\n").unwrap();
    let o = nlbd(&["value", arg(&f)]);
    assert_eq!(stdout(&o).trim(), "value=2");
    let o = nlbd(&["distill", "--protocol", "parity", "--copies", "3", arg(&f)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("value=0.5"));
}
