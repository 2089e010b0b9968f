use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn wtgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wtgc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eval_prints_weight_literals() {
    let g = fixture("fx1.wtg");
    let o = wtgc(&["eval", "--grammar", g.to_str().unwrap(), "--tree", "sigma(gamma(gamma(alpha)),gamma(alpha))"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "3\n");
    let o = wtgc(&["eval", "--grammar", g.to_str().unwrap(), "--tree", "gamma(alpha)"]);
    assert_eq!(stdout(&o), "-inf\n");
}

#[test]
fn image_eval_matches_the_closed_form() {
    let (g, h) = (fixture("fx3.wtg"), fixture("fx3.hom"));
    let o = wtgc(&[
        "image-eval",
        "--grammar",
        g.to_str().unwrap(),
        "--hom",
        h.to_str().unwrap(),
        "--tree",
        "sigma(gamma(gamma(gamma(alpha))),gamma(gamma(alpha)))",
    ]);
    assert_eq!(stdout(&o), "9\n");
}

#[test]
fn tree_errors_carry_positions() {
    let g = fixture("fx1.wtg");
    let o = wtgc(&["eval", "--grammar", g.to_str().unwrap(), "--tree", "sigma(alpha)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn grammar_errors_carry_lines() {
    let dir = std::env::temp_dir().join(format!("wtgc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.wtg");
    std::fs::write(&bad, "semiring nat\nalphabet a:0 s:2\nnonterminals q\nprod s(q) -> q\n").unwrap();
    let o = wtgc(&["eval", "--grammar", bad.to_str().unwrap(), "--tree", "a"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn decide_exit_codes() {
    let fx4 = fixture("fx4.wtg");
    let o = wtgc(&["decide", "empty", "--grammar", fx4.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "support is not empty (image)\n");
    let o = wtgc(&["decide", "finite", "--grammar", fx4.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let fx1 = fixture("fx1.wtg");
    let o = wtgc(&["decide", "empty", "--grammar", fx1.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eq-restricted"));
}

#[test]
fn oracle_size_is_capped() {
    let g = fixture("fx1.wtg");
    let o = wtgc(&["transform", "normalize", "--grammar", g.to_str().unwrap(), "--oracle-size", "13"]);
    assert_eq!(o.status.code(), Some(2));
    let o = wtgc(&["transform", "normalize", "--grammar", g.to_str().unwrap(), "--oracle-size", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("agree on all trees up to size 6"));
}

#[test]
fn separation_prints_both_trees() {
    let o = wtgc(&["separation", "--n", "2"]);
    assert_eq!(stdout(&o), "f(g(a, a), g(a, a))\nfbar(g(a, a), g(a, a))\n");
}
