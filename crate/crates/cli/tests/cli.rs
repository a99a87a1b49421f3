use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ldk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../transform/corpus")
        .join(rel)
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("ldk-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn list_names_every_example() {
    let out = ldk(&["list"]);
    assert!(out.status.success());
    let names: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert!(
        names.contains(&"primes".to_string()) && names.contains(&"xorshift".to_string()),
        "{names:?}"
    );
}

#[test]
fn run_example_prints_and_succeeds() {
    let out = ldk(&["run", "primes"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "List(2, 3, 5, 7, 11, 13)\n");
}

#[test]
fn run_unknown_target_exits_with_two() {
    let out = ldk(&["run", "no-such-example"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-example"));
}

#[test]
fn run_file_checks_expected_lines() {
    let good = scratch("good.dsl", "// expect: 3\nprintln(1 + 2)\n");
    assert_eq!(ldk(&["run", good.to_str().unwrap()]).status.code(), Some(0));
    let bad = scratch("bad.dsl", "// expect: 4\nprintln(1 + 2)\n");
    assert_eq!(ldk(&["run", bad.to_str().unwrap()]).status.code(), Some(1));
    let broken = scratch("broken.dsl", "println(1 +\n");
    assert_eq!(
        ldk(&["run", broken.to_str().unwrap()]).status.code(),
        Some(1)
    );
    for p in [good, bad, broken] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn transform_prints_the_golden_rewrite() {
    let source = corpus("tail-bang.dsl");
    let eta = ldk(&["transform", source.to_str().unwrap()]);
    assert!(eta.status.success());
    let golden = std::fs::read_to_string(corpus("golden/tail-bang.dsl")).unwrap();
    assert_eq!(stdout(&eta).trim_end(), golden.trim_end());

    let plain = ldk(&["transform", source.to_str().unwrap(), "--no-eta"]);
    let golden = std::fs::read_to_string(corpus("golden/tail-bang.no-eta.dsl")).unwrap();
    assert_eq!(stdout(&plain).trim_end(), golden.trim_end());
}

#[test]
fn transform_reports_errors() {
    let bad = scratch("outside.dsl", "println(!Get())\n");
    let out = ldk(&["transform", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let _ = std::fs::remove_file(bad);
}

#[test]
fn bench_emits_one_row() {
    let out = ldk(&[
        "bench",
        "--case",
        "sum-right",
        "--size",
        "100",
        "--iterations",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let row: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(row["case"], "sum-right");
    assert_eq!(row["size"], 100);
    assert_eq!(row["iterations"], 2);

    let csv = ldk(&[
        "bench",
        "--case",
        "cartesian-traverse",
        "--size",
        "4",
        "--format",
        "csv",
        "--scheduler",
        "pool:2",
    ]);
    assert!(csv.status.success());
    let text = stdout(&csv);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("case,size,iterations,wall_time_ns,ops_per_sec,stack_probe_max")
    );
    assert!(lines.next().unwrap().starts_with("cartesian-traverse,4,"));
}

#[test]
fn bench_rejects_bad_arguments() {
    assert!(!ldk(&["bench", "--case", "nope", "--size", "1"])
        .status
        .success());
    assert!(!ldk(&[
        "bench",
        "--case",
        "sum-left",
        "--size",
        "1",
        "--scheduler",
        "pool:0"
    ])
    .status
    .success());
}
