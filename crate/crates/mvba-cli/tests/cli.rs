use std::path::PathBuf;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvba-sim")).args(args).output().expect("spawn mvba-sim")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_reports_run_count() {
    let o = sim(&["validate", &scenario("reducer-scaling.toml")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("4 grid point(s), 400 run(s)"), "{}", stdout(&o));
}

#[test]
fn run_small_range_and_reaggregate() {
    let dir = std::env::temp_dir().join(format!("mvba-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("recs.jsonl");
    let o = sim(&["run", &scenario("reducer-crash.toml"), "--seeds", "1..5", "-o", out.to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("PASS safety") && text.contains("OVERALL PASS"), "{text}");
    let lines = std::fs::read_to_string(&out).unwrap();
    assert_eq!(lines.lines().count(), 5);

    let o = sim(&["aggregate", out.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["aggregate"]["runs"], 5);
    assert_eq!(v["pass"], true);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn single_seed_is_reproducible() {
    let a = sim(&["run", &scenario("reducerpp-adaptive.toml"), "--seed", "3", "--format", "json"]);
    let b = sim(&["run", &scenario("reducerpp-adaptive.toml"), "--seed", "3", "--format", "json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn errors_exit_with_two() {
    assert_eq!(sim(&["validate", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(sim(&["run", &scenario("reducer-crash.toml"), "--seeds", "5..1"]).status.code(), Some(2));
    let empty = std::env::temp_dir().join(format!("mvba-cli-empty-{}.jsonl", std::process::id()));
    std::fs::write(&empty, "").unwrap();
    assert_eq!(sim(&["aggregate", empty.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_file(&empty).unwrap();
}

#[test]
fn strict_fails_on_a_red_scaling_check() {
    // Two tiny groups; whichever way the checks land, --strict must mirror them.
    let o = sim(&["run", &scenario("reducer-scaling.toml"), "--seeds", "1..2", "--grid", "t=1,3", "--strict"]);
    let text = stdout(&o);
    assert!(text.contains("depth ratio"), "{text}");
    let failing = text.lines().any(|l| l.starts_with("FAIL"));
    assert_eq!(o.status.code(), Some(if failing { 1 } else { 0 }), "{text}");
}
