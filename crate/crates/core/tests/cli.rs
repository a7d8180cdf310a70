use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_broadcast-backoff")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

#[test]
fn sweep_writes_commented_csv() {
    let out = bin(&["tau-vs-m", "--m-min", "1", "--m-max", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut body = text.lines().skip_while(|l| l.starts_with('#'));
    assert!(text.starts_with('#'));
    assert!(body.next().unwrap().starts_with("M,"));
    assert_eq!(body.count(), 5);
}

#[test]
fn same_seed_same_bytes() {
    let args = ["simulate", "--seed", "7", "--slots", "20000"];
    let a = bin(&args);
    let b = bin(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, bin(&["simulate", "--seed", "8", "--slots", "20000"]).stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("bb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("lambda.csv");
    let out = bin(&["lambda-max", "--m-max", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l.starts_with("M,")));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_file_then_flags() {
    let dir = std::env::temp_dir().join(format!("bb-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.cfg");
    std::fs::write(&path, "# station\nlambda = 0.02\nW = 8\n").unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = stdout(&bin(&["wait", "--config", cfg, "--s", "0.5"]));
    let overridden = stdout(&bin(&["wait", "--config", cfg, "--lambda", "0.03", "--s", "0.5"]));
    assert!(from_file.contains("lambda: 0.02"), "{from_file}");
    assert!(overridden.contains("lambda: 0.03"), "{overridden}");
    std::fs::write(&path, "colour = blue\n").unwrap();
    assert_eq!(bin(&["wait", "--config", cfg]).status.code(), Some(4));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["validate", "--check", "PAR-1", "--check", "GF-1"]).status.code(), Some(0));
    assert_eq!(bin(&["wait", "--lambda", "0.6"]).status.code(), Some(3));
    assert_eq!(bin(&["wait", "--mode", "fair"]).status.code(), Some(4));
    assert_eq!(bin(&["wait", "--lambda", "-1"]).status.code(), Some(4));
    assert_eq!(bin(&["tau-vs-m", "--no-such-flag"]).status.code(), Some(4));
    assert_eq!(bin(&["tau-vs-m", "--m-min", "9", "--m-max", "3"]).status.code(), Some(4));
    assert_eq!(bin(&["validate", "--check", "NOPE-1"]).status.code(), Some(4));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}
