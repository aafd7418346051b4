use std::process::{Command, Output};

fn protofeat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protofeat")).args(args).output().unwrap()
}

#[test]
fn config_prints_effective_settings() {
    let out = protofeat(&["--set", "seed=42", "--set", "detect.hop=0.05", "config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 42"));
    assert!(text.contains("hop = 0.05"));
}

#[test]
fn configuration_errors_exit_2() {
    assert_eq!(protofeat(&["--set", "detect.nope=1", "config"]).status.code(), Some(2));
    assert_eq!(protofeat(&["--set", "detect.hop=-1", "config"]).status.code(), Some(2));
    assert_eq!(protofeat(&["--config", "/nonexistent/cfg.toml", "config"]).status.code(), Some(2));
    assert_eq!(protofeat(&["cope", "train"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let code = protofeat(&[
        "cope",
        "configure",
        "--prototype",
        "/nonexistent/a.wav",
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .code();
    assert_eq!(code, Some(3));
    let bogus = dir.path().join("bank.json");
    std::fs::write(&bogus, "{ not json").unwrap();
    let code = protofeat(&[
        "bcosfire",
        "respond",
        "--bank",
        bogus.to_str().unwrap(),
        "--image",
        "/nonexistent.png",
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .code();
    assert_eq!(code, Some(3));
}
