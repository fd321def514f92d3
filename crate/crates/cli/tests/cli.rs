use std::path::Path;
use std::process::{Command, Output};

fn polctl(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_polctl"));
    cmd.args(args).env_remove("POLCTL_SEED");
    if let Some(s) = env_seed {
        cmd.env("POLCTL_SEED", s);
    }
    cmd.output().expect("spawn polctl")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SHORT_RUN: &str =
    "seed = 5\nchannel.dgd_ps = 0.0\nchannel.drift_rate = 1.0\nrun.duration_s = 0.3\nrun.record_every = 10\n";

#[test]
fn oracle_check_writes_report_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = polctl(&["oracle-check", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("oracle_check.json")).unwrap();
    assert!(report.contains("\"pass\": true"));
    assert!(out.join("config.toml").exists());
}

#[test]
fn oracle_check_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "oracle_check.samples = 20\noracle_check.threshold = 1e-30\n");
    let out = dir.path().join("out");
    let o = polctl(&["oracle-check", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "channel.dgd = 1.0\n");
    let o = polctl(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dgd"));
}

#[test]
fn run_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let out = dir.path().join("out");
    let o = polctl(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("t_s,sig_s1,sig_s2,sig_s3,deviation_deg,loss,i1,i3\n"));
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 5"));
}

#[test]
fn seed_precedence_flag_env_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 3\n");
    let seed_of = |args: &[&str], env: Option<&str>| {
        let mut full = vec!["config", "--config", &cfg];
        full.extend_from_slice(args);
        let o = polctl(&full, env);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        text.lines().find(|l| l.starts_with("seed = ")).unwrap().to_owned()
    };
    assert_eq!(seed_of(&[], None), "seed = 3");
    assert_eq!(seed_of(&[], Some("11")), "seed = 11");
    assert_eq!(seed_of(&["--seed", "42"], Some("11")), "seed = 42");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = polctl(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], None);
        assert!(o.status.success());
    }
    for name in ["series.csv", "references.csv", "summary.json", "config.toml"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn unknown_preset_rejected() {
    let o = polctl(&["run", "--preset", "nope"], None);
    assert_eq!(o.status.code(), Some(2));
}
