use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn evoctrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoctrl")).args(args).output().unwrap()
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    evoctrl(&args)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn oracle_scalar_toy_reports_minus_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("oracle", &configs().join("a4_oracle_scalar.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("\nvalue = -0.5\n"), "{manifest}");
    assert!(manifest.contains("status = pass"));
    assert!(manifest.contains(concat!("evoctrl ", env!("CARGO_PKG_VERSION"))));
    assert!(manifest.contains("wall_time_s = "));
}

#[test]
fn dp_check_writes_fifty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("dp-check", &configs().join("a3_dp_check.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("suboptimality.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("control,gap,pass"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 50);
    for row in rows {
        let gap: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(gap <= 1e-3);
    }
    assert!(fs::read_to_string(dir.path().join("manifest.txt")).unwrap().contains("seed = 7"));
}

#[test]
fn identical_seed_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("a3_dp_check.toml");
    run("dp-check", &cfg, a.path(), &["--seed", "21"]);
    run("dp-check", &cfg, b.path(), &["--seed", "21"]);
    let read = |d: &Path| fs::read(d.join("suboptimality.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let c = tempfile::tempdir().unwrap();
    run("dp-check", &cfg, c.path(), &["--seed", "22"]);
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn negative_epsilon_exits_two_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\nname = \"vintage-nondegenerate\"\n[synthesize.regularization]\nlambda = 1e-8\nepsilon = -0.01\nbeta = 1e-3\n",
    );
    let out = run("synthesize", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "[problem]\nname = \"heat\"\n");
    let out = run("simulate", &unknown, &dir.path().join("o1"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.name"));

    let out = run("fly", &unknown, &dir.path().join("o2"), &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = run("simulate", &dir.path().join("missing.toml"), &dir.path().join("o3"), &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = run("verify", &configs().join("a3_dp_check.toml"), &dir.path().join("o4"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("command"));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // two feedback pieces miss the value by far more than 1e-6
    let cfg = write_config(
        dir.path(),
        "[problem]\nname = \"vintage-nondegenerate\"\n[simulate]\npieces = 2\ntolerance = 1e-6\n",
    );
    let out = run("simulate", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap().contains("status = fail"));
}

#[test]
fn every_scenario_config_passes() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let command = text
            .lines()
            .find_map(|l| l.strip_prefix("command = \""))
            .map(|l| l.trim_end_matches('"').to_string())
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run(&command, &path, dir.path(), &[]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stdout));
    }
}
