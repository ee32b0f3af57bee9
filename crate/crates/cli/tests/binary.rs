use std::fs;
use std::process::Command;

fn wqed() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wqed"))
}

const GOOD: &str = r#"
[physical]
gamma_tau = 1.0
phi = 1.5707963267948966

[solver]
backend = "dde"
dt = 0.1
t_max = 2.0
"#;

#[test]
fn success_prints_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, GOOD).unwrap();
    let out = dir.path().join("run");
    let o = wqed()
        .args(["emission", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "3", "--threads", "2"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with(&out.display().to_string()));
    assert!(out.join("dde.csv").is_file());
    let echo = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echo.contains("seed = 3"));
}

#[test]
fn backend_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, GOOD).unwrap();
    let out = dir.path().join("run");
    let o = wqed()
        .args(["emission", "--backend", "me", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("me_NA0.csv").is_file());
}

#[test]
fn config_problems_exit_2_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, GOOD.replace("dt = 0.1", "dt = 0.3")).unwrap();
    let o = wqed().args(["emission", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solver.dt"));

    let o = wqed().args(["emission", "--config"]).arg(dir.path().join("missing.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    fs::write(&cfg, GOOD.replace("[solver]", "[solver]\ncolour = 1")).unwrap();
    let o = wqed().args(["purcell", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn truncation_abort_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        r#"
[physical]
gamma_tau = 2.0
phi = 1.5707963267948966

[model]
n_max = 1

[drive.pulse]
W = 2.5
n_ph = 3.0

[solver]
backend = "me"
dt = 0.05
t_max = 6.0
leakage_abort = 1e-3
"#,
    )
    .unwrap();
    let o = wqed().args(["scattering", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("r")).output().unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn version_flag() {
    let o = wqed().arg("--version").output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}
