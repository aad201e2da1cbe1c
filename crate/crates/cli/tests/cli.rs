use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
[model]
beta = 2
rho_max = 1
sigma = 0.01

[grid]
lx = 4
ly = 2
nx = 32
ny = 16

[run]
t_end = 0.5
dt = 0.05
snapshot_every = 5
max_substep = 0.0125
sweep_sigmas = 0.04, 0.02
sweep_betas = 1, 2

[mfg]
t_end = 0.2
dt = 0.02

[particles]
count = 2000
";

fn hughes(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hughes"))
        .args(args)
        .current_dir(dir)
        .env_remove("GH_THREADS")
        .output()
        .expect("binary runs")
}

fn setup(extra: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), format!("{SMALL}{extra}")).unwrap();
    dir
}

fn manifest_artifacts(dir: &Path) -> Vec<String> {
    let m = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    m.lines()
        .skip_while(|l| *l != "[artifacts]")
        .skip(1)
        .take_while(|l| *l != "[config]")
        .map(str::to_string)
        .collect()
}

#[test]
fn simulate_writes_reproducible_run_directory() {
    let dir = setup("");
    let out = hughes(&["simulate", "run.cfg", "--out", "a"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = dir.path().join("a");
    let artifacts = manifest_artifacts(&a);
    assert!(artifacts.contains(&"diagnostics.csv".to_string()));
    assert!(artifacts.contains(&"snapshots/rho_000010.txt".to_string()));
    assert!(artifacts.contains(&"config.cfg".to_string()));
    for art in &artifacts {
        assert!(a.join(art).exists(), "{art}");
    }
    let diag = fs::read_to_string(a.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 12);

    let rerun = hughes(
        &[
            "--threads",
            "2",
            "simulate",
            "--config",
            "a/config.cfg",
            "--out",
            "b",
        ],
        dir.path(),
    );
    assert!(rerun.status.success());
    assert_eq!(
        diag,
        fs::read_to_string(dir.path().join("b/diagnostics.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_one_with_lines() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.cfg"),
        SMALL.replace("beta = 2", "beta = 3"),
    )
    .unwrap();
    let out = hughes(&["simulate", "bad.cfg", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2: beta out of [0,2]"), "{err}");
}

#[test]
fn check_reports_saturated_initial_density() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "sweep_betas = 1, 2",
        "sweep_betas = 1, 2\ninit_background = 0.9",
    );
    fs::write(dir.path().join("run.cfg"), text).unwrap();
    let out = hughes(&["check", "run.cfg", "--out", "c"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");
    assert!(stdout.contains("cell ("), "{stdout}");

    let ok = hughes(&["check", "--config", "../run.cfg"], &dir.path().join("c"));
    assert_eq!(ok.status.code(), Some(1));
}

#[test]
fn check_passes_on_valid_config() {
    let dir = setup("");
    let out = hughes(&["check", "run.cfg", "--out", "c"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn render_writes_pixmap_and_arrows() {
    let dir = setup("");
    assert!(hughes(&["simulate", "run.cfg", "--out", "s"], dir.path())
        .status
        .success());
    let out = hughes(
        &[
            "render",
            "s/snapshots/rho_000005.txt",
            "--config",
            "run.cfg",
            "--every",
            "4",
            "--out",
            "img",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ppm = fs::read(dir.path().join("img/rho_000005.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n32 16\n255\n"));
    assert_eq!(ppm.len(), b"P6\n32 16\n255\n".len() + 3 * 32 * 16);
    let arrows = fs::read_to_string(dir.path().join("img/rho_000005_arrows.csv")).unwrap();
    assert_eq!(arrows.lines().next(), Some("x,y,u,v"));
    assert_eq!(arrows.lines().count(), 1 + 8 * 4);
}

#[test]
fn mfg_converges_or_exits_two() {
    let dir = setup("");
    let out = hughes(&["mfg", "run.cfg", "--out", "m"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let energy = fs::read_to_string(dir.path().join("m/energy.csv")).unwrap();
    assert!(energy.starts_with("initial_pairing,terminal_pairing,dissipation,residual\n"));

    let text = SMALL.replace("dt = 0.02", "dt = 0.02\npicard_max_outer = 1");
    fs::write(dir.path().join("short.cfg"), text).unwrap();
    let out = hughes(&["mfg", "short.cfg", "--out", "m2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("m2/picard_residuals.csv").exists());
}

#[test]
fn particles_and_sweeps_write_tables() {
    let dir = setup("");
    let out = hughes(
        &["particles", "run.cfg", "--out", "p", "--seed", "9"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cmp = fs::read_to_string(dir.path().join("p/comparison.csv")).unwrap();
    assert_eq!(cmp.lines().next(), Some("t,l1_distance,alive_fraction"));
    assert_eq!(cmp.lines().count(), 1 + 3);
    let ens = fs::read_to_string(dir.path().join("p/ensemble.csv")).unwrap();
    assert_eq!(ens.lines().count(), 1 + 2000);
    assert!(fs::read_to_string(dir.path().join("p/config.cfg"))
        .unwrap()
        .contains("seed = 9"));

    assert!(
        hughes(&["sweep-sigma", "run.cfg", "--out", "s"], dir.path())
            .status
            .success()
    );
    let sweep = fs::read_to_string(dir.path().join("s/sigma_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2);

    assert!(hughes(&["sweep-beta", "run.cfg", "--out", "b"], dir.path())
        .status
        .success());
    assert!(dir.path().join("b/diagnostics_beta_1.csv").exists());
    let cmp = fs::read_to_string(dir.path().join("b/beta_sweep.csv")).unwrap();
    assert!(cmp.starts_with("t,variance_beta_1,rho_max_beta_1,variance_beta_2,rho_max_beta_2\n"));
}

#[test]
fn thread_count_from_environment() {
    let dir = setup("");
    let out = Command::new(env!("CARGO_BIN_EXE_hughes"))
        .args(["particles", "run.cfg", "--out", "p1"])
        .current_dir(dir.path())
        .env("GH_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(hughes(
        &["--threads", "3", "particles", "run.cfg", "--out", "p3"],
        dir.path()
    )
    .status
    .success());
    let read = |d: &str| fs::read(dir.path().join(d).join("comparison.csv")).unwrap();
    assert_eq!(read("p1"), read("p3"));
}
