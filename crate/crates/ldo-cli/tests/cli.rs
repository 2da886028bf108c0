//! Black-box tests of the `ldo` binary: subcommands, outputs, exit codes.

use std::path::Path;
use std::process::Command;

fn ldo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ldo"))
}

fn write_gap_config(dir: &Path, rate: &str) -> std::path::PathBuf {
    let path = dir.join("cfg.toml");
    std::fs::write(
        &path,
        format!(
            r#"
[experiment]
kind = "gap_curve"
seed = 5
output_dir = "{}"

[problem]
kind = "newsvendor"
price = 1.65
rho = 0.05
d = 3
objectives = ["regret"]

[rate]
kind = "{rate}"

[penalty]
betas = [0.5, 1.0]

[solver]
r_values = [0.1]
multistart = 8

[sim]
theta = [0.3, 0.45, 0.25]
floor = 0.01
"#,
            dir.join("out").display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn gap_curve_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_gap_config(dir.path(), "rel_entropy");
    let out = ldo().args(["gap-curve", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("out/gap_curve.csv");
    assert!(csv.exists());
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.contains("beta,r,g,gap_true,gap_avg,error"));
    assert!(dir.path().join("out/gap_curve.svg").exists());
}

#[test]
fn config_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[experiment]\nkind = \"gap_curve\"\nseed = 1\nbogus = true\n").unwrap();
    let out = ldo().args(["gap-curve", "-c"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn missing_config_file_exits_nonzero() {
    let out = ldo()
        .args(["gap-curve", "-c", "/nonexistent/cfg.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn decide_prints_solution_and_respects_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_gap_config(dir.path(), "lln");
    // kind mismatch is fine: decide ignores experiment.kind
    let measure = dir.path().join("m.csv");
    std::fs::write(&measure, "0.2,0.5,0.3\n").unwrap();
    let outdir = dir.path().join("alt");
    let out = ldo()
        .args(["decide", "-c"])
        .arg(&cfg)
        .args(["-i"])
        .arg(&measure)
        .args(["--seed", "9", "--out"])
        .arg(&outdir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("x_star:"));
    assert!(stdout.contains("u_star:"));
    assert!(stdout.contains("theta_star:"));
    assert!(outdir.join("decide.csv").exists());
}

#[test]
fn decide_off_simplex_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_gap_config(dir.path(), "rel_entropy");
    let measure = dir.path().join("m.csv");
    std::fs::write(&measure, "0.9,0.4,0.2\n").unwrap();
    let out = ldo()
        .args(["decide", "-c"])
        .arg(&cfg)
        .args(["-i"])
        .arg(&measure)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // the offending sum is named
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.5"));
}

#[test]
fn sanov_check_runs_green() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sanov.toml");
    std::fs::write(
        &cfg,
        format!(
            r#"
[experiment]
kind = "sanov_check"
seed = 1
output_dir = "{}"

[sim]
theta = [0.3, 0.7]

[verify]
n_list = [5, 10]
radii = [0.0, 0.05]
ball_grid = 25
"#,
            dir.path().join("out").display()
        ),
    )
    .unwrap();
    let out = ldo().args(["sanov-check", "-c"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("out/sanov_check.csv").exists());
}
