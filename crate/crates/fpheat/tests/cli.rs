//! End-to-end checks of the `fpheat` binary: exit codes, validation
//! diagnostics, artifact and manifest layout.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpheat"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fpheat-clitest-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const GOOD: &str = "\
experiment = convolution-demo
seed = 12

[params]
s = 0.5
p = 3

[grid]
half_width = 1.0
nodes = 65

[convolution]
eps = 0.25
";

#[test]
fn usage_without_args_exits_2() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("USAGE"));
}

#[test]
fn validate_echoes_derived_exponents() {
    let dir = temp_dir("validate");
    let cfg = dir.join("good.cfg");
    std::fs::write(&cfg, GOOD).unwrap();
    let out = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("q_c = 0.5"), "{stdout}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_constraint_violation_exits_2_citing_the_range() {
    let dir = temp_dir("badp");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, GOOD.replace("p = 3", "p = 4")).unwrap();
    let out = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("2 <= p < 2/(1-s)"), "{stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_and_report_roundtrip() {
    let dir = temp_dir("run");
    let cfg = dir.join("demo.cfg");
    let out_dir = dir.join("artifacts");
    std::fs::write(&cfg, format!("out = {}\n{GOOD}", out_dir.display())).unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("manifest.txt").exists());
    assert!(out_dir.join("convolution_checks.csv").exists());

    let rep = bin().arg("report").arg(&out_dir).output().unwrap();
    assert_eq!(rep.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&rep.stdout);
    assert!(stdout.contains("convolution-demo: pass"), "{stdout}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn out_root_env_redirects_relative_outputs() {
    let dir = temp_dir("envroot");
    let cfg = dir.join("demo.cfg");
    std::fs::write(&cfg, format!("out = demo-rel\n{GOOD}")).unwrap();
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .env("FPHEAT_OUT_ROOT", &dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("demo-rel").join("manifest.txt").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn report_on_missing_dir_exits_2() {
    let out = bin().arg("report").arg("/nonexistent-fpheat-dir").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_regularity_sweep_completes_with_manifest() {
    let dir = temp_dir("sweep");
    let out_dir = dir.join("artifacts");
    let cfg = dir.join("sweep.cfg");
    std::fs::write(
        &cfg,
        format!(
            "experiment = regularity-sweep\nseed = 2\nout = {}\n\n[params]\ns = 0.5\np = 3\n\n\
             [grid]\nhalf_width = 1.0\nnodes = 101\n\n[evolve]\nt_end = 0.01\n\n\
             [sweep]\np_list = 3 2 2.5\ns_list = 0.5 0.6 0.55\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("manifest.txt").exists());
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "header plus three sweep rows:\n{csv}");
    std::fs::remove_dir_all(&dir).ok();
}
