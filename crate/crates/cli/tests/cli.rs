use std::path::Path;
use std::process::{Command, Output};

fn dic(outdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dic"))
        .env_remove("DIC_OUTPUT_DIR")
        .arg("--outdir")
        .arg(outdir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const UNSTABLE: &str = r#"
[plant]
type = "double-integrator"
x1_0 = 0.0
x2_0 = 0.0

[controller]
type = "twisting"
k1 = 1.0
k2 = 1.0

[perturbation]
type = "constant"
value = 1e308

[sim]
step = 1.0
t_end = 10.0
"#;

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = dic(dir.path(), &["run", "sf_pendulum"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sf_pendulum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,xhat1,xhat2,z,u,rho"));
    assert!(lines.next().unwrap().starts_with("0.0,2.0,2.0,,,0.0,"));
    assert_eq!(csv.lines().count(), 30_001 + 1);
    let summary = std::fs::read_to_string(dir.path().join("sf_pendulum.summary.toml")).unwrap();
    assert!(summary.starts_with("format_version = 1\n"));
    assert!(summary.contains("[config.controller]"));
}

#[test]
fn run_from_a_file_uses_its_stem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mine.toml");
    std::fs::write(&cfg, UNSTABLE.replace("1e308", "0.0")).unwrap();
    let o = dic(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("mine.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dic"))
        .env("DIC_OUTPUT_DIR", dir.path())
        .args(["run", "twisting_pendulum"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("twisting_pendulum.csv").exists());
}

#[test]
fn malformed_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let text = UNSTABLE.replace("k2 = 1.0", "k2 = 1.0\ngain = 3");
    let line = text.lines().position(|l| l == "gain = 3").unwrap() + 1;
    std::fs::write(&cfg, text).unwrap();
    let o = dic(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains(&format!("line {line}")) && err.contains("gain"), "{err}");
    assert!(!dir.path().join("bad.csv").exists());
}

#[test]
fn unknown_config_name_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dic(dir.path(), &["run", "no_such_config"])), 2);
}

#[test]
fn unstable_run_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("unstable.toml");
    std::fs::write(&cfg, UNSTABLE).unwrap();
    let o = dic(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("t = 2"), "{}", stderr(&o));
}

#[test]
fn infeasible_certificate_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = dic(dir.path(), &["study", "certify", "--L", "0.6", "--k3", "0.5"]);
    assert_eq!(code(&o), 4);
    let rec = std::fs::read_to_string(dir.path().join("study_certify.toml")).unwrap();
    assert!(rec.contains("k3 <= L"), "{rec}");
    assert!(rec.contains("evaluations = 0"));
}

#[test]
fn bundled_runs_and_figures_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        for name in ["sf_pendulum", "of_pendulum", "twisting_pendulum"] {
            assert_eq!(code(&dic(dir.path(), &["run", name])), 0);
        }
        assert_eq!(code(&dic(dir.path(), &["reproduce-figures"])), 0);
    }
    let mut files: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    files.sort();
    assert_eq!(files.len(), 3 * 2 + 5);
    for f in files {
        let x = std::fs::read(a.path().join(&f)).unwrap();
        let y = std::fs::read(b.path().join(&f)).unwrap();
        assert!(x == y, "{f:?} differs");
    }
}

#[test]
fn show_config_prints_bundled_text() {
    let dir = tempfile::tempdir().unwrap();
    let o = dic(dir.path(), &["show-config", "of_pendulum"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("l2 = 17.6"));
}
