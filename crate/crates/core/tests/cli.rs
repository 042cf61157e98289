use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transform-ident"))
        .args(args)
        .arg("--output")
        .arg(out)
        .env_remove("TRANSFORM_IDENT_OUTPUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn manifest(dir: &Path) -> toml::Table {
    std::fs::read_to_string(dir.join("manifest.toml"))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn oracle_succeeds_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    let o = bin(&["oracle", "--model", "M3", "--set", "grid.points=201"], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["lambda.csv", "reconstruction.csv", "plot.csv", "metadata.toml"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let plot = std::fs::read_to_string(dir.join("plot.csv")).unwrap();
    assert!(plot.starts_with("y,h,lambda,residual,interpolated_flag\n"));
    assert_eq!(plot.lines().count(), 202);
    assert_eq!(manifest(&dir)["run"]["exit_code"].as_integer(), Some(0));
}

#[test]
fn homoscedastic_oracle_exits_with_identification_code() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["oracle", "--model", "M2"], tmp.path());
    assert_eq!(code(&o), 3);
    let m = manifest(tmp.path());
    assert_eq!(m["run"]["status"].as_str(), Some("failed"));
    assert_eq!(m["run"]["exit_code"].as_integer(), Some(3));
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&bin(&["oracle"], tmp.path())), 2);
    assert_eq!(code(&bin(&["oracle", "--model", "M9"], tmp.path())), 2);
    assert_eq!(
        code(&bin(&["oracle", "--model", "M1", "--set", "grid.bogus=1"], tmp.path())),
        2
    );
    assert_eq!(
        code(&bin(&["mc", "--model", "M1", "--set", "mc.replications=3"], tmp.path())),
        2
    );
}

#[test]
fn missing_input_exits_with_io_code() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.csv");
    let o = bin(
        &["estimate", "--input", missing.to_str().unwrap()],
        &tmp.path().join("e"),
    );
    assert_eq!(code(&o), 5);
}

#[test]
fn failed_verification_exits_with_code_six() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = bin(
        &["verify", "--model", "M1", "--set", "verify.gronwall_instances=50"],
        &tmp.path().join("a"),
    );
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let strict = bin(
        &[
            "verify",
            "--model",
            "M1",
            "--set",
            "verify.ivp_tol=1e-30",
            "--set",
            "verify.gronwall_instances=50",
        ],
        &tmp.path().join("b"),
    );
    assert_eq!(code(&strict), 6);
    assert!(tmp.path().join("b/verify.toml").is_file());
}

#[test]
fn simulate_then_estimate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let o = bin(&["simulate", "--model", "M1", "-n", "3000", "--seed", "21"], &sim);
    assert_eq!(code(&o), 0);
    let samples = sim.join("samples.csv");
    let text = std::fs::read_to_string(&samples).unwrap();
    assert_eq!(text.lines().count(), 3001);
    let est = tmp.path().join("est");
    let o = bin(&["estimate", "--input", samples.to_str().unwrap()], &est);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let diag: toml::Table = std::fs::read_to_string(est.join("diagnostic.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(diag["verdict"].as_str(), Some("heteroscedastic"));
    let h = std::fs::read_to_string(est.join("h_hat.csv")).unwrap();
    assert!(h.starts_with("y,h,residual,interpolated_flag\n"));
    let lam = std::fs::read_to_string(est.join("lambda_hat.csv")).unwrap();
    assert!(lam.starts_with("y,lambda,std_error\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let args = ["simulate", "--model", "M6", "-n", "500", "--seed", "3"];
    assert_eq!(code(&bin(&args, &dir)), 0);
    let first = (
        std::fs::read(dir.join("samples.csv")).unwrap(),
        std::fs::read(dir.join("manifest.toml")).unwrap(),
    );
    assert_eq!(code(&bin(&args, &dir)), 0);
    assert_eq!(std::fs::read(dir.join("samples.csv")).unwrap(), first.0);
    assert_eq!(std::fs::read(dir.join("manifest.toml")).unwrap(), first.1);

    let other = tmp.path().join("t");
    assert_eq!(
        code(&bin(&["simulate", "--model", "M6", "-n", "500", "--seed", "4"], &other)),
        0
    );
    assert_ne!(std::fs::read(other.join("samples.csv")).unwrap(), first.0);
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "model = \"M1\"\nn = 100\n[grid]\npoints = 51\n").unwrap();
    let dir = tmp.path().join("out");
    let o = bin(&["simulate", "--config", cfg.to_str().unwrap(), "-n", "80"], &dir);
    assert_eq!(code(&o), 0);
    let lines = std::fs::read_to_string(dir.join("samples.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(lines, 81);
    assert_eq!(manifest(&dir)["config"]["n"].as_integer(), Some(80));
}
