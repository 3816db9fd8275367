use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lft-ident"))
}

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/mass_spring_damper.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Reference configuration with `edit` applied to its text.
fn variant(dir: &Path, name: &str, edit: impl Fn(String) -> String) -> PathBuf {
    let src = std::fs::read_to_string(reference_config()).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, edit(src)).unwrap();
    path
}

fn value(report: &str, key: &str) -> Vec<f64> {
    let line = report.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key} in {report}"));
    let inner = line.split('=').nth(1).unwrap().trim().trim_start_matches('[').trim_end_matches(']');
    inner.split(',').map(|v| v.trim().parse().unwrap()).collect()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_config();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--samples", "10", "--seed", "1", "--sigma", "0", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let body = std::fs::read_to_string(&a).unwrap();
    assert_eq!(body.lines().count(), 11);
    assert_eq!(body, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn missing_config_exits_with_config_error() {
    let o = run(&["simulate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = variant(dir.path(), "bad.toml", |s| s.replace("A_xx", "A_bad"));
    assert_eq!(run(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let wrong = variant(dir.path(), "wrong.toml", |s| s.replace("C_yx = [[0.0, 0.0, 100.0, 0.0]]", "C_yx = [[0.0, 100.0, 0.0]]"));
    assert_eq!(run(&["simulate", "--config", wrong.to_str().unwrap()]).status.code(), Some(2));
}

const CLASH: &str = r#"
[plant]
E = [[1.0]]
A_xx = [[-1.0]]
B_xu = [[1.0]]
B_xv = [[1.0]]
C_yx = [[1.0]]
C_zx = [[1.0]]
D_zu = [[0.0]]
D_zv = [[0.0]]
D_yu = [[0.0]]
D_yv = [[0.0]]
P = [ [[0.0]] ]
theta_box = [[-1.0, 1.0]]

[generator]
Xi = [[-1.0]]
Pi = [[1.0]]
xi0 = [1.0]

[experiment]
theta_true = [0.5]
"#;

#[test]
fn shared_eigenvalue_exits_with_assumption_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("clash.toml");
    std::fs::write(&cfg, CLASH).unwrap();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--samples", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("share an eigenvalue"));
}

#[test]
fn identify_recovers_truth_from_noise_free_steady_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "steady.toml", |s| s.replace("settle_time = 2.3258", "settle_time = 2.3258\nx0 = \"steady\""));
    let samples = dir.path().join("s.csv");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", samples.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("report");
    let o = run(&["identify", "--config", cfg.to_str().unwrap(), "--samples", samples.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = text(&o);
    let hat = value(&report, "theta_hat");
    let truth = [0.1852, 0.5126, 6.2582];
    for (h, t) in hat.iter().zip(truth) {
        assert!((h - t).abs() < 1e-6, "{h} vs {t}");
    }
    for f in ["report.txt", "theta.csv", "hbar.csv", "excitation.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn identify_with_one_sample_is_not_exciting() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_config();
    let samples = dir.path().join("one.csv");
    run(&["simulate", "--config", cfg.to_str().unwrap(), "--samples", "1", "--out", samples.to_str().unwrap()]);
    let o = run(&["identify", "--config", cfg.to_str().unwrap(), "--samples", samples.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn identify_with_duplicated_basis_is_not_identifiable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "dup.toml", |s| {
        s.replace("      [[0.0], [1.0], [0.0]],", "      [[1.0], [0.0], [0.0]],")
            .replace("theta_true = [0.1852, 0.5126, 6.2582]", "theta_true = [0.1, 0.1, 3.0]")
    });
    let samples = dir.path().join("s.csv");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", samples.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["identify", "--config", cfg.to_str().unwrap(), "--samples", samples.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn excitation_passes_on_reference_configuration() {
    let o = run(&["excitation", "--config", reference_config().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report = text(&o);
    for key in ["gzu_frr=PASS", "augmented_frr=PASS", "ubar_frr=PASS", "psi_fcr=PASS", "identifiable_at_theta=PASS"] {
        assert!(report.contains(key), "{key} missing in\n{report}");
    }
}

#[test]
fn montecarlo_writes_summary_and_trials() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "mc.toml", |s| s.replace("trials = 5", "trials = 5\ndlse = false"));
    let out = dir.path().join("mc");
    let start = std::time::Instant::now();
    let o = run(&["montecarlo", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(start.elapsed().as_secs() < 60);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("sigma,N,sigma1,sigma2,trials,median_Ere_proposed"));
    assert_eq!(summary.lines().count(), 5);
    assert_eq!(std::fs::read_to_string(out.join("trials.csv")).unwrap().lines().count(), 21);
    let again = run(&["montecarlo", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert!(text(&again).contains(summary.trim_end()));
}

#[test]
fn baseline_reports_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "b.toml", |s| s.replace("samples = 200", "samples = 60"));
    let out = dir.path().join("b");
    let o = run(&["baseline", "--config", cfg.to_str().unwrap(), "--starts", "2", "--sigma", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = text(&o);
    assert!(report.contains("dlse_fail_count"));
    let csv = std::fs::read_to_string(out.join("baseline.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn bad_tolerance_override_is_a_config_error() {
    let o = run(&["excitation", "--config", reference_config().to_str().unwrap(), "--tol-rank", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}
