use std::path::Path;
use std::process::{Command, Output};

fn arhgls(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arhgls"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ARHGLS_THREADS")
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_column(path: &Path, col: usize) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

const SMALL: &str = "N = 40\nr = 4\nK = 10\nk_N = 2\nNs = 20, 40\n";

#[test]
fn zero_noise_round_trip_recovers_beta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "model = custom\nregressors = inv:0.5\nbeta = 0.6\nnoise_scale = 0\nK = 10\nN = 30\n",
    );
    assert!(arhgls(&["simulate", "--config", &cfg], dir.path())
        .status
        .success());
    let fit = arhgls(&["fit", "--config", &cfg], dir.path());
    assert!(
        fit.status.success(),
        "{}",
        String::from_utf8_lossy(&fit.stderr)
    );
    let truth = read_column(&dir.path().join("beta.csv"), 2);
    let estimate = read_column(&dir.path().join("beta_hat.csv"), 2);
    assert_eq!(truth.len(), 10);
    for (a, b) in truth.iter().zip(&estimate) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn experiment_table_has_one_row_per_report_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "N = 200\nr = 2\nK = 10\n");
    assert!(arhgls(&["experiment", "--config", &cfg], dir.path())
        .status
        .success());
    let text = std::fs::read_to_string(dir.path().join("efmqe.csv")).unwrap();
    let times: Vec<usize> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(text.lines().next(), Some("time,efmqe"));
    assert_eq!(times, (1..=20).map(|i| i * 10).collect::<Vec<_>>());
    let cemqe = std::fs::read_to_string(dir.path().join("cemqe.csv")).unwrap();
    assert_eq!(cemqe.lines().count(), 1 + 20 * 60);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    for cmd in ["experiment", "sweep", "normality"] {
        let (a, b) = (
            dir.path().join(format!("{cmd}_a")),
            dir.path().join(format!("{cmd}_b")),
        );
        assert!(arhgls(&[cmd, "--config", &cfg, "--seed", "42"], &a)
            .status
            .success());
        assert!(arhgls(&[cmd, "--config", &cfg, "--seed", "42"], &b)
            .status
            .success());
        for entry in std::fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(
                std::fs::read(a.join(&name)).unwrap(),
                std::fs::read(b.join(&name)).unwrap(),
                "{cmd}"
            );
        }
    }
}

#[test]
fn seed_changes_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(arhgls(&["normality", "--config", &cfg, "--seed", "1"], &a)
        .status
        .success());
    assert!(arhgls(&["normality", "--config", &cfg, "--seed", "2"], &b)
        .status
        .success());
    assert_ne!(
        std::fs::read(a.join("normality.csv")).unwrap(),
        std::fs::read(b.join("normality.csv")).unwrap()
    );
}

#[test]
fn predict_writes_a_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    assert!(arhgls(&["simulate", "--config", &cfg], dir.path())
        .status
        .success());
    let out = arhgls(&["predict", "--config", &cfg], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read_column(&dir.path().join("forecast.csv"), 1).len(), 10);
    assert_eq!(
        read_column(&dir.path().join("forecast_grid.csv"), 1).len(),
        60
    );
}

#[test]
fn bad_config_exits_1_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "N = 200\nreps = 3\n");
    let out = arhgls(&["experiment", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reps"));

    let cfg = write_cfg(dir.path(), "N = lots\n");
    let out = arhgls(&["experiment", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`N`"));

    let missing = dir.path().join("absent.cfg");
    let out = arhgls(
        &["sweep", "--config", missing.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(arhgls(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(
        arhgls(&["sweep", "--seed", "x"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        arhgls(&["sweep", "--threads", "0"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        arhgls(&["fit"], &dir.path().join("empty")).status.code(),
        Some(1)
    );
    assert_eq!(arhgls(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn singular_design_under_strict_policy_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "N = 40\nK = 10\nrank_policy = strict\n");
    assert!(arhgls(&["simulate", "--config", &cfg], dir.path())
        .status
        .success());
    let out = arhgls(&["fit", "--config", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("frequency 1"));
}

#[test]
fn thread_env_var_is_honoured_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_arhgls"))
            .args(["normality", "--config", &cfg, "--out"])
            .arg(dir.path())
            .env("ARHGLS_THREADS", value)
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(run("2"), Some(0));
    assert_eq!(run("two"), Some(1));
}
