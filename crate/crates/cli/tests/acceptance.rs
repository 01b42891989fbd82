//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use arhgls::arh::{rng_for, simulate_arh1, ArhSpec};
use arhgls::basis::{HFunction, Interval};
use arhgls::gls::{gls_estimate, ols_estimate, BlockPrecision, GlsOptions, ToeplitzAr1};
use arhgls::harness::{
    run_consistency_sweep, run_efmqe_experiment, run_normality_check, Estimator, ExperimentConfig,
};
use arhgls::model::ModelSpec;
use arhgls::plugin::{
    autocorrelation_from_residuals, empirical_cov, empirical_eigendecomposition, select_truncation,
    EmpiricalEigen, Truncation, TruncationRule,
};
use arhgls::spectral::{build_model_regressors, RegressorOperator, RegressorPanel};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn structured_inverse() -> Outcome {
    let mut rng = rng_for(1, 0);
    let (mut worst_inv, mut worst_chol) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let lam = rng.random_range(-0.95..=0.95);
        let n = rng.random_range(1..=50);
        let t = ToeplitzAr1::new(lam, n).unwrap();
        let dense = t.dense();
        let inv = t.inverse_tridiag().unwrap().to_dense();
        worst_inv = worst_inv.max(max_abs(&(inv * &dense - DMatrix::identity(n, n))));
        let a = t.cholesky_factor().unwrap();
        worst_chol = worst_chol.max(max_abs(&(a.transpose() * &a - &dense)));
    }
    outcome(
        worst_inv <= 1e-10 && worst_chol <= 1e-10,
        format!("max |inverse·Λ − I| = {worst_inv:.1e}, max |AᵀA − Λ| = {worst_chol:.1e}"),
    )
}

/// Stacked error covariance, index `t·K + k`: `λ_k(R₀) λ_k(ρ)^{|t−u|}`.
fn dense_covariance(r0: &[f64], rho: &[f64], n: usize) -> DMatrix<f64> {
    let k = r0.len();
    DMatrix::from_fn(n * k, n * k, |i, j| {
        let (t, a, u, b) = (i / k, i % k, j / k, j % k);
        if a == b {
            r0[a] * rho[a].powi((t as i32 - u as i32).abs())
        } else {
            0.0
        }
    })
}

fn random_instance(rng: &mut impl Rng, max_n: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let k = rng.random_range(1..=5);
    let n = rng.random_range(1..=max_n);
    let r0 = (0..k).map(|_| rng.random_range(0.1..2.0)).collect();
    let rho = (0..k).map(|_| rng.random_range(-0.95..0.95)).collect();
    (r0, rho, n)
}

/// Block `k` is `Λ(λ_k(ρ))⁻¹ / λ_k(R₀)`; random instances need not be ordered.
fn precision(r0: &[f64], rho: &[f64], n: usize) -> BlockPrecision {
    let scales: Vec<f64> = r0.iter().map(|v| 1.0 / v).collect();
    BlockPrecision::from_parts(&scales, rho, n).unwrap()
}

fn block_precision() -> Outcome {
    let mut rng = rng_for(2, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (r0, rho, n) = random_instance(&mut rng, 8);
        let k = r0.len();
        let prec = precision(&r0, &rho, n);
        let c = dense_covariance(&r0, &rho, n);
        worst = worst.max(max_abs(
            &(prec.to_dense() * c - DMatrix::identity(n * k, n * k)),
        ));
    }
    outcome(worst <= 1e-9, format!("max |C⁻¹·C − I| = {worst:.1e}"))
}

fn gls_oracle() -> Outcome {
    let mut rng = rng_for(3, 0);
    let iv = Interval::default();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = rng.random_range(1..=3);
        let (r0, rho, _) = random_instance(&mut rng, 1);
        let k = r0.len();
        let n = rng.random_range(p + 1..=12);
        let rows: Vec<Vec<RegressorOperator>> = (0..n)
            .map(|_| {
                (0..p)
                    .map(|_| {
                        RegressorOperator::diagonal(
                            (0..k).map(|_| rng.random_range(-1.5..1.5)).collect(),
                        )
                        .unwrap()
                    })
                    .collect()
            })
            .collect();
        let panel = RegressorPanel::new(rows).unwrap();
        let y: Vec<HFunction> = (0..n)
            .map(|_| {
                HFunction::new((0..k).map(|_| rng.random_range(-1.0..1.0)).collect(), iv).unwrap()
            })
            .collect();
        let prec = precision(&r0, &rho, n);
        let fit = gls_estimate(&panel, &y, &prec, &GlsOptions::default()).unwrap();

        let x = DMatrix::from_fn(n * k, p * k, |i, c| {
            panel.get(i / k, c / k).entry(i % k, c % k)
        });
        let yv = DVector::from_iterator(n * k, y.iter().flat_map(|f| f.coeffs().to_vec()));
        let cinv = dense_covariance(&r0, &rho, n).try_inverse().unwrap();
        let info = x.transpose() * &cinv * &x;
        let beta = info.try_inverse().unwrap() * x.transpose() * cinv * yv;
        for j in 0..p {
            for l in 0..k {
                worst = worst.max((fit.beta_hat[j].coeffs()[l] - beta[j * k + l]).abs());
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max |β̂ − dense oracle| = {worst:.1e}"),
    )
}

fn normality() -> Outcome {
    let cfg = ExperimentConfig {
        n: 200,
        reps: 500,
        seed: 4,
        ..ExperimentConfig::default()
    };
    let report = run_normality_check(&cfg).unwrap();
    let bad: Vec<String> = report
        .normality
        .iter()
        .filter(|r| !(r.mean.abs() < 0.15 && r.var > 0.8 && r.var < 1.2))
        .map(|r| {
            format!(
                "(k={}, j={}): mean {:.3}, var {:.3}",
                r.frequency, r.param, r.mean, r.var
            )
        })
        .collect();
    let detail = if bad.is_empty() {
        format!("all {} components in band", report.normality.len())
    } else {
        format!(
            "{} of {} components out of band: {}",
            bad.len(),
            report.normality.len(),
            bad.join("; ")
        )
    };
    outcome(bad.is_empty(), detail)
}

fn efmqe() -> Outcome {
    let base = ExperimentConfig {
        seed: 5,
        ..ExperimentConfig::default()
    };
    let m1 = run_efmqe_experiment(&base).unwrap();
    let m2 = run_efmqe_experiment(&ExperimentConfig {
        model: ModelSpec::model2(base.model.k),
        ..base.clone()
    })
    .unwrap();
    let m1_vals: Vec<f64> = m1.efmqe.iter().map(|r| r.efmqe).collect();
    let m2_vals: Vec<f64> = m2.efmqe.iter().map(|r| r.efmqe).collect();
    let m1_ok = m1_vals.len() == 20 && m1_vals.iter().all(|v| (5e-4..=3e-2).contains(v));
    // Early times: the first five report times (10–50).
    let m2_ok = m2_vals.iter().take(5).all(|v| (3e-2..=9e-1).contains(v));
    let order_ok = m1_vals.iter().zip(&m2_vals).all(|(a, b)| b > a);
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        format!("[{lo:.2e}, {hi:.2e}]")
    };
    outcome(
        m1_ok && m2_ok && order_ok && m1.failed == 0 && m2.failed == 0,
        format!(
            "Model 1 range {} (band {m1_ok}), Model 2 range {} (early band {m2_ok}), Model 2 worse at every time: {order_ok}",
            range(&m1_vals),
            range(&m2_vals)
        ),
    )
}

fn consistency() -> Outcome {
    let cfg = ExperimentConfig {
        reps: 50,
        seed: 6,
        truncation: Truncation::Auto,
        sample_sizes: vec![200, 600, 1000],
        ..ExperimentConfig::default()
    };
    let report = run_consistency_sweep(&cfg).unwrap();
    let series = |e: Estimator| -> Vec<f64> {
        report
            .consistency
            .iter()
            .filter(|r| r.estimator == e)
            .map(|r| r.median_error)
            .collect()
    };
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let (ols, plugin) = (series(Estimator::Ols), series(Estimator::Plugin));
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4e}"))
            .collect::<Vec<_>>()
            .join(" → ")
    };
    outcome(
        decreasing(&ols) && decreasing(&plugin),
        format!(
            "OLS {} (strict: {}); plug-in {} (strict: {})",
            fmt(&ols),
            decreasing(&ols),
            fmt(&plugin),
            decreasing(&plugin)
        ),
    )
}

fn rho_consistency() -> Outcome {
    let model = ModelSpec::model1(10);
    let spec: ArhSpec = model.arh_spec().unwrap();
    let truth = spec.rho().eigenvalues().to_vec();
    let sizes = [500, 2000, 8000];
    let reps = 20;
    let mut errors = vec![Vec::new(); sizes.len()];
    let mut diag_8000 = vec![Vec::new(); 3];
    for rep in 0..reps {
        let path = simulate_arh1(&spec, 8000, 0, &mut rng_for(7, rep)).unwrap();
        for (i, &n) in sizes.iter().enumerate() {
            let (_, rho) = autocorrelation_from_residuals(&path[..n], 3).unwrap();
            let c = rho.coeffs();
            let err: f64 = (0..3)
                .flat_map(|a| (0..3).map(move |b| (a, b)))
                .map(|(a, b)| (c[(a, b)] - if a == b { truth[a] } else { 0.0 }).powi(2))
                .sum::<f64>()
                .sqrt();
            errors[i].push(err);
            if n == 8000 {
                for (d, v) in diag_8000.iter_mut().enumerate() {
                    v.push(c[(d, d)]);
                }
            }
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let m = v.len();
        if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        }
    };
    let meds: Vec<f64> = errors.iter_mut().map(median).collect();
    let diag: Vec<f64> = diag_8000.iter_mut().map(median).collect();
    let decreasing = meds.windows(2).all(|w| w[1] < w[0]);
    let close = diag.iter().zip(&truth).all(|(d, t)| (d - t).abs() <= 0.05);
    outcome(
        decreasing && close,
        format!(
            "median Frobenius error {:.4} → {:.4} → {:.4}; N=8000 diagonal {:.3}/{:.3}/{:.3} vs {:.3}/{:.3}/{:.3}",
            meds[0], meds[1], meds[2], diag[0], diag[1], diag[2], truth[0], truth[1], truth[2]
        ),
    )
}

fn truncation() -> Outcome {
    let model = ModelSpec::model1(50);
    let panel = build_model_regressors(&model, 200, model.k).unwrap();
    let rule = TruncationRule::default();
    let mut chosen = Vec::new();
    for rep in 0..10 {
        let path = arhgls::arh::simulate_path(
            &model.arh_spec().unwrap(),
            &panel,
            &model.beta(),
            0,
            8,
            rep,
        )
        .unwrap();
        let ols = ols_estimate(&panel, &path.responses, &GlsOptions::minimum_norm()).unwrap();
        let eig = empirical_eigendecomposition(&empirical_cov(&ols.residuals).unwrap());
        chosen.push(select_truncation(&eig, 200, &rule));
    }
    let in_range = chosen.iter().all(|k| (1..=5).contains(k));

    // Model 1's law keeps k_N = 1 far beyond practical N; the geometric law
    // exercises growth.
    let laws = [
        (
            "Model 1",
            model
                .arh_spec()
                .unwrap()
                .stationary_covariance()
                .eigenvalues()
                .to_vec(),
        ),
        (
            "geometric",
            (0..50).map(|j| 0.5f64.powi(j)).collect::<Vec<f64>>(),
        ),
    ];
    let ns: Vec<usize> = (1..=40)
        .map(|i| (10f64 * 1.4f64.powi(i)) as usize)
        .collect();
    let mut monotone = true;
    let mut paths = Vec::new();
    for (name, values) in laws {
        let law = EmpiricalEigen::canonical(values);
        let ks: Vec<usize> = ns
            .iter()
            .map(|&n| select_truncation(&law, n, &rule))
            .collect();
        monotone &= ks.windows(2).all(|w| w[1] >= w[0]);
        paths.push(format!("{name} {}→{}", ks[0], ks[ks.len() - 1]));
    }
    outcome(
        in_range && monotone,
        format!(
            "k_N at N=200 over 10 samples: {chosen:?}; nondecreasing over N = {}..{}: {monotone} ({})",
            ns[0],
            ns[ns.len() - 1],
            paths.join(", ")
        ),
    )
}

fn run_cli(dir: &Path, threads: usize, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_arhgls"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .arg("--threads")
        .arg(threads.to_string())
        .env_remove("ARHGLS_THREADS")
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("small.cfg");
    std::fs::write(
        &cfg,
        "model = model1\nN = 60\nr = 16\nK = 12\nk_N = auto\nNs = 30, 60\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap().to_string();
    let commands: [&[&str]; 7] = [
        &["simulate"],
        &["fit"],
        &["predict"],
        &["experiment"],
        &["experiment", "--rolling"],
        &["sweep"],
        &["normality"],
    ];
    let mut mismatched = Vec::new();
    let dirs: Vec<_> = [1usize, 8]
        .iter()
        .map(|t| (*t, root.path().join(format!("t{t}"))))
        .collect();
    for (threads, dir) in &dirs {
        std::fs::create_dir_all(dir).unwrap();
        for cmd in commands {
            // Each subcommand writes into its own directory; fit and predict
            // read the simulated data.
            let sub = dir.join(cmd.join("_"));
            std::fs::create_dir_all(&sub).unwrap();
            let mut args: Vec<&str> = cmd.to_vec();
            let data = dir.join("simulate");
            let data = data.to_str().unwrap().to_string();
            if matches!(cmd[0], "fit" | "predict") {
                args.extend(["--data", data.as_str()]);
            }
            args.extend(["--config", cfg.as_str(), "--seed", "42"]);
            if !run_cli(&sub, *threads, &args) {
                mismatched.push(format!("{} failed with {threads} threads", cmd.join(" ")));
            }
        }
    }
    for cmd in commands {
        let name = cmd.join("_");
        let a = snapshot(&dirs[0].1.join(&name));
        let b = snapshot(&dirs[1].1.join(&name));
        if a.is_empty() || a != b {
            mismatched.push(format!("{} differs", cmd.join(" ")));
        }
    }
    outcome(
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!(
                "{} subcommands byte-identical at 1 and 8 threads",
                commands.len()
            )
        } else {
            mismatched.join("; ")
        },
    )
}

/// Name, check and runtime budget.
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "structured-inverse exactness",
            structured_inverse,
            Duration::from_secs(5),
        ),
        (
            "block-precision correctness",
            block_precision,
            Duration::from_secs(5),
        ),
        ("GLS oracle equivalence", gls_oracle, Duration::MAX),
        (
            "unbiasedness & normality",
            normality,
            Duration::from_secs(180),
        ),
        ("EFMQE reproduction", efmqe, Duration::from_secs(600)),
        ("consistency sweeps", consistency, Duration::from_secs(900)),
        ("rho-hat consistency", rho_consistency, Duration::MAX),
        ("truncation-rule sanity", truncation, Duration::MAX),
        ("determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = run();
        let elapsed = start.elapsed();
        if elapsed > *budget {
            result.pass = false;
            result
                .detail
                .push_str(&format!("; over the {}s budget", budget.as_secs()));
        }
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} — {name}: {} ({:.1}s)",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
