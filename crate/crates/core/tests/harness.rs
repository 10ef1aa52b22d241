use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wl1_core::harness::io::write_matrix;
use wl1_core::harness::{
    coverage_l2, coverage_target_l2, run_sweep, run_trial, EstimateConfig, Experiment,
    ExperimentConfig, GuaranteeChoice, Magnitude, MatrixSource, SignalConfig, SweepKeyword,
};
use wl1_core::linalg::DenseMatrix;
use wl1_core::model::{GaussianConstraint, NoiseSpec, Rational};
use wl1_core::solvers::SolveStatus;

fn r(n: u64, d: u64) -> Rational {
    Rational::new(n, d).unwrap()
}

fn base_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        matrix: MatrixSource::Gaussian {
            rows: 12,
            cols: 24,
            seed: 7,
        },
        signal: SignalConfig {
            k: 2,
            magnitude: Magnitude::Gaussian,
            seed: 1,
        },
        estimate: EstimateConfig {
            rho: Rational::one(),
            alpha: Rational::one(),
            seed: 2,
        },
        omega_grid: vec![0.0],
        noise: NoiseSpec::exact(),
        guarantee: GuaranteeChoice::Orders { a: 1, b: 1 },
        trials: 10,
        output: out.to_path_buf(),
        solver: Default::default(),
        budget: 10_000_000,
    }
}

#[test]
fn identity_single_row_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let a_path = dir.path().join("eye.csv");
    write_matrix(&a_path, &DenseMatrix::identity(6)).unwrap();
    let mut cfg = base_config(&dir.path().join("out.csv"));
    cfg.matrix = MatrixSource::File { path: a_path };
    cfg.omega_grid = vec![1.0];
    cfg.trials = 1;
    let summary = run_sweep(&cfg).unwrap();
    assert_eq!(summary.rows, 1);
    let text = fs::read_to_string(&cfg.output).unwrap();
    assert_eq!(text.lines().count(), 3);
    let rec = run_trial(&cfg, 0).unwrap();
    assert!(rec.error < 1e-12, "{}", rec.error);
    assert!(rec.certified);
    assert_eq!(rec.bound_satisfied, Some(true));
}

#[test]
fn certified_exact_rows_recover() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(&dir.path().join("out.csv"));
    let exp = Experiment::prepare(&cfg).unwrap();
    assert!(exp.certificate(0).unwrap().certified());
    for rec in exp.run_all().unwrap() {
        assert_eq!(rec.status, SolveStatus::Optimal);
        assert!(rec.error <= 1e-6, "{rec:?}");
        assert_eq!(rec.bound_satisfied, Some(true));
        assert_eq!(rec.cone_holds, Some(true));
    }
}

#[test]
fn sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(&dir.path().join("first.csv"));
    cfg.omega_grid = vec![0.0, 0.5, 1.0];
    cfg.noise = NoiseSpec::l2(0.01, 0.01).unwrap();
    run_sweep(&cfg).unwrap();
    let first = fs::read(&cfg.output).unwrap();
    cfg.output = dir.path().join("second.csv");
    run_sweep(&cfg).unwrap();
    assert_eq!(first, fs::read(&cfg.output).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("# wl1-sweep v1"));
    assert_eq!(text.lines().count(), 2 + 30);
    assert!(cfg.summary_path().exists());
}

#[test]
fn noisy_certified_rows_respect_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(&dir.path().join("out.csv"));
    cfg.omega_grid = vec![0.0, 0.5, 1.0];
    cfg.trials = 20;
    for noise in [
        NoiseSpec::l2(0.01, 0.01).unwrap(),
        NoiseSpec::dantzig(0.01, 0.01).unwrap(),
        NoiseSpec::gaussian(0.005, GaussianConstraint::L2).unwrap(),
    ] {
        cfg.noise = noise;
        let summary = run_sweep(&cfg).unwrap();
        assert_eq!(summary.bound_violations, 0, "{noise:?}");
        for s in &summary.per_omega {
            assert_eq!(s.cone_failures, 0);
            assert!(s.certified == 0 || s.certified == cfg.trials);
        }
        // only the fully trusted estimate certifies on this ensemble
        assert_eq!(summary.per_omega[0].certified, cfg.trials);
    }
}

#[test]
fn accurate_estimate_lowers_mean_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(&dir.path().join("out.csv"));
    cfg.omega_grid = vec![0.0, 1.0];
    cfg.trials = 40;
    cfg.noise = NoiseSpec::l2(0.05, 0.05).unwrap();
    let summary = run_sweep(&cfg).unwrap();
    let (w0, w1) = (&summary.per_omega[0], &summary.per_omega[1]);
    assert!(
        w0.mean_error <= w1.mean_error,
        "{} > {}",
        w0.mean_error,
        w1.mean_error
    );
}

#[test]
fn noise_constant_decreases_with_omega() {
    let dir = tempfile::tempdir().unwrap();
    // a small perturbation of the identity certifies every omega
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut a = DenseMatrix::from_fn(12, 12, |i, j| {
        let g: f64 = rng.sample(StandardNormal);
        let id = if i == j { 1.0 } else { 0.0 };
        id + 0.01 * g
    });
    a.normalize_columns();
    let a_path = dir.path().join("a.csv");
    write_matrix(&a_path, &a).unwrap();
    let mut cfg = base_config(&dir.path().join("out.csv"));
    cfg.matrix = MatrixSource::File { path: a_path };
    cfg.signal.k = 4;
    cfg.estimate = EstimateConfig {
        rho: Rational::one(),
        alpha: r(3, 4),
        seed: 2,
    };
    cfg.omega_grid = vec![1.0, 0.5, 0.0];
    cfg.guarantee = GuaranteeChoice::Orders { a: 1, b: 1 };
    cfg.noise = NoiseSpec::l2(0.01, 0.01).unwrap();
    let exp = Experiment::prepare(&cfg).unwrap();
    let d0: Vec<f64> = (0..3)
        .map(|i| exp.certificate(i).unwrap().report.d0.unwrap())
        .collect();
    assert!(d0[0] >= d0[1] && d0[1] >= d0[2], "{d0:?}");
}

#[test]
fn config_json_round_trip() {
    let json = r#"{
        "matrix": {"kind": "gaussian", "rows": 6, "cols": 10, "seed": 3},
        "signal": {"k": 2, "seed": 4},
        "estimate": {"rho": "1/2", "alpha": "1", "seed": 5},
        "omega_grid": [0.5],
        "noise": {"kind": "l2_ball", "epsilon": 0.1, "eta": 0.1},
        "guarantee": "sweep",
        "trials": 3,
        "output": "out.csv"
    }"#;
    let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
    assert_eq!(cfg.guarantee, GuaranteeChoice::Sweep(SweepKeyword::Sweep));
    assert_eq!(cfg.estimate.rho, r(1, 2));
    cfg.validate().unwrap();
    let back: ExperimentConfig =
        serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    let orders: GuaranteeChoice = serde_json::from_str(r#"{"a": 1, "b": 2}"#).unwrap();
    assert_eq!(orders, GuaranteeChoice::Orders { a: 1, b: 2 });
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(&dir.path().join("out.csv"));
    cfg.omega_grid.clear();
    assert!(cfg.validate().is_err());
    let mut cfg = base_config(&dir.path().join("out.csv"));
    cfg.trials = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = base_config(&dir.path().join("out.csv"));
    cfg.omega_grid = vec![1.5];
    assert!(cfg.validate().is_err());
    let mut cfg = base_config(&dir.path().join("missing/out.csv"));
    cfg.trials = 1;
    let err = run_sweep(&cfg).unwrap_err();
    assert!(err.to_string().contains("missing"), "{err}");
}

#[test]
fn swept_orders_pick_the_smallest_constant() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(&dir.path().join("out.csv"));
    cfg.guarantee = GuaranteeChoice::Sweep(SweepKeyword::Sweep);
    let swept = Experiment::prepare(&cfg).unwrap();
    let best = swept.certificate(0).unwrap().report.condition_value;
    for (a, b) in [(1, 1), (1, 2), (2, 1), (2, 3)] {
        cfg.guarantee = GuaranteeChoice::Orders { a, b };
        let fixed = Experiment::prepare(&cfg).unwrap();
        assert!(best <= fixed.certificate(0).unwrap().report.condition_value + 1e-15);
    }
}

#[test]
fn gaussian_l2_coverage() {
    let p = coverage_l2(1.0, 100, 10_000, 17).unwrap();
    let std = (0.01_f64 * 0.99 / 1e4).sqrt();
    assert!(p >= coverage_target_l2(100) - 3.0 * std, "{p}");
}
