//! Randomized experiments around the recovery guarantee.
//!
//! A sweep draws one sensing matrix, then for every `omega` in the grid and
//! every repetition a k-sparse signal, a support estimate with the configured
//! `(rho, alpha)` profile and a noise vector, solves the weighted program and
//! audits the recovery error against the guarantee. The guarantee is only
//! audited when `delta_a + C theta_ab < 1` is certified by exact enumeration;
//! rows whose constants were out of budget are written as uncertified.
//!
//! Repetition `t` draws from stream `t` of the configured seeds, so the same
//! signal and estimate are reused across the `omega` grid and rows can be
//! computed in any order.

pub mod io;
pub mod noise;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    error_bound_rhs, evaluate_guarantee, ConstraintKind, GuaranteeInputs, GuaranteeReport,
};
use crate::error::{Error, Result};
use crate::linalg::{gemv, gemv_t, norm2, norm_inf, DenseMatrix};
use crate::model::{
    make_estimate, GaussianConstraint, IndexSet, NoiseKind, NoiseSpec, Rational, WeightVector,
};
use crate::rip::{
    compute_delta_with_budget, compute_theta_with_budget, DEFAULT_ENUMERATION_BUDGET,
};
use crate::solvers::{cone_check, solve, SolveConfig, SolveStatus};

pub use noise::{
    coverage_ds, coverage_l2, coverage_target_ds, coverage_target_l2, gaussian_radius_ds,
    gaussian_radius_l2,
};

/// First line of every sweep CSV.
pub const CSV_SCHEMA: &str = "wl1-sweep v1";
/// Absolute slack on `error <= rhs`, covering solver accuracy.
pub const AUDIT_SLACK: f64 = 1e-6;
/// Largest `b / k` tried when the guarantee orders are swept.
const SWEEP_MAX_B_PER_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSource {
    File {
        path: PathBuf,
    },
    /// i.i.d. standard normal entries, columns rescaled to unit l2 norm.
    Gaussian {
        rows: usize,
        cols: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    #[default]
    Gaussian,
    /// `+-1`.
    Rademacher,
    /// Random sign times a uniform draw from `[1, 2]`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    pub k: usize,
    #[serde(default)]
    pub magnitude: Magnitude,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub rho: Rational,
    pub alpha: Rational,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKeyword {
    Sweep,
}

/// Fixed orders `(a, b)`, or `"sweep"` to pick, per `omega`, the enumerable
/// pair with the smallest `delta_a + C theta_ab`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GuaranteeChoice {
    Orders { a: usize, b: usize },
    Sweep(SweepKeyword),
}

fn default_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub matrix: MatrixSource,
    pub signal: SignalConfig,
    pub estimate: EstimateConfig,
    pub omega_grid: Vec<f64>,
    pub noise: NoiseSpec,
    pub guarantee: GuaranteeChoice,
    pub trials: usize,
    pub output: PathBuf,
    #[serde(default)]
    pub solver: SolveConfig,
    /// Subset budget for exact RIC/ROC enumeration.
    #[serde(default = "default_budget")]
    pub budget: u64,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega_grid.is_empty() {
            return Err(Error::invalid("omega_grid is empty"));
        }
        if let Some(w) = self.omega_grid.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::invalid(format!("omega = {w} outside [0, 1]")));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.signal.k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if let MatrixSource::Gaussian { rows, cols, .. } = self.matrix {
            if rows == 0 || cols == 0 {
                return Err(Error::invalid(
                    "gaussian ensemble needs positive dimensions",
                ));
            }
        }
        if let GuaranteeChoice::Orders { a, b } = self.guarantee {
            if a == 0 || b == 0 || a > self.signal.k {
                return Err(Error::invalid(format!(
                    "need 1 <= a <= k and b >= 1, got a = {a}, b = {b}"
                )));
            }
        }
        if self.estimate.rho.times_integer(self.signal.k).is_none() {
            return Err(Error::invalid(format!(
                "rho * k = {} * {} is not an integer",
                self.estimate.rho, self.signal.k
            )));
        }
        self.noise.validated()?;
        self.solver.validate()
    }

    /// Where the summary JSON goes: the output path with extension
    /// `summary.json`.
    pub fn summary_path(&self) -> PathBuf {
        self.output.with_extension("summary.json")
    }
}

pub fn gaussian_ensemble(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    a.normalize_columns();
    a
}

/// Per-row record. `wall_time_ms` is kept out of the CSV so that reruns
/// are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub repetition: usize,
    pub omega: f64,
    pub rho: Rational,
    pub alpha: Rational,
    /// Noise level the guarantee is evaluated at.
    pub epsilon: f64,
    /// Solver radius.
    pub eta: f64,
    /// `|z|_2`, or `|A^T z|_inf` for the Dantzig constraint.
    pub noise_level: f64,
    /// `|x_hat - x|_2`.
    pub error: f64,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub certified: bool,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub condition_value: Option<f64>,
    pub noise_constant: Option<f64>,
    pub tail_constant: Option<f64>,
    pub bound_rhs: Option<f64>,
    /// `error <= bound_rhs + AUDIT_SLACK` whenever `bound_rhs` is present.
    pub bound_satisfied: Option<bool>,
    pub cone_holds: Option<bool>,
    pub wall_time_ms: f64,
}

impl TrialRecord {
    pub const CSV_COLUMNS: [&'static str; 21] = [
        "trial",
        "repetition",
        "omega",
        "rho",
        "alpha",
        "epsilon",
        "eta",
        "noise_level",
        "error",
        "objective",
        "status",
        "iterations",
        "certified",
        "a",
        "b",
        "condition_value",
        "noise_constant",
        "tail_constant",
        "bound_rhs",
        "bound_satisfied",
        "cone_holds",
    ];

    fn csv_fields(&self) -> Vec<String> {
        fn f(v: f64) -> String {
            format!("{v:.16e}")
        }
        fn opt<T>(v: Option<T>, show: impl Fn(T) -> String) -> String {
            v.map(show).unwrap_or_default()
        }
        let status = match self.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::Infeasible => "infeasible",
        };
        vec![
            self.trial.to_string(),
            self.repetition.to_string(),
            f(self.omega),
            self.rho.to_string(),
            self.alpha.to_string(),
            f(self.epsilon),
            f(self.eta),
            f(self.noise_level),
            f(self.error),
            f(self.objective),
            status.to_string(),
            self.iterations.to_string(),
            self.certified.to_string(),
            opt(self.a, |v| v.to_string()),
            opt(self.b, |v| v.to_string()),
            opt(self.condition_value, f),
            opt(self.noise_constant, f),
            opt(self.tail_constant, f),
            opt(self.bound_rhs, f),
            opt(self.bound_satisfied, |v| v.to_string()),
            opt(self.cone_holds, |v| v.to_string()),
        ]
    }
}

/// The guarantee evaluated for one `omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub omega: f64,
    pub report: GuaranteeReport,
}

impl Certificate {
    pub fn certified(&self) -> bool {
        self.report.condition_met
    }
}

/// A validated config with its matrix drawn and its guarantee constants
/// enumerated.
#[derive(Debug, Clone)]
pub struct Experiment {
    cfg: ExperimentConfig,
    a: DenseMatrix,
    certificates: Vec<Option<Certificate>>,
}

struct TrialNoise {
    kind: ConstraintKind,
    eta: f64,
    epsilon: f64,
    level: f64,
    inside: bool,
}

impl Experiment {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let a = match &cfg.matrix {
            MatrixSource::File { path } => io::read_matrix(path)?,
            MatrixSource::Gaussian { rows, cols, seed } => gaussian_ensemble(*rows, *cols, *seed),
        };
        if cfg.signal.k > a.cols() {
            return Err(Error::invalid(format!(
                "k = {} exceeds N = {}",
                cfg.signal.k,
                a.cols()
            )));
        }
        let certificates = certify(&a, cfg)?;
        Ok(Experiment {
            cfg: cfg.clone(),
            a,
            certificates,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    /// Guarantee for `omega_grid[i]`; `None` when no order pair could be
    /// enumerated within budget.
    pub fn certificate(&self, i: usize) -> Option<&Certificate> {
        self.certificates.get(i).and_then(Option::as_ref)
    }

    /// `|omega_grid| * trials`.
    pub fn len(&self) -> usize {
        self.cfg.omega_grid.len() * self.cfg.trials
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row `index` uses `omega_grid[index / trials]` and repetition
    /// `index % trials`.
    pub fn run_trial(&self, index: usize) -> Result<TrialRecord> {
        if index >= self.len() {
            return Err(Error::invalid(format!(
                "trial index {index} out of range 0..{}",
                self.len()
            )));
        }
        let cfg = &self.cfg;
        let (wi, rep) = (index / cfg.trials, index % cfg.trials);
        let omega = cfg.omega_grid[wi];
        let (n, big_n, k) = (self.a.rows(), self.a.cols(), cfg.signal.k);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.signal.seed);
        rng.set_stream(rep as u64);
        let x = draw_signal(&mut rng, big_n, k, cfg.signal.magnitude);
        let t0 = IndexSet::new((0..big_n).filter(|&i| x[i] != 0.0).collect())?;
        let mut est_rng = ChaCha8Rng::seed_from_u64(cfg.estimate.seed);
        est_rng.set_stream(rep as u64);
        let estimate = make_estimate(
            &t0,
            cfg.estimate.rho,
            cfg.estimate.alpha,
            k,
            big_n,
            est_rng.next_u64(),
        )?;
        let w = WeightVector::new(estimate.clone(), omega)?;

        let (z, noise) = self.draw_noise(&mut rng)?;
        let mut y = vec![0.0; n];
        gemv(&self.a, &x, &mut y);
        for (y, z) in y.iter_mut().zip(&z) {
            *y += z;
        }

        let start = Instant::now();
        let res = solve(
            &self.a,
            &y,
            w.as_slice(),
            noise.kind,
            noise.eta,
            &cfg.solver,
        )?;
        let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        let h: Vec<f64> = res.x_hat.iter().zip(&x).map(|(a, b)| a - b).collect();
        let error = norm2(&h);

        let cert = self.certificate(wi);
        let certified = cert.is_some_and(Certificate::certified);
        let bound_rhs = match cert {
            Some(c) if c.certified() && noise.inside => Some(error_bound_rhs(
                &c.report,
                noise.kind,
                noise.epsilon,
                noise.eta,
                &x,
                &t0,
                &estimate,
            )?),
            _ => None,
        };
        let cone_holds = if res.status == SolveStatus::Optimal && noise.inside {
            Some(cone_check(&h, &x, &t0, &estimate, omega)?.holds)
        } else {
            None
        };
        let (noise_constant, tail_constant) = match cert.map(|c| &c.report) {
            Some(r) => match noise.kind {
                ConstraintKind::Dantzig => (r.d0_ds, r.d1_ds),
                _ => (r.d0, r.d1),
            },
            None => (None, None),
        };
        Ok(TrialRecord {
            trial: index,
            repetition: rep,
            omega,
            rho: cfg.estimate.rho,
            alpha: cfg.estimate.alpha,
            epsilon: noise.epsilon,
            eta: noise.eta,
            noise_level: noise.level,
            error,
            objective: res.objective,
            status: res.status,
            iterations: res.iterations,
            certified,
            a: cert.map(|c| c.report.inputs.a),
            b: cert.map(|c| c.report.inputs.b),
            condition_value: cert.map(|c| c.report.condition_value),
            noise_constant,
            tail_constant,
            bound_satisfied: bound_rhs.map(|r| error <= r + AUDIT_SLACK),
            bound_rhs,
            cone_holds,
            wall_time_ms,
        })
    }

    /// All rows in trial-index order.
    pub fn run_all(&self) -> Result<Vec<TrialRecord>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect()
    }

    fn draw_noise(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, TrialNoise)> {
        let (n, big_n) = (self.a.rows(), self.a.cols());
        let spec = self.cfg.noise;
        let gauss: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut corr = vec![0.0; big_n];
        let mut ds_level = |z: &[f64]| {
            gemv_t(&self.a, z, &mut corr);
            norm_inf(&corr)
        };
        let scaled = |s: f64| gauss.iter().map(|g| s * g).collect::<Vec<f64>>();
        Ok(match spec.kind {
            NoiseKind::Exact => (
                vec![0.0; n],
                TrialNoise {
                    kind: ConstraintKind::Exact,
                    eta: 0.0,
                    epsilon: 0.0,
                    level: 0.0,
                    inside: true,
                },
            ),
            NoiseKind::L2Ball => {
                let z = scaled(spec.epsilon / norm2(&gauss));
                let level = norm2(&z);
                (
                    z,
                    TrialNoise {
                        kind: ConstraintKind::L2,
                        eta: spec.eta,
                        epsilon: spec.epsilon,
                        level,
                        inside: true,
                    },
                )
            }
            NoiseKind::DantzigBall => {
                let z = scaled(spec.epsilon / ds_level(&gauss));
                let level = ds_level(&z);
                (
                    z,
                    TrialNoise {
                        kind: ConstraintKind::Dantzig,
                        eta: spec.eta,
                        epsilon: spec.epsilon,
                        level,
                        inside: true,
                    },
                )
            }
            NoiseKind::Gaussian => {
                let z = scaled(spec.sigma);
                let (kind, radius, level) = match spec.gaussian_constraint {
                    GaussianConstraint::L2 => (
                        ConstraintKind::L2,
                        gaussian_radius_l2(spec.sigma, n)?,
                        norm2(&z),
                    ),
                    GaussianConstraint::Dantzig => (
                        ConstraintKind::Dantzig,
                        gaussian_radius_ds(spec.sigma, big_n)?,
                        ds_level(&z),
                    ),
                };
                (
                    z,
                    TrialNoise {
                        kind,
                        eta: radius,
                        epsilon: radius,
                        level,
                        inside: level <= radius,
                    },
                )
            }
        })
    }
}

fn draw_signal(rng: &mut ChaCha8Rng, big_n: usize, k: usize, magnitude: Magnitude) -> Vec<f64> {
    let support = sample(rng, big_n, k).into_vec();
    let mut x = vec![0.0; big_n];
    for i in support {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        x[i] = match magnitude {
            Magnitude::Gaussian => loop {
                // a zero draw would shrink the support
                let v: f64 = rng.sample(StandardNormal);
                if v != 0.0 {
                    break v;
                }
            },
            Magnitude::Rademacher => sign,
            Magnitude::Uniform => sign * rng.random_range(1.0..=2.0),
        };
    }
    x
}

fn certify(a: &DenseMatrix, cfg: &ExperimentConfig) -> Result<Vec<Option<Certificate>>> {
    let k = cfg.signal.k;
    let big_n = a.cols();
    let budget = cfg.budget as u128;
    let pairs: Vec<(usize, usize)> = match cfg.guarantee {
        GuaranteeChoice::Orders { a, b } => vec![(a, b)],
        GuaranteeChoice::Sweep(_) => (1..=k)
            .flat_map(|a| (1..=SWEEP_MAX_B_PER_K * k).map(move |b| (a, b)))
            .filter(|&(a, b)| a + b <= big_n)
            .collect(),
    };
    let mut deltas: Vec<Option<f64>> = vec![None; k + 1];
    let mut constants = Vec::new();
    for (oa, ob) in pairs {
        if oa + ob > big_n {
            continue;
        }
        if deltas[oa].is_none() {
            deltas[oa] = match compute_delta_with_budget(a, oa, budget) {
                Ok(v) => Some(v.value),
                Err(Error::BudgetExceeded { .. }) => continue,
                Err(e) => return Err(e),
            };
        }
        let theta = match compute_theta_with_budget(a, oa, ob, budget) {
            Ok(v) => v.value,
            Err(Error::BudgetExceeded { .. }) => continue,
            Err(e) => return Err(e),
        };
        constants.push((oa, ob, deltas[oa].expect("set above"), theta));
    }

    cfg.omega_grid
        .iter()
        .map(|&omega| {
            let mut best: Option<GuaranteeReport> = None;
            for &(oa, ob, delta_a, theta_ab) in &constants {
                let inputs = GuaranteeInputs {
                    k,
                    a: oa,
                    b: ob,
                    omega,
                    rho: cfg.estimate.rho,
                    alpha: cfg.estimate.alpha,
                    delta_a,
                    theta_ab,
                };
                let report = match evaluate_guarantee(&inputs) {
                    Ok(r) => r,
                    Err(e) if matches!(cfg.guarantee, GuaranteeChoice::Orders { .. }) => {
                        return Err(e)
                    }
                    Err(_) => continue,
                };
                if best
                    .as_ref()
                    .is_none_or(|b| report.condition_value < b.condition_value)
                {
                    best = Some(report);
                }
            }
            Ok(best.map(|report| Certificate { omega, report }))
        })
        .collect()
}

pub fn run_trial(cfg: &ExperimentConfig, index: usize) -> Result<TrialRecord> {
    Experiment::prepare(cfg)?.run_trial(index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSummary {
    pub omega: f64,
    pub trials: usize,
    pub mean_error: f64,
    pub median_error: f64,
    pub optimal: usize,
    pub certified: usize,
    pub bound_violations: usize,
    pub cone_failures: usize,
    pub mean_wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema: String,
    pub rows: usize,
    pub bound_violations: usize,
    pub per_omega: Vec<OmegaSummary>,
}

pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> SweepSummary {
    let per_omega: Vec<OmegaSummary> = records
        .chunks(cfg.trials)
        .map(|rows| {
            let mut errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
            errors.sort_by(f64::total_cmp);
            let len = errors.len();
            let median = if len % 2 == 1 {
                errors[len / 2]
            } else {
                0.5 * (errors[len / 2 - 1] + errors[len / 2])
            };
            OmegaSummary {
                omega: rows[0].omega,
                trials: len,
                mean_error: errors.iter().sum::<f64>() / len as f64,
                median_error: median,
                optimal: rows
                    .iter()
                    .filter(|r| r.status == SolveStatus::Optimal)
                    .count(),
                certified: rows.iter().filter(|r| r.certified).count(),
                bound_violations: rows
                    .iter()
                    .filter(|r| r.bound_satisfied == Some(false))
                    .count(),
                cone_failures: rows.iter().filter(|r| r.cone_holds == Some(false)).count(),
                mean_wall_time_ms: rows.iter().map(|r| r.wall_time_ms).sum::<f64>() / len as f64,
            }
        })
        .collect();
    SweepSummary {
        schema: CSV_SCHEMA.to_string(),
        rows: records.len(),
        bound_violations: per_omega.iter().map(|s| s.bound_violations).sum(),
        per_omega,
    }
}

/// The CSV text for `records`: a `#` comment line naming the schema and
/// matrix source, the column header, then one row per record.
pub fn render_csv(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Result<String> {
    let mut out = String::new();
    let source = match &cfg.matrix {
        MatrixSource::File { path } => format!("file {}", path.display()),
        MatrixSource::Gaussian { rows, cols, seed } => {
            format!("gaussian {rows}x{cols} seed {seed}, columns normalized to unit l2 norm")
        }
    };
    writeln!(out, "# {CSV_SCHEMA}; matrix: {source}").expect("writing to a String");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TrialRecord::CSV_COLUMNS)
        .map_err(|e| Error::invalid(e.to_string()))?;
    for r in records {
        w.write_record(r.csv_fields())
            .map_err(|e| Error::invalid(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

/// Runs every row, writes the CSV to `cfg.output` and the summary JSON
/// next to it.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    let experiment = Experiment::prepare(cfg)?;
    let records = experiment.run_all()?;
    let csv = render_csv(cfg, &records)?;
    fs::write(&cfg.output, csv).map_err(|source| Error::Io {
        path: cfg.output.clone(),
        source,
    })?;
    let summary = summarize(cfg, &records);
    let path = cfg.summary_path();
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, json).map_err(|source| Error::Io { path, source })?;
    Ok(summary)
}
