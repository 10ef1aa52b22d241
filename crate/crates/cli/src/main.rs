use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wl1_core::bounds::proposition1_compare;
use wl1_core::harness::io::{
    parse_index_set, read_matrix, read_vector, write_matrix, write_vector,
};
use wl1_core::harness::run_sweep;
use wl1_core::rip::{
    compute_delta_with_budget, compute_theta_with_budget, randomized_lower_bound_delta,
    randomized_lower_bound_theta, DEFAULT_ENUMERATION_BUDGET,
};
use wl1_core::sharpness::{build_counterexample, orthonormal_control, verify_counterexample};
use wl1_core::solvers::solve;
use wl1_core::{
    evaluate_guarantee, ConstraintKind, Error, ExperimentConfig, GuaranteeInputs, Rational,
    SolveConfig, SolveStatus, SupportEstimate, WeightVector,
};

const EXIT_INVALID: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "wl1",
    version,
    about = "Weighted l1 recovery with prior support information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one weighted l1 program from files.
    Solve(SolveArgs),
    /// Restricted isometry / orthogonality constants of a matrix file.
    Rip(RipArgs),
    /// Guarantee constants from scalar inputs.
    Bounds(BoundsArgs),
    /// Build and verify the extremal counterexample.
    Sharpness(SharpnessArgs),
    /// Run an experiment config and write its CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Constraint {
    Exact,
    L2,
    Dantzig,
}

impl From<Constraint> for ConstraintKind {
    fn from(c: Constraint) -> Self {
        match c {
            Constraint::Exact => ConstraintKind::Exact,
            Constraint::L2 => ConstraintKind::L2,
            Constraint::Dantzig => ConstraintKind::Dantzig,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Row-major CSV matrix, no header.
    #[arg(long)]
    matrix: PathBuf,
    /// Measurements, one value per line.
    #[arg(long)]
    measurements: PathBuf,
    /// Support estimate as comma-separated 0-based indices.
    #[arg(long, default_value = "")]
    estimate: String,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, value_enum, default_value = "exact")]
    constraint: Constraint,
    /// Constraint radius (ignored for exact).
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Also write the solution here, one value per line.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RipArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Order of delta, or first order of theta.
    #[arg(long)]
    k: usize,
    /// Second order: compute theta_{k,k2} instead of delta_k.
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u128,
    /// Sample this many supports instead of enumerating (a lower bound).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    a: usize,
    #[arg(long)]
    b: usize,
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    rho: Rational,
    #[arg(long)]
    alpha: Rational,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    theta: f64,
    /// Print the comparison against the unweighted constants instead.
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct SharpnessArgs {
    #[arg(long = "dim")]
    dim: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    a: usize,
    #[arg(long)]
    b: usize,
    #[arg(long, default_value = "1")]
    rho: Rational,
    #[arg(long, default_value = "1")]
    alpha: Rational,
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u128,
    /// Verify the identity matrix on the same vectors instead.
    #[arg(long)]
    control: bool,
    /// Write the constructed matrix here.
    #[arg(long)]
    write_matrix: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the output path of the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn print_json(value: &impl Serialize) {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    // A closed pipe (e.g. `| head`) is not an error worth a panic.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve(args) => {
            let a = read_matrix(&args.matrix)?;
            let y = read_vector(&args.measurements)?;
            let estimate = SupportEstimate::from_set(parse_index_set(&args.estimate)?, a.cols())?;
            let w = WeightVector::new(estimate, args.omega)?;
            let mut cfg = SolveConfig::default();
            if let Some(it) = args.max_iterations {
                cfg.max_iterations = it;
            }
            let res = solve(&a, &y, w.as_slice(), args.constraint.into(), args.eta, &cfg)?;
            if let Some(path) = &args.output {
                write_vector(path, &res.x_hat)?;
            }
            print_json(&res);
            Ok(match res.status {
                SolveStatus::Optimal => 0,
                SolveStatus::Infeasible => EXIT_INVALID,
                SolveStatus::MaxIterations => EXIT_NOT_CONVERGED,
            })
        }
        Command::Rip(args) => {
            let a = read_matrix(&args.matrix)?;
            match (args.k2, args.trials) {
                (None, None) => print_json(&compute_delta_with_budget(&a, args.k, args.budget)?),
                (Some(k2), None) => {
                    print_json(&compute_theta_with_budget(&a, args.k, k2, args.budget)?)
                }
                (None, Some(t)) => print_json(&serde_json::json!({
                    "order": args.k,
                    "lower_bound": randomized_lower_bound_delta(&a, args.k, t, args.seed)?,
                })),
                (Some(k2), Some(t)) => print_json(&serde_json::json!({
                    "orders": [args.k, k2],
                    "lower_bound": randomized_lower_bound_theta(&a, args.k, k2, t, args.seed)?,
                })),
            }
            Ok(0)
        }
        Command::Bounds(args) => {
            let inputs = GuaranteeInputs {
                k: args.k,
                a: args.a,
                b: args.b,
                omega: args.omega,
                rho: args.rho,
                alpha: args.alpha,
                delta_a: args.delta,
                theta_ab: args.theta,
            };
            if args.compare {
                print_json(&proposition1_compare(&inputs)?);
            } else {
                print_json(&evaluate_guarantee(&inputs)?);
            }
            Ok(0)
        }
        Command::Sharpness(args) => {
            let mut inst = build_counterexample(
                args.dim, args.k, args.a, args.b, args.rho, args.alpha, args.omega,
            )?;
            if args.control {
                inst = orthonormal_control(&inst);
            }
            if let Some(path) = &args.write_matrix {
                write_matrix(path, &inst.a)?;
            }
            let report = verify_counterexample(&inst, args.budget, &SolveConfig::default())?;
            print_json(&serde_json::json!({
                "params": inst.params,
                "eta": inst.eta_vec,
                "gamma": inst.gamma_vec,
                "estimate": inst.estimate.indices().as_slice(),
                "report": report,
            }));
            Ok(0)
        }
        Command::Sweep(args) => {
            let mut cfg = ExperimentConfig::from_json_file(&args.config)?;
            if let Some(out) = args.output {
                cfg.output = out;
            }
            let summary = run_sweep(&cfg)?;
            print_json(&summary);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::BudgetExceeded { .. } => EXIT_BUDGET,
                _ => EXIT_INVALID,
            })
        }
    }
}
