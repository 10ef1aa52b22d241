//! Weighted l1 minimization
//!
//! ```text
//! minimize  sum_i w_i |x_i|   subject to   A x - y ∈ B
//! ```
//!
//! for the exact set `B = {0}`, the l2 ball `|A x - y|_2 <= eta` and the
//! Dantzig set `|A^T (y - A x)|_inf <= eta`. All three go through the same
//! ADMM splitting ([`admm`]). Every few iterations the iterate is re-solved
//! exactly on its support and the result is checked against the optimality
//! conditions; a passing check ends the run early. Otherwise the final
//! iterate is repaired into the feasible set. [`oracle`] holds an
//! independent brute-force solver for tiny instances and [`cone`] the cone
//! inequality every optimal solution satisfies.

pub mod admm;
pub mod cone;
pub mod oracle;
mod polish;

use serde::{Deserialize, Serialize};

use crate::bounds::ConstraintKind;
use crate::error::{Error, Result};
use crate::linalg::{gemv, gemv_t, norm2, norm_inf, DenseMatrix, DenseVector};

pub use cone::{cone_check, ConeWitness};
pub use oracle::{oracle_weighted_min, ORACLE_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub max_iterations: usize,
    pub primal_tolerance: f64,
    pub dual_tolerance: f64,
    /// Initial ADMM penalty.
    pub penalty: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
    /// Rebalance the penalty when primal and dual residuals drift apart.
    pub adaptive_penalty: bool,
    pub feasibility_tolerance: f64,
    /// Re-solve on the detected support and try to certify the result.
    pub polish: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iterations: 20_000,
            primal_tolerance: 1e-8,
            dual_tolerance: 1e-8,
            penalty: 1.0,
            relaxation: 1.6,
            adaptive_penalty: true,
            feasibility_tolerance: 1e-7,
            polish: true,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        for (name, v) in [
            ("primal_tolerance", self.primal_tolerance),
            ("dual_tolerance", self.dual_tolerance),
            ("penalty", self.penalty),
            ("feasibility_tolerance", self.feasibility_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::invalid(format!(
                "relaxation = {} must lie in (0, 2)",
                self.relaxation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub x_hat: DenseVector,
    pub status: SolveStatus,
    /// `|x_hat|_{1,w}`.
    pub objective: f64,
    /// `|A x_hat - y|_2`, or `|A^T (y - A x_hat)|_inf` for the Dantzig set.
    pub constraint_residual: f64,
    pub iterations: usize,
}

pub fn weighted_objective(x: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(x, w)| w * x.abs()).sum()
}

/// Constraint residual of `x` for the given constraint kind.
pub fn constraint_residual(a: &DenseMatrix, y: &[f64], x: &[f64], kind: ConstraintKind) -> f64 {
    let mut r = vec![0.0; a.rows()];
    gemv(a, x, &mut r);
    for (r, y) in r.iter_mut().zip(y) {
        *r -= y;
    }
    match kind {
        ConstraintKind::Exact | ConstraintKind::L2 => norm2(&r),
        ConstraintKind::Dantzig => {
            let mut g = vec![0.0; a.cols()];
            gemv_t(a, &r, &mut g);
            norm_inf(&g)
        }
    }
}

/// Largest residual accepted as feasible: `eta + tol` for the balls,
/// `tol (1 + |y|_2)` for the exact constraint.
pub fn feasibility_limit(kind: ConstraintKind, y: &[f64], eta: f64, tol: f64) -> f64 {
    match kind {
        ConstraintKind::Exact => tol * (1.0 + norm2(y)),
        _ => eta + tol,
    }
}

pub(crate) fn validate_problem(a: &DenseMatrix, y: &[f64], w: &[f64], eta: f64) -> Result<()> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            op: "measurements",
            expected: a.rows(),
            actual: y.len(),
        });
    }
    if w.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            op: "weights",
            expected: a.cols(),
            actual: w.len(),
        });
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::Empty);
    }
    if let Some(pos) = a.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    if let Some(v) = w.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        return Err(Error::invalid(format!("weight {v} outside [0, 1]")));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::invalid(format!(
            "radius eta = {eta} must be finite and >= 0"
        )));
    }
    Ok(())
}

pub fn solve(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    kind: ConstraintKind,
    eta: f64,
    cfg: &SolveConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    let eta = if kind == ConstraintKind::Exact {
        0.0
    } else {
        eta
    };
    validate_problem(a, y, w, eta)?;
    // a zero-radius ball is the affine constraint, which has an exact projection
    let inner = if kind == ConstraintKind::L2 && eta == 0.0 {
        ConstraintKind::Exact
    } else {
        kind
    };
    admm::solve(a, y, w, inner, eta, cfg)
}

/// `min |x|_{1,w}` subject to `A x = y`.
pub fn solve_weighted_bp(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    cfg: &SolveConfig,
) -> Result<SolverResult> {
    solve(a, y, w, ConstraintKind::Exact, 0.0, cfg)
}

/// `min |x|_{1,w}` subject to `|A x - y|_2 <= eta`.
pub fn solve_weighted_bpdn(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    eta: f64,
    cfg: &SolveConfig,
) -> Result<SolverResult> {
    solve(a, y, w, ConstraintKind::L2, eta, cfg)
}

/// `min |x|_{1,w}` subject to `|A^T (y - A x)|_inf <= eta`.
pub fn solve_weighted_ds(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    eta: f64,
    cfg: &SolveConfig,
) -> Result<SolverResult> {
    solve(a, y, w, ConstraintKind::Dantzig, eta, cfg)
}
