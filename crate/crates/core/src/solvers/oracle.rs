//! Brute-force reference solver for tiny instances.
//!
//! - Exact constraint: the program is a linear program whose optimum is
//!   attained at a point supported on linearly independent columns, so it is
//!   enough to solve `A_S x_S = y` over all such supports `S`.
//! - l2 ball: an optimal point with linearly independent support satisfies
//!   `A_S^T (y - A_S x_S) = t (w ∘ sign)_S` for some `t >= 0`; for every
//!   support and sign pattern that point is available in closed form
//!   (`t = 0` or the `t` putting the residual on the sphere).
//! - Dantzig set: a linear program again; every vertex has a support `S`
//!   and equally many active rows `E` with signs `tau`, solving
//!   `(A^T A)_{E,S} x_S = (A^T y)_E - eta tau`.
//!
//! Every candidate is checked for feasibility and the cheapest feasible one
//! wins. Infeasible candidates are dropped, feasible but suboptimal ones are
//! harmless, so the minimum is the exact optimum up to rounding.

use crate::bounds::ConstraintKind;
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_solve_in_place, dot, gemv, gemv_t, lu_solve_in_place, norm2, DenseMatrix, DenseVector,
    Svd,
};
use crate::rip::{binomial, next_combination};

use super::{constraint_residual, validate_problem, weighted_objective, SolveStatus, SolverResult};

/// Default cap on the number of candidate systems.
pub const ORACLE_BUDGET: u128 = 20_000_000;

/// Relative slack on candidate feasibility.
const CANDIDATE_SLACK: f64 = 1e-9;

fn candidate_count(kind: ConstraintKind, n_cols: usize, rank: usize) -> u128 {
    (1..=rank.min(n_cols))
        .map(|j| {
            let c = binomial(n_cols, j);
            match kind {
                ConstraintKind::Exact => c,
                ConstraintKind::L2 => c.saturating_mul(1 << j),
                ConstraintKind::Dantzig => c.saturating_mul(c).saturating_mul(1 << j),
            }
        })
        .fold(0u128, |acc, c| acc.saturating_add(c))
}

struct Best {
    x: Option<Vec<f64>>,
    objective: f64,
}

impl Best {
    fn offer(&mut self, x: Vec<f64>, w: &[f64]) {
        let obj = weighted_objective(&x, w);
        if self.x.is_none() || obj < self.objective {
            self.objective = obj;
            self.x = Some(x);
        }
    }
}

pub fn oracle_weighted_min(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    kind: ConstraintKind,
    eta: f64,
    budget: u128,
) -> Result<SolverResult> {
    let eta = if kind == ConstraintKind::Exact {
        0.0
    } else {
        eta
    };
    validate_problem(a, y, w, eta)?;
    let n = a.cols();
    let svd = Svd::new(a);
    let rank = svd.rank(1e-10 * svd.sigma.first().copied().unwrap_or(0.0).max(1.0));
    let required = candidate_count(kind, n, rank);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }

    let limit = match kind {
        ConstraintKind::Exact => CANDIDATE_SLACK * (1.0 + norm2(y)),
        _ => eta + CANDIDATE_SLACK * (1.0 + eta),
    };
    let mut best = Best {
        x: None,
        objective: f64::INFINITY,
    };
    let zero = vec![0.0; n];
    if constraint_residual(a, y, &zero, kind) <= limit {
        best.offer(zero, w);
    }

    let cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let gram = a.gram();
    let mut aty = vec![0.0; n];
    gemv_t(a, y, &mut aty);

    for size in 1..=rank.min(n) {
        let mut support: Vec<usize> = (0..size).collect();
        loop {
            match kind {
                ConstraintKind::Exact | ConstraintKind::L2 => {
                    support_candidates(a, y, w, &cols, &aty, &support, kind, eta, limit, &mut best);
                }
                ConstraintKind::Dantzig => {
                    dantzig_candidates(a, y, w, &gram, &aty, &support, eta, limit, &mut best);
                }
            }
            if !next_combination(&mut support, n) {
                break;
            }
        }
    }

    let x = match best.x {
        Some(x) => x,
        None => {
            return Ok(SolverResult {
                x_hat: DenseVector::zeros(n),
                status: SolveStatus::Infeasible,
                objective: 0.0,
                constraint_residual: constraint_residual(a, y, &vec![0.0; n], kind),
                iterations: 0,
            })
        }
    };
    Ok(SolverResult {
        objective: weighted_objective(&x, w),
        constraint_residual: constraint_residual(a, y, &x, kind),
        x_hat: DenseVector::new(x)?,
        status: SolveStatus::Optimal,
        iterations: 0,
    })
}

#[allow(clippy::too_many_arguments)]
fn support_candidates(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    cols: &[Vec<f64>],
    aty: &[f64],
    support: &[usize],
    kind: ConstraintKind,
    eta: f64,
    limit: f64,
    best: &mut Best,
) {
    let s = support.len();
    let n = a.cols();
    let mut g = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..s {
            g[i * s + j] = dot(&cols[support[i]], &cols[support[j]]);
        }
    }
    let solve = |rhs: &[f64]| -> Option<Vec<f64>> {
        let mut gg = g.clone();
        let mut b = rhs.to_vec();
        cholesky_solve_in_place(&mut gg, s, &mut b).then_some(b)
    };
    let b: Vec<f64> = support.iter().map(|&j| aty[j]).collect();
    let Some(x0) = solve(&b) else { return };
    let expand = |vals: &[f64]| {
        let mut x = vec![0.0; n];
        for (&j, &v) in support.iter().zip(vals) {
            x[j] = v;
        }
        x
    };
    let x0_full = expand(&x0);
    let r0 = constraint_residual(a, y, &x0_full, ConstraintKind::L2);
    if r0 <= limit {
        best.offer(x0_full.clone(), w);
    }
    if kind == ConstraintKind::Exact || r0 > eta {
        return;
    }
    let mut e = vec![0.0; a.rows()];
    for mask in 0u64..(1u64 << s) {
        let c: Vec<f64> = (0..s)
            .map(|i| {
                let sign = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                w[support[i]] * sign
            })
            .collect();
        let Some(d) = solve(&c) else { continue };
        let d_full = expand(&d);
        gemv(a, &d_full, &mut e);
        let e_sq = dot(&e, &e);
        if e_sq == 0.0 {
            continue;
        }
        let t = ((eta * eta - r0 * r0).max(0.0) / e_sq).sqrt();
        let x: Vec<f64> = x0_full
            .iter()
            .zip(&d_full)
            .map(|(x, d)| x - t * d)
            .collect();
        if constraint_residual(a, y, &x, ConstraintKind::L2) <= limit {
            best.offer(x, w);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn dantzig_candidates(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    gram: &DenseMatrix,
    aty: &[f64],
    support: &[usize],
    eta: f64,
    limit: f64,
    best: &mut Best,
) {
    let s = support.len();
    let n = a.cols();
    let mut rows: Vec<usize> = (0..s).collect();
    let mut m = vec![0.0; s * s];
    let mut rhs = vec![0.0; s];
    loop {
        let sign_patterns: u64 = if eta > 0.0 { 1 << s } else { 1 };
        for mask in 0..sign_patterns {
            for (r, &j) in rows.iter().enumerate() {
                for (c, &i) in support.iter().enumerate() {
                    m[r * s + c] = gram.get(j, i);
                }
                let tau = if mask >> r & 1 == 1 { -1.0 } else { 1.0 };
                rhs[r] = aty[j] - eta * tau;
            }
            if !lu_solve_in_place(&mut m, s, &mut rhs) {
                // singular for every sign pattern
                break;
            }
            let mut x = vec![0.0; n];
            for (&i, &v) in support.iter().zip(&rhs) {
                x[i] = v;
            }
            if constraint_residual(a, y, &x, ConstraintKind::Dantzig) <= limit {
                best.offer(x, w);
            }
        }
        if !next_combination(&mut rows, n) {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_measurements() {
        let a = DenseMatrix::identity(4);
        let y = [1.0, -2.0, 0.0, 0.5];
        let w = [1.0, 0.5, 1.0, 0.0];
        let r = oracle_weighted_min(&a, &y, &w, ConstraintKind::Exact, 0.0, ORACLE_BUDGET).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        for (x, y) in r.x_hat.iter().zip(y) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn feasible_zero_wins() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.6], vec![0.0, 1.0, 0.8]]).unwrap();
        let y = [0.3, 0.4];
        let w = [1.0; 3];
        for kind in [ConstraintKind::L2, ConstraintKind::Dantzig] {
            let r = oracle_weighted_min(&a, &y, &w, kind, 1.0, ORACLE_BUDGET).unwrap();
            assert_eq!(r.objective, 0.0);
        }
    }

    #[test]
    fn sparsest_point_on_three_columns() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, h], vec![0.0, 1.0, h]]).unwrap();
        let y = [h, h];
        let r = oracle_weighted_min(&a, &y, &[1.0; 3], ConstraintKind::Exact, 0.0, ORACLE_BUDGET)
            .unwrap();
        assert!(
            (r.x_hat[2] - 1.0).abs() < 1e-12
                && r.x_hat[0].abs() < 1e-12
                && r.x_hat[1].abs() < 1e-12
        );
        assert!((r.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_guard() {
        let a = DenseMatrix::from_fn(8, 14, |i, j| ((i * 14 + j) as f64).sin());
        let y = vec![1.0; 8];
        let err = oracle_weighted_min(&a, &y, &[1.0; 14], ConstraintKind::Dantzig, 0.1, 1000)
            .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }
}
