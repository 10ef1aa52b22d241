//! ADMM for `min f(z) + g(v)` subject to `x = z`, `K x = v`, where `f` is
//! the weighted l1 norm and `g` the indicator of the constraint set.
//!
//! `K = A` for the exact and l2 constraints (target set `{y}` or the ball
//! around `y`), `K = A^T A` for the Dantzig set (target box around
//! `A^T y`). Both penalty terms share one parameter, so the x-update matrix
//! `(I + K^T K)^{-1}` is factored once and penalty changes are free.

use crate::bounds::ConstraintKind;
use crate::error::{Error, Result};
use crate::linalg::{
    dot, gemv, gemv_t, norm2, spd_inverse, DenseMatrix, DenseVector, Svd, RANK_TOLERANCE,
};

use super::polish::{certify, polish, repair};
use super::{
    constraint_residual, feasibility_limit, weighted_objective, SolveConfig, SolveStatus,
    SolverResult,
};

/// Penalty rebalancing: factor between residuals that triggers it, the
/// multiplier applied, and how many times it may fire. Unbounded
/// rebalancing can oscillate on degenerate programs.
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_STEP: f64 = 2.0;
const MAX_BALANCE_CHANGES: usize = 20;
/// Residuals are compared every this many iterations.
const BALANCE_PERIOD: usize = 10;
/// Iterations between attempts to polish and certify the iterate.
const CERTIFY_PERIOD: usize = 25;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Target<'a> {
    Point(&'a [f64]),
    Ball { center: &'a [f64], radius: f64 },
    Box { center: &'a [f64], radius: f64 },
}

impl Target<'_> {
    fn project(&self, v: &mut [f64]) {
        match *self {
            Target::Point(c) => v.copy_from_slice(c),
            Target::Ball { center, radius } => {
                let dist = v
                    .iter()
                    .zip(center)
                    .map(|(v, c)| (v - c) * (v - c))
                    .sum::<f64>()
                    .sqrt();
                if dist > radius {
                    let f = radius / dist;
                    for (v, c) in v.iter_mut().zip(center) {
                        *v = c + f * (*v - c);
                    }
                }
            }
            Target::Box { center, radius } => {
                for (v, c) in v.iter_mut().zip(center) {
                    *v = v.clamp(c - radius, c + radius);
                }
            }
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Raw ADMM iterate after the loop ends.
pub(crate) struct Iterate {
    pub z: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the iterations until the residual test passes or `certified`
/// accepts the current `(z, nu)` pair, with `nu` the dual estimate for the
/// constraint `K x ∈ C`.
pub(crate) fn iterate(
    k: &DenseMatrix,
    target: Target<'_>,
    w: &[f64],
    cfg: &SolveConfig,
    certified: &mut dyn FnMut(&[f64], &[f64]) -> bool,
) -> Result<Iterate> {
    let (m, n) = (k.rows(), k.cols());
    let mut normal = k.gram();
    for i in 0..n {
        normal.set(i, i, normal.get(i, i) + 1.0);
    }
    let inv =
        spd_inverse(&normal).ok_or_else(|| Error::invalid("I + K^T K is not positive definite"))?;

    let mut rho = cfg.penalty;
    let alpha = cfg.relaxation;
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut kx = vec![0.0; m];
    let mut v = vec![0.0; m];
    target.project(&mut v);
    let mut p = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut tmp_m = vec![0.0; m];
    let mut tmp_n = vec![0.0; n];
    let mut z_old = vec![0.0; n];
    let mut v_old = vec![0.0; m];
    let sqrt_dims = ((n + m) as f64).sqrt();
    let mut changes = 0;

    for it in 1..=cfg.max_iterations {
        // x = (I + K^T K)^{-1} [(z - u) + K^T (v - p)]
        for i in 0..m {
            tmp_m[i] = v[i] - p[i];
        }
        gemv_t(k, &tmp_m, &mut rhs);
        for i in 0..n {
            rhs[i] += z[i] - u[i];
        }
        gemv(&inv, &rhs, &mut x);
        gemv(k, &x, &mut kx);

        z_old.copy_from_slice(&z);
        v_old.copy_from_slice(&v);
        for i in 0..n {
            let xr = alpha * x[i] + (1.0 - alpha) * z_old[i];
            z[i] = soft_threshold(xr + u[i], w[i] / rho);
            u[i] += xr - z[i];
        }
        for i in 0..m {
            let kr = alpha * kx[i] + (1.0 - alpha) * v_old[i];
            tmp_m[i] = kr + p[i];
        }
        v.copy_from_slice(&tmp_m);
        target.project(&mut v);
        for i in 0..m {
            let kr = alpha * kx[i] + (1.0 - alpha) * v_old[i];
            p[i] += kr - v[i];
        }

        let r_pri = (x
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            + kx.iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>())
        .sqrt();
        for i in 0..m {
            tmp_m[i] = v[i] - v_old[i];
        }
        gemv_t(k, &tmp_m, &mut tmp_n);
        for i in 0..n {
            tmp_n[i] += z[i] - z_old[i];
        }
        let r_dual = rho * norm2(&tmp_n);

        let primal_scale = (dot(&x, &x) + dot(&kx, &kx))
            .sqrt()
            .max((dot(&z, &z) + dot(&v, &v)).sqrt());
        gemv_t(k, &p, &mut tmp_n);
        for i in 0..n {
            tmp_n[i] += u[i];
        }
        let dual_scale = rho * norm2(&tmp_n);
        let eps_pri = cfg.primal_tolerance * (sqrt_dims + primal_scale);
        let eps_dual = cfg.dual_tolerance * ((n as f64).sqrt() + dual_scale);
        if r_pri <= eps_pri && r_dual <= eps_dual {
            return Ok(Iterate {
                z,
                iterations: it,
                converged: true,
            });
        }

        if it % CERTIFY_PERIOD == 0 {
            let nu: Vec<f64> = p.iter().map(|p| -rho * p).collect();
            if certified(&z, &nu) {
                return Ok(Iterate {
                    z,
                    iterations: it,
                    converged: true,
                });
            }
        }

        if cfg.adaptive_penalty && it % BALANCE_PERIOD == 0 && changes < MAX_BALANCE_CHANGES {
            let factor = if r_pri > BALANCE_RATIO * r_dual {
                BALANCE_STEP
            } else if r_dual > BALANCE_RATIO * r_pri {
                1.0 / BALANCE_STEP
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u.iter_mut().for_each(|u| *u /= factor);
                p.iter_mut().for_each(|p| *p /= factor);
                changes += 1;
            }
        }
    }
    Ok(Iterate {
        z,
        iterations: cfg.max_iterations,
        converged: false,
    })
}

pub(crate) fn solve(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    kind: ConstraintKind,
    eta: f64,
    cfg: &SolveConfig,
) -> Result<SolverResult> {
    let n = a.cols();
    let limit = feasibility_limit(kind, y, eta, cfg.feasibility_tolerance);
    let svd = Svd::new(a);
    let tol = RANK_TOLERANCE * svd.sigma.first().copied().unwrap_or(0.0).max(1.0);
    let x_ls = svd.pseudo_solve(y, tol);
    let finish = |x: Vec<f64>, status: SolveStatus, iterations: usize| -> SolverResult {
        let residual = constraint_residual(a, y, &x, kind);
        SolverResult {
            objective: weighted_objective(&x, w),
            constraint_residual: residual,
            x_hat: DenseVector::new(x).unwrap_or_else(|_| DenseVector::zeros(n)),
            status,
            iterations,
        }
    };

    // feasibility of the whole program is decided by the least-squares point
    if constraint_residual(a, y, &x_ls, kind) > limit {
        return Ok(finish(x_ls, SolveStatus::Infeasible, 0));
    }
    // zero is optimal whenever it is feasible
    let zero = vec![0.0; n];
    if kind != ConstraintKind::Exact && constraint_residual(a, y, &zero, kind) <= eta {
        return Ok(finish(zero, SolveStatus::Optimal, 0));
    }

    let gram;
    let (k, center): (&DenseMatrix, Vec<f64>) = match kind {
        ConstraintKind::Dantzig => {
            gram = a.gram();
            let mut c = vec![0.0; n];
            gemv_t(a, y, &mut c);
            (&gram, c)
        }
        _ => (a, y.to_vec()),
    };
    let target = match kind {
        ConstraintKind::Exact => Target::Point(&center),
        ConstraintKind::L2 => Target::Ball {
            center: &center,
            radius: eta,
        },
        ConstraintKind::Dantzig => Target::Box {
            center: &center,
            radius: eta,
        },
    };
    let mut proven: Option<Vec<f64>> = None;
    let mut check = |z: &[f64], nu: &[f64]| -> bool {
        if !cfg.polish {
            return false;
        }
        let Some(p) = polish(a, y, w, kind, eta, z) else {
            return false;
        };
        if constraint_residual(a, y, &p, kind) <= limit
            && certify(a, k, y, w, kind, eta, &p, Some(nu))
        {
            proven = Some(p);
            return true;
        }
        false
    };
    let iterate = iterate(k, target, w, cfg, &mut check)?;
    if let Some(p) = proven {
        return Ok(finish(p, SolveStatus::Optimal, iterate.iterations));
    }

    let mut best = repair(a, y, &svd, tol, &iterate.z, kind, eta);
    if cfg.polish {
        if let Some(p) = polish(a, y, w, kind, eta, &iterate.z) {
            let (obj_p, obj_b) = (weighted_objective(&p, w), weighted_objective(&best, w));
            let feasible = constraint_residual(a, y, &p, kind) <= limit;
            if feasible && obj_p <= obj_b + 1e-9 * (1.0 + obj_b) {
                best = p;
            }
        }
    }
    let feasible = constraint_residual(a, y, &best, kind) <= limit;
    let status = match (iterate.converged, feasible) {
        (true, true) => SolveStatus::Optimal,
        _ => SolveStatus::MaxIterations,
    };
    Ok(finish(best, status, iterate.iterations))
}
