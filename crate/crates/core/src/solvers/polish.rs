//! Post-processing of the ADMM iterate: a feasibility repair that always
//! yields a point inside the constraint set, and a support re-solve that
//! recovers the exact optimum when the support and signs were identified.

use crate::bounds::ConstraintKind;
use crate::linalg::{cholesky_solve_in_place, dot, gemv, gemv_t, norm_inf, DenseMatrix, Svd};

use super::constraint_residual;

const BISECTION_STEPS: usize = 80;
/// Entries below this fraction of the largest one count as zero.
const SUPPORT_THRESHOLD: f64 = 1e-9;
/// Dantzig rows within this relative distance of the radius count as active.
const ACTIVE_THRESHOLD: f64 = 1e-6;

/// Moves `z` into the constraint set along `d = A^+ (A z - y)`. The step
/// `z - mu d` scales the in-range part of the residual by `1 - mu`, so
/// `mu = 1` reaches the least-squares residual and the smallest feasible
/// `mu` is found by bisection.
pub(crate) fn repair(
    a: &DenseMatrix,
    y: &[f64],
    svd: &Svd,
    tol: f64,
    z: &[f64],
    kind: ConstraintKind,
    eta: f64,
) -> Vec<f64> {
    let mut r = vec![0.0; a.rows()];
    gemv(a, z, &mut r);
    for (r, y) in r.iter_mut().zip(y) {
        *r -= y;
    }
    let d = svd.pseudo_solve(&r, tol);
    let step = |mu: f64| -> Vec<f64> { z.iter().zip(&d).map(|(z, d)| z - mu * d).collect() };
    if kind == ConstraintKind::Exact {
        return step(1.0);
    }
    let level = eta.max(constraint_residual(a, y, &step(1.0), kind));
    if constraint_residual(a, y, z, kind) <= level {
        return z.to_vec();
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if constraint_residual(a, y, &step(mid), kind) <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    step(hi)
}

/// Gram matrix and right-hand side `A_S^T y` restricted to `support`.
fn restricted_normal(a: &DenseMatrix, y: &[f64], support: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let s = support.len();
    let cols: Vec<Vec<f64>> = support.iter().map(|&j| a.column(j)).collect();
    let mut g = vec![0.0; s * s];
    for i in 0..s {
        for j in i..s {
            let v = dot(&cols[i], &cols[j]);
            g[i * s + j] = v;
            g[j * s + i] = v;
        }
    }
    let b = cols.iter().map(|c| dot(c, y)).collect();
    (g, b)
}

fn spd_solve(g: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut g = g.to_vec();
    let mut b = b.to_vec();
    cholesky_solve_in_place(&mut g, n, &mut b).then_some(b)
}

fn scatter(n: usize, support: &[usize], vals: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&j, &v) in support.iter().zip(vals) {
        x[j] = v;
    }
    x
}

/// Exact solve on the support of `z`, `None` when the restricted system is
/// singular. The caller decides whether the result beats the repaired
/// iterate.
pub(crate) fn polish(
    a: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    kind: ConstraintKind,
    eta: f64,
    z: &[f64],
) -> Option<Vec<f64>> {
    let n = a.cols();
    let scale = norm_inf(z).max(1.0);
    let support: Vec<usize> = (0..n)
        .filter(|&i| z[i].abs() > SUPPORT_THRESHOLD * scale)
        .collect();
    let s = support.len();
    if s == 0 || s > a.rows() {
        return None;
    }
    match kind {
        ConstraintKind::Exact => {
            let (g, b) = restricted_normal(a, y, &support);
            spd_solve(&g, s, &b).map(|v| scatter(n, &support, &v))
        }
        ConstraintKind::L2 => {
            let (g, b) = restricted_normal(a, y, &support);
            let x0 = spd_solve(&g, s, &b)?;
            let c: Vec<f64> = support.iter().map(|&j| w[j] * z[j].signum()).collect();
            let d = spd_solve(&g, s, &c)?;
            let x0_full = scatter(n, &support, &x0);
            let d_full = scatter(n, &support, &d);
            let mut r0 = vec![0.0; a.rows()];
            gemv(a, &x0_full, &mut r0);
            let r0_sq: f64 = r0.iter().zip(y).map(|(ax, y)| (y - ax) * (y - ax)).sum();
            let mut e = vec![0.0; a.rows()];
            gemv(a, &d_full, &mut e);
            let e_sq = dot(&e, &e);
            if r0_sq.sqrt() > eta + ACTIVE_THRESHOLD * 1e-3 * (1.0 + dot(y, y).sqrt()) {
                return None;
            }
            let t = if e_sq > 0.0 {
                ((eta * eta - r0_sq).max(0.0) / e_sq).sqrt()
            } else {
                0.0
            };
            Some(
                x0_full
                    .iter()
                    .zip(&d_full)
                    .map(|(x, d)| x - t * d)
                    .collect(),
            )
        }
        ConstraintKind::Dantzig => {
            let gram = a.gram();
            let mut c = vec![0.0; n];
            gemv_t(a, y, &mut c);
            let mut gz = vec![0.0; n];
            gemv(&gram, z, &mut gz);
            let resid: Vec<f64> = c.iter().zip(&gz).map(|(c, g)| c - g).collect();
            let cutoff = eta - ACTIVE_THRESHOLD * (1.0 + eta);
            let active: Vec<usize> = (0..n).filter(|&j| resid[j].abs() >= cutoff).collect();
            if active.len() < s {
                return None;
            }
            // least squares over the active rows: G_{E,S} x_S = c_E - eta sign(r_E)
            let rows: Vec<Vec<f64>> = active
                .iter()
                .map(|&j| support.iter().map(|&i| gram.get(j, i)).collect())
                .collect();
            let rhs: Vec<f64> = active
                .iter()
                .map(|&j| {
                    c[j] - if eta > 0.0 {
                        eta * resid[j].signum()
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut nm = vec![0.0; s * s];
            let mut nb = vec![0.0; s];
            for (row, r) in rows.iter().zip(&rhs) {
                for i in 0..s {
                    nb[i] += row[i] * r;
                    for j in 0..s {
                        nm[i * s + j] += row[i] * row[j];
                    }
                }
            }
            spd_solve(&nm, s, &nb).map(|v| scatter(n, &support, &v))
        }
    }
}

/// Relative tolerance on the optimality conditions checked by [`certify`].
const KKT_TOLERANCE: f64 = 1e-9;

/// Finds `nu` supported on `rows` with `(K^T nu)_S = w_S sign(x_S)`, trying
/// the minimum-norm solution and the correction of `hint`, and accepts the
/// first one with `|(K^T nu)_i| <= w_i` off the support and, where
/// `signs[r]` is set, `signs[r] * nu_r >= 0`.
fn dual_on_rows(
    k: &DenseMatrix,
    rows: &[usize],
    signs: &[Option<f64>],
    w: &[f64],
    x: &[f64],
    support: &[usize],
    hint: Option<&[f64]>,
) -> bool {
    let s = support.len();
    let e = rows.len();
    if e < s {
        return false;
    }
    // M = K_{E,S}, stored row-major e x s
    let mut m = vec![0.0; e * s];
    for (r, &j) in rows.iter().enumerate() {
        for (c, &i) in support.iter().enumerate() {
            m[r * s + c] = k.get(j, i);
        }
    }
    let mut mtm = vec![0.0; s * s];
    for r in 0..e {
        for i in 0..s {
            for j in 0..s {
                mtm[i * s + j] += m[r * s + i] * m[r * s + j];
            }
        }
    }
    let target: Vec<f64> = support.iter().map(|&i| w[i] * x[i].signum()).collect();
    let wmax = w.iter().fold(0.0_f64, |a, b| a.max(*b));
    let tol = KKT_TOLERANCE * (1.0 + wmax);

    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; e]];
    if let Some(h) = hint {
        starts.push(rows.iter().map(|&j| h[j]).collect());
    }
    let mut full = vec![0.0; k.rows()];
    let mut ktnu = vec![0.0; k.cols()];
    for start in starts {
        // nu = start + M (M^T M)^{-1} (target - M^T start)
        let mut gap = target.clone();
        for (i, g) in gap.iter_mut().enumerate() {
            *g -= (0..e).map(|r| m[r * s + i] * start[r]).sum::<f64>();
        }
        let Some(coef) = spd_solve(&mtm, s, &gap) else {
            return false;
        };
        let nu: Vec<f64> = (0..e)
            .map(|r| start[r] + (0..s).map(|i| m[r * s + i] * coef[i]).sum::<f64>())
            .collect();
        let nu_scale = norm_inf(&nu).max(1.0);
        if nu
            .iter()
            .zip(signs)
            .any(|(v, sg)| matches!(sg, Some(sg) if sg * v < -tol * nu_scale))
        {
            continue;
        }
        full.iter_mut().for_each(|v| *v = 0.0);
        for (&j, &v) in rows.iter().zip(&nu) {
            full[j] = v;
        }
        gemv_t(k, &full, &mut ktnu);
        let on = support
            .iter()
            .all(|&i| (ktnu[i] - w[i] * x[i].signum()).abs() <= tol * nu_scale);
        let off = (0..k.cols())
            .filter(|i| !support.contains(i))
            .all(|i| ktnu[i].abs() <= w[i] + tol * nu_scale);
        if on && off {
            return true;
        }
    }
    false
}

/// Checks the optimality conditions of `x` for the weighted program with a
/// dual vector built from the residual (l2 ball) or from rows of `K`
/// (exact: `K = A`, Dantzig: `K = A^T A`). `hint` is the dual estimate of
/// the splitting scheme in the row space of `K`. A `true` answer proves
/// optimality up to the tolerance, `false` proves nothing.
#[allow(clippy::too_many_arguments)]
pub(crate) fn certify(
    a: &DenseMatrix,
    k: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    kind: ConstraintKind,
    eta: f64,
    x: &[f64],
    hint: Option<&[f64]>,
) -> bool {
    let n = a.cols();
    let support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    match kind {
        ConstraintKind::Exact => {
            let rows: Vec<usize> = (0..a.rows()).collect();
            dual_on_rows(k, &rows, &vec![None; rows.len()], w, x, &support, hint)
        }
        ConstraintKind::L2 => {
            let mut r = vec![0.0; a.rows()];
            gemv(a, x, &mut r);
            for (r, y) in r.iter_mut().zip(y) {
                *r = y - *r;
            }
            let wmax = w.iter().fold(0.0_f64, |a, b| a.max(*b));
            let tol = KKT_TOLERANCE * (1.0 + wmax);
            if dot(&r, &r).sqrt() < eta * (1.0 - KKT_TOLERANCE) {
                // interior point: only zero-cost coordinates may be active
                return support.iter().all(|&i| w[i] == 0.0);
            }
            let mut g = vec![0.0; n];
            gemv_t(a, &r, &mut g);
            // nu = t r, t >= 0 fitted on the support
            let num: f64 = support.iter().map(|&i| w[i] * x[i].signum() * g[i]).sum();
            let den: f64 = support.iter().map(|&i| g[i] * g[i]).sum();
            let t = if den > 0.0 { num / den } else { 0.0 };
            if t < 0.0 {
                return false;
            }
            let scale = t.max(1.0) * norm_inf(&g).max(1.0);
            support
                .iter()
                .all(|&i| (t * g[i] - w[i] * x[i].signum()).abs() <= tol * scale)
                && (0..n)
                    .filter(|i| !support.contains(i))
                    .all(|i| (t * g[i]).abs() <= w[i] + tol * scale)
        }
        ConstraintKind::Dantzig => {
            let mut c = vec![0.0; n];
            gemv_t(a, y, &mut c);
            let mut gx = vec![0.0; n];
            gemv(k, x, &mut gx);
            let cutoff = eta - ACTIVE_THRESHOLD * 1e-3 * (1.0 + eta);
            let mut rows = Vec::new();
            let mut signs = Vec::new();
            for j in 0..n {
                let res = c[j] - gx[j];
                if res.abs() >= cutoff {
                    rows.push(j);
                    signs.push(if eta > 0.0 { Some(res.signum()) } else { None });
                }
            }
            dual_on_rows(k, &rows, &signs, w, x, &support, hint)
        }
    }
}
