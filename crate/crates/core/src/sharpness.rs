//! The extremal instance showing `delta_a + C theta_{a,b} < 1` cannot be
//! relaxed to `<= 1`.
//!
//! With `L = a + s`, a unit vector `xi` carrying `L` entries `1/sqrt(L)`,
//! and `A = c (I - xi xi^T)` with `c = sqrt(1 + (L - s)/(L + s))`, the
//! constant `delta_a + C theta_{a,b}` equals one. Two k-sparse vectors
//! `eta_vec` and `gamma_vec` with `eta_vec - gamma_vec = sqrt(L) xi` share
//! their measurements, and `gamma_vec` is no heavier in the weighted norm,
//! so `eta_vec` is not the unique weighted-l1 solution.
//!
//! Index layout (0-based, `h = alpha rho k`, `r = rho k`):
//!
//! ```text
//! [0, k - h)               support of eta_vec
//! [k - h, k - h + r)       the estimate T~
//! [k - h + r, k + r)       support of eta_vec
//! [k + r, L + h)           -1 entries of gamma_vec when L - k > r
//! ```
//!
//! When `L - k <= r` the `-1` entries of `gamma_vec` are the first `L - k`
//! slots of the estimate block; otherwise they fill the whole block and
//! spill past the second part of the support.

use serde::{Deserialize, Serialize};

use crate::bounds::{c_from_order, compute_s, ConstraintKind};
use crate::error::{Error, Result};
use crate::linalg::{matvec, DenseMatrix, DenseVector};
use crate::model::{weighted_norm, Rational, SupportEstimate, WeightVector};
use crate::rip::{
    compute_delta_with_budget, compute_theta_with_budget, randomized_lower_bound_delta,
    randomized_lower_bound_theta,
};
use crate::solvers::{solve, SolveConfig, SolveStatus};

/// Trials for the randomized fallback when exact enumeration is over budget.
const FALLBACK_TRIALS: usize = 20_000;
/// Noise levels for the stability check.
const NOISE_PATH: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
/// Required separation from `eta_vec`, as a fraction of `|eta_vec - gamma_vec|_2`.
const SEPARATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessParams {
    pub dim: usize,
    pub k: usize,
    pub a: usize,
    pub b: usize,
    pub rho: Rational,
    pub alpha: Rational,
    pub omega: f64,
    pub s: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleInstance {
    pub a: DenseMatrix,
    pub xi1: DenseVector,
    pub eta_vec: DenseVector,
    pub gamma_vec: DenseVector,
    pub estimate: SupportEstimate,
    pub params: SharpnessParams,
}

impl CounterexampleInstance {
    pub fn weights(&self) -> WeightVector {
        WeightVector::new(self.estimate.clone(), self.params.omega)
            .expect("omega validated at construction")
    }

    /// `c = sqrt(1 + (L - s)/(L + s))`.
    pub fn scale(&self) -> f64 {
        let (l, s) = (self.params.l as f64, self.params.s as f64);
        (1.0 + (l - s) / (l + s)).sqrt()
    }

    /// The bound `delta_a <= (L - s)/(L + s)` from the construction.
    pub fn delta_bound(&self) -> f64 {
        let (l, s) = (self.params.l as f64, self.params.s as f64);
        (l - s) / (l + s)
    }

    /// The bound on `theta_{a,b}` from the construction: `c^2 sqrt(ab)/L`
    /// for `b <= s`, `c^2 sqrt(as)/L` otherwise.
    pub fn theta_bound(&self) -> f64 {
        let p = &self.params;
        let c2 = self.scale().powi(2);
        let inner = if p.b <= p.s { p.a * p.b } else { p.a * p.s };
        c2 * (inner as f64).sqrt() / p.l as f64
    }
}

pub fn build_counterexample(
    dim: usize,
    k: usize,
    a: usize,
    b: usize,
    rho: Rational,
    alpha: Rational,
    omega: f64,
) -> Result<CounterexampleInstance> {
    if b == 0 {
        return Err(Error::invalid("b must be positive"));
    }
    let s = compute_s(k, a, omega, rho, alpha)?;
    if s < a {
        return Err(Error::invalid(format!("need a <= s, got a = {a}, s = {s}")));
    }
    if s > k {
        return Err(Error::invalid(format!("need s <= k, got s = {s}, k = {k}")));
    }
    let r = rho.times_integer(k).expect("validated by compute_s");
    let h = alpha.times_integer(r).expect("validated by compute_s");
    let l = a + s;
    if l > dim {
        return Err(Error::invalid(format!(
            "need a + s <= N, got a + s = {l}, N = {dim}"
        )));
    }
    if k + r > dim {
        return Err(Error::invalid(format!(
            "need k + rho k <= N, got k + rho k = {}, N = {dim}",
            k + r
        )));
    }

    let head = k - h;
    let mut eta = vec![0.0; dim];
    let mut gamma = vec![0.0; dim];
    for e in eta.iter_mut().take(head) {
        *e = 1.0;
    }
    for e in eta.iter_mut().skip(head + r).take(h) {
        *e = 1.0;
    }
    let excess = l - k;
    if excess > r {
        for g in gamma.iter_mut().skip(head).take(r) {
            *g = -1.0;
        }
        for g in gamma.iter_mut().skip(head + r + h).take(excess - r) {
            *g = -1.0;
        }
    } else {
        for g in gamma.iter_mut().skip(head).take(excess) {
            *g = -1.0;
        }
    }
    let root_l = (l as f64).sqrt();
    let xi: Vec<f64> = eta
        .iter()
        .zip(&gamma)
        .map(|(e, g)| (e - g) / root_l)
        .collect();

    let c2 = 1.0 + (l - s) as f64 / (l + s) as f64;
    let matrix = DenseMatrix::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        c2.sqrt() * (id - xi[i] * xi[j])
    });
    let estimate = SupportEstimate::new((head..head + r).collect(), dim)?;
    WeightVector::new(estimate.clone(), omega)?;
    Ok(CounterexampleInstance {
        a: matrix,
        xi1: DenseVector::new(xi)?,
        eta_vec: DenseVector::new(eta)?,
        gamma_vec: DenseVector::new(gamma)?,
        estimate,
        params: SharpnessParams {
            dim,
            k,
            a,
            b,
            rho,
            alpha,
            omega,
            s,
            l,
        },
    })
}

/// The same vectors and estimate with `A = I`, where recovery succeeds.
pub fn orthonormal_control(inst: &CounterexampleInstance) -> CounterexampleInstance {
    CounterexampleInstance {
        a: DenseMatrix::identity(inst.params.dim),
        ..inst.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub delta_a: f64,
    pub theta_ab: f64,
    /// `false` when `delta_a`, `theta_ab` are randomized lower bounds.
    pub exact: bool,
    pub c_weighted: f64,
    /// `delta_a + C theta_ab`.
    pub condition_value: f64,
    pub delta_bound: f64,
    pub theta_bound: f64,
    pub solver_status: SolveStatus,
    pub solver_objective: f64,
    pub eta_weighted_norm: f64,
    pub gamma_weighted_norm: f64,
    /// `|x_hat - eta_vec|_2` for `y = A eta_vec`.
    pub distance_to_eta: f64,
    /// `|eta_vec - gamma_vec|_2`.
    pub eta_gamma_distance: f64,
    /// Noiseless solution is not `eta_vec`: its objective is strictly
    /// smaller, or it sits at least `0.1 |eta_vec - gamma_vec|_2` away.
    pub recovery_fails: bool,
    /// `(noise level, |x_hat - eta_vec|_2)` along the l2 noise path.
    pub noise_path: Vec<(f64, f64)>,
    /// Every point on the noise path stays `0.1 |eta_vec - gamma_vec|_2` away.
    pub noise_path_fails: bool,
}

pub fn verify_counterexample(
    inst: &CounterexampleInstance,
    budget: u128,
    cfg: &SolveConfig,
) -> Result<SharpnessReport> {
    let p = &inst.params;
    let (delta_a, theta_ab, exact) = match (
        compute_delta_with_budget(&inst.a, p.a, budget),
        compute_theta_with_budget(&inst.a, p.a, p.b, budget),
    ) {
        (Ok(d), Ok(t)) => (d.value, t.value, true),
        (Err(Error::BudgetExceeded { .. }), _) | (_, Err(Error::BudgetExceeded { .. })) => (
            randomized_lower_bound_delta(&inst.a, p.a, FALLBACK_TRIALS, 0)?,
            randomized_lower_bound_theta(&inst.a, p.a, p.b, FALLBACK_TRIALS, 0)?,
            false,
        ),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let c_weighted = c_from_order(p.s, p.a, p.b);

    let w = inst.weights();
    let y = matvec(&inst.a, &inst.eta_vec)?;
    let res = solve(&inst.a, &y, w.as_slice(), ConstraintKind::Exact, 0.0, cfg)?;
    let eta_norm = weighted_norm(&inst.eta_vec, w.as_slice())?;
    let gamma_norm = weighted_norm(&inst.gamma_vec, w.as_slice())?;
    let gap = inst.eta_vec.sub(&inst.gamma_vec)?.norm2();
    let distance = res.x_hat.sub(&inst.eta_vec)?.norm2();
    let recovery_fails = res.objective < eta_norm - 1e-8 || distance >= SEPARATION * gap;

    // fixed alternating-sign noise direction
    let dir: Vec<f64> = (0..p.dim)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let dir_norm = (p.dim as f64).sqrt();
    let mut noise_path = Vec::with_capacity(NOISE_PATH.len());
    for eps in NOISE_PATH {
        let noisy: Vec<f64> = y
            .iter()
            .zip(&dir)
            .map(|(y, d)| y + eps * d / dir_norm)
            .collect();
        let r = solve(&inst.a, &noisy, w.as_slice(), ConstraintKind::L2, eps, cfg)?;
        noise_path.push((eps, r.x_hat.sub(&inst.eta_vec)?.norm2()));
    }
    let noise_path_fails = noise_path.iter().all(|(_, d)| *d >= SEPARATION * gap);

    Ok(SharpnessReport {
        delta_a,
        theta_ab,
        exact,
        c_weighted,
        condition_value: delta_a + c_weighted * theta_ab,
        delta_bound: inst.delta_bound(),
        theta_bound: inst.theta_bound(),
        solver_status: res.status,
        solver_objective: res.objective,
        eta_weighted_norm: eta_norm,
        gamma_weighted_norm: gamma_norm,
        distance_to_eta: distance,
        eta_gamma_distance: gap,
        recovery_fails,
        noise_path,
        noise_path_fails,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rip::DEFAULT_ENUMERATION_BUDGET;

    fn r(n: u64, d: u64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn small_instance_structure() {
        let inst = build_counterexample(8, 4, 2, 2, Rational::one(), Rational::one(), 0.0).unwrap();
        assert_eq!(inst.params.s, 2);
        assert_eq!(inst.params.l, 4);
        assert!((inst.xi1.norm2() - 1.0).abs() < 1e-12);
        assert!(max_abs(&matvec(&inst.a, &inst.xi1).unwrap()) < 1e-10);
        let diff = matvec(&inst.a, &inst.eta_vec.sub(&inst.gamma_vec).unwrap()).unwrap();
        assert!(max_abs(&diff) < 1e-10);
        assert_eq!(inst.eta_vec.iter().filter(|v| **v != 0.0).count(), 4);
    }

    #[test]
    fn xi_is_scaled_difference() {
        for (dim, k, a, b, rho, alpha, omega) in [
            (12, 6, 2, 3, Rational::one(), Rational::one(), 0.0),
            (12, 4, 3, 2, r(1, 2), Rational::one(), 0.0),
            (16, 6, 3, 2, r(2, 3), Rational::one(), 0.0),
            (10, 4, 4, 2, r(1, 2), Rational::one(), 0.5),
        ] {
            let inst = build_counterexample(dim, k, a, b, rho, alpha, omega).unwrap();
            let root_l = (inst.params.l as f64).sqrt();
            for i in 0..dim {
                let want = (inst.eta_vec[i] - inst.gamma_vec[i]) / root_l;
                assert_eq!(inst.xi1[i], want);
            }
            assert!(inst.gamma_vec.iter().filter(|v| **v != 0.0).count() <= k);
            let w = inst.weights();
            assert!(
                weighted_norm(&inst.gamma_vec, w.as_slice()).unwrap()
                    <= weighted_norm(&inst.eta_vec, w.as_slice()).unwrap()
            );
        }
    }

    #[test]
    fn first_branch_layout() {
        // q = 2, m = sqrt 6, s = 5 - floor(4 - sqrt 6) = 4, L = 7, L - k = 3 > rho k = 2
        let inst = build_counterexample(12, 4, 3, 2, r(1, 2), Rational::one(), 0.0).unwrap();
        assert_eq!(inst.params.s, 4);
        assert_eq!(inst.params.l, 7);
        let ones: Vec<usize> = (0..12).filter(|&i| inst.xi1[i] != 0.0).collect();
        assert_eq!(ones, (0..7).collect::<Vec<_>>());
        assert_eq!(inst.gamma_vec.as_slice()[2..4], [-1.0, -1.0]);
        assert_eq!(inst.gamma_vec[6], -1.0);
    }

    #[test]
    fn scaled_projection_acts_as_scalar_off_xi() {
        let inst = build_counterexample(8, 4, 2, 2, Rational::one(), Rational::one(), 0.0).unwrap();
        let c = inst.scale();
        // e_0 - e_1 is orthogonal to xi when both entries of xi agree
        let mut v = vec![0.0; 8];
        v[4] = 1.0;
        v[5] = -1.0;
        let av = matvec(&inst.a, &v).unwrap();
        for (got, want) in av.iter().zip(&v) {
            assert!((got - c * want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_violated_hypotheses() {
        // omega = 1 gives s = 2k - a > k
        let err =
            build_counterexample(16, 4, 2, 2, Rational::one(), Rational::one(), 1.0).unwrap_err();
        assert!(err.to_string().contains("s <= k"));
        let err =
            build_counterexample(6, 4, 2, 2, Rational::one(), Rational::one(), 0.0).unwrap_err();
        assert!(err.to_string().contains("<= N"));
    }

    #[test]
    fn extremal_constant_equals_one() {
        for (dim, k, a, b, s) in [(8, 4, 2, 2, 2), (12, 6, 2, 3, 4)] {
            let inst =
                build_counterexample(dim, k, a, b, Rational::one(), Rational::one(), 0.0).unwrap();
            assert_eq!(inst.params.s, s);
            let delta = compute_delta_with_budget(&inst.a, a, DEFAULT_ENUMERATION_BUDGET)
                .unwrap()
                .value;
            let theta = compute_theta_with_budget(&inst.a, a, b, DEFAULT_ENUMERATION_BUDGET)
                .unwrap()
                .value;
            assert!((delta - inst.delta_bound()).abs() < 1e-9);
            assert!((theta - inst.theta_bound()).abs() < 1e-9);
            let value = delta + c_from_order(s, a, b) * theta;
            assert!((value - 1.0).abs() < 1e-9, "{value}");
        }
    }

    #[test]
    fn verification_of_small_instance() {
        let inst = build_counterexample(8, 4, 2, 2, Rational::one(), Rational::one(), 0.0).unwrap();
        let rep = verify_counterexample(&inst, DEFAULT_ENUMERATION_BUDGET, &SolveConfig::default())
            .unwrap();
        assert!(rep.exact);
        assert!(
            (rep.condition_value - 1.0).abs() < 1e-9,
            "{}",
            rep.condition_value
        );
        assert!(rep.delta_a <= rep.delta_bound + 1e-9);
        assert!(rep.theta_ab <= rep.theta_bound + 1e-9);
        assert!(rep.solver_objective <= rep.eta_weighted_norm + 1e-8);
        assert!(rep.recovery_fails && rep.noise_path_fails);

        let control = verify_counterexample(
            &orthonormal_control(&inst),
            DEFAULT_ENUMERATION_BUDGET,
            &SolveConfig::default(),
        )
        .unwrap();
        assert!(!control.recovery_fails);
        assert!(control.distance_to_eta < 1e-8);
    }
}
