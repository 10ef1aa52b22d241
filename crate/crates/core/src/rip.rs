//! Restricted isometry and restricted orthogonality constants by exhaustive
//! enumeration over supports, with seeded random-sampling lower bounds for
//! matrices that are too large to enumerate.
//!
//! Both constants only depend on the Gram matrix `G = A^T A`:
//!
//! * `delta_k` is the largest deviation from one of an eigenvalue of `G[S,S]`
//!   over all `|S| = k`;
//! * `theta_{k1,k2}` is the largest singular value of `G[S,T]` over disjoint
//!   `|S| = k1`, `|T| = k2`.
//!
//! Supports are visited in lexicographic order and the first maximizer is
//! kept, so witnesses are reproducible even though the scan runs in parallel.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{extremes_in_place, DenseMatrix};
use crate::model::Rational;

pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;
/// Accuracy of enumerated constants (inherited from the eigen solver).
pub const RIP_TOLERANCE: f64 = 1e-10;
/// Slack allowed when checking an inequality that must hold exactly.
pub const LEMMA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicValue {
    pub order: usize,
    pub value: f64,
    pub argmax_support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocValue {
    pub orders: (usize, usize),
    pub value: f64,
    pub argmax_supports: (Vec<usize>, Vec<usize>),
}

/// `n choose k`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank_combination(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            let count = binomial(n - next - 1, remaining);
            if rank < count {
                break;
            }
            rank -= count;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances `c` to the next `k`-subset of `0..n` in lexicographic order.
/// Returns `false` once the last subset has been passed.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Deviation `max(|lambda_min - 1|, |lambda_max - 1|)` of `G[S,S]`.
pub fn delta_of_support(gram: &DenseMatrix, support: &[usize]) -> f64 {
    let k = support.len();
    let mut buf = vec![0.0; k * k];
    delta_kernel(gram, support, &mut buf)
}

fn delta_kernel(gram: &DenseMatrix, s: &[usize], buf: &mut [f64]) -> f64 {
    let k = s.len();
    for (a, &i) in s.iter().enumerate() {
        for (b, &j) in s.iter().enumerate() {
            buf[a * k + b] = gram.get(i, j);
        }
    }
    let (lo, hi) = extremes_in_place(buf, k);
    (lo - 1.0).abs().max((hi - 1.0).abs())
}

/// `sigma_max(G[S,T])`.
pub fn theta_of_supports(gram: &DenseMatrix, s: &[usize], t: &[usize]) -> f64 {
    let m = s.len().min(t.len());
    let mut block = vec![0.0; s.len() * t.len()];
    let mut buf = vec![0.0; m * m];
    theta_kernel(gram, s, t, &mut block, &mut buf)
}

fn theta_kernel(
    gram: &DenseMatrix,
    s: &[usize],
    t: &[usize],
    block: &mut [f64],
    buf: &mut [f64],
) -> f64 {
    // orient so that the short side indexes the rows
    let (rows, cols) = if s.len() <= t.len() { (s, t) } else { (t, s) };
    let (r, c) = (rows.len(), cols.len());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            block[a * c + b] = gram.get(i, j);
        }
    }
    if r == 1 {
        return block[..c].iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    for a in 0..r {
        for b in a..r {
            let v: f64 = (0..c).map(|l| block[a * c + l] * block[b * c + l]).sum();
            buf[a * r + b] = v;
            buf[b * r + a] = v;
        }
    }
    let (_, hi) = extremes_in_place(buf, r);
    hi.max(0.0).sqrt()
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    rank: u128,
}

impl Best {
    const NONE: Best = Best {
        value: f64::NEG_INFINITY,
        rank: u128::MAX,
    };

    fn merge(self, other: Best) -> Best {
        if other.value > self.value || (other.value == self.value && other.rank < self.rank) {
            other
        } else {
            self
        }
    }
}

fn chunk_ranges(total: u128) -> Vec<(u128, u128)> {
    let chunks = (rayon::current_num_threads() as u128 * 8).clamp(1, total.max(1));
    let step = total.div_ceil(chunks).max(1);
    (0..chunks)
        .map(|c| (c * step, ((c + 1) * step).min(total)))
        .filter(|(lo, hi)| lo < hi)
        .collect()
}

fn check_budget(required: u128, budget: u128) -> Result<()> {
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

pub fn compute_delta(a: &DenseMatrix, k: usize) -> Result<RicValue> {
    compute_delta_with_budget(a, k, DEFAULT_ENUMERATION_BUDGET)
}

pub fn compute_delta_with_budget(a: &DenseMatrix, k: usize, budget: u128) -> Result<RicValue> {
    let n = a.cols();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("RIC order {k} outside 1..={n}")));
    }
    let total = binomial(n, k);
    check_budget(total, budget)?;
    let gram = a.gram();
    let best = chunk_ranges(total)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut s = unrank_combination(n, k, lo);
            let mut buf = vec![0.0; k * k];
            let mut best = Best::NONE;
            for rank in lo..hi {
                let v = delta_kernel(&gram, &s, &mut buf);
                if v > best.value {
                    best = Best { value: v, rank };
                }
                next_combination(&mut s, n);
            }
            best
        })
        .reduce(|| Best::NONE, Best::merge);
    Ok(RicValue {
        order: k,
        value: best.value,
        argmax_support: unrank_combination(n, k, best.rank),
    })
}

pub fn compute_theta(a: &DenseMatrix, k1: usize, k2: usize) -> Result<RocValue> {
    compute_theta_with_budget(a, k1, k2, DEFAULT_ENUMERATION_BUDGET)
}

pub fn compute_theta_with_budget(
    a: &DenseMatrix,
    k1: usize,
    k2: usize,
    budget: u128,
) -> Result<RocValue> {
    let n = a.cols();
    if k1 == 0 || k2 == 0 || k1 + k2 > n {
        return Err(Error::invalid(format!(
            "ROC orders ({k1}, {k2}) need k1, k2 >= 1 and k1 + k2 <= {n}"
        )));
    }
    let outer = binomial(n, k1);
    let inner = binomial(n - k1, k2);
    check_budget(outer.saturating_mul(inner), budget)?;
    let gram = a.gram();
    let m = k1.min(k2);
    let best = chunk_ranges(outer)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut s = unrank_combination(n, k1, lo);
            let mut rest = Vec::with_capacity(n - k1);
            let mut pos: Vec<usize> = Vec::with_capacity(k2);
            let mut t = vec![0; k2];
            let mut block = vec![0.0; k1 * k2];
            let mut buf = vec![0.0; m * m];
            let mut best = Best::NONE;
            for outer_rank in lo..hi {
                rest.clear();
                rest.extend((0..n).filter(|i| !s.contains(i)));
                pos.clear();
                pos.extend(0..k2);
                let mut inner_rank = 0u128;
                loop {
                    for (slot, &p) in t.iter_mut().zip(&pos) {
                        *slot = rest[p];
                    }
                    let v = theta_kernel(&gram, &s, &t, &mut block, &mut buf);
                    if v > best.value {
                        best = Best {
                            value: v,
                            rank: outer_rank * inner + inner_rank,
                        };
                    }
                    inner_rank += 1;
                    if !next_combination(&mut pos, n - k1) {
                        break;
                    }
                }
                next_combination(&mut s, n);
            }
            best
        })
        .reduce(|| Best::NONE, Best::merge);
    let s = unrank_combination(n, k1, best.rank / inner);
    let rest: Vec<usize> = (0..n).filter(|i| !s.contains(i)).collect();
    let t = unrank_combination(n - k1, k2, best.rank % inner)
        .into_iter()
        .map(|p| rest[p])
        .collect();
    Ok(RocValue {
        orders: (k1, k2),
        value: best.value,
        argmax_supports: (s, t),
    })
}

/// Largest `delta` over `trials` random supports; never exceeds the true
/// `delta_k`. Falls back to exhaustive enumeration when `trials` covers every
/// support, so the result is then exact.
pub fn randomized_lower_bound_delta(
    a: &DenseMatrix,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let n = a.cols();
    if k == 0 || k > n || trials == 0 {
        return Err(Error::invalid(
            "randomized RIC bound needs 1 <= k <= N and trials >= 1",
        ));
    }
    if trials as u128 >= binomial(n, k) {
        return Ok(compute_delta_with_budget(a, k, u128::MAX)?.value);
    }
    let gram = a.gram();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; k * k];
    let mut best = 0.0_f64;
    for _ in 0..trials {
        let mut s = sample(&mut rng, n, k).into_vec();
        s.sort_unstable();
        best = best.max(delta_kernel(&gram, &s, &mut buf));
    }
    Ok(best)
}

/// Largest `sigma_max(G[S,T])` over `trials` random disjoint support pairs.
pub fn randomized_lower_bound_theta(
    a: &DenseMatrix,
    k1: usize,
    k2: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let n = a.cols();
    if k1 == 0 || k2 == 0 || k1 + k2 > n || trials == 0 {
        return Err(Error::invalid(
            "randomized ROC bound needs valid orders and trials >= 1",
        ));
    }
    if trials as u128 >= binomial(n, k1).saturating_mul(binomial(n - k1, k2)) {
        return Ok(compute_theta_with_budget(a, k1, k2, u128::MAX)?.value);
    }
    let gram = a.gram();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = k1.min(k2);
    let mut block = vec![0.0; k1 * k2];
    let mut buf = vec![0.0; m * m];
    let mut best = 0.0_f64;
    for _ in 0..trials {
        let picked = sample(&mut rng, n, k1 + k2).into_vec();
        let mut s = picked[..k1].to_vec();
        let mut t = picked[k1..].to_vec();
        s.sort_unstable();
        t.sort_unstable();
        best = best.max(theta_kernel(&gram, &s, &t, &mut block, &mut buf));
    }
    Ok(best)
}

/// Every intermediate quantity of the inner-product bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Witness {
    pub inner_product: f64,
    pub u_norm2: f64,
    pub v_norm1: f64,
    pub v_norm_inf: f64,
    pub lambda: f64,
    pub theta: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `|<Au, Av>| <= theta_{k1,k2} |u|_2 lambda sqrt(k2)` for a
/// `k1`-sparse `u` and a `v` with disjoint support, `|v|_1 <= lambda k2` and
/// `|v|_inf <= lambda`. `v` itself need not be sparse.
pub fn check_lemma1(
    a: &DenseMatrix,
    u: &[f64],
    v: &[f64],
    k1: usize,
    k2: usize,
    lambda: f64,
) -> Result<Lemma1Witness> {
    let theta = compute_theta(a, k1, k2)?;
    check_lemma1_with_theta(a, u, v, &theta, lambda)
}

/// [`check_lemma1`] against an already computed `theta`.
pub fn check_lemma1_with_theta(
    a: &DenseMatrix,
    u: &[f64],
    v: &[f64],
    theta: &RocValue,
    lambda: f64,
) -> Result<Lemma1Witness> {
    let (k1, k2) = theta.orders;
    let n = a.cols();
    if u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch {
            op: "check_lemma1",
            expected: n,
            actual: if u.len() != n { u.len() } else { v.len() },
        });
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::invalid("lambda must be non-negative"));
    }
    let u_nnz = u.iter().filter(|x| **x != 0.0).count();
    if u_nnz > k1 {
        return Err(Error::invalid(format!(
            "u has {u_nnz} nonzeros, more than k1 = {k1}"
        )));
    }
    if u.iter().zip(v).any(|(x, y)| *x != 0.0 && *y != 0.0) {
        return Err(Error::invalid("u and v supports overlap"));
    }
    let v_norm1: f64 = v.iter().map(|x| x.abs()).sum();
    let v_norm_inf = crate::linalg::norm_inf(v);
    let slack = LEMMA_TOLERANCE * (1.0 + lambda);
    if v_norm1 > lambda * k2 as f64 + slack || v_norm_inf > lambda + slack {
        return Err(Error::invalid(format!(
            "v violates |v|_1 <= lambda k2 or |v|_inf <= lambda (|v|_1 = {v_norm1}, |v|_inf = {v_norm_inf}, lambda = {lambda})"
        )));
    }
    let au = crate::linalg::matvec(a, u)?;
    let av = crate::linalg::matvec(a, v)?;
    let inner_product = crate::linalg::dot(&au, &av);
    let u_norm2 = crate::linalg::norm2(u);
    let rhs = theta.value * u_norm2 * lambda * (k2 as f64).sqrt();
    Ok(Lemma1Witness {
        inner_product,
        u_norm2,
        v_norm1,
        v_norm_inf,
        lambda,
        theta: theta.value,
        rhs,
        holds: inner_product.abs() <= rhs + LEMMA_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Witness {
    pub k: usize,
    pub kp: usize,
    pub tau: Rational,
    pub theta_base: f64,
    pub theta_scaled: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `theta_{k, tau k'} <= sqrt(tau) theta_{k, k'}` by enumerating both.
pub fn check_lemma3(a: &DenseMatrix, k: usize, kp: usize, tau: Rational) -> Result<Lemma3Witness> {
    if tau < Rational::one() {
        return Err(Error::invalid(format!("tau = {tau} must be at least 1")));
    }
    let scaled = tau
        .times_integer(kp)
        .ok_or_else(|| Error::invalid(format!("tau * k' = {tau} * {kp} is not an integer")))?;
    let base = compute_theta(a, k, kp)?.value;
    let big = compute_theta(a, k, scaled)?.value;
    let rhs = tau.to_f64().sqrt() * base;
    Ok(Lemma3Witness {
        k,
        kp,
        tau,
        theta_base: base,
        theta_scaled: big,
        rhs,
        holds: big <= rhs + LEMMA_TOLERANCE,
    })
}
