//! Signals, supports, support estimates and weights.
//!
//! Indices are 0-based throughout. A support estimate is described by its
//! relative size `rho = |T~| / k` and accuracy `alpha = |T~ ∩ T0| / |T~|`;
//! both are kept as exact rationals so that `alpha + beta = 1` holds exactly.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::DenseVector;

/// Exact non-negative rational used for `rho`, `alpha` and `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub Ratio<u64>);

impl Rational {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::invalid("rational with zero denominator"));
        }
        Ok(Rational(Ratio::new(numer, denom)))
    }

    pub fn integer(v: u64) -> Self {
        Rational(Ratio::from_integer(v))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// `self * k` when that product is an integer.
    pub fn times_integer(self, k: usize) -> Option<usize> {
        let p = self.0 * Ratio::from_integer(k as u64);
        p.is_integer().then(|| p.to_integer() as usize)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::invalid(format!("not a non-negative rational: {s:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Rational::new(parse(n)?, parse(d)?),
            None => Ok(Rational::integer(parse(s)?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(v) => Ok(Rational::integer(v)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Sorted set of distinct indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("index set contains duplicates"));
        }
        Ok(IndexSet(indices))
    }

    pub fn within(indices: Vec<usize>, dim: usize) -> Result<Self> {
        let set = Self::new(indices)?;
        if let Some(&i) = set.0.last().filter(|&&i| i >= dim) {
            return Err(Error::invalid(format!(
                "index {i} out of range for dimension {dim}"
            )));
        }
        Ok(set)
    }

    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    pub fn range(lo: usize, hi: usize) -> Self {
        IndexSet((lo..hi).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        IndexSet(self.iter().filter(|&i| other.contains(i)).collect())
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v: Vec<usize> = self.iter().chain(other.iter()).collect();
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet(self.iter().filter(|&i| !other.contains(i)).collect())
    }

    pub fn complement(&self, dim: usize) -> IndexSet {
        IndexSet((0..dim).filter(|&i| !self.contains(i)).collect())
    }

    /// Membership mask of length `dim`.
    pub fn mask(&self, dim: usize) -> Vec<bool> {
        let mut m = vec![false; dim];
        for i in self.iter().filter(|&i| i < dim) {
            m[i] = true;
        }
        m
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// A signal together with the sparsity level of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalInstance {
    pub x: DenseVector,
    pub k: usize,
}

impl SignalInstance {
    pub fn new(x: DenseVector, k: usize) -> Result<Self> {
        if k == 0 || k > x.len() {
            return Err(Error::invalid(format!(
                "sparsity {k} outside 1..={}",
                x.len()
            )));
        }
        Ok(Self { x, k })
    }

    /// `T0`, the support of the best k-term approximation.
    pub fn support(&self) -> IndexSet {
        best_k_support(&self.x, self.k).expect("k validated on construction")
    }

    /// `x_max(k)`.
    pub fn head(&self) -> DenseVector {
        self.x.restrict(self.support().as_slice())
    }

    /// `x_-max(k) = x - x_max(k)`.
    pub fn tail(&self) -> DenseVector {
        let t0 = self.support();
        let mut out = self.x.clone();
        for i in t0.iter() {
            out.as_mut_slice()[i] = 0.0;
        }
        out
    }
}

/// A support estimate `T~` inside an ambient dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportEstimate {
    indices: IndexSet,
    dim: usize,
}

impl SupportEstimate {
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        Ok(Self {
            indices: IndexSet::within(indices, dim)?,
            dim,
        })
    }

    pub fn from_set(indices: IndexSet, dim: usize) -> Result<Self> {
        Self::new(indices.0, dim)
    }

    pub fn indices(&self) -> &IndexSet {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `(rho, alpha, beta)` of a support estimate relative to a true support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateProfile {
    pub rho: Rational,
    pub alpha: Rational,
    pub beta: Rational,
}

/// The two-level weights: `omega` on the estimate, one elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
    omega: f64,
    estimate: SupportEstimate,
}

impl WeightVector {
    pub fn new(estimate: SupportEstimate, omega: f64) -> Result<Self> {
        check_omega(omega)?;
        let mut w = vec![1.0; estimate.dim()];
        for i in estimate.indices().iter() {
            w[i] = omega;
        }
        Ok(Self { w, omega, estimate })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn estimate(&self) -> &SupportEstimate {
        &self.estimate
    }
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::invalid(format!("omega = {omega} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Exact,
    L2Ball,
    DantzigBall,
    Gaussian,
}

/// Which constraint set the solver uses for Gaussian noise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianConstraint {
    #[default]
    L2,
    Dantzig,
}

/// Noise model and solver radius. `epsilon` bounds the true noise, `eta`
/// is the radius handed to the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub gaussian_constraint: GaussianConstraint,
}

impl NoiseSpec {
    pub fn exact() -> Self {
        Self {
            kind: NoiseKind::Exact,
            epsilon: 0.0,
            eta: 0.0,
            sigma: 0.0,
            gaussian_constraint: GaussianConstraint::L2,
        }
    }

    pub fn l2(epsilon: f64, eta: f64) -> Result<Self> {
        Self {
            kind: NoiseKind::L2Ball,
            epsilon,
            eta,
            ..Self::exact()
        }
        .validated()
    }

    pub fn dantzig(epsilon: f64, eta: f64) -> Result<Self> {
        Self {
            kind: NoiseKind::DantzigBall,
            epsilon,
            eta,
            ..Self::exact()
        }
        .validated()
    }

    pub fn gaussian(sigma: f64, constraint: GaussianConstraint) -> Result<Self> {
        Self {
            kind: NoiseKind::Gaussian,
            sigma,
            gaussian_constraint: constraint,
            ..Self::exact()
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.epsilon) || !finite_nonneg(self.eta) || !finite_nonneg(self.sigma) {
            return Err(Error::invalid(
                "noise parameters must be finite and non-negative",
            ));
        }
        match self.kind {
            NoiseKind::Exact if self.epsilon != 0.0 || self.eta != 0.0 => {
                Err(Error::invalid("exact noise requires epsilon = eta = 0"))
            }
            NoiseKind::L2Ball | NoiseKind::DantzigBall if self.eta < self.epsilon => {
                Err(Error::invalid(format!(
                    "solver radius eta = {} below noise level epsilon = {}",
                    self.eta, self.epsilon
                )))
            }
            _ => Ok(self),
        }
    }
}

/// Indices of the `k` largest-magnitude entries; ties go to the lower index,
/// and zero entries pad the set when `x` has fewer than `k` nonzeros.
pub fn best_k_support(x: &[f64], k: usize) -> Result<IndexSet> {
    if k == 0 || k > x.len() {
        return Err(Error::invalid(format!("k = {k} outside 1..={}", x.len())));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    order.truncate(k);
    IndexSet::new(order)
}

/// Draws a support estimate with `|T~| = rho k` and `|T~ ∩ T0| = alpha rho k`,
/// deterministically from `seed`.
pub fn make_estimate(
    t0: &IndexSet,
    rho: Rational,
    alpha: Rational,
    k: usize,
    dim: usize,
    seed: u64,
) -> Result<SupportEstimate> {
    if t0.as_slice().last().is_some_and(|&i| i >= dim) {
        return Err(Error::invalid(
            "true support not inside the ambient dimension",
        ));
    }
    if alpha > Rational::one() {
        return Err(Error::invalid(format!("alpha = {alpha} exceeds 1")));
    }
    let size = rho
        .times_integer(k)
        .ok_or_else(|| Error::invalid(format!("rho * k = {rho} * {k} is not an integer")))?;
    let inside = alpha.times_integer(size).ok_or_else(|| {
        Error::invalid(format!(
            "alpha * rho * k = {alpha} * {size} is not an integer"
        ))
    })?;
    let outside = size - inside;
    if inside > t0.len() {
        return Err(Error::invalid(format!(
            "alpha * rho * k = {inside} exceeds |T0| = {}",
            t0.len()
        )));
    }
    let rest = t0.complement(dim);
    if outside > rest.len() {
        return Err(Error::invalid(format!(
            "(1 - alpha) * rho * k = {outside} exceeds N - |T0| = {}",
            rest.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = sample(&mut rng, t0.len(), inside)
        .into_iter()
        .map(|p| t0.as_slice()[p])
        .collect();
    chosen.extend(
        sample(&mut rng, rest.len(), outside)
            .into_iter()
            .map(|p| rest.as_slice()[p]),
    );
    SupportEstimate::new(chosen, dim)
}

/// `(rho, alpha, beta)` of `estimate` against `t0`. An empty estimate is
/// reported as fully accurate (`alpha = 1`).
pub fn profile_of(t0: &IndexSet, estimate: &SupportEstimate, k: usize) -> Result<EstimateProfile> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if t0.as_slice().last().is_some_and(|&i| i >= estimate.dim()) {
        return Err(Error::invalid(
            "true support not inside the ambient dimension",
        ));
    }
    let size = estimate.len() as u64;
    let hits = estimate.indices().intersection(t0).len() as u64;
    let rho = Rational::new(size, k as u64)?;
    let alpha = if size == 0 {
        Rational::one()
    } else {
        Rational::new(hits, size)?
    };
    let beta = Rational(Ratio::from_integer(1) - alpha.0);
    Ok(EstimateProfile { rho, alpha, beta })
}

/// The bracket `[[z]]`: the unique integer in `[z, z + 1)`.
pub fn double_bracket(z: f64) -> Result<u64> {
    if !z.is_finite() || z < 0.0 {
        return Err(Error::invalid(format!(
            "[[.]] needs a finite non-negative argument, got {z}"
        )));
    }
    Ok(z.ceil() as u64)
}

pub fn weighted_norm(x: &[f64], w: &[f64]) -> Result<f64> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            op: "weighted_norm",
            expected: x.len(),
            actual: w.len(),
        });
    }
    Ok(x.iter().zip(w).map(|(xi, wi)| wi * xi.abs()).sum())
}

/// `omega |x_{T0^c}|_1 + (1 - omega) |x_{T~^c ∩ T0^c}|_1`, the signal-dependent
/// part of the error bounds and of the cone inequality.
pub fn weighted_tail(x: &[f64], t0: &IndexSet, estimate: &SupportEstimate, omega: f64) -> f64 {
    let in_t0 = t0.mask(x.len());
    let in_est = estimate.indices().mask(x.len());
    let mut off_t0 = 0.0;
    let mut off_both = 0.0;
    for (i, v) in x.iter().enumerate() {
        if !in_t0[i] {
            off_t0 += v.abs();
            if !in_est[i] {
                off_both += v.abs();
            }
        }
    }
    omega * off_t0 + (1.0 - omega) * off_both
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: u64, d: u64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn set(v: &[usize]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn best_k_support_examples() {
        assert_eq!(
            best_k_support(&[0.0, 5.0, 0.0, -7.0], 1).unwrap(),
            set(&[3])
        );
        assert_eq!(
            best_k_support(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(),
            set(&[2, 3])
        );
        assert_eq!(best_k_support(&[2.0, -2.0, 0.0], 1).unwrap(), set(&[0]));
        // fewer nonzeros than k: padded with the lowest-index zeros
        assert_eq!(
            best_k_support(&[0.0, 0.0, 3.0, 0.0], 3).unwrap(),
            set(&[0, 1, 2])
        );
        assert!(best_k_support(&[1.0], 0).is_err());
        assert!(best_k_support(&[1.0], 2).is_err());
    }

    #[test]
    fn make_estimate_examples() {
        let t0 = set(&[0, 1]);
        let e = make_estimate(&t0, Rational::one(), Rational::one(), 2, 10, 0).unwrap();
        assert_eq!(e.indices(), &t0);

        let e = make_estimate(&t0, Rational::one(), Rational::zero(), 2, 10, 0).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e.indices().iter().all(|i| i >= 2));

        let t0 = set(&[0, 1, 2, 3]);
        let e = make_estimate(&t0, r(1, 2), r(1, 2), 4, 10, 7).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.indices().intersection(&t0).len(), 1);
    }

    #[test]
    fn make_estimate_reports_infeasibility() {
        let t0 = set(&[0, 1]);
        let err = make_estimate(&t0, r(1, 3), Rational::one(), 2, 10, 0).unwrap_err();
        assert!(err.to_string().contains("rho * k"));
        let err = make_estimate(&t0, Rational::integer(2), Rational::one(), 2, 10, 0).unwrap_err();
        assert!(err.to_string().contains("exceeds |T0|"));
        let err = make_estimate(&t0, Rational::integer(5), Rational::zero(), 2, 10, 0).unwrap_err();
        assert!(err.to_string().contains("N - |T0|"));
    }

    #[test]
    fn profile_examples() {
        let t0 = set(&[0, 1]);
        let p = profile_of(&t0, &SupportEstimate::new(vec![0, 1], 5).unwrap(), 2).unwrap();
        assert_eq!(
            (p.rho, p.alpha, p.beta),
            (Rational::one(), Rational::one(), Rational::zero())
        );
        let p = profile_of(&t0, &SupportEstimate::new(vec![1, 2], 5).unwrap(), 2).unwrap();
        assert_eq!(
            (p.rho, p.alpha, p.beta),
            (Rational::one(), r(1, 2), r(1, 2))
        );
        let p = profile_of(&t0, &SupportEstimate::new(vec![], 5).unwrap(), 2).unwrap();
        assert_eq!(
            (p.rho, p.alpha, p.beta),
            (Rational::zero(), Rational::one(), Rational::zero())
        );
    }

    #[test]
    fn double_bracket_examples() {
        assert_eq!(double_bracket(3.0).unwrap(), 3);
        assert_eq!(double_bracket(3.2).unwrap(), 4);
        assert_eq!(double_bracket(0.0).unwrap(), 0);
        assert!(double_bracket(-0.5).is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        assert_eq!(weighted_norm(&[1.0, -2.0, 3.0], &[1.0; 3]).unwrap(), 6.0);
        assert_eq!(weighted_norm(&[1.0, 1.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(weighted_norm(&[2.0, -3.0], &[0.5, 0.5]).unwrap(), 2.5);
        assert!(weighted_norm(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn weights_follow_estimate() {
        let e = SupportEstimate::new(vec![1, 3], 4).unwrap();
        let w = WeightVector::new(e.clone(), 0.25).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.25, 1.0, 0.25]);
        assert!(WeightVector::new(e, 1.5).is_err());
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec::l2(0.1, 0.05).is_err());
        assert!(NoiseSpec::dantzig(0.1, 0.1).is_ok());
        let bad = NoiseSpec {
            epsilon: 0.1,
            ..NoiseSpec::exact()
        };
        assert!(bad.validated().is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!("3/4".parse::<Rational>().unwrap(), r(3, 4));
        assert_eq!("2".parse::<Rational>().unwrap(), Rational::integer(2));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("-1".parse::<Rational>().is_err());
        let json = serde_json::to_string(&r(6, 8)).unwrap();
        assert_eq!(json, "\"3/4\"");
        assert_eq!(
            serde_json::from_str::<Rational>("1").unwrap(),
            Rational::one()
        );
    }

    proptest! {
        #[test]
        fn head_and_tail_split_l1(x in prop::collection::vec(-10.0f64..10.0, 1..30), k_frac in 0.0f64..1.0) {
            let k = 1 + ((x.len() - 1) as f64 * k_frac) as usize;
            let sig = SignalInstance::new(DenseVector::new(x.clone()).unwrap(), k).unwrap();
            let total: f64 = x.iter().map(|v| v.abs()).sum();
            prop_assert!((sig.head().norm1() + sig.tail().norm1() - total).abs() <= 1e-12 * (1.0 + total));
            prop_assert_eq!(sig.support().len(), k);
        }

        #[test]
        fn estimate_round_trips_profile(
            dim in 6usize..40,
            k_frac in 0.0f64..1.0,
            size_frac in 0.0f64..1.0,
            hit_frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let k = 1 + ((dim / 2 - 1) as f64 * k_frac) as usize;
            let t0 = IndexSet::range(0, k);
            let size = 1 + ((k + (dim - k) / 2 - 1) as f64 * size_frac) as usize;
            let lo = size.saturating_sub(dim - k);
            let hi = size.min(k);
            let hits = lo + ((hi - lo) as f64 * hit_frac).round() as usize;
            let rho = r(size as u64, k as u64);
            let alpha = r(hits as u64, size as u64);
            let e = make_estimate(&t0, rho, alpha, k, dim, seed).unwrap();
            let p = profile_of(&t0, &e, k).unwrap();
            prop_assert_eq!(p.rho, rho);
            prop_assert_eq!(p.alpha, alpha);
            prop_assert_eq!(Rational(p.alpha.0 + p.beta.0), Rational::one());
        }

        #[test]
        fn unit_weights_give_l1(x in prop::collection::vec(-1e3f64..1e3, 1..20)) {
            let e = SupportEstimate::new(vec![0], x.len()).unwrap();
            let w = WeightVector::new(e, 1.0).unwrap();
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            prop_assert_eq!(weighted_norm(&x, w.as_slice()).unwrap(), l1);
        }

        #[test]
        fn bracket_within_unit_interval(z in 0.0f64..1e6) {
            let b = double_bracket(z).unwrap() as f64;
            prop_assert!(b - z >= 0.0 && b - z < 1.0);
        }
    }
}
