//! Closed-form recovery constants for weighted l1 minimization, their
//! standard-l1 counterparts, the sufficient condition
//! `delta_a + C theta_{a,b} < 1`, and the case-by-case comparison of the two.
//!
//! The central quantity is the order
//!
//! ```text
//! s = [[ k - a + omega k + (1 - omega) sqrt(m k) max{ sqrt(m k), sqrt(a) } ]],   m = 1 + rho - 2 alpha rho
//! ```
//!
//! where `m k = |T0 ∪ T~ \ T~_alpha|` is an integer. With that, the weighted
//! constant is `C = max{ s / sqrt(ab), sqrt(s / a) }`; the standard constant
//! is the same expression with `s = 2k - a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_omega, weighted_tail, IndexSet, Rational, SupportEstimate};

/// Margin used when a computed value sits within rounding of an integer.
const INTEGER_SNAP: f64 = 1e-9;

/// Which error bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `A x = y`.
    Exact,
    /// `|A x - y|_2 <= eta`.
    L2,
    /// `|A^T (y - A x)|_inf <= eta`.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeInputs {
    pub k: usize,
    pub a: usize,
    pub b: usize,
    pub omega: f64,
    pub rho: Rational,
    pub alpha: Rational,
    pub delta_a: f64,
    pub theta_ab: f64,
}

impl GuaranteeInputs {
    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.a == 0 || self.a > self.k {
            return Err(Error::invalid(format!(
                "need 1 <= a <= k, got a = {}, k = {}",
                self.a, self.k
            )));
        }
        if self.b == 0 {
            return Err(Error::invalid("b must be positive"));
        }
        if !(self.delta_a.is_finite() && self.delta_a >= 0.0) {
            return Err(Error::invalid(format!(
                "delta_a = {} must be finite and >= 0",
                self.delta_a
            )));
        }
        if !(self.theta_ab.is_finite() && self.theta_ab >= 0.0) {
            return Err(Error::invalid(format!(
                "theta_ab = {} must be finite and >= 0",
                self.theta_ab
            )));
        }
        mismatch_size(self.k, self.omega, self.rho, self.alpha).map(|_| ())
    }
}

/// `|T0 ∪ T~ \ T~_alpha| = (1 + rho - 2 alpha rho) k`, validating that
/// `rho k` and `alpha rho k` are cardinalities.
pub fn mismatch_size(k: usize, omega: f64, rho: Rational, alpha: Rational) -> Result<usize> {
    check_omega(omega)?;
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if alpha > Rational::one() {
        return Err(Error::invalid(format!("alpha = {alpha} exceeds 1")));
    }
    let size = rho
        .times_integer(k)
        .ok_or_else(|| Error::invalid(format!("rho * k = {rho} * {k} is not an integer")))?;
    let hits = alpha.times_integer(size).ok_or_else(|| {
        Error::invalid(format!(
            "alpha * rho * k = {alpha} * {size} is not an integer"
        ))
    })?;
    if hits > k {
        return Err(Error::invalid(format!(
            "alpha * rho * k = {hits} exceeds k = {k}"
        )));
    }
    // k + |T~| - 2|T~_alpha| = (k - hits) + (size - hits) >= 0
    Ok((k - hits) + (size - hits))
}

/// The order `s`. May be zero only in the degenerate case `a = k`,
/// `omega = 0` and `T~ = T0`.
pub fn compute_s(k: usize, a: usize, omega: f64, rho: Rational, alpha: Rational) -> Result<usize> {
    if a == 0 || a > k {
        return Err(Error::invalid(format!(
            "need 1 <= a <= k, got a = {a}, k = {k}"
        )));
    }
    let q = mismatch_size(k, omega, rho, alpha)? as f64;
    let m = q.max((q * a as f64).sqrt());
    // [[2k - a - x]] = 2k - a - floor(x), with x the shortfall against 2k - a
    let shortfall = (1.0 - omega) * (k as f64 - m);
    let s = (2 * k - a) as i64 - (shortfall + INTEGER_SNAP).floor() as i64;
    Ok(s.max(0) as usize)
}

pub fn compute_d(k: usize, omega: f64, rho: Rational, alpha: Rational) -> Result<f64> {
    let q = mismatch_size(k, omega, rho, alpha)?;
    Ok(if omega == 1.0 {
        k as f64
    } else {
        k.max(q) as f64
    })
}

/// `max{ s / sqrt(ab), sqrt(s / a) }`.
pub fn c_from_order(s: usize, a: usize, b: usize) -> f64 {
    let (s, a, b) = (s as f64, a as f64, b as f64);
    (s / (a * b).sqrt()).max((s / a).sqrt())
}

pub fn compute_c_weighted(
    k: usize,
    a: usize,
    b: usize,
    omega: f64,
    rho: Rational,
    alpha: Rational,
) -> Result<f64> {
    if b == 0 {
        return Err(Error::invalid("b must be positive"));
    }
    Ok(c_from_order(compute_s(k, a, omega, rho, alpha)?, a, b))
}

pub fn compute_c_standard(k: usize, a: usize, b: usize) -> Result<f64> {
    if a == 0 || a > k || b == 0 {
        return Err(Error::invalid(format!(
            "need 1 <= a <= k and b >= 1, got a = {a}, b = {b}, k = {k}"
        )));
    }
    Ok(c_from_order(2 * k - a, a, b))
}

/// Error-bound constants `(X0, X1, X0', X1')` for one condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorConstants {
    pub l2_noise: f64,
    pub l2_tail: f64,
    pub ds_noise: f64,
    pub ds_tail: f64,
}

/// Constants for order `s`, dimension `d`, constant `c`; `None` when the
/// condition `delta + c theta < 1` fails.
fn error_constants(
    s: usize,
    d: f64,
    a: usize,
    c: f64,
    delta: f64,
    theta: f64,
) -> Option<ErrorConstants> {
    let margin = 1.0 - delta - c * theta;
    if margin.is_nan() || margin <= 0.0 {
        return None;
    }
    let a = a as f64;
    let tail_coupling = if s == 0 {
        // s = 0 kills the cone term; the remaining tail enters through a
        // single extra coordinate, i.e. order one with theta_{a,1} <= theta_{a,b}
        (2.0 * d / a).sqrt() * theta / margin
    } else {
        (2.0 * d).sqrt() * c * theta / (margin * s as f64)
    };
    let tail = tail_coupling + 1.0 / d.sqrt();
    Some(ErrorConstants {
        l2_noise: (2.0 * (1.0 + delta) * d / a).sqrt() / margin,
        l2_tail: tail,
        ds_noise: (2.0 * d).sqrt() / margin,
        ds_tail: tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prop1Case {
    /// `omega = 1`: weighted and standard results coincide.
    OmegaOne,
    /// `alpha = 1/2`: weighted and standard results coincide.
    HalfAccurate,
    /// `alpha > 1/2`, `omega < 1`, `b <= s`.
    AccurateSmallB,
    /// `alpha > 1/2`, `omega < 1`, `s < b <= 2k - a`.
    AccurateMidB,
    /// `alpha > 1/2`, `omega < 1`, `b > 2k - a`.
    AccurateLargeB,
    /// `alpha < 1/2` with `omega < 1`: no comparison available.
    OutsideScope,
}

fn classify(inputs: &GuaranteeInputs, s: usize) -> Prop1Case {
    let half = Rational::new(1, 2).expect("nonzero denominator");
    let standard = 2 * inputs.k - inputs.a;
    if inputs.omega == 1.0 {
        Prop1Case::OmegaOne
    } else if inputs.alpha == half {
        Prop1Case::HalfAccurate
    } else if inputs.alpha < half {
        Prop1Case::OutsideScope
    } else if inputs.b <= s {
        Prop1Case::AccurateSmallB
    } else if inputs.b <= standard {
        Prop1Case::AccurateMidB
    } else {
        Prop1Case::AccurateLargeB
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    pub inputs: GuaranteeInputs,
    pub s: usize,
    pub d: f64,
    pub c_weighted: f64,
    pub c_standard: f64,
    /// `delta_a + C_weighted theta_ab`.
    pub condition_value: f64,
    pub condition_met: bool,
    /// `delta_a + C_standard theta_ab`.
    pub standard_condition_value: f64,
    pub standard_condition_met: bool,
    pub d0: Option<f64>,
    pub d1: Option<f64>,
    pub d0_ds: Option<f64>,
    pub d1_ds: Option<f64>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c0_ds: Option<f64>,
    pub c1_ds: Option<f64>,
    pub prop1_case: Prop1Case,
}

pub fn evaluate_guarantee(inputs: &GuaranteeInputs) -> Result<GuaranteeReport> {
    inputs.validate()?;
    let GuaranteeInputs {
        k,
        a,
        b,
        omega,
        rho,
        alpha,
        delta_a,
        theta_ab,
    } = *inputs;
    let s = compute_s(k, a, omega, rho, alpha)?;
    let d = compute_d(k, omega, rho, alpha)?;
    let c_weighted = c_from_order(s, a, b);
    let c_standard = c_from_order(2 * k - a, a, b);
    let weighted = error_constants(s, d, a, c_weighted, delta_a, theta_ab);
    let standard = error_constants(2 * k - a, k as f64, a, c_standard, delta_a, theta_ab);
    let condition_value = delta_a + c_weighted * theta_ab;
    let standard_condition_value = delta_a + c_standard * theta_ab;
    Ok(GuaranteeReport {
        inputs: *inputs,
        s,
        d,
        c_weighted,
        c_standard,
        condition_value,
        condition_met: weighted.is_some(),
        standard_condition_value,
        standard_condition_met: standard.is_some(),
        d0: weighted.map(|c| c.l2_noise),
        d1: weighted.map(|c| c.l2_tail),
        d0_ds: weighted.map(|c| c.ds_noise),
        d1_ds: weighted.map(|c| c.ds_tail),
        c0: standard.map(|c| c.l2_noise),
        c1: standard.map(|c| c.l2_tail),
        c0_ds: standard.map(|c| c.ds_noise),
        c1_ds: standard.map(|c| c.ds_tail),
        prop1_case: classify(inputs, s),
    })
}

/// Right-hand side of the recovery error bound
/// `X0 (eps + eta) + X1 * 2 (omega |x_{T0^c}|_1 + (1 - omega) |x_{T~^c ∩ T0^c}|_1)`
/// with `X = D` for the l2 ball and `X = D'` for the Dantzig set. With
/// `eta = eps` the noise term is the familiar `X0 (2 eps)`.
pub fn error_bound_rhs(
    report: &GuaranteeReport,
    kind: ConstraintKind,
    eps: f64,
    eta: f64,
    x: &[f64],
    t0: &IndexSet,
    estimate: &SupportEstimate,
) -> Result<f64> {
    if !report.condition_met {
        return Err(Error::NoGuarantee {
            value: report.condition_value,
        });
    }
    if !(eps >= 0.0 && eta >= 0.0) {
        return Err(Error::invalid(
            "noise level and radius must be non-negative",
        ));
    }
    if x.len() != estimate.dim() {
        return Err(Error::DimensionMismatch {
            op: "error_bound_rhs",
            expected: estimate.dim(),
            actual: x.len(),
        });
    }
    let tail = 2.0 * weighted_tail(x, t0, estimate, report.inputs.omega);
    let (noise_c, tail_c) = match kind {
        ConstraintKind::Exact => (0.0, report.d1),
        ConstraintKind::L2 => (report.d0.unwrap_or_default(), report.d1),
        ConstraintKind::Dantzig => (report.d0_ds.unwrap_or_default(), report.d1_ds),
    };
    let noise = match kind {
        ConstraintKind::Exact => 0.0,
        _ => noise_c * (eps + eta),
    };
    let tail_c = tail_c.expect("constants present when the condition holds");
    // 0 * inf never arises: tail_c is finite whenever the condition holds
    Ok(noise + tail_c * tail)
}

/// Outcome of comparing a weighted quantity against its standard counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    Less,
    Equal,
    Greater,
}

impl From<std::cmp::Ordering> for Ordering {
    fn from(o: std::cmp::Ordering) -> Self {
        match o {
            std::cmp::Ordering::Less => Ordering::Less,
            std::cmp::Ordering::Equal => Ordering::Equal,
            std::cmp::Ordering::Greater => Ordering::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    pub case: Prop1Case,
    pub s: usize,
    pub standard_s: usize,
    pub s_vs_standard: Ordering,
    pub c_weighted: f64,
    pub c_standard: f64,
    pub c_vs_standard: Ordering,
    pub d0_vs_c0: Option<Ordering>,
    pub d0_ds_vs_c0_ds: Option<Ordering>,
    /// Direct comparison of the computed `D1` and `C1`.
    pub d1_vs_c1: Option<Ordering>,
    /// The case's verdict on `D1 < C1`: unconditional for small `b`, the
    /// iff-inequality on `(delta_a, theta_ab)` for mid and large `b`.
    pub d1_smaller_predicted: Option<bool>,
}

fn cmp(x: f64, y: f64) -> Ordering {
    x.partial_cmp(&y).map_or(Ordering::Equal, Ordering::from)
}

pub fn proposition1_compare(inputs: &GuaranteeInputs) -> Result<Prop1Report> {
    let report = evaluate_guarantee(inputs)?;
    let GuaranteeInputs {
        k,
        a,
        b,
        delta_a,
        theta_ab,
        ..
    } = *inputs;
    let standard_s = 2 * k - a;
    let both = |x: Option<f64>, y: Option<f64>| x.zip(y).map(|(x, y)| cmp(x, y));
    let margin = 1.0 - delta_a - report.c_weighted * theta_ab;
    let (af, bf, sf) = (a as f64, b as f64, report.s as f64);
    let d1_smaller_predicted = match report.prop1_case {
        Prop1Case::OmegaOne | Prop1Case::HalfAccurate => Some(false),
        Prop1Case::AccurateSmallB => Some(true),
        Prop1Case::AccurateMidB => {
            let rhs = (standard_s as f64 - (bf * sf).sqrt())
                / (af.sqrt() * (bf.sqrt() - sf.sqrt()))
                * theta_ab;
            Some(margin < rhs)
        }
        Prop1Case::AccurateLargeB => Some(margin < (standard_s as f64 / af).sqrt() * theta_ab),
        Prop1Case::OutsideScope => None,
    };
    Ok(Prop1Report {
        case: report.prop1_case,
        s: report.s,
        standard_s,
        s_vs_standard: report.s.cmp(&standard_s).into(),
        c_weighted: report.c_weighted,
        c_standard: report.c_standard,
        c_vs_standard: cmp(report.c_weighted, report.c_standard),
        d0_vs_c0: both(report.d0, report.c0),
        d0_ds_vs_c0_ds: both(report.d0_ds, report.c0_ds),
        d1_vs_c1: both(report.d1, report.c1),
        d1_smaller_predicted,
    })
}
