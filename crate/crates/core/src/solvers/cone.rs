//! The cone inequality satisfied by `h = x_hat - x` whenever
//! `|x_hat|_{1,w} <= |x|_{1,w}`:
//!
//! ```text
//! |h_{T0^c}|_1 <= omega |h_{T0}|_1 + (1 - omega) |h_{T0 ∪ T~ \ T~_alpha}|_1
//!                 + 2 (omega |x_{T0^c}|_1 + (1 - omega) |x_{T~^c ∩ T0^c}|_1)
//! ```
//!
//! with `T~_alpha = T~ ∩ T0`, so `T0 ∪ T~ \ T~_alpha` is the symmetric
//! difference of `T0` and `T~`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_omega, weighted_tail, IndexSet, SupportEstimate};

/// Absolute slack, relative to `1 + |x|_1`, absorbing solver tolerance.
pub const CONE_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeWitness {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn cone_check(
    h: &[f64],
    x: &[f64],
    t0: &IndexSet,
    estimate: &SupportEstimate,
    omega: f64,
) -> Result<ConeWitness> {
    check_omega(omega)?;
    let n = x.len();
    if h.len() != n || estimate.dim() != n {
        return Err(Error::DimensionMismatch {
            op: "cone_check",
            expected: n,
            actual: if h.len() != n {
                h.len()
            } else {
                estimate.dim()
            },
        });
    }
    let in_t0 = t0.mask(n);
    let in_est = estimate.indices().mask(n);
    let (mut off, mut on, mut sym) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let v = h[i].abs();
        if in_t0[i] {
            on += v;
        } else {
            off += v;
        }
        if in_t0[i] != in_est[i] {
            sym += v;
        }
    }
    let rhs = omega * on + (1.0 - omega) * sym + 2.0 * weighted_tail(x, t0, estimate, omega);
    let x1: f64 = x.iter().map(|v| v.abs()).sum();
    Ok(ConeWitness {
        lhs: off,
        rhs,
        holds: off <= rhs + CONE_SLACK * (1.0 + x1),
    })
}
