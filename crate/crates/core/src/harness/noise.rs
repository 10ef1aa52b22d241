//! Radii of the Gaussian noise sets and empirical coverage of them.
//!
//! For `z ~ N(0, sigma^2 I_n)`:
//!
//! ```text
//! P(|z|_2 <= sigma sqrt(n + 2 sqrt(n ln n)))      >= 1 - 1/n
//! P(|A^T z|_inf <= sigma sqrt(2 ln N))            >= 1 - 1/sqrt(pi ln N)
//! ```
//!
//! the second for `A` with unit-norm columns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{gemv_t, norm2, norm_inf, DenseMatrix};

fn check(sigma: f64, dim: usize, name: &str) -> Result<()> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!(
            "sigma = {sigma} must be finite and >= 0"
        )));
    }
    if dim < 2 {
        return Err(Error::invalid(format!("{name} = {dim} must be at least 2")));
    }
    Ok(())
}

/// `sigma sqrt(n + 2 sqrt(n ln n))`.
pub fn gaussian_radius_l2(sigma: f64, n: usize) -> Result<f64> {
    check(sigma, n, "n")?;
    let n = n as f64;
    Ok(sigma * (n + 2.0 * (n * n.ln()).sqrt()).sqrt())
}

/// `sigma sqrt(2 ln N)`.
pub fn gaussian_radius_ds(sigma: f64, big_n: usize) -> Result<f64> {
    check(sigma, big_n, "N")?;
    Ok(sigma * (2.0 * (big_n as f64).ln()).sqrt())
}

/// `1 - 1/n`.
pub fn coverage_target_l2(n: usize) -> f64 {
    1.0 - 1.0 / n as f64
}

/// `1 - 1/sqrt(pi ln N)`.
pub fn coverage_target_ds(big_n: usize) -> f64 {
    1.0 - 1.0 / (std::f64::consts::PI * (big_n as f64).ln()).sqrt()
}

pub fn gaussian_noise(rng: &mut impl Rng, sigma: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Fraction of `draws` Gaussian vectors inside the l2 set.
pub fn coverage_l2(sigma: f64, n: usize, draws: usize, seed: u64) -> Result<f64> {
    let radius = gaussian_radius_l2(sigma, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..draws)
        .filter(|_| norm2(&gaussian_noise(&mut rng, sigma, n)) <= radius)
        .count();
    Ok(hits as f64 / draws.max(1) as f64)
}

/// Fraction of `draws` Gaussian vectors inside the Dantzig set of `a`.
pub fn coverage_ds(a: &DenseMatrix, sigma: f64, draws: usize, seed: u64) -> Result<f64> {
    let radius = gaussian_radius_ds(sigma, a.cols())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corr = vec![0.0; a.cols()];
    let mut hits = 0;
    for _ in 0..draws {
        let z = gaussian_noise(&mut rng, sigma, a.rows());
        gemv_t(a, &z, &mut corr);
        if norm_inf(&corr) <= radius {
            hits += 1;
        }
    }
    Ok(hits as f64 / draws.max(1) as f64)
}
