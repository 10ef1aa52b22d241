//! Fixtures shared by the benchmarks.

use wl1_core::harness::gaussian_ensemble;
use wl1_core::linalg::matvec;
use wl1_core::DenseMatrix;

/// A unit-column Gaussian matrix and the measurements of a k-sparse signal
/// with entries `1, -1, 1, ...` on evenly spaced indices.
pub fn sparse_instance(
    n: usize,
    big_n: usize,
    k: usize,
    seed: u64,
) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
    let a = gaussian_ensemble(n, big_n, seed);
    let mut x = vec![0.0; big_n];
    for j in 0..k {
        x[j * big_n / k] = if j % 2 == 0 { 1.0 } else { -1.0 };
    }
    let y = matvec(&a, &x).expect("dimensions agree").into_vec();
    (a, x, y)
}
