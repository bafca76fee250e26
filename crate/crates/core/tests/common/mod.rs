#![allow(dead_code)]

use matsep::numerics::{DenseMatrix, Tensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_tensor(rng: &mut ChaCha8Rng, d1: usize, d2: usize, d3: usize) -> Tensor3 {
    Tensor3::from_fn(d1, d2, d3, |_, _, _| rng.sample(StandardNormal))
}

/// `‖a − b‖_F / max(‖b‖_F, tiny)`.
pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    num / b.frobenius_norm().max(1e-300)
}

pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Textbook triple loop, independent of the BLAS path.
pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols(), b.rows());
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum())
}

pub fn naive_transpose(a: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i))
}

/// Gaussian matrix of exact rank `r`.
pub fn low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, r: usize) -> DenseMatrix {
    let u = gaussian(rng, rows, r);
    let v = gaussian(rng, cols, r);
    naive_matmul(&u, &naive_transpose(&v))
}

/// Exactly `count` Gaussian spikes at distinct positions.
pub fn spikes(rng: &mut ChaCha8Rng, rows: usize, cols: usize, count: usize) -> DenseMatrix {
    let mut s = DenseMatrix::zeros(rows, cols);
    let mut placed = 0;
    while placed < count {
        let (i, j) = (rng.random_range(0..rows), rng.random_range(0..cols));
        if s.get(i, j) == 0.0 {
            let v: f64 = rng.sample(StandardNormal);
            s.set(i, j, if v == 0.0 { 1.0 } else { v });
            placed += 1;
        }
    }
    s
}

/// Dense `F[j,k] = e^{-2πi jk/n}`.
pub fn dft_matrix(n: usize) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64))
                .collect()
        })
        .collect()
}

/// `F A F*` for real `A`.
pub fn conjugate_by_dft(a: &DenseMatrix) -> Vec<Vec<Complex64>> {
    let n = a.rows();
    let f = dft_matrix(n);
    let fa: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|k| (0..n).map(|l| f[j][l] * a.get(l, k)).sum()).collect())
        .collect();
    (0..n)
        .map(|j| (0..n).map(|k| (0..n).map(|l| fa[j][l] * f[k][l].conj()).sum()).collect())
        .collect()
}
