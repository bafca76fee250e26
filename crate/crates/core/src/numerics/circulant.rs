//! Circulant matrices and their DFT diagonalisation.
//!
//! The DFT is the unnormalised forward transform `F[j,k] = ω^{jk}` with
//! `ω = e^{-2πi/n}`, so `F F* = n I` and every inverse carries an explicit `1/n`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::matrix::{norm2, DenseMatrix};
use crate::error::{Error, Result};

/// Eigenvalues `d = F c` of the circulant with first column `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantSpectrum {
    pub size: usize,
    pub eigenvalues: Vec<Complex64>,
}

impl CirculantSpectrum {
    /// `|d_j|²`, the spectrum of `CᵀC`.
    pub fn power(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|d| d.norm_sqr()).collect()
    }
}

pub fn circulant_spectrum(first_col: &[f64]) -> Result<CirculantSpectrum> {
    if first_col.is_empty() {
        return Err(Error::shape("circulant first column must be nonempty"));
    }
    let plan = FftPair::new(first_col.len());
    let mut buf: Vec<Complex64> = first_col.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    Ok(CirculantSpectrum {
        size: first_col.len(),
        eigenvalues: buf,
    })
}

/// Dense circulant `C[i,j] = c[(i − j) mod n]`.
pub fn circulant_dense(first_col: &[f64]) -> DenseMatrix {
    let n = first_col.len();
    DenseMatrix::from_fn(n, n, |i, j| first_col[(i + n - j) % n])
}

/// First column of `Cᵀ`.
pub fn circulant_transpose_column(first_col: &[f64]) -> Vec<f64> {
    let n = first_col.len();
    (0..n).map(|i| first_col[(n - i) % n]).collect()
}

/// Forward and inverse plans of one length, shareable across threads.
#[derive(Clone)]
pub struct FftPair {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FftPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len).finish()
    }
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place unnormalised forward DFT over consecutive chunks of `len`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// In-place inverse DFT including the `1/len` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Drops the imaginary part after checking it is rounding noise.
pub(crate) fn real_part(buf: &[Complex64]) -> Result<Vec<f64>> {
    let re: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let im_norm = buf.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
    let re_norm = norm2(&re);
    if im_norm > 1e-8 * re_norm + 1e-300 {
        return Err(Error::Numerical(format!(
            "inverse FFT left an imaginary residue of {im_norm:e} against a real part of norm {re_norm:e}"
        )));
    }
    Ok(re)
}

pub(crate) fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
