use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, ShapeBuilder};
use ndarray_linalg::{Cholesky, Diag, JobSvd, SolveTriangular, SVDDC, SVD, UPLO};

use crate::error::{Error, Result};

/// Real matrix stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Thin singular value decomposition `A = U diag(s) Vt`, with `s` nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub vt: DenseMatrix,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major literal data; handy for small fixtures.
    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j| values[i * cols + j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Copies any ndarray view, whatever its memory order.
    pub fn from_array(a: ArrayView2<'_, f64>) -> Self {
        let (rows, cols) = a.dim();
        Self::from_fn(rows, cols, |i, j| a[[i, j]])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.rows, self.cols).f(), &self.data)
            .expect("length checked on construction")
    }

    pub fn view_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        ArrayViewMut2::from_shape((self.rows, self.cols).f(), &mut self.data)
            .expect("length checked on construction")
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn reshape(self, rows: usize, cols: usize) -> Result<Self> {
        Self::from_col_major(rows, cols, self.data)
    }

    /// `self * rhs`. Panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        gemm(self.view(), rhs.view())
    }

    /// `selfᵀ * rhs`.
    pub fn tr_matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        gemm(self.view().t(), rhs.view())
    }

    /// `self * rhsᵀ`.
    pub fn matmul_tr(&self, rhs: &DenseMatrix) -> DenseMatrix {
        gemm(self.view(), rhs.view().t())
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn zip_with(&self, rhs: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> DenseMatrix {
        assert_eq!(self.shape(), rhs.shape(), "elementwise shape mismatch");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha * rhs`
    pub fn add_scaled(&mut self, alpha: f64, rhs: &DenseMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "elementwise shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += alpha * b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(Error::Data(format!("{what} contains NaN or infinite entries")))
        }
    }

    pub fn svd(&self) -> Result<Svd> {
        let k = self.rows.min(self.cols);
        if k == 0 {
            return Ok(Svd {
                u: DenseMatrix::zeros(self.rows, 0),
                singular_values: Vec::new(),
                vt: DenseMatrix::zeros(0, self.cols),
            });
        }
        let view = self.view();
        let (u, s, vt) = match view.svddc(JobSvd::Some) {
            Ok((Some(u), s, Some(vt))) => (u, s, vt),
            // gesdd occasionally fails to converge where gesvd does not
            _ => match view.svd(true, true) {
                Ok((Some(u), s, Some(vt))) => (
                    u.slice(ndarray::s![.., ..k]).to_owned(),
                    s,
                    vt.slice(ndarray::s![..k, ..]).to_owned(),
                ),
                Ok(_) => return Err(Error::Numerical("SVD returned no factors".into())),
                Err(e) => return Err(Error::Numerical(format!("SVD failed: {e}"))),
            },
        };
        Ok(Svd {
            u: DenseMatrix::from_array(u.view()),
            singular_values: s.to_vec(),
            vt: DenseMatrix::from_array(vt.view()),
        })
    }

    /// Lower Cholesky factor `L` with `self = L Lᵀ`.
    pub fn cholesky_lower(&self) -> Result<DenseMatrix> {
        let l = self
            .view()
            .cholesky(UPLO::Lower)
            .map_err(|e| Error::Numerical(format!("Cholesky failed: {e}")))?;
        Ok(DenseMatrix::from_array(l.view()))
    }

    /// Solves `L Lᵀ X = B` given the lower factor `L` (self).
    pub fn cholesky_solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        let y: Array2<f64> = self
            .view()
            .solve_triangular(UPLO::Lower, Diag::NonUnit, &b.view().to_owned())
            .map_err(|e| Error::Numerical(format!("triangular solve failed: {e}")))?;
        let x: Array2<f64> = self
            .view()
            .t()
            .solve_triangular(UPLO::Upper, Diag::NonUnit, &y)
            .map_err(|e| Error::Numerical(format!("triangular solve failed: {e}")))?;
        Ok(DenseMatrix::from_array(x.view()))
    }
}

impl Svd {
    pub fn v(&self) -> DenseMatrix {
        self.vt.transpose()
    }

    /// Number of singular values strictly above `rtol * s_max`.
    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .filter(|&&s| s > rtol * smax && s > 0.0)
            .count()
    }

    /// `U_r diag(w) Vt_r` over the leading `w.len()` triplets.
    pub fn recompose(&self, weights: &[f64]) -> DenseMatrix {
        let r = weights.len();
        let (m, n) = (self.u.rows(), self.vt.cols());
        if r == 0 {
            return DenseMatrix::zeros(m, n);
        }
        let mut us = DenseMatrix::zeros(m, r);
        for (j, &w) in weights.iter().enumerate() {
            for i in 0..m {
                us.set(i, j, self.u.get(i, j) * w);
            }
        }
        let vt_r = DenseMatrix::from_fn(r, n, |i, j| self.vt.get(i, j));
        us.matmul(&vt_r)
    }

    /// Leading `r` left singular vectors.
    pub fn u_leading(&self, r: usize) -> DenseMatrix {
        DenseMatrix::from_fn(self.u.rows(), r, |i, j| self.u.get(i, j))
    }

    /// Leading `r` right singular vectors as columns.
    pub fn v_leading(&self, r: usize) -> DenseMatrix {
        DenseMatrix::from_fn(self.vt.cols(), r, |i, j| self.vt.get(j, i))
    }
}

fn gemm(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> DenseMatrix {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2, "matmul inner dimension mismatch: {m}x{k} * {k2}x{n}");
    let mut out = DenseMatrix::zeros(m, n);
    if m > 0 && n > 0 && k > 0 {
        general_mat_mul(1.0, &a, &b, 0.0, &mut out.view_mut());
    }
    out
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Frobenius distance between two equally shaped matrices.
pub fn frobenius_distance(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
