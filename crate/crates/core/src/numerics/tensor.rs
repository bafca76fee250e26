//! Order-3 tensors stored slice by slice, and framewise operators on them.

use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2, ShapeBuilder};

use super::matrix::DenseMatrix;
use super::reshape::kron;
use crate::error::{Error, Result};

/// `dim1 × dim2 × dim3` real tensor. Slice `k` is contiguous and column-major,
/// so the raw buffer is exactly the column-major buffer of `mat3(T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim1: usize, dim2: usize, dim3: usize) -> Self {
        Self {
            dims: [dim1, dim2, dim3],
            data: vec![0.0; dim1 * dim2 * dim3],
        }
    }

    pub fn from_data(dim1: usize, dim2: usize, dim3: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim1 * dim2 * dim3 {
            return Err(Error::shape(format!(
                "{} values cannot fill a {dim1}x{dim2}x{dim3} tensor",
                data.len()
            )));
        }
        Ok(Self {
            dims: [dim1, dim2, dim3],
            data,
        })
    }

    pub fn from_fn(dim1: usize, dim2: usize, dim3: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim1 * dim2 * dim3);
        for k in 0..dim3 {
            for j in 0..dim2 {
                for i in 0..dim1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            dims: [dim1, dim2, dim3],
            data,
        }
    }

    /// Stacks equally sized frames along the third axis.
    pub fn from_slices(slices: &[DenseMatrix]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::shape("cannot build a tensor from zero slices"));
        };
        let (d1, d2) = first.shape();
        let mut data = Vec::with_capacity(d1 * d2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (d1, d2) {
                return Err(Error::shape(format!(
                    "slice {k} is {}x{}, expected {d1}x{d2}",
                    s.rows(),
                    s.cols()
                )));
            }
            data.extend_from_slice(s.data());
        }
        Self::from_data(d1, d2, slices.len(), data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dims[0], self.dims[1], self.dims[2])
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(k * self.dims[1] + j) * self.dims[0] + i]
    }

    pub fn slice(&self, k: usize) -> DenseMatrix {
        let n = self.dims[0] * self.dims[1];
        DenseMatrix::from_col_major(self.dims[0], self.dims[1], self.data[k * n..(k + 1) * n].to_vec())
            .expect("slice length is consistent")
    }

    pub fn frobenius_norm(&self) -> f64 {
        super::matrix::norm2(&self.data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Matrix unfolding along the third axis: column `k` is `vec(T[:,:,k])`.
pub fn mat3(t: &Tensor3) -> DenseMatrix {
    let (d1, d2, d3) = t.dims();
    DenseMatrix::from_col_major(d1 * d2, d3, t.data.clone()).expect("tensor length is consistent")
}

/// Inverse of [`mat3`].
pub fn ten3(m: &DenseMatrix, d1: usize, d2: usize) -> Result<Tensor3> {
    if m.rows() != d1 * d2 {
        return Err(Error::shape(format!(
            "matrix with {} rows cannot fold into {d1}x{d2} slices",
            m.rows()
        )));
    }
    Tensor3::from_data(d1, d2, m.cols(), m.data().to_vec())
}

/// `𝔅_{L,R}(T)[:,:,k] = L · T[:,:,k] · R`.
pub fn bilinear_framewise(t: &Tensor3, left: &DenseMatrix, right: &DenseMatrix) -> Result<Tensor3> {
    let (d1, d2, _) = t.dims();
    if left.cols() != d1 || right.rows() != d2 {
        return Err(Error::shape(format!(
            "framewise transform {}x{} · ({d1}x{d2}) · {}x{} is not conformable",
            left.rows(),
            left.cols(),
            right.rows(),
            right.cols()
        )));
    }
    let out = framewise_sandwich(
        &mat3(t),
        d1,
        d2,
        &AxisOp::Dense(left.clone()),
        &AxisOp::Dense(right.transpose()),
    );
    ten3(&out, left.rows(), right.cols())
}

/// Divides every slice of `t` pointwise by `y`.
pub fn slicewise_divide(t: &Tensor3, y: &DenseMatrix) -> Result<Tensor3> {
    let (d1, d2, d3) = t.dims();
    if y.shape() != (d1, d2) {
        return Err(Error::shape(format!(
            "divisor is {}x{}, slices are {d1}x{d2}",
            y.rows(),
            y.cols()
        )));
    }
    if let Some(pos) = y.data().iter().position(|&v| v == 0.0) {
        return Err(Error::DivisionByZero(format!(
            "divisor entry ({}, {}) is zero",
            pos % d1,
            pos / d1
        )));
    }
    let mut out = t.clone();
    divide_frames(out.data_mut(), y.data());
    debug_assert_eq!(out.data.len(), d1 * d2 * d3);
    Ok(out)
}

pub(crate) fn divide_frames(frames: &mut [f64], divisor: &[f64]) {
    for frame in frames.chunks_mut(divisor.len()) {
        for (v, d) in frame.iter_mut().zip(divisor) {
            *v /= d;
        }
    }
}

/// A linear map along one frame axis: either a dense matrix or a block
/// diagonal `I_reps ⊗ block`.
#[derive(Clone, Debug, PartialEq)]
pub enum AxisOp {
    Dense(DenseMatrix),
    BlockDiag { block: DenseMatrix, reps: usize },
}

impl AxisOp {
    pub fn rows(&self) -> usize {
        match self {
            AxisOp::Dense(a) => a.rows(),
            AxisOp::BlockDiag { block, reps } => block.rows() * reps,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            AxisOp::Dense(a) => a.cols(),
            AxisOp::BlockDiag { block, reps } => block.cols() * reps,
        }
    }

    pub fn transpose(&self) -> AxisOp {
        match self {
            AxisOp::Dense(a) => AxisOp::Dense(a.transpose()),
            AxisOp::BlockDiag { block, reps } => AxisOp::BlockDiag {
                block: block.transpose(),
                reps: *reps,
            },
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            AxisOp::Dense(a) => a.clone(),
            AxisOp::BlockDiag { block, reps } => kron(&DenseMatrix::identity(*reps), block),
        }
    }

    /// `op · x`
    pub fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols(), x.rows(), "axis operator shape mismatch");
        match self {
            AxisOp::Dense(a) => a.matmul(x),
            AxisOp::BlockDiag { block, reps } => {
                // each column of x is `reps` contiguous chunks, so x is a
                // block.cols() × (reps · x.cols) matrix in disguise
                let wide = DenseMatrix::from_col_major(block.cols(), reps * x.cols(), x.data().to_vec())
                    .expect("block layout");
                block
                    .matmul(&wide)
                    .reshape(block.rows() * reps, x.cols())
                    .expect("block layout")
            }
        }
    }

    /// Writes `y · opᵀ` into `out`, where `y` is `p × self.cols()`.
    fn apply_right_t(&self, y: ArrayView2<'_, f64>, mut out: ArrayViewMut2<'_, f64>) {
        match self {
            AxisOp::Dense(a) => general_mat_mul(1.0, &y, &a.view().t(), 0.0, &mut out),
            AxisOp::BlockDiag { block, reps } => {
                let (n_out, n_in) = block.shape();
                let bv = block.view();
                let bt = bv.t();
                for c in 0..*reps {
                    let yc = y.slice(ndarray::s![.., c * n_in..(c + 1) * n_in]);
                    let mut oc = out.slice_mut(ndarray::s![.., c * n_out..(c + 1) * n_out]);
                    general_mat_mul(1.0, &yc, &bt, 0.0, &mut oc);
                }
            }
        }
    }
}

/// Computes `left · X_k · rightᵀ` for every frame `X_k` of the unfolded
/// tensor `x` (`d1·d2 × K`), returning the unfolded result.
pub fn framewise_sandwich(x: &DenseMatrix, d1: usize, d2: usize, left: &AxisOp, right: &AxisOp) -> DenseMatrix {
    assert_eq!(x.rows(), d1 * d2, "unfolding does not match frame dims");
    assert_eq!(left.cols(), d1);
    assert_eq!(right.cols(), d2);
    let frames = x.cols();
    let (p, q) = (left.rows(), right.rows());
    if frames == 0 || p == 0 || q == 0 {
        return DenseMatrix::zeros(p * q, frames);
    }
    let wide = DenseMatrix::from_col_major(d1, d2 * frames, x.data().to_vec()).expect("frame layout");
    let stage = left.apply(&wide);
    let mut out = DenseMatrix::zeros(p * q, frames);
    for k in 0..frames {
        let y = ArrayView2::from_shape((p, d2).f(), &stage.data()[k * p * d2..(k + 1) * p * d2])
            .expect("frame layout");
        let dst = ArrayViewMut2::from_shape((p, q).f(), &mut out.data_mut()[k * p * q..(k + 1) * p * q])
            .expect("frame layout");
        right.apply_right_t(y, dst);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::frobenius_distance;

    fn sample(d1: usize, d2: usize, d3: usize) -> Tensor3 {
        Tensor3::from_fn(d1, d2, d3, |i, j, k| (i as f64 + 1.0) * 0.5 - j as f64 + 3.0 * k as f64)
    }

    #[test]
    fn mat3_single_slice_is_vec() {
        let t = sample(3, 2, 1);
        let m = mat3(&t);
        assert_eq!(m.shape(), (6, 1));
        assert_eq!(m.column(0), t.slice(0).data());
    }

    #[test]
    fn zero_tensor_roundtrip() {
        let z = Tensor3::zeros(2, 3, 4);
        assert_eq!(mat3(&z), DenseMatrix::zeros(6, 4));
        assert_eq!(ten3(&DenseMatrix::zeros(6, 4), 2, 3).unwrap(), z);
        let one = Tensor3::from_data(1, 1, 1, vec![4.0]).unwrap();
        assert_eq!(ten3(&mat3(&one), 1, 1).unwrap(), one);
    }

    #[test]
    fn ten3_row_mismatch() {
        assert!(matches!(ten3(&DenseMatrix::zeros(5, 2), 2, 3), Err(Error::Shape(_))));
    }

    #[test]
    fn bilinear_identity_and_single_slice() {
        let t = sample(3, 4, 2);
        let same = bilinear_framewise(&t, &DenseMatrix::identity(3), &DenseMatrix::identity(4)).unwrap();
        assert_eq!(same, t);

        let s = sample(3, 4, 1);
        let l = DenseMatrix::from_fn(2, 3, |i, j| (i * 3 + j) as f64 - 2.0);
        let r = DenseMatrix::from_fn(4, 5, |i, j| ((i + j) % 3) as f64);
        let got = bilinear_framewise(&s, &l, &r).unwrap();
        let expect = l.matmul(&s.slice(0)).matmul(&r);
        assert!(frobenius_distance(&got.slice(0), &expect) < 1e-12);
    }

    #[test]
    fn bilinear_shape_error() {
        let t = sample(3, 4, 2);
        assert!(bilinear_framewise(&t, &DenseMatrix::identity(2), &DenseMatrix::identity(4)).is_err());
    }

    #[test]
    fn divide_by_ones_and_by_self() {
        let t = sample(2, 2, 3);
        let ones = DenseMatrix::from_fn(2, 2, |_, _| 1.0);
        assert_eq!(slicewise_divide(&t, &ones).unwrap(), t);

        let y = DenseMatrix::from_row_major(2, 2, &[1.0, 2.0, -3.0, 0.5]).unwrap();
        let rep = Tensor3::from_slices(&[y.clone(), y.clone(), y.clone()]).unwrap();
        let q = slicewise_divide(&rep, &y).unwrap();
        assert!(q.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn divide_by_zero_checked() {
        let t = sample(2, 2, 1);
        let y = DenseMatrix::from_row_major(2, 2, &[1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(slicewise_divide(&t, &y), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn block_axis_matches_dense() {
        let block = DenseMatrix::from_row_major(2, 2, &[0.6, 0.4, 0.3, 0.7]).unwrap();
        let op = AxisOp::BlockDiag { block, reps: 3 };
        let dense = AxisOp::Dense(op.to_dense());
        let x = DenseMatrix::from_fn(6 * 4, 2, |i, j| (i as f64).sin() + j as f64);
        let right = AxisOp::BlockDiag {
            block: DenseMatrix::from_row_major(2, 2, &[0.1, 0.2, 0.9, 0.8]).unwrap(),
            reps: 2,
        };
        let a = framewise_sandwich(&x, 6, 4, &op, &right);
        let b = framewise_sandwich(&x, 6, 4, &dense, &AxisOp::Dense(right.to_dense()));
        assert!(frobenius_distance(&a, &b) < 1e-13);
    }
}
