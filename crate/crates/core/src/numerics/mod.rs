//! Dense matrices, order-3 tensors, proximal operators and the structured
//! linear-algebra identities the solvers rely on.

mod circulant;
mod matrix;
mod prox;
mod reshape;
mod tensor;

pub use circulant::{circulant_dense, circulant_spectrum, circulant_transpose_column, CirculantSpectrum, FftPair};
pub(crate) use circulant::{real_part, to_complex};
pub use matrix::{frobenius_distance, DenseMatrix, Svd};
pub use prox::{shrink, singular_value_threshold, soft_threshold, soft_threshold_matrix};
pub use reshape::{columnwise_reshape, kron, kron_diag_image, vectorize};
pub(crate) use tensor::divide_frames;
pub use tensor::{bilinear_framewise, framewise_sandwich, mat3, slicewise_divide, ten3, AxisOp, Tensor3};
