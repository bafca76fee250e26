//! Proximal operators of the l1 norm and the nuclear norm.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

#[inline]
pub fn shrink(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// Elementwise soft thresholding `S_λ`.
pub fn soft_threshold(x: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_threshold(lambda)?;
    Ok(x.iter().map(|&v| shrink(v, lambda)).collect())
}

pub fn soft_threshold_matrix(x: &DenseMatrix, lambda: f64) -> Result<DenseMatrix> {
    check_threshold(lambda)?;
    Ok(x.map(|v| shrink(v, lambda)))
}

fn check_threshold(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::param(format!(
            "soft-threshold level must be nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

/// Singular value thresholding `D_ρ(Y) = U S_ρ(Σ) Vᵀ`.
///
/// This is the minimiser of `ρ‖X‖_* + ½‖X − Y‖_F²`. Only the singular triplets
/// with `σ > ρ` are used to rebuild the output.
pub fn singular_value_threshold(y: &DenseMatrix, rho: f64) -> Result<DenseMatrix> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::param(format!("SVT level must be positive, got {rho}")));
    }
    y.ensure_finite("SVT input")?;
    let svd = y.svd()?;
    let weights: Vec<f64> = svd
        .singular_values
        .iter()
        .take_while(|&&s| s > rho)
        .map(|&s| s - rho)
        .collect();
    Ok(svd.recompose(&weights))
}
