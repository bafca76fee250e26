//! ADMM for `min ½‖A x − b‖_F² + λ‖x‖₁` with a matrix right-hand side.
//!
//! Every backend runs the same three updates
//!
//! ```text
//! x ← (AᵀA + ρI)⁻¹ (Aᵀb + ρ(z − u))
//! z ← S_{λ/ρ}(x + u)
//! u ← u + x − z
//! ```
//!
//! and stops once `‖x⁺ − x‖_F / (‖x‖_F + 1) < tol`. Backends differ only in
//! how the x-update solve is prefactored.

mod operator;

use std::fmt;
use std::str::FromStr;

pub use operator::PrefactoredOperator;
pub(crate) use operator::block_reps;

use crate::error::{Error, Result};
use crate::numerics::{frobenius_distance, mat3, shrink, ten3, DenseMatrix, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LassoConfig {
    pub lambda: f64,
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl LassoConfig {
    pub fn new(lambda: f64, rho: f64, max_iters: usize, tol: f64) -> Result<Self> {
        let cfg = Self {
            lambda,
            rho,
            max_iters,
            tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `λ = 0` is accepted so the least-squares limit can be exercised.
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::param(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !self.rho.is_finite() || self.rho <= 0.0 {
            return Err(Error::param(format!("rho must be positive, got {}", self.rho)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be at least 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::param(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Splitting variable `z` and scaled dual `u`, both shaped like `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LassoState {
    pub z: DenseMatrix,
    pub u: DenseMatrix,
}

impl LassoState {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            z: DenseMatrix::zeros(rows, cols),
            u: DenseMatrix::zeros(rows, cols),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LassoOutcome {
    pub x: DenseMatrix,
    pub state: LassoState,
    pub iters: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct TensorLassoOutcome {
    pub x: Tensor3,
    /// Unfolded (`mat3`) splitting state.
    pub state: LassoState,
    pub iters: usize,
    pub converged: bool,
}

/// Which factorisation the x-update uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Pick from the filter structure.
    #[default]
    Auto,
    DenseSvd,
    Cholesky,
    Circulant,
    Separable,
    Block,
    BlockCirculant,
}

impl Backend {
    pub const ALL: [Backend; 7] = [
        Backend::Auto,
        Backend::DenseSvd,
        Backend::Cholesky,
        Backend::Circulant,
        Backend::Separable,
        Backend::Block,
        Backend::BlockCirculant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Auto => "auto",
            Backend::DenseSvd => "dense-svd",
            Backend::Cholesky => "cholesky",
            Backend::Circulant => "circulant",
            Backend::Separable => "separable",
            Backend::Block => "block",
            Backend::BlockCirculant => "block-circulant",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::param(format!("unknown backend `{s}`")))
    }
}

impl PrefactoredOperator {
    /// Runs the LASSO ADMM against data `b` (unfolded for frame backends).
    pub fn lasso(&self, b: &DenseMatrix, cfg: &LassoConfig, init: Option<&LassoState>) -> Result<LassoOutcome> {
        self.lasso_observed(b, cfg, init, |_, _| {})
    }

    /// As [`lasso`](Self::lasso), calling `observe(k, x^{k+1})` after every iteration.
    pub fn lasso_observed(
        &self,
        b: &DenseMatrix,
        cfg: &LassoConfig,
        init: Option<&LassoState>,
        observe: impl FnMut(usize, &DenseMatrix),
    ) -> Result<LassoOutcome> {
        cfg.validate()?;
        b.ensure_finite("LASSO data")?;
        let atb = self.normal_rhs(b)?;
        self.lasso_from_normal_rhs(&atb, cfg, init, observe)
    }

    /// ADMM loop given a precomputed `Aᵀb`.
    pub(crate) fn lasso_from_normal_rhs(
        &self,
        atb: &DenseMatrix,
        cfg: &LassoConfig,
        init: Option<&LassoState>,
        mut observe: impl FnMut(usize, &DenseMatrix),
    ) -> Result<LassoOutcome> {
        if (cfg.rho - self.rho()).abs() > f64::EPSILON * self.rho().abs() {
            return Err(Error::param(format!(
                "operator was factored for rho = {}, config asks for {}",
                self.rho(),
                cfg.rho
            )));
        }
        let (n, l) = atb.shape();
        let (mut z, mut u) = match init {
            Some(s) => {
                if s.z.shape() != (n, l) || s.u.shape() != (n, l) {
                    return Err(Error::shape(format!(
                        "initial state is {}x{}, unknown is {n}x{l}",
                        s.z.rows(),
                        s.z.cols()
                    )));
                }
                (s.z.clone(), s.u.clone())
            }
            None => (DenseMatrix::zeros(n, l), DenseMatrix::zeros(n, l)),
        };

        let rho = cfg.rho;
        let level = cfg.lambda / rho;
        // x⁰ is taken to be z⁰, which is 0 on a cold start
        let mut x_prev = z.clone();
        let mut rhs = DenseMatrix::zeros(n, l);
        let mut iters = 0;
        let mut converged = false;
        for k in 0..cfg.max_iters {
            for ((r, &a), (&zi, &ui)) in rhs
                .data_mut()
                .iter_mut()
                .zip(atb.data())
                .zip(z.data().iter().zip(u.data()))
            {
                *r = a + rho * (zi - ui);
            }
            let x = self.solve(&rhs)?;
            for ((zi, ui), &xi) in z.data_mut().iter_mut().zip(u.data_mut().iter_mut()).zip(x.data()) {
                let w = xi + *ui;
                *zi = shrink(w, level);
                *ui = w - *zi;
            }
            observe(k, &x);
            let ratio = frobenius_distance(&x, &x_prev) / (x_prev.frobenius_norm() + 1.0);
            x_prev = x;
            iters = k + 1;
            if ratio < cfg.tol {
                converged = true;
                break;
            }
        }
        Ok(LassoOutcome {
            x: x_prev,
            state: LassoState { z, u },
            iters,
            converged,
        })
    }
}

fn check_design(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::shape(format!(
            "design is {}x{} but data has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    Ok(())
}

/// LASSO with the SVD of `AᵀA` cached.
pub fn lasso_dense_svd(
    a: &DenseMatrix,
    b: &DenseMatrix,
    cfg: &LassoConfig,
    init: Option<&LassoState>,
) -> Result<LassoOutcome> {
    cfg.validate()?;
    check_design(a, b)?;
    PrefactoredOperator::dense_svd(a, cfg.rho)?.lasso(b, cfg, init)
}

/// LASSO with the Cholesky factor of `AᵀA + ρI` cached.
pub fn lasso_cholesky(
    a: &DenseMatrix,
    b: &DenseMatrix,
    cfg: &LassoConfig,
    init: Option<&LassoState>,
) -> Result<LassoOutcome> {
    cfg.validate()?;
    check_design(a, b)?;
    PrefactoredOperator::cholesky(a, cfg.rho)?.lasso(b, cfg, init)
}

/// LASSO for a square circulant design given by its first column.
pub fn lasso_circulant(
    first_col: &[f64],
    b: &DenseMatrix,
    cfg: &LassoConfig,
    init: Option<&LassoState>,
) -> Result<LassoOutcome> {
    cfg.validate()?;
    PrefactoredOperator::circulant(first_col, cfg.rho)?.lasso(b, cfg, init)
}

fn tensor_outcome(op: &PrefactoredOperator, out: LassoOutcome) -> Result<TensorLassoOutcome> {
    let ((p1, p2), _) = op.frame_dims().expect("frame backend");
    Ok(TensorLassoOutcome {
        x: ten3(&out.x, p1, p2)?,
        state: out.state,
        iters: out.iters,
        converged: out.converged,
    })
}

/// Tensor LASSO with `H = G₂ ⊗ G₁` acting framewise.
pub fn lasso_separable(
    g1: &DenseMatrix,
    g2: &DenseMatrix,
    b: &Tensor3,
    cfg: &LassoConfig,
    init: Option<&LassoState>,
) -> Result<TensorLassoOutcome> {
    cfg.validate()?;
    let (m1, m2, _) = b.dims();
    if g1.rows() != m1 || g2.rows() != m2 {
        return Err(Error::shape(format!(
            "frames are {m1}x{m2} but G1 has {} rows and G2 has {}",
            g1.rows(),
            g2.rows()
        )));
    }
    let op = PrefactoredOperator::separable(g1, g2, cfg.rho)?;
    let out = op.lasso(&mat3(b), cfg, init)?;
    tensor_outcome(&op, out)
}

/// Tensor LASSO with `Gᵢ = I_{kᵢ} ⊗ Eᵢ`; `kᵢ` is inferred from the frame size.
pub fn lasso_block(
    e1: &DenseMatrix,
    e2: &DenseMatrix,
    b: &Tensor3,
    cfg: &LassoConfig,
    init: Option<&LassoState>,
) -> Result<TensorLassoOutcome> {
    cfg.validate()?;
    let (m1, m2, _) = b.dims();
    let k1 = block_reps(m1, e1.rows(), "axis 1")?;
    let k2 = block_reps(m2, e2.rows(), "axis 2")?;
    let op = PrefactoredOperator::block(e1, e2, k1, k2, cfg.rho)?;
    let out = op.lasso(&mat3(b), cfg, init)?;
    tensor_outcome(&op, out)
}

/// Tensor LASSO with circulant blocks; only the first columns of `E₁`, `E₂` are read.
pub fn lasso_block_circulant(
    e1: &DenseMatrix,
    e2: &DenseMatrix,
    b: &Tensor3,
    cfg: &LassoConfig,
    init: Option<&LassoState>,
) -> Result<TensorLassoOutcome> {
    cfg.validate()?;
    let (m1, m2, _) = b.dims();
    let k1 = block_reps(m1, e1.rows(), "axis 1")?;
    let k2 = block_reps(m2, e2.rows(), "axis 2")?;
    let op = PrefactoredOperator::block_circulant(e1.column(0), e2.column(0), k1, k2, cfg.rho)?;
    let out = op.lasso(&mat3(b), cfg, init)?;
    tensor_outcome(&op, out)
}
