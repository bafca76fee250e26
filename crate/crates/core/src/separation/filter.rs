use std::fmt;

use crate::error::{Error, Result};
use crate::lasso::{Backend, PrefactoredOperator};
use crate::numerics::{circulant_dense, framewise_sandwich, kron, mat3, ten3, AxisOp, DenseMatrix, Tensor3};

/// The known linear filter `H`.
///
/// Frame-structured variants act on unfolded tensors: a `p₁p₂ × K` matrix
/// whose column `k` is the vectorised frame `k`, mapped framewise by
/// `X ↦ G₁ X G₂ᵀ` (that is, `H = G₂ ⊗ G₁`).
#[derive(Clone, Debug, PartialEq)]
pub enum FilterSpec {
    Dense(DenseMatrix),
    /// Square circulant with the given first column.
    Circulant(Vec<f64>),
    Separable { g1: DenseMatrix, g2: DenseMatrix },
    /// `Gᵢ = I_{kᵢ} ⊗ Eᵢ`.
    Block {
        e1: DenseMatrix,
        e2: DenseMatrix,
        k1: usize,
        k2: usize,
    },
    /// As `Block` with circulant `Eᵢ`.
    BlockCirculant {
        e1: DenseMatrix,
        e2: DenseMatrix,
        k1: usize,
        k2: usize,
    },
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FilterSpec::Dense(_) => "dense",
            FilterSpec::Circulant(_) => "circulant",
            FilterSpec::Separable { .. } => "separable",
            FilterSpec::Block { .. } => "block",
            FilterSpec::BlockCirculant { .. } => "block-circulant",
        };
        f.write_str(name)
    }
}

impl FilterSpec {
    /// Block filter with repetition counts inferred from the frame size.
    pub fn block_for_frame(e1: DenseMatrix, e2: DenseMatrix, frame: (usize, usize)) -> Result<Self> {
        let k1 = crate::lasso::block_reps(frame.0, e1.rows(), "axis 1")?;
        let k2 = crate::lasso::block_reps(frame.1, e2.rows(), "axis 2")?;
        let spec = FilterSpec::Block { e1, e2, k1, k2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FilterSpec::Dense(h) => h.ensure_finite("filter"),
            FilterSpec::Circulant(c) => {
                if c.is_empty() {
                    return Err(Error::shape("circulant first column must be nonempty"));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Data("circulant column contains NaN or infinite entries".into()));
                }
                Ok(())
            }
            FilterSpec::Separable { g1, g2 } => {
                g1.ensure_finite("G1")?;
                g2.ensure_finite("G2")
            }
            FilterSpec::Block { e1, e2, k1, k2 } | FilterSpec::BlockCirculant { e1, e2, k1, k2 } => {
                for (e, name) in [(e1, "E1"), (e2, "E2")] {
                    e.ensure_finite(name)?;
                    if e.rows() != e.cols() || e.rows() == 0 {
                        return Err(Error::shape(format!("{name} must be square, got {}x{}", e.rows(), e.cols())));
                    }
                }
                if *k1 == 0 || *k2 == 0 {
                    return Err(Error::shape("block repetition counts must be positive"));
                }
                if let FilterSpec::BlockCirculant { .. } = self {
                    for (e, name) in [(e1, "E1"), (e2, "E2")] {
                        let c = circulant_dense(e.column(0));
                        let tol = 1e-12 * (1.0 + e.max_abs());
                        if e.data().iter().zip(c.data()).any(|(a, b)| (a - b).abs() > tol) {
                            return Err(Error::param(format!("{name} is not circulant")));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Per-axis operators `(G₁, G₂)` of frame-structured filters.
    pub fn axis_ops(&self) -> Option<(AxisOp, AxisOp)> {
        match self {
            FilterSpec::Separable { g1, g2 } => Some((AxisOp::Dense(g1.clone()), AxisOp::Dense(g2.clone()))),
            FilterSpec::Block { e1, e2, k1, k2 } | FilterSpec::BlockCirculant { e1, e2, k1, k2 } => Some((
                AxisOp::BlockDiag {
                    block: e1.clone(),
                    reps: *k1,
                },
                AxisOp::BlockDiag {
                    block: e2.clone(),
                    reps: *k2,
                },
            )),
            _ => None,
        }
    }

    /// Frame sizes `((p₁, p₂), (m₁, m₂))` of input and output.
    pub fn frames(&self) -> Option<((usize, usize), (usize, usize))> {
        self.axis_ops()
            .map(|(a, b)| ((a.cols(), b.cols()), (a.rows(), b.rows())))
    }

    /// Rows of `S`.
    pub fn input_rows(&self) -> usize {
        match self {
            FilterSpec::Dense(h) => h.cols(),
            FilterSpec::Circulant(c) => c.len(),
            _ => {
                let ((p1, p2), _) = self.frames().expect("frame filter");
                p1 * p2
            }
        }
    }

    /// Rows of `H S`.
    pub fn output_rows(&self) -> usize {
        match self {
            FilterSpec::Dense(h) => h.rows(),
            FilterSpec::Circulant(c) => c.len(),
            _ => {
                let (_, (m1, m2)) = self.frames().expect("frame filter");
                m1 * m2
            }
        }
    }

    /// Explicit matrix of `H`; meant for small sizes.
    pub fn densify(&self) -> DenseMatrix {
        match self {
            FilterSpec::Dense(h) => h.clone(),
            FilterSpec::Circulant(c) => circulant_dense(c),
            _ => {
                let (g1, g2) = self.axis_ops().expect("frame filter");
                kron(&g2.to_dense(), &g1.to_dense())
            }
        }
    }

    fn check_rows(&self, x: &DenseMatrix, rows: usize, what: &str) -> Result<()> {
        if x.rows() != rows {
            return Err(Error::shape(format!(
                "{what} has {} rows, {self} filter expects {rows}",
                x.rows()
            )));
        }
        Ok(())
    }

    /// `H S`
    pub fn apply(&self, s: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(s, self.input_rows(), "input")?;
        match self {
            FilterSpec::Dense(h) => Ok(h.matmul(s)),
            FilterSpec::Circulant(c) => PrefactoredOperator::circulant(c, 1.0)?.apply(s),
            _ => {
                let ((p1, p2), _) = self.frames().expect("frame filter");
                let (g1, g2) = self.axis_ops().expect("frame filter");
                Ok(framewise_sandwich(s, p1, p2, &g1, &g2))
            }
        }
    }

    /// `Hᵀ Y`
    pub fn apply_transpose(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(y, self.output_rows(), "input")?;
        match self {
            FilterSpec::Dense(h) => Ok(h.tr_matmul(y)),
            FilterSpec::Circulant(c) => PrefactoredOperator::circulant(c, 1.0)?.normal_rhs(y),
            _ => {
                let (_, (m1, m2)) = self.frames().expect("frame filter");
                let (g1, g2) = self.axis_ops().expect("frame filter");
                Ok(framewise_sandwich(y, m1, m2, &g1.transpose(), &g2.transpose()))
            }
        }
    }

    /// Framewise `𝔅_{G₁,G₂ᵀ}(S)` for frame-structured filters.
    pub fn apply_tensor(&self, s: &Tensor3) -> Result<Tensor3> {
        let (_, (m1, m2)) = self
            .frames()
            .ok_or_else(|| Error::param(format!("{self} filter does not act on frames")))?;
        let ((p1, p2), _) = self.frames().expect("frame filter");
        let (d1, d2, _) = s.dims();
        if (d1, d2) != (p1, p2) {
            return Err(Error::shape(format!("frames are {d1}x{d2}, filter expects {p1}x{p2}")));
        }
        ten3(&self.apply(&mat3(s))?, m1, m2)
    }

    /// Prefactors `HᵀH + ρI` with the requested backend.
    pub fn operator(&self, backend: Backend, rho: f64) -> Result<PrefactoredOperator> {
        self.validate()?;
        let expanded = |e: &DenseMatrix, k: usize| kron(&DenseMatrix::identity(k), e);
        match (self, backend) {
            (_, Backend::DenseSvd) => PrefactoredOperator::dense_svd(&self.densify(), rho),
            (_, Backend::Cholesky) => PrefactoredOperator::cholesky(&self.densify(), rho),
            (FilterSpec::Dense(h), Backend::Auto) => PrefactoredOperator::dense_svd(h, rho),
            (FilterSpec::Circulant(c), Backend::Auto | Backend::Circulant) => PrefactoredOperator::circulant(c, rho),
            (FilterSpec::Separable { g1, g2 }, Backend::Auto | Backend::Separable) => {
                PrefactoredOperator::separable(g1, g2, rho)
            }
            (
                FilterSpec::Block { e1, e2, k1, k2 } | FilterSpec::BlockCirculant { e1, e2, k1, k2 },
                Backend::Separable,
            ) => PrefactoredOperator::separable(&expanded(e1, *k1), &expanded(e2, *k2), rho),
            (FilterSpec::Block { e1, e2, k1, k2 }, Backend::Auto | Backend::Block)
            | (FilterSpec::BlockCirculant { e1, e2, k1, k2 }, Backend::Block) => {
                PrefactoredOperator::block(e1, e2, *k1, *k2, rho)
            }
            (FilterSpec::BlockCirculant { e1, e2, k1, k2 }, Backend::Auto | Backend::BlockCirculant) => {
                PrefactoredOperator::block_circulant(e1.column(0), e2.column(0), *k1, *k2, rho)
            }
            _ => Err(Error::param(format!("backend {backend} cannot be used with a {self} filter"))),
        }
    }
}
