use crate::error::{Error, Result};
use crate::numerics::{circulant_dense, framewise_sandwich, mat3, ten3, AxisOp, DenseMatrix, Tensor3};

use super::FilterSpec;

/// `H̃ = C H = U_r V_rᵀ` together with `C = U_r Σ_r⁻¹ U_rᵀ`.
#[derive(Clone, Debug)]
pub struct PreconditionedFilter {
    pub h_tilde: FilterSpec,
    pub c: DenseMatrix,
    pub retained_rank: usize,
    /// Singular values of the original filter, nonincreasing.
    pub singular_values: Vec<f64>,
    pub original: FilterSpec,
}

/// Per-axis preconditioner of a frame-structured filter. `H̃` keeps the
/// structure of the original (separable stays separable, blocks stay blocks).
#[derive(Clone, Debug)]
pub struct AxisPreconditioner {
    pub h_tilde: FilterSpec,
    pub c1: AxisOp,
    pub c2: AxisOp,
    /// Retained rank of each axis factor (of one block for block filters).
    pub retained_ranks: (usize, usize),
    pub original: FilterSpec,
}

impl AxisPreconditioner {
    /// `𝔅_{C₁,C₂ᵀ}(M)`.
    pub fn apply_c(&self, m: &Tensor3) -> Result<Tensor3> {
        let (d1, d2, _) = m.dims();
        if (d1, d2) != (self.c1.cols(), self.c2.cols()) {
            return Err(Error::shape(format!(
                "frames are {d1}x{d2}, preconditioner expects {}x{}",
                self.c1.cols(),
                self.c2.cols()
            )));
        }
        ten3(&framewise_sandwich(&mat3(m), d1, d2, &self.c1, &self.c2), d1, d2)
    }
}

struct Polar {
    h_tilde: DenseMatrix,
    c: DenseMatrix,
    rank: usize,
    singular_values: Vec<f64>,
}

fn polar(h: &DenseMatrix, rtol: f64, what: &str) -> Result<Polar> {
    h.ensure_finite(what)?;
    let svd = h.svd()?;
    let rank = svd.rank(rtol);
    if rank == 0 {
        return Err(Error::DegenerateFilter(format!("{what} has no singular value above the truncation level")));
    }
    let u = svd.u_leading(rank);
    let v = svd.v_leading(rank);
    let mut u_scaled = u.clone();
    for j in 0..rank {
        let w = 1.0 / svd.singular_values[j];
        for i in 0..u.rows() {
            u_scaled.set(i, j, u.get(i, j) * w);
        }
    }
    Ok(Polar {
        h_tilde: u.matmul_tr(&v),
        c: u_scaled.matmul_tr(&u),
        rank,
        singular_values: svd.singular_values,
    })
}

fn check_rtol(rtol: f64) -> Result<()> {
    if !rtol.is_finite() || rtol <= 0.0 {
        return Err(Error::param(format!("rank_rtol must be positive, got {rtol}")));
    }
    Ok(())
}

/// Densifies `H`, keeps singular values above `rank_rtol · σ₁`, and builds
/// the preconditioned pair.
pub fn precondition_filter(h: &FilterSpec, rank_rtol: f64) -> Result<PreconditionedFilter> {
    check_rtol(rank_rtol)?;
    h.validate()?;
    let p = polar(&h.densify(), rank_rtol, "filter")?;
    Ok(PreconditionedFilter {
        h_tilde: FilterSpec::Dense(p.h_tilde),
        c: p.c,
        retained_rank: p.rank,
        singular_values: p.singular_values,
        original: h.clone(),
    })
}

/// Preconditions each axis factor separately; never densifies `H`.
pub fn precondition_axes(h: &FilterSpec, rank_rtol: f64) -> Result<AxisPreconditioner> {
    check_rtol(rank_rtol)?;
    h.validate()?;
    let (h_tilde, c1, c2, ranks) = match h {
        FilterSpec::Separable { g1, g2 } => {
            let p1 = polar(g1, rank_rtol, "G1")?;
            let p2 = polar(g2, rank_rtol, "G2")?;
            (
                FilterSpec::Separable {
                    g1: p1.h_tilde,
                    g2: p2.h_tilde,
                },
                AxisOp::Dense(p1.c),
                AxisOp::Dense(p2.c),
                (p1.rank, p2.rank),
            )
        }
        FilterSpec::Block { e1, e2, k1, k2 } | FilterSpec::BlockCirculant { e1, e2, k1, k2 } => {
            let p1 = polar(e1, rank_rtol, "E1")?;
            let p2 = polar(e2, rank_rtol, "E2")?;
            let ranks = (p1.rank, p2.rank);
            let c1 = AxisOp::BlockDiag { block: p1.c, reps: *k1 };
            let c2 = AxisOp::BlockDiag { block: p2.c, reps: *k2 };
            let h_tilde = if let FilterSpec::BlockCirculant { .. } = h {
                // the polar factor of a circulant is circulant
                FilterSpec::BlockCirculant {
                    e1: circulant_dense(p1.h_tilde.column(0)),
                    e2: circulant_dense(p2.h_tilde.column(0)),
                    k1: *k1,
                    k2: *k2,
                }
            } else {
                FilterSpec::Block {
                    e1: p1.h_tilde,
                    e2: p2.h_tilde,
                    k1: *k1,
                    k2: *k2,
                }
            };
            (h_tilde, c1, c2, ranks)
        }
        _ => return Err(Error::param(format!("{h} filter has no per-axis structure"))),
    };
    Ok(AxisPreconditioner {
        h_tilde,
        c1,
        c2,
        retained_ranks: ranks,
        original: h.clone(),
    })
}
