//! Recover a low-rank matrix `L₀` and a sparse matrix `S₀` from
//! `M₀ = L₀ + H S₀`, where `H` is a known linear filter.
//!
//! The solver is a two-level ADMM: an outer loop alternating singular value
//! thresholding (for `L`) with an l1-regularised least-squares subproblem
//! (for `S`), and an inner LASSO ADMM whose linear solve is prefactored once
//! per run. The inner solve exploits filter structure: dense, circulant,
//! separable `G₂ ⊗ G₁`, block diagonal `I ⊗ E`, and block circulant.
//!
//! Preconditioning replaces `H = U Σ Vᵀ` by `H̃ = U Vᵀ` and the data by
//! `C M₀` with `C = U Σ⁻¹ Uᵀ`. It is the recommended entry point:
//!
//! ```no_run
//! use matsep::{pgms, FilterSpec, SolverConfig};
//! use matsep::synth::{gen_filter, gen_low_rank, gen_sparse, FilterKind, SparseModel};
//!
//! let l0 = gen_low_rank(60, 60, 0.05, 1).unwrap();
//! let s0 = gen_sparse(60, 60, &SparseModel::gaussian(0.05), 2, &l0).unwrap();
//! let h = gen_filter(&FilterKind::Gaussian { m: 60, p: 60 }, 3).unwrap();
//! let m0 = l0.add(&h.apply(&s0).unwrap());
//! let result = pgms(&m0, &h, &SolverConfig::default(), None).unwrap();
//! println!("stopped after {} iterations", result.trace.len());
//! ```

pub mod cli;
pub mod error;
pub mod io;
pub mod lasso;
pub mod numerics;
pub mod separation;
pub mod synth;

pub use error::{Error, Result};
pub use lasso::{Backend, LassoConfig, LassoOutcome, LassoState, PrefactoredOperator};
pub use numerics::{DenseMatrix, Tensor3};
pub use separation::{
    gms, gts, pgms, pgts, precondition_filter, recover_low_rank, ConvergenceTrace, FilterSpec, PreconditionedFilter,
    SeparationResult, SolverConfig, Termination,
};
