//! Classical robust PCA: the filter is the identity.
//!
//! `cargo run --release --example rpca`

use matsep::synth::{gen_low_rank, gen_sparse, rel_err, SparseModel};
use matsep::{gms, DenseMatrix, FilterSpec, SolverConfig};

fn main() -> matsep::Result<()> {
    let (m, n) = (80, 60);
    let l0 = gen_low_rank(m, n, 0.05, 1)?;
    let s0 = gen_sparse(m, n, &SparseModel::gaussian(0.05), 2, &l0)?;
    let m0 = l0.add(&s0);

    let h = FilterSpec::Dense(DenseMatrix::identity(m));
    let out = gms(&m0, &h, &SolverConfig::default(), Some((&l0, &s0)))?;

    println!("{} iterations, stopped on {}", out.trace.len(), out.terminated_by);
    println!("RelErr(L) = {:.3e}", rel_err(&l0, &out.l_hat)?);
    println!("RelErr(S) = {:.3e}", rel_err(&s0, &out.s_hat)?);
    println!("rank(L_hat) = {}", out.l_hat.svd()?.rank(1e-8));
    Ok(())
}
