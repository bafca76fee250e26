//! The same LASSO solved by every backend, each against its dense twin.

use matsep::numerics::{circulant_dense, kron};
use matsep::{DenseMatrix, LassoConfig, PrefactoredOperator};

fn pseudo(rows: usize, cols: usize, salt: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |i, j| ((i * 31 + j * 17) as f64 * 0.37 + salt).sin())
}

fn main() -> matsep::Result<()> {
    let rho = 1.0;
    let cfg = LassoConfig::new(0.1, rho, 200, 1e-10)?;
    let e1 = pseudo(2, 2, 0.1);
    let e2 = pseudo(3, 3, 0.2);
    let col = [0.5, -1.0, 0.25, 0.0, 2.0, 0.0];
    let cases = [
        ("cholesky", PrefactoredOperator::cholesky(&pseudo(12, 8, 0.3), rho)?, pseudo(12, 8, 0.3)),
        ("circulant", PrefactoredOperator::circulant(&col, rho)?, circulant_dense(&col)),
        ("separable", PrefactoredOperator::separable(&e1, &e2, rho)?, kron(&e2, &e1)),
        (
            "block",
            PrefactoredOperator::block(&e1, &e2, 2, 2, rho)?,
            kron(&kron(&DenseMatrix::identity(2), &e2), &kron(&DenseMatrix::identity(2), &e1)),
        ),
    ];
    for (name, op, dense) in cases {
        let b = pseudo(dense.rows(), 3, 0.9);
        let fast = op.lasso(&b, &cfg, None)?;
        let slow = PrefactoredOperator::dense_svd(&dense, rho)?.lasso(&b, &cfg, None)?;
        let gap = fast.x.sub(&slow.x).frobenius_norm() / slow.x.frobenius_norm().max(1e-300);
        println!("{name:>10}: {} iterations, gap to dense {gap:.1e}", fast.iters);
    }
    Ok(())
}
