use rustfft::num_complex::Complex64;

use super::Backend;
use crate::error::{Error, Result};
use crate::numerics::{
    circulant_dense, circulant_spectrum, divide_frames, framewise_sandwich, real_part, to_complex, AxisOp,
    CirculantSpectrum, DenseMatrix, FftPair,
};

/// `AᵀA + ρI` factored once so every ADMM x-update is a cheap solve.
///
/// Right-hand sides are always matrices. Frame-structured backends work on
/// the unfolded form (`mat3`), one column per frame.
#[derive(Clone, Debug)]
pub struct PrefactoredOperator {
    rho: f64,
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    DenseSvd {
        a: DenseMatrix,
        v: DenseMatrix,
        sigma: Vec<f64>,
        // V (Σ + ρ)⁻¹ Vᵀ
        inverse: DenseMatrix,
    },
    Cholesky {
        a: DenseMatrix,
        lower: DenseMatrix,
    },
    Circulant {
        first_col: Vec<f64>,
        spectrum: CirculantSpectrum,
        coeff: Vec<f64>,
        fft: FftPair,
    },
    Separable(Box<SeparableFactors>),
    BlockCirculant(Box<BlockCirculantFactors>),
}

#[derive(Clone, Debug)]
struct SeparableFactors {
    backend: Backend,
    frame_in: (usize, usize),
    frame_out: (usize, usize),
    g1: AxisOp,
    g2: AxisOp,
    g1t: AxisOp,
    g2t: AxisOp,
    v1: AxisOp,
    v2: AxisOp,
    v1t: AxisOp,
    v2t: AxisOp,
    sigma1: Vec<f64>,
    sigma2: Vec<f64>,
    // Σ + ρ as a p1 × p2 frame
    divisor: Vec<f64>,
}

#[derive(Clone, Debug)]
struct BlockCirculantFactors {
    frame: (usize, usize),
    g1: AxisOp,
    g2: AxisOp,
    g1t: AxisOp,
    g2t: AxisOp,
    d1: Vec<f64>,
    d2: Vec<f64>,
    // L + ρ with L = J ⊗ d1 d2ᵀ, stored transposed (m2 × m1) to match the
    // layout the row transforms leave behind
    divisor_t: Vec<f64>,
    fft1: FftPair,
    fft2: FftPair,
}

fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::param(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

/// Eigen-pairs of a Gram matrix `GᵀG` via its SVD: (first factor, values).
fn gram_factors(g: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let svd = g.tr_matmul(g).svd()?;
    Ok((svd.u, svd.singular_values))
}

fn tile(v: &[f64], reps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() * reps);
    for _ in 0..reps {
        out.extend_from_slice(v);
    }
    out
}

pub(crate) fn block_reps(m: usize, n: usize, axis: &str) -> Result<usize> {
    if n == 0 || !m.is_multiple_of(n) {
        return Err(Error::shape(format!(
            "{axis}: block size {n} does not divide frame size {m}"
        )));
    }
    Ok(m / n)
}

impl PrefactoredOperator {
    /// Caches the SVD `AᵀA = V Σ Vᵀ`.
    pub fn dense_svd(a: &DenseMatrix, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        a.ensure_finite("design matrix")?;
        let (v, sigma) = gram_factors(a)?;
        let n = a.cols();
        let mut scaled = v.clone();
        for (j, s) in sigma.iter().enumerate() {
            let w = 1.0 / (s + rho);
            for i in 0..n {
                scaled.set(i, j, scaled.get(i, j) * w);
            }
        }
        let inverse = scaled.matmul_tr(&v);
        Ok(Self {
            rho,
            kind: Kind::DenseSvd {
                a: a.clone(),
                v,
                sigma,
                inverse,
            },
        })
    }

    /// Caches the Cholesky factor of `AᵀA + ρI`.
    pub fn cholesky(a: &DenseMatrix, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        a.ensure_finite("design matrix")?;
        let mut gram = a.tr_matmul(a);
        for i in 0..gram.rows() {
            gram.set(i, i, gram.get(i, i) + rho);
        }
        let lower = gram.cholesky_lower()?;
        Ok(Self {
            rho,
            kind: Kind::Cholesky { a: a.clone(), lower },
        })
    }

    /// Square circulant design with the given first column.
    pub fn circulant(first_col: &[f64], rho: f64) -> Result<Self> {
        check_rho(rho)?;
        if first_col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("circulant column contains NaN or infinite entries".into()));
        }
        let spectrum = circulant_spectrum(first_col)?;
        let coeff = spectrum.power().iter().map(|p| p + rho).collect();
        Ok(Self {
            rho,
            kind: Kind::Circulant {
                first_col: first_col.to_vec(),
                fft: FftPair::new(first_col.len()),
                spectrum,
                coeff,
            },
        })
    }

    /// Framewise design `H = G₂ ⊗ G₁` with arbitrary dense factors.
    pub fn separable(g1: &DenseMatrix, g2: &DenseMatrix, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        g1.ensure_finite("G1")?;
        g2.ensure_finite("G2")?;
        let (v1, s1) = gram_factors(g1)?;
        let (v2, s2) = gram_factors(g2)?;
        Ok(Self::separable_from_parts(
            Backend::Separable,
            AxisOp::Dense(g1.clone()),
            AxisOp::Dense(g2.clone()),
            AxisOp::Dense(v1),
            AxisOp::Dense(v2),
            s1,
            s2,
            rho,
        ))
    }

    /// Framewise design with `Gᵢ = I_{kᵢ} ⊗ Eᵢ`.
    pub fn block(e1: &DenseMatrix, e2: &DenseMatrix, k1: usize, k2: usize, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        for (e, name) in [(e1, "E1"), (e2, "E2")] {
            e.ensure_finite(name)?;
            if e.rows() != e.cols() {
                return Err(Error::shape(format!("{name} must be square, got {}x{}", e.rows(), e.cols())));
            }
        }
        if k1 == 0 || k2 == 0 {
            return Err(Error::shape("block repetition counts must be positive"));
        }
        let (w1, se1) = gram_factors(e1)?;
        let (w2, se2) = gram_factors(e2)?;
        Ok(Self::separable_from_parts(
            Backend::Block,
            AxisOp::BlockDiag { block: e1.clone(), reps: k1 },
            AxisOp::BlockDiag { block: e2.clone(), reps: k2 },
            AxisOp::BlockDiag { block: w1, reps: k1 },
            AxisOp::BlockDiag { block: w2, reps: k2 },
            tile(&se1, k1),
            tile(&se2, k2),
            rho,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn separable_from_parts(
        backend: Backend,
        g1: AxisOp,
        g2: AxisOp,
        v1: AxisOp,
        v2: AxisOp,
        sigma1: Vec<f64>,
        sigma2: Vec<f64>,
        rho: f64,
    ) -> Self {
        let (p1, p2) = (g1.cols(), g2.cols());
        let mut divisor = Vec::with_capacity(p1 * p2);
        for s2 in &sigma2 {
            for s1 in &sigma1 {
                divisor.push(s1 * s2 + rho);
            }
        }
        Self {
            rho,
            kind: Kind::Separable(Box::new(SeparableFactors {
                backend,
                frame_in: (p1, p2),
                frame_out: (g1.rows(), g2.rows()),
                g1t: g1.transpose(),
                g2t: g2.transpose(),
                v1t: v1.transpose(),
                v2t: v2.transpose(),
                g1,
                g2,
                v1,
                v2,
                sigma1,
                sigma2,
                divisor,
            })),
        }
    }

    /// Framewise design with circulant blocks `Gᵢ = I_{kᵢ} ⊗ circ(cᵢ)`.
    pub fn block_circulant(c1: &[f64], c2: &[f64], k1: usize, k2: usize, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        if k1 == 0 || k2 == 0 {
            return Err(Error::shape("block repetition counts must be positive"));
        }
        let d1 = circulant_spectrum(c1)?.power();
        let d2 = circulant_spectrum(c2)?.power();
        let (n1, n2) = (c1.len(), c2.len());
        let (m1, m2) = (n1 * k1, n2 * k2);
        let mut divisor_t = Vec::with_capacity(m1 * m2);
        for i in 0..m1 {
            for j in 0..m2 {
                divisor_t.push(d1[i % n1] * d2[j % n2] + rho);
            }
        }
        let g1 = AxisOp::BlockDiag {
            block: circulant_dense(c1),
            reps: k1,
        };
        let g2 = AxisOp::BlockDiag {
            block: circulant_dense(c2),
            reps: k2,
        };
        Ok(Self {
            rho,
            kind: Kind::BlockCirculant(Box::new(BlockCirculantFactors {
                frame: (m1, m2),
                g1t: g1.transpose(),
                g2t: g2.transpose(),
                g1,
                g2,
                d1,
                d2,
                divisor_t,
                fft1: FftPair::new(n1),
                fft2: FftPair::new(n2),
            })),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn backend(&self) -> Backend {
        match &self.kind {
            Kind::DenseSvd { .. } => Backend::DenseSvd,
            Kind::Cholesky { .. } => Backend::Cholesky,
            Kind::Circulant { .. } => Backend::Circulant,
            Kind::Separable(f) => f.backend,
            Kind::BlockCirculant(_) => Backend::BlockCirculant,
        }
    }

    /// Rows of the unknown `x` (unfolded for frame backends).
    pub fn input_dim(&self) -> usize {
        match &self.kind {
            Kind::DenseSvd { a, .. } | Kind::Cholesky { a, .. } => a.cols(),
            Kind::Circulant { first_col, .. } => first_col.len(),
            Kind::Separable(f) => f.frame_in.0 * f.frame_in.1,
            Kind::BlockCirculant(f) => f.frame.0 * f.frame.1,
        }
    }

    /// Rows of the data `b`.
    pub fn output_dim(&self) -> usize {
        match &self.kind {
            Kind::DenseSvd { a, .. } | Kind::Cholesky { a, .. } => a.rows(),
            Kind::Circulant { first_col, .. } => first_col.len(),
            Kind::Separable(f) => f.frame_out.0 * f.frame_out.1,
            Kind::BlockCirculant(f) => f.frame.0 * f.frame.1,
        }
    }

    /// Frame sizes `(input, output)` for frame-structured backends.
    pub fn frame_dims(&self) -> Option<((usize, usize), (usize, usize))> {
        match &self.kind {
            Kind::Separable(f) => Some((f.frame_in, f.frame_out)),
            Kind::BlockCirculant(f) => Some((f.frame, f.frame)),
            _ => None,
        }
    }

    /// Eigenvalues of `AᵀA` in the order the backend caches them. For
    /// frame backends this is `σ₁ σ₂ᵀ` (or `L`) unfolded column-major.
    pub fn gram_spectrum(&self) -> Vec<f64> {
        match &self.kind {
            Kind::DenseSvd { sigma, .. } => sigma.clone(),
            Kind::Cholesky { .. } => Vec::new(),
            Kind::Circulant { spectrum, .. } => spectrum.power(),
            Kind::Separable(f) => f.divisor.iter().map(|d| d - self.rho).collect(),
            Kind::BlockCirculant(f) => {
                let (m1, m2) = f.frame;
                let (n1, n2) = (f.d1.len(), f.d2.len());
                let mut out = Vec::with_capacity(m1 * m2);
                for j in 0..m2 {
                    for i in 0..m1 {
                        out.push(f.d1[i % n1] * f.d2[j % n2]);
                    }
                }
                out
            }
        }
    }

    /// Cached right factor `V` of the dense-SVD backend.
    pub fn gram_eigenvectors(&self) -> Option<&DenseMatrix> {
        match &self.kind {
            Kind::DenseSvd { v, .. } => Some(v),
            _ => None,
        }
    }

    /// Per-axis Gram spectra of separable and block backends.
    pub fn axis_spectra(&self) -> Option<(&[f64], &[f64])> {
        match &self.kind {
            Kind::Separable(f) => Some((&f.sigma1, &f.sigma2)),
            _ => None,
        }
    }

    fn check_rows(&self, x: &DenseMatrix, rows: usize, what: &str) -> Result<()> {
        if x.rows() != rows {
            return Err(Error::shape(format!(
                "{what} has {} rows, operator expects {rows}",
                x.rows()
            )));
        }
        Ok(())
    }

    /// `A x`
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(x, self.input_dim(), "input")?;
        Ok(match &self.kind {
            Kind::DenseSvd { a, .. } | Kind::Cholesky { a, .. } => a.matmul(x),
            Kind::Circulant { spectrum, fft, .. } => {
                let d = &spectrum.eigenvalues;
                circulant_product(fft, x, |k| d[k])?
            }
            Kind::Separable(f) => framewise_sandwich(x, f.frame_in.0, f.frame_in.1, &f.g1, &f.g2),
            Kind::BlockCirculant(f) => framewise_sandwich(x, f.frame.0, f.frame.1, &f.g1, &f.g2),
        })
    }

    /// `Aᵀ b`
    pub fn normal_rhs(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(b, self.output_dim(), "data")?;
        Ok(match &self.kind {
            Kind::DenseSvd { a, .. } | Kind::Cholesky { a, .. } => a.tr_matmul(b),
            Kind::Circulant { spectrum, fft, .. } => {
                let d = &spectrum.eigenvalues;
                circulant_product(fft, b, |k| d[k].conj())?
            }
            Kind::Separable(f) => framewise_sandwich(b, f.frame_out.0, f.frame_out.1, &f.g1t, &f.g2t),
            Kind::BlockCirculant(f) => framewise_sandwich(b, f.frame.0, f.frame.1, &f.g1t, &f.g2t),
        })
    }

    /// Solves `(AᵀA + ρI) x = r`.
    pub fn solve(&self, r: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(r, self.input_dim(), "right-hand side")?;
        match &self.kind {
            Kind::DenseSvd { inverse, .. } => Ok(inverse.matmul(r)),
            Kind::Cholesky { lower, .. } => lower.cholesky_solve(r),
            Kind::Circulant { coeff, fft, .. } => {
                let mut buf = to_complex(r.data());
                fft.forward(&mut buf);
                for col in buf.chunks_mut(coeff.len()) {
                    for (v, c) in col.iter_mut().zip(coeff) {
                        *v /= c;
                    }
                }
                fft.inverse(&mut buf);
                DenseMatrix::from_col_major(r.rows(), r.cols(), real_part(&buf)?)
            }
            Kind::Separable(f) => {
                let (p1, p2) = f.frame_in;
                let mut t = framewise_sandwich(r, p1, p2, &f.v1t, &f.v2t);
                divide_frames(t.data_mut(), &f.divisor);
                Ok(framewise_sandwich(&t, p1, p2, &f.v1, &f.v2))
            }
            Kind::BlockCirculant(f) => f.solve(r),
        }
    }
}

/// `F⁻¹ diag(w) F x` column by column.
fn circulant_product(fft: &FftPair, x: &DenseMatrix, w: impl Fn(usize) -> Complex64) -> Result<DenseMatrix> {
    let n = fft.len();
    let mut buf = to_complex(x.data());
    fft.forward(&mut buf);
    for col in buf.chunks_mut(n) {
        for (k, v) in col.iter_mut().enumerate() {
            *v *= w(k);
        }
    }
    fft.inverse(&mut buf);
    DenseMatrix::from_col_major(x.rows(), x.cols(), real_part(&buf)?)
}

impl BlockCirculantFactors {
    fn solve(&self, r: &DenseMatrix) -> Result<DenseMatrix> {
        let (m1, m2) = self.frame;
        let frame_len = m1 * m2;
        let mut out = Vec::with_capacity(r.rows() * r.cols());
        let mut buf = vec![Complex64::new(0.0, 0.0); frame_len];
        let mut buf_t = vec![Complex64::new(0.0, 0.0); frame_len];
        for frame in r.data().chunks(frame_len) {
            for (b, &v) in buf.iter_mut().zip(frame) {
                *b = Complex64::new(v, 0.0);
            }
            // columns: every column is k1 consecutive blocks of length n1
            self.fft1.forward(&mut buf);
            transpose_into(&buf, &mut buf_t, m1, m2);
            // rows, now contiguous after the transpose
            self.fft2.forward(&mut buf_t);
            for (v, d) in buf_t.iter_mut().zip(&self.divisor_t) {
                *v /= d;
            }
            self.fft2.inverse(&mut buf_t);
            transpose_into(&buf_t, &mut buf, m2, m1);
            self.fft1.inverse(&mut buf);
            out.extend(real_part(&buf)?);
        }
        DenseMatrix::from_col_major(r.rows(), r.cols(), out)
    }
}

/// Column-major `rows × cols` → column-major `cols × rows`.
fn transpose_into(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for j in 0..cols {
        for i in 0..rows {
            dst[i * cols + j] = src[j * rows + i];
        }
    }
}
