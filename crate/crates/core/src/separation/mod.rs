//! Outer ADMM for `min ‖L‖_* + λ‖S‖₁  s.t.  L + H S = M₀`, its
//! preconditioned variant, and the tensor (framewise filter) versions.

mod filter;
mod precondition;

use std::fmt;

pub use filter::FilterSpec;
pub use precondition::{precondition_axes, precondition_filter, AxisPreconditioner, PreconditionedFilter};

use crate::error::{Error, Result};
use crate::lasso::{Backend, LassoConfig, LassoState, PrefactoredOperator};
use crate::numerics::{mat3, singular_value_threshold, ten3, DenseMatrix, Tensor3};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Sparsity penalty; `None` means `1/√min(m, n)` of the (unfolded) data.
    pub lambda: Option<f64>,
    pub rho_outer: f64,
    pub rho_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub tol_outer: f64,
    pub tol_inner: f64,
    /// Carry the inner `(z, u)` across outer iterations.
    pub warm_start_inner: bool,
    /// Singular values at or below `rank_rtol · σ₁` are dropped when preconditioning.
    pub rank_rtol: f64,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            rho_outer: 1.0,
            rho_inner: 1.0,
            max_outer: 500,
            max_inner: 30,
            tol_outer: 1e-7,
            tol_inner: 1e-5,
            warm_start_inner: false,
            rank_rtol: 1e-12,
            backend: Backend::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho_outer", self.rho_outer),
            ("rho_inner", self.rho_inner),
            ("tol_outer", self.tol_outer),
            ("tol_inner", self.tol_inner),
            ("rank_rtol", self.rank_rtol),
        ];
        for (name, v) in positive.into_iter().chain(self.lambda.map(|l| ("lambda", l))) {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::param("iteration caps must be at least 1"));
        }
        Ok(())
    }

    /// The penalty used for data with `rows × cols` entries.
    pub fn lambda_for(&self, rows: usize, cols: usize) -> f64 {
        self.lambda
            .unwrap_or_else(|| 1.0 / (rows.min(cols).max(1) as f64).sqrt())
    }
}

/// One outer iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// `‖(L⁺, S⁺) − (L, S)‖_F / (‖(L, S)‖_F + 1)`.
    pub change_ratio: f64,
    /// `‖L⁺ + H S⁺ − M₀‖_F` of the problem actually iterated.
    pub residual: f64,
    pub relerr_s: Option<f64>,
    pub relerr_l: Option<f64>,
    pub inner_iters: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<IterationRecord>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, IterationRecord> {
        self.records.iter()
    }

    /// Smallest `RelErr(S)` seen, if ground truth was tracked.
    pub fn best_relerr_s(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.relerr_s).reduce(f64::min)
    }

    /// CSV with a header row and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,change_ratio,residual,relerr_s,relerr_l,inner_iters\n");
        let opt = |v: Option<f64>| v.map(fmt_full).unwrap_or_default();
        for (k, r) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k + 1,
                fmt_full(r.change_ratio),
                fmt_full(r.residual),
                opt(r.relerr_s),
                opt(r.relerr_l),
                r.inner_iters
            ));
        }
        out
    }
}

/// Renders a float with 17 significant digits.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    MaxIters,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Tolerance => "tolerance",
            Termination::MaxIters => "max_iters",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SeparationResult<T = DenseMatrix> {
    pub s_hat: T,
    pub l_hat: T,
    pub trace: ConvergenceTrace,
    pub terminated_by: Termination,
    /// Low-rank iterate of the preconditioned problem (`≈ C L̂`); only set
    /// by the preconditioned solvers.
    pub y_diag: Option<T>,
}

/// Ground truth `(L₀, S₀)` for error tracking.
pub type Truth<'a, T = DenseMatrix> = Option<(&'a T, &'a T)>;

fn rel(truth: &DenseMatrix, est: &DenseMatrix) -> Option<f64> {
    crate::synth::rel_err(truth, est).ok()
}

struct CoreOutput {
    l: DenseMatrix,
    s: DenseMatrix,
    trace: ConvergenceTrace,
    terminated_by: Termination,
}

/// The outer loop on `M = L + A S` with `A` prefactored. `metrics(L, S)`
/// returns `(RelErr(S), RelErr(L))` for the trace.
fn admm_core(
    m0: &DenseMatrix,
    op: &PrefactoredOperator,
    cfg: &SolverConfig,
    lambda: f64,
    mut metrics: impl FnMut(&DenseMatrix, &DenseMatrix) -> (Option<f64>, Option<f64>),
) -> Result<CoreOutput> {
    let (m, n) = m0.shape();
    let p = op.input_dim();
    let inner = LassoConfig::new(lambda / cfg.rho_outer, cfg.rho_inner, cfg.max_inner, cfg.tol_inner)?;
    let svt_level = 1.0 / cfg.rho_outer;

    let mut l = DenseMatrix::zeros(m, n);
    let mut s = DenseMatrix::zeros(p, n);
    let mut u = DenseMatrix::zeros(m, n);
    let mut hs = DenseMatrix::zeros(m, n);
    let mut state: Option<LassoState> = None;
    let mut trace = ConvergenceTrace::default();
    let mut terminated_by = Termination::MaxIters;

    for _ in 0..cfg.max_outer {
        let l_next = singular_value_threshold(&m0.sub(&hs).sub(&u), svt_level)?;
        let target = m0.sub(&u).sub(&l_next);
        let init = if cfg.warm_start_inner { state.as_ref() } else { None };
        let out = op.lasso(&target, &inner, init)?;
        let s_next = out.x;
        if cfg.warm_start_inner {
            state = Some(out.state);
        }
        hs = op.apply(&s_next)?;

        let mut residual_sq = 0.0;
        for ((ui, &li), (&hi, &mi)) in u
            .data_mut()
            .iter_mut()
            .zip(l_next.data())
            .zip(hs.data().iter().zip(m0.data()))
        {
            let r = li + hi - mi;
            *ui += r;
            residual_sq += r * r;
        }

        let dl = crate::numerics::frobenius_distance(&l_next, &l);
        let ds = crate::numerics::frobenius_distance(&s_next, &s);
        let prev = (l.frobenius_norm().powi(2) + s.frobenius_norm().powi(2)).sqrt();
        let change_ratio = (dl * dl + ds * ds).sqrt() / (prev + 1.0);
        l = l_next;
        s = s_next;
        let (relerr_s, relerr_l) = metrics(&l, &s);
        trace.records.push(IterationRecord {
            change_ratio,
            residual: residual_sq.sqrt(),
            relerr_s,
            relerr_l,
            inner_iters: out.iters,
        });
        if change_ratio < cfg.tol_outer {
            terminated_by = Termination::Tolerance;
            break;
        }
    }
    Ok(CoreOutput {
        l,
        s,
        trace,
        terminated_by,
    })
}

fn check_data(m0: &DenseMatrix, h: &FilterSpec) -> Result<()> {
    m0.ensure_finite("M0")?;
    if m0.rows() != h.output_rows() {
        return Err(Error::shape(format!(
            "M0 has {} rows but the filter produces {}",
            m0.rows(),
            h.output_rows()
        )));
    }
    Ok(())
}

fn check_truth(truth: Truth<'_>, m0: &DenseMatrix, p: usize) -> Result<()> {
    if let Some((l0, s0)) = truth {
        if l0.shape() != m0.shape() || s0.shape() != (p, m0.cols()) {
            return Err(Error::shape("ground truth shapes do not match the problem"));
        }
    }
    Ok(())
}

/// Plain generalized matrix separation.
pub fn gms(m0: &DenseMatrix, h: &FilterSpec, cfg: &SolverConfig, truth: Truth<'_>) -> Result<SeparationResult> {
    cfg.validate()?;
    check_data(m0, h)?;
    check_truth(truth, m0, h.input_rows())?;
    let op = h.operator(cfg.backend, cfg.rho_inner)?;
    let lambda = cfg.lambda_for(m0.rows(), m0.cols());
    let out = admm_core(m0, &op, cfg, lambda, |l, s| match truth {
        Some((l0, s0)) => (rel(s0, s), rel(l0, l)),
        None => (None, None),
    })?;
    Ok(SeparationResult {
        s_hat: out.s,
        l_hat: out.l,
        trace: out.trace,
        terminated_by: out.terminated_by,
        y_diag: None,
    })
}

/// Preconditioned separation: runs [`gms`] on `(C M₀, H̃)` and recovers
/// `L̂ = M₀ − H Ŝ`.
pub fn pgms(m0: &DenseMatrix, h: &FilterSpec, cfg: &SolverConfig, truth: Truth<'_>) -> Result<SeparationResult> {
    cfg.validate()?;
    check_data(m0, h)?;
    check_truth(truth, m0, h.input_rows())?;
    let pre = precondition_filter(h, cfg.rank_rtol)?;
    let backend = match cfg.backend {
        Backend::Auto | Backend::DenseSvd => Backend::DenseSvd,
        Backend::Cholesky => Backend::Cholesky,
        other => {
            return Err(Error::param(format!(
                "the preconditioned filter is dense; backend {other} does not apply"
            )))
        }
    };
    let op = pre.h_tilde.operator(backend, cfg.rho_inner)?;
    let cm0 = pre.c.matmul(m0);
    let lambda = cfg.lambda_for(m0.rows(), m0.cols());
    let out = admm_core(&cm0, &op, cfg, lambda, |_, s| match truth {
        Some((l0, s0)) => {
            let l = h.apply(s).map(|hs| m0.sub(&hs)).ok();
            (rel(s0, s), l.and_then(|l| rel(l0, &l)))
        }
        None => (None, None),
    })?;
    let l_hat = recover_low_rank(m0, h, &out.s)?;
    Ok(SeparationResult {
        s_hat: out.s,
        l_hat,
        trace: out.trace,
        terminated_by: out.terminated_by,
        y_diag: Some(out.l),
    })
}

/// `L̂ = M₀ − H Ŝ`.
pub fn recover_low_rank(m0: &DenseMatrix, h: &FilterSpec, s_hat: &DenseMatrix) -> Result<DenseMatrix> {
    if s_hat.cols() != m0.cols() {
        return Err(Error::shape(format!(
            "S has {} columns, M0 has {}",
            s_hat.cols(),
            m0.cols()
        )));
    }
    let hs = h.apply(s_hat)?;
    if hs.rows() != m0.rows() {
        return Err(Error::shape("filter output does not match M0"));
    }
    Ok(m0.sub(&hs))
}

/// `𝓛̂ = 𝓜₀ − 𝔅_{G₁,G₂ᵀ}(𝓢̂)`.
pub fn recover_low_rank_tensor(m0: &Tensor3, h: &FilterSpec, s_hat: &Tensor3) -> Result<Tensor3> {
    let hs = h.apply_tensor(s_hat)?;
    if hs.dims() != m0.dims() {
        return Err(Error::shape("filter output does not match M0"));
    }
    let (d1, d2, _) = m0.dims();
    ten3(&mat3(m0).sub(&mat3(&hs)), d1, d2)
}

fn tensor_frames(m0: &Tensor3, h: &FilterSpec) -> Result<((usize, usize), (usize, usize))> {
    let frames = h
        .frames()
        .ok_or_else(|| Error::param(format!("tensor separation needs a frame filter, got {h}")))?;
    let (d1, d2, _) = m0.dims();
    if (d1, d2) != frames.1 {
        return Err(Error::shape(format!(
            "frames are {d1}x{d2}, filter produces {}x{}",
            frames.1 .0, frames.1 .1
        )));
    }
    Ok(frames)
}

fn unfold_truth<'a>(
    truth: Truth<'a, Tensor3>,
    store: &'a mut Option<(DenseMatrix, DenseMatrix)>,
) -> Truth<'a> {
    *store = truth.map(|(l0, s0)| (mat3(l0), mat3(s0)));
    store.as_ref().map(|(l, s)| (l, s))
}

fn fold(out: SeparationResult, p: (usize, usize), m: (usize, usize)) -> Result<SeparationResult<Tensor3>> {
    Ok(SeparationResult {
        s_hat: ten3(&out.s_hat, p.0, p.1)?,
        l_hat: ten3(&out.l_hat, m.0, m.1)?,
        trace: out.trace,
        terminated_by: out.terminated_by,
        y_diag: out.y_diag.map(|y| ten3(&y, m.0, m.1)).transpose()?,
    })
}

/// Tensor separation with a framewise filter, solved on the unfolding.
pub fn gts(
    m0: &Tensor3,
    h: &FilterSpec,
    cfg: &SolverConfig,
    truth: Truth<'_, Tensor3>,
) -> Result<SeparationResult<Tensor3>> {
    let (p, m) = tensor_frames(m0, h)?;
    let mut store = None;
    let flat = unfold_truth(truth, &mut store);
    fold(gms(&mat3(m0), h, cfg, flat)?, p, m)
}

/// Preconditioned tensor separation; each axis factor is preconditioned on
/// its own so `H` is never formed.
pub fn pgts(
    m0: &Tensor3,
    h: &FilterSpec,
    cfg: &SolverConfig,
    truth: Truth<'_, Tensor3>,
) -> Result<SeparationResult<Tensor3>> {
    cfg.validate()?;
    let (p, m) = tensor_frames(m0, h)?;
    let mut store = None;
    let flat = unfold_truth(truth, &mut store);
    let m0_flat = mat3(m0);
    m0_flat.ensure_finite("M0")?;
    check_truth(flat, &m0_flat, p.0 * p.1)?;
    let pre = precondition_axes(h, cfg.rank_rtol)?;
    let op = pre.h_tilde.operator(cfg.backend, cfg.rho_inner)?;
    let cm0 = mat3(&pre.apply_c(m0)?);
    let lambda = cfg.lambda_for(m0_flat.rows(), m0_flat.cols());
    let out = admm_core(&cm0, &op, cfg, lambda, |_, s| match flat {
        Some((l0, s0)) => {
            let l = h.apply(s).map(|hs| m0_flat.sub(&hs)).ok();
            (rel(s0, s), l.and_then(|l| rel(l0, &l)))
        }
        None => (None, None),
    })?;
    let l_hat = recover_low_rank(&m0_flat, h, &out.s)?;
    fold(
        SeparationResult {
            s_hat: out.s,
            l_hat,
            trace: out.trace,
            terminated_by: out.terminated_by,
            y_diag: Some(out.l),
        },
        p,
        m,
    )
}
