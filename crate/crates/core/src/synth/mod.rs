//! Ground-truth generators, filters, error metrics and experiment drivers.
//!
//! Randomness comes from ChaCha8 seeded with a `u64`; normal variates use the
//! ziggurat sampler of `rand_distr::StandardNormal`. Every generator is a pure
//! function of its arguments.

mod experiments;
pub mod video;

pub use experiments::{
    phase_config, run_convergence_experiment, run_convergence_experiment_with, run_phase_diagram, scenario_config, scenario_problem, trial_seed,
    ConvergenceReport, ExperimentGrid, PhaseDiagram, Problem, Scenario, ScenarioRun, TrialRecord,
};

pub(crate) use experiments::sub_seeds;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{circulant_dense, DenseMatrix, Tensor3};
use crate::separation::FilterSpec;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Distribution of the nonzero entries of `S₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparseValues {
    /// `N(0, 1)`
    Gaussian,
    /// `Unif(−a, a)` with `a = max|L₀|`
    Uniform,
    /// `a · sign(N(0, 1))` with `a = max|L₀|`
    Impulsive,
}

impl std::str::FromStr for SparseValues {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SparseValues::Gaussian),
            "uniform" => Ok(SparseValues::Uniform),
            "impulsive" => Ok(SparseValues::Impulsive),
            _ => Err(Error::param(format!("unknown sparse model `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseModel {
    pub values: SparseValues,
    /// Fraction of nonzero entries, in `(0, 1)`.
    pub ratio: f64,
}

impl SparseModel {
    pub fn gaussian(ratio: f64) -> Self {
        Self {
            values: SparseValues::Gaussian,
            ratio,
        }
    }

    pub fn uniform(ratio: f64) -> Self {
        Self {
            values: SparseValues::Uniform,
            ratio,
        }
    }

    pub fn impulsive(ratio: f64) -> Self {
        Self {
            values: SparseValues::Impulsive,
            ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::param(format!("sparsity ratio must lie in (0, 1), got {}", self.ratio)));
        }
        Ok(())
    }
}

/// Rank `⌊ratio · min(m, n)⌋`, raised to 1 if the floor is 0. The flag
/// reports whether that clamp happened.
pub fn target_rank(m: usize, n: usize, rank_ratio: f64) -> Result<(usize, bool)> {
    if !(rank_ratio > 0.0 && rank_ratio <= 1.0) {
        return Err(Error::param(format!("rank ratio must lie in (0, 1], got {rank_ratio}")));
    }
    if m == 0 || n == 0 {
        return Err(Error::shape("low-rank matrix must have positive dimensions"));
    }
    let r = (rank_ratio * m.min(n) as f64).floor() as usize;
    Ok(if r == 0 { (1, true) } else { (r, false) })
}

/// Number of nonzeros `⌊ratio · p n⌋`, raised to 1 if the floor is 0.
pub fn sparse_count(p: usize, n: usize, ratio: f64) -> (usize, bool) {
    let k = (ratio * (p * n) as f64).floor() as usize;
    if k == 0 {
        (1, true)
    } else {
        (k.min(p * n), false)
    }
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    DenseMatrix::from_col_major(rows, cols, data).expect("length matches")
}

/// `L₀ = U Vᵀ` with `U` (`m×r`) then `V` (`n×r`) drawn i.i.d. `N(0, 1)`.
pub fn gen_low_rank(m: usize, n: usize, rank_ratio: f64, seed: u64) -> Result<DenseMatrix> {
    let (r, _) = target_rank(m, n, rank_ratio)?;
    let mut rng = rng(seed);
    let u = normal_matrix(m, r, &mut rng);
    let v = normal_matrix(n, r, &mut rng);
    Ok(u.matmul_tr(&v))
}

/// Sparse `p × n` matrix with exactly [`sparse_count`] nonzeros at uniformly
/// sampled positions. `l0` supplies the amplitude `max|L₀|` for the uniform
/// and impulsive models.
pub fn gen_sparse(p: usize, n: usize, model: &SparseModel, seed: u64, l0: &DenseMatrix) -> Result<DenseMatrix> {
    model.validate()?;
    if p == 0 || n == 0 {
        return Err(Error::shape("sparse matrix must have positive dimensions"));
    }
    let a = l0.max_abs();
    if model.values != SparseValues::Gaussian && !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("uniform and impulsive models need a nonzero finite L0"));
    }
    let (count, _) = sparse_count(p, n, model.ratio);
    let mut rng = rng(seed);
    let positions = sample(&mut rng, p * n, count);
    let mut out = DenseMatrix::zeros(p, n);
    let data = out.data_mut();
    for idx in positions.iter() {
        data[idx] = match model.values {
            SparseValues::Gaussian => rng.sample(StandardNormal),
            SparseValues::Uniform => rng.random_range(-a..a),
            SparseValues::Impulsive => {
                let g: f64 = rng.sample(StandardNormal);
                if g < 0.0 {
                    -a
                } else {
                    a
                }
            }
        };
    }
    // a uniform draw of exactly 0 would lose a nonzero; redraw until it does not
    if model.values == SparseValues::Uniform {
        for idx in positions.iter() {
            while data[idx] == 0.0 {
                data[idx] = rng.random_range(-a..a);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterKind {
    /// Dense `m × p` with i.i.d. `N(0, 1)` entries.
    Gaussian { m: usize, p: usize },
    /// `n × n` circulant with first column `[−1, 0, …, 0, 1]ᵀ`.
    CirculantDiff { n: usize },
    /// Block blur `Gᵢ = I ⊗ Eᵢ` on `m1 × m2` frames, with the 2×2 and 4×4
    /// row-stochastic kernels of [`paper_blur_kernels`].
    PaperBlur { m1: usize, m2: usize },
    Identity { n: usize },
}

/// The two blur kernels `(E₁, E₂)`; `E₂` is circulant.
pub fn paper_blur_kernels() -> (DenseMatrix, DenseMatrix) {
    let e1 = DenseMatrix::from_row_major(2, 2, &[0.4375, 0.5625, 0.5625, 0.4375]).expect("2x2");
    // first row [0.1123, 0.3459, 0.3446, 0.1972]
    let e2 = circulant_dense(&[0.1123, 0.1972, 0.3446, 0.3459]);
    (e1, e2)
}

pub fn gen_filter(kind: &FilterKind, seed: u64) -> Result<FilterSpec> {
    match *kind {
        FilterKind::Gaussian { m, p } => {
            if m == 0 || p == 0 {
                return Err(Error::shape("filter dimensions must be positive"));
            }
            Ok(FilterSpec::Dense(normal_matrix(m, p, &mut rng(seed))))
        }
        FilterKind::CirculantDiff { n } => {
            if n < 2 {
                return Err(Error::shape("circulant difference filter needs n >= 2"));
            }
            let mut c = vec![0.0; n];
            c[0] = -1.0;
            c[n - 1] = 1.0;
            Ok(FilterSpec::Circulant(c))
        }
        FilterKind::PaperBlur { m1, m2 } => {
            let (e1, e2) = paper_blur_kernels();
            FilterSpec::block_for_frame(e1, e2, (m1, m2))
        }
        FilterKind::Identity { n } => {
            if n == 0 {
                return Err(Error::shape("filter dimensions must be positive"));
            }
            Ok(FilterSpec::Dense(DenseMatrix::identity(n)))
        }
    }
}

/// `‖estimate − truth‖_F / ‖truth‖_F`.
pub fn rel_err(truth: &DenseMatrix, estimate: &DenseMatrix) -> Result<f64> {
    rel_err_slices(truth.data(), estimate.data(), truth.shape() == estimate.shape())
}

pub fn rel_err_tensor(truth: &Tensor3, estimate: &Tensor3) -> Result<f64> {
    rel_err_slices(truth.data(), estimate.data(), truth.dims() == estimate.dims())
}

fn rel_err_slices(truth: &[f64], estimate: &[f64], same_shape: bool) -> Result<f64> {
    if !same_shape {
        return Err(Error::shape("truth and estimate differ in shape"));
    }
    let norm = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::UndefinedMetric("relative error against a zero truth".into()));
    }
    let diff = truth
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}
