use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::{gen_filter, gen_low_rank, gen_sparse, rel_err, FilterKind, SparseModel, SparseValues};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::separation::{fmt_full, gms, pgms, ConvergenceTrace, FilterSpec, SolverConfig};

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one phase-diagram trial; independent of execution order.
pub fn trial_seed(base: u64, rank_idx: usize, sparsity_idx: usize, trial: usize) -> u64 {
    let mut h = mix(base);
    for v in [rank_idx, sparsity_idx, trial] {
        h = mix(h ^ v as u64);
    }
    h
}

/// Seeds for `(L₀, S₀, H)` derived from one trial seed.
pub(crate) fn sub_seeds(seed: u64) -> (u64, u64, u64) {
    (mix(seed ^ 1), mix(seed ^ 2), mix(seed ^ 3))
}

/// One synthetic instance `M₀ = L₀ + H S₀`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub m0: DenseMatrix,
    pub l0: DenseMatrix,
    pub s0: DenseMatrix,
    pub h: FilterSpec,
}

impl Problem {
    pub fn generate(
        n: usize,
        filter: FilterSpec,
        rank_ratio: f64,
        sparse: &SparseModel,
        l0_seed: u64,
        s0_seed: u64,
    ) -> Result<Self> {
        let (m, p) = (filter.output_rows(), filter.input_rows());
        let l0 = gen_low_rank(m, n, rank_ratio, l0_seed)?;
        let s0 = gen_sparse(p, n, sparse, s0_seed, &l0)?;
        let m0 = l0.add(&filter.apply(&s0)?);
        Ok(Self { m0, l0, s0, h: filter })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// 100×100, rank 5, 10% Gaussian spikes, Gaussian `H`, 60 × 60 iterations.
    Fig1,
    /// Gaussian `H` 270×266, `n = 300`, 5% rank and sparsity.
    Table2,
    /// Circulant difference `H` 300×300, `n = 300`, 5% rank and sparsity.
    Table3,
    /// Circulant difference `H` 99×99, `n = 100`, over a `(ρ_O, ρ_I)` grid.
    RhoSweep,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Fig1, Scenario::Table2, Scenario::Table3, Scenario::RhoSweep];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1 => "fig1",
            Scenario::Table2 => "table2",
            Scenario::Table3 => "table3",
            Scenario::RhoSweep => "rho_sweep",
        }
    }

    pub const RHO_OUTER_GRID: [f64; 9] = [0.01, 0.05, 0.1, 1.0, 5.0, 10.0, 50.0, 100.0, 500.0];
    pub const RHO_INNER_GRID: [f64; 7] = [0.05, 0.1, 1.0, 5.0, 10.0, 50.0, 100.0];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Solver settings of a scenario (for the sweep, at `ρ_O = ρ_I = 1`).
pub fn scenario_config(scenario: Scenario) -> SolverConfig {
    let base = SolverConfig::default();
    match scenario {
        // no tolerance stop: the iteration caps decide
        Scenario::Fig1 => SolverConfig {
            max_outer: 60,
            max_inner: 60,
            tol_outer: 1e-12,
            tol_inner: 1e-12,
            ..base
        },
        Scenario::Table2 | Scenario::Table3 => base,
        Scenario::RhoSweep => SolverConfig {
            max_outer: 100,
            max_inner: 20,
            ..base
        },
    }
}

/// Draws the scenario's problem instance for `seed`.
pub fn scenario_problem(scenario: Scenario, seed: u64) -> Result<Problem> {
    let (l_seed, s_seed, h_seed) = sub_seeds(seed);
    let (n, kind, rank, sparse) = match scenario {
        Scenario::Fig1 => (100, FilterKind::Gaussian { m: 100, p: 100 }, 0.05, 0.10),
        Scenario::Table2 => (300, FilterKind::Gaussian { m: 270, p: 266 }, 0.05, 0.05),
        Scenario::Table3 => (300, FilterKind::CirculantDiff { n: 300 }, 0.05, 0.05),
        Scenario::RhoSweep => (100, FilterKind::CirculantDiff { n: 99 }, 0.05, 0.05),
    };
    let h = gen_filter(&kind, h_seed)?;
    Problem::generate(n, h, rank, &SparseModel::gaussian(sparse), l_seed, s_seed)
}

/// One solver run inside a convergence experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioRun {
    pub algorithm: &'static str,
    pub rho_outer: f64,
    pub rho_inner: f64,
    pub relerr_s: f64,
    pub relerr_l: f64,
    pub iters: usize,
    pub terminated_by: String,
    pub seconds: f64,
    #[serde(skip)]
    pub trace: ConvergenceTrace,
}

impl ScenarioRun {
    pub fn success(&self, threshold: f64) -> bool {
        self.relerr_s < threshold && self.relerr_l < threshold
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub runs: Vec<ScenarioRun>,
}

impl ConvergenceReport {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("algorithm,rho_outer,rho_inner,relerr_s,relerr_l,iters,terminated_by,seconds\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.3}\n",
                r.algorithm,
                r.rho_outer,
                r.rho_inner,
                fmt_full(r.relerr_s),
                fmt_full(r.relerr_l),
                r.iters,
                r.terminated_by,
                r.seconds
            ));
        }
        out
    }

    /// Runs of one algorithm.
    pub fn runs_of<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a ScenarioRun> + 'a {
        self.runs.iter().filter(move |r| r.algorithm == algorithm)
    }
}

fn run_one(problem: &Problem, cfg: &SolverConfig, precondition: bool) -> Result<ScenarioRun> {
    let truth = Some((&problem.l0, &problem.s0));
    let start = Instant::now();
    let result = if precondition {
        pgms(&problem.m0, &problem.h, cfg, truth)?
    } else {
        gms(&problem.m0, &problem.h, cfg, truth)?
    };
    let seconds = start.elapsed().as_secs_f64();
    Ok(ScenarioRun {
        algorithm: if precondition { "pgms" } else { "gms" },
        rho_outer: cfg.rho_outer,
        rho_inner: cfg.rho_inner,
        relerr_s: rel_err(&problem.s0, &result.s_hat)?,
        relerr_l: rel_err(&problem.l0, &result.l_hat)?,
        iters: result.trace.len(),
        terminated_by: result.terminated_by.to_string(),
        seconds,
        trace: result.trace,
    })
}

/// Runs both the plain and the preconditioned solver on the scenario
/// (over the whole `(ρ_O, ρ_I)` grid for the sweep).
pub fn run_convergence_experiment(scenario: Scenario, seed: u64) -> Result<ConvergenceReport> {
    run_convergence_experiment_with(scenario, seed, &scenario_config(scenario))
}

/// As [`run_convergence_experiment`] with explicit solver settings; the sweep
/// overrides only the two step sizes.
pub fn run_convergence_experiment_with(scenario: Scenario, seed: u64, cfg: &SolverConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let problem = scenario_problem(scenario, seed)?;
    let mut runs = Vec::new();
    if scenario == Scenario::RhoSweep {
        for precondition in [false, true] {
            for rho_outer in Scenario::RHO_OUTER_GRID {
                for rho_inner in Scenario::RHO_INNER_GRID {
                    let cfg = SolverConfig {
                        rho_outer,
                        rho_inner,
                        ..cfg.clone()
                    };
                    runs.push(run_one(&problem, &cfg, precondition)?);
                }
            }
        }
    } else {
        runs.push(run_one(&problem, cfg, false)?);
        runs.push(run_one(&problem, cfg, true)?);
    }
    Ok(ConvergenceReport { scenario, seed, runs })
}

/// Cells and trials of a phase diagram on square `size × size` problems.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentGrid {
    pub rank_ratios: Vec<f64>,
    pub sparsity_ratios: Vec<f64>,
    pub trials: usize,
    /// A trial succeeds when both relative errors are below this.
    pub threshold: f64,
    pub base_seed: u64,
    pub size: usize,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            rank_ratios: vec![0.02, 0.1, 0.2, 0.3, 0.5],
            sparsity_ratios: vec![0.02, 0.1, 0.2, 0.3, 0.5],
            trials: 10,
            threshold: 1e-3,
            base_seed: 0,
            size: 100,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        for &r in self.rank_ratios.iter().chain(&self.sparsity_ratios) {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::param(format!("grid ratios must lie in (0, 1), got {r}")));
            }
        }
        if self.rank_ratios.is_empty() || self.sparsity_ratios.is_empty() {
            return Err(Error::param("grid needs at least one rank and one sparsity ratio"));
        }
        if self.trials == 0 || self.size == 0 {
            return Err(Error::param("trials and size must be positive"));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::param("success threshold must be positive"));
        }
        Ok(())
    }
}

/// Settings held fixed across a phase diagram.
pub fn phase_config() -> SolverConfig {
    SolverConfig {
        rho_outer: 0.5,
        rho_inner: 1.0,
        tol_outer: 1e-7,
        tol_inner: 1e-7,
        max_outer: 50,
        max_inner: 50,
        ..SolverConfig::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub rank_idx: usize,
    pub sparsity_idx: usize,
    pub rank_ratio: f64,
    pub sparsity_ratio: f64,
    pub trial: usize,
    pub seed: u64,
    pub relerr_s: f64,
    pub relerr_l: f64,
    pub iters: usize,
    pub success: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseDiagram {
    pub grid: ExperimentGrid,
    pub records: Vec<TrialRecord>,
}

impl PhaseDiagram {
    /// `fractions[i][j]` for rank ratio `i` and sparsity ratio `j`.
    pub fn success_fractions(&self) -> Vec<Vec<f64>> {
        let (nr, ns) = (self.grid.rank_ratios.len(), self.grid.sparsity_ratios.len());
        let mut hits = vec![vec![0usize; ns]; nr];
        let mut total = vec![vec![0usize; ns]; nr];
        for r in &self.records {
            total[r.rank_idx][r.sparsity_idx] += 1;
            hits[r.rank_idx][r.sparsity_idx] += usize::from(r.success);
        }
        hits.iter()
            .zip(&total)
            .map(|(h, t)| h.iter().zip(t).map(|(&a, &b)| if b == 0 { 0.0 } else { a as f64 / b as f64 }).collect())
            .collect()
    }

    /// Success fraction of the cell with the given ratios, if present.
    pub fn fraction_at(&self, rank_ratio: f64, sparsity_ratio: f64) -> Option<f64> {
        let i = self.grid.rank_ratios.iter().position(|&r| r == rank_ratio)?;
        let j = self.grid.sparsity_ratios.iter().position(|&s| s == sparsity_ratio)?;
        Some(self.success_fractions()[i][j])
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::from("rank_ratio,sparsity_ratio,trial,seed,relerr_s,relerr_l,iters,success\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.rank_ratio,
                r.sparsity_ratio,
                r.trial,
                r.seed,
                fmt_full(r.relerr_s),
                fmt_full(r.relerr_l),
                r.iters,
                u8::from(r.success)
            ));
        }
        out
    }

    /// Rows are rank ratios, columns sparsity ratios.
    pub fn fractions_csv(&self) -> String {
        let mut out = String::from("rank_ratio");
        for s in &self.grid.sparsity_ratios {
            out.push_str(&format!(",{s}"));
        }
        out.push('\n');
        for (r, row) in self.grid.rank_ratios.iter().zip(self.success_fractions()) {
            out.push_str(&r.to_string());
            for v in row {
                out.push_str(&format!(",{}", fmt_full(v)));
            }
            out.push('\n');
        }
        out
    }
}

/// Success map of the preconditioned solver over `(rank, sparsity)` cells.
///
/// The filter is drawn once from the base seed and shared by every trial.
/// Square problems are used: `m = n = p = grid.size`.
pub fn run_phase_diagram(
    grid: &ExperimentGrid,
    filter: &FilterKind,
    sparse: SparseValues,
    cfg: &SolverConfig,
) -> Result<PhaseDiagram> {
    grid.validate()?;
    let n = grid.size;
    let kind = match filter {
        FilterKind::Gaussian { .. } => FilterKind::Gaussian { m: n, p: n },
        FilterKind::CirculantDiff { .. } => FilterKind::CirculantDiff { n },
        FilterKind::Identity { .. } => FilterKind::Identity { n },
        FilterKind::PaperBlur { .. } => {
            return Err(Error::param("phase diagrams use square matrix filters"));
        }
    };
    let h = gen_filter(&kind, mix(grid.base_seed ^ 0x5eed))?;
    let mut records = Vec::new();
    for (ri, &rank_ratio) in grid.rank_ratios.iter().enumerate() {
        for (si, &sparsity_ratio) in grid.sparsity_ratios.iter().enumerate() {
            let model = SparseModel {
                values: sparse,
                ratio: sparsity_ratio,
            };
            for trial in 0..grid.trials {
                let seed = trial_seed(grid.base_seed, ri, si, trial);
                let (l_seed, s_seed, _) = sub_seeds(seed);
                let problem = Problem::generate(n, h.clone(), rank_ratio, &model, l_seed, s_seed)?;
                let result = pgms(&problem.m0, &problem.h, cfg, None)?;
                let relerr_s = rel_err(&problem.s0, &result.s_hat)?;
                let relerr_l = rel_err(&problem.l0, &result.l_hat)?;
                records.push(TrialRecord {
                    rank_idx: ri,
                    sparsity_idx: si,
                    rank_ratio,
                    sparsity_ratio,
                    trial,
                    seed,
                    relerr_s,
                    relerr_l,
                    iters: result.trace.len(),
                    success: relerr_s < grid.threshold && relerr_l < grid.threshold,
                });
            }
        }
    }
    Ok(PhaseDiagram {
        grid: grid.clone(),
        records,
    })
}
