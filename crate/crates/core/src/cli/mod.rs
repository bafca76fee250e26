//! Command-line front end. Exit codes: 0 success, 2 usage or config error,
//! 3 data, format or solver error, 4 non-convergence under `--strict`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{self, FilterDescriptor, RunConfig, TensorData};
use crate::lasso::Backend;
use crate::numerics::Tensor3;
use crate::separation::{gms, gts, pgms, pgts, ConvergenceTrace, FilterSpec, SolverConfig, Termination};
use crate::synth::video::{separate_video, video_config};
use crate::synth::{
    gen_filter, gen_low_rank, gen_sparse, phase_config, run_convergence_experiment_with, run_phase_diagram, scenario_config, sparse_count,
    sub_seeds, target_rank, ExperimentGrid, FilterKind, Scenario, SparseModel, SparseValues,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "matsep", version, about = "Separate low-rank and filtered sparse components")]
pub struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    precondition: Option<Switch>,
    /// auto, dense-svd, cholesky, circulant, separable, block or block-circulant.
    #[arg(long, global = true)]
    backend: Option<Backend>,
    /// Exit with code 4 when the outer loop hits its iteration cap.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Separate a matrix or video tensor stored as a tensor file.
    Separate(SeparateArgs),
    /// Write a synthetic problem bundle.
    Synth(SynthArgs),
    /// Success map over rank and sparsity ratios.
    Phase(PhaseArgs),
    /// Plain vs preconditioned convergence on a named scenario.
    Convergence(ConvergenceArgs),
    /// Background removal and deblurring on a directory of PGM frames.
    Video(VideoArgs),
}

#[derive(Debug, Args)]
struct SeparateArgs {
    /// M0 tensor file (order 2 or 3).
    #[arg(long)]
    input: PathBuf,
    /// Dense filter tensor file, or a filter descriptor.
    #[arg(long)]
    filter: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Rows of M0.
    #[arg(long)]
    rows: Option<usize>,
    /// Columns of M0.
    #[arg(long)]
    cols: Option<usize>,
    /// Rows of S0 for Gaussian filters.
    #[arg(long)]
    filter_cols: Option<usize>,
    #[arg(long)]
    rank_ratio: Option<f64>,
    #[arg(long)]
    sparsity_ratio: Option<f64>,
    /// gaussian, uniform or impulsive.
    #[arg(long)]
    sparse_model: Option<SparseValues>,
    /// gaussian, circulant_diff or identity.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// gaussian, circulant_diff or identity.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    sparse_model: Option<SparseValues>,
    /// Side length of the square problems.
    #[arg(long)]
    size: Option<usize>,
    /// Comma-separated rank ratios.
    #[arg(long, value_delimiter = ',')]
    rank_ratios: Option<Vec<f64>>,
    /// Comma-separated sparsity ratios.
    #[arg(long, value_delimiter = ',')]
    sparsity_ratios: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    /// fig1, table2, table3 or rho_sweep.
    scenario: String,
    #[arg(long)]
    out_dir: PathBuf,
    /// Independent draws, seeded `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1)]
    trials: u64,
}

#[derive(Debug, Args)]
struct VideoArgs {
    #[arg(long)]
    frames_dir: PathBuf,
    /// Blur applied before separation: paper_blur or identity.
    #[arg(long, default_value = "paper_blur")]
    blur: String,
    #[arg(long)]
    out_dir: PathBuf,
}

enum Outcome {
    Done,
    NotConverged,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::NotConverged) => {
            eprintln!("error[not_converged]: outer loop reached its iteration cap");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) | Error::UnknownScenario(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let precondition = cli.precondition.unwrap_or(Switch::On) == Switch::On;
    let solver = |base: SolverConfig| -> Result<SolverConfig> {
        let mut cfg = file.solver_config(base)?;
        if let Some(b) = cli.backend {
            cfg.backend = b;
        }
        Ok(cfg)
    };
    match &cli.command {
        Command::Separate(a) => separate(a, &solver(SolverConfig::default())?, precondition, cli.strict),
        Command::Synth(a) => synth(a, &file, seed),
        Command::Phase(a) => phase(a, &file, &solver(phase_config())?, seed),
        Command::Convergence(a) => {
            let scenario: Scenario = a.scenario.parse()?;
            convergence(a, scenario, &solver(scenario_config(scenario))?, seed)
        }
        Command::Video(a) => video(a, &solver(video_config())?, cli.strict),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    io::write_atomic(path, text.as_bytes())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json values serialise");
    write_text(path, &(text + "\n"))
}

fn load_filter(path: &Path) -> Result<FilterSpec> {
    let is_tensor = fs::read(path)
        .map(|b| b.starts_with(b"GMS1"))
        .map_err(|e| Error::io(path, e))?;
    if is_tensor {
        Ok(FilterSpec::Dense(io::read_matrix(path)?))
    } else {
        FilterDescriptor::load(path)
    }
}

fn outcome(t: Termination, strict: bool) -> Outcome {
    if strict && t == Termination::MaxIters {
        Outcome::NotConverged
    } else {
        Outcome::Done
    }
}

fn trace_summary(trace: &ConvergenceTrace, t: Termination) -> serde_json::Value {
    let last = trace.last();
    json!({
        "iterations": trace.len(),
        "terminated_by": t.to_string(),
        "final_change_ratio": last.map(|r| r.change_ratio),
        "final_residual": last.map(|r| r.residual),
    })
}

fn separate(a: &SeparateArgs, cfg: &SolverConfig, precondition: bool, strict: bool) -> Result<Outcome> {
    let input = io::read_tensor(&a.input)?;
    let h = load_filter(&a.filter)?;
    create_dir(&a.out_dir)?;
    let algorithm = match (&input, precondition) {
        (TensorData::Matrix(_), true) => "pgms",
        (TensorData::Matrix(_), false) => "gms",
        (TensorData::Tensor(_), true) => "pgts",
        (TensorData::Tensor(_), false) => "gts",
    };
    let (s_hat, l_hat, trace, term) = match &input {
        TensorData::Matrix(m0) => {
            let r = if precondition { pgms(m0, &h, cfg, None)? } else { gms(m0, &h, cfg, None)? };
            (TensorData::Matrix(r.s_hat), TensorData::Matrix(r.l_hat), r.trace, r.terminated_by)
        }
        TensorData::Tensor(m0) => {
            let r = if precondition { pgts(m0, &h, cfg, None)? } else { gts(m0, &h, cfg, None)? };
            (TensorData::Tensor(r.s_hat), TensorData::Tensor(r.l_hat), r.trace, r.terminated_by)
        }
    };
    io::write_tensor(&a.out_dir.join("S_hat.gms"), &s_hat)?;
    io::write_tensor(&a.out_dir.join("L_hat.gms"), &l_hat)?;
    write_text(&a.out_dir.join("trace.csv"), &trace.to_csv())?;
    let mut summary = trace_summary(&trace, term);
    summary["algorithm"] = json!(algorithm);
    write_json(&a.out_dir.join("summary.json"), &summary)?;
    println!("{algorithm}: {} iterations, stopped on {term}", trace.len());
    Ok(outcome(term, strict))
}

fn filter_kind(name: &str, m: usize, p: usize) -> Result<FilterKind> {
    match name {
        "gaussian" => Ok(FilterKind::Gaussian { m, p }),
        "circulant_diff" => Ok(FilterKind::CirculantDiff { n: m }),
        "identity" => Ok(FilterKind::Identity { n: m }),
        other => Err(Error::Config(format!("unknown matrix filter `{other}`"))),
    }
}

fn synth(a: &SynthArgs, file: &RunConfig, seed: u64) -> Result<Outcome> {
    let m = a.rows.or(file.rows).unwrap_or(100);
    let n = a.cols.or(file.cols).unwrap_or(100);
    let filter = a.filter.clone().or_else(|| file.filter.clone()).unwrap_or_else(|| "gaussian".into());
    let p = if filter == "gaussian" { a.filter_cols.or(file.filter_cols).unwrap_or(m) } else { m };
    let rank_ratio = a.rank_ratio.or(file.rank_ratio).unwrap_or(0.05);
    let model = SparseModel {
        values: a.sparse_model.or(file.sparse_model).unwrap_or(SparseValues::Gaussian),
        ratio: a.sparsity_ratio.or(file.sparsity_ratio).unwrap_or(0.05),
    };
    let (l_seed, s_seed, h_seed) = sub_seeds(seed);
    let h = gen_filter(&filter_kind(&filter, m, p)?, h_seed)?;
    let l0 = gen_low_rank(m, n, rank_ratio, l_seed)?;
    let s0 = gen_sparse(p, n, &model, s_seed, &l0)?;
    let m0 = l0.add(&h.apply(&s0)?);

    create_dir(&a.out_dir)?;
    io::write_matrix(&a.out_dir.join("L0.gms"), &l0)?;
    io::write_matrix(&a.out_dir.join("S0.gms"), &s0)?;
    io::write_matrix(&a.out_dir.join("M0.gms"), &m0)?;
    let desc = match &h {
        FilterSpec::Dense(d) => {
            io::write_matrix(&a.out_dir.join("H.gms"), d)?;
            FilterDescriptor {
                kind: "dense".into(),
                path: Some("H.gms".into()),
                n: None,
                m: None,
                p: None,
                m1: None,
                m2: None,
                seed: None,
            }
        }
        _ => FilterDescriptor {
            kind: filter.clone(),
            path: None,
            n: Some(m),
            m: None,
            p: None,
            m1: None,
            m2: None,
            seed: None,
        },
    };
    write_text(&a.out_dir.join("filter.conf"), &desc.to_text())?;
    let (rank, rank_clamped) = target_rank(m, n, rank_ratio)?;
    let (expected_nnz, nnz_clamped) = sparse_count(p, n, model.ratio);
    let nnz = s0.data().iter().filter(|v| **v != 0.0).count();
    debug_assert_eq!(nnz, expected_nnz);
    write_json(
        &a.out_dir.join("manifest.json"),
        &json!({
            "seed": seed,
            "rows": m,
            "cols": n,
            "sparse_rows": p,
            "filter": filter,
            "rank_ratio": rank_ratio,
            "rank": rank,
            "rank_clamped": rank_clamped,
            "sparse_model": model.values,
            "sparsity_ratio": model.ratio,
            "nonzeros": nnz,
            "nonzeros_clamped": nnz_clamped,
        }),
    )?;
    println!("wrote {m}x{n} problem (rank {rank}, {nnz} nonzeros) to {}", a.out_dir.display());
    Ok(Outcome::Done)
}

fn phase(a: &PhaseArgs, file: &RunConfig, cfg: &SolverConfig, seed: u64) -> Result<Outcome> {
    let defaults = ExperimentGrid::default();
    let grid = ExperimentGrid {
        rank_ratios: a.rank_ratios.clone().or_else(|| file.rank_ratios.clone()).unwrap_or(defaults.rank_ratios),
        sparsity_ratios: a
            .sparsity_ratios
            .clone()
            .or_else(|| file.sparsity_ratios.clone())
            .unwrap_or(defaults.sparsity_ratios),
        trials: a.trials.or(file.trials).unwrap_or(defaults.trials),
        threshold: a.threshold.or(file.threshold).unwrap_or(defaults.threshold),
        base_seed: seed,
        size: a.size.or(file.size).unwrap_or(defaults.size),
    };
    grid.validate().map_err(|e| Error::Config(e.to_string()))?;
    let filter = a.filter.clone().or_else(|| file.filter.clone()).unwrap_or_else(|| "gaussian".into());
    let kind = filter_kind(&filter, grid.size, grid.size)?;
    let values = a.sparse_model.or(file.sparse_model).unwrap_or(SparseValues::Gaussian);
    let diagram = run_phase_diagram(&grid, &kind, values, cfg)?;
    create_dir(&a.out_dir)?;
    write_text(&a.out_dir.join("trials.csv"), &diagram.trials_csv())?;
    write_text(&a.out_dir.join("success.csv"), &diagram.fractions_csv())?;
    write_json(
        &a.out_dir.join("summary.json"),
        &json!({
            "grid": grid,
            "filter": filter,
            "sparse_model": values,
            "success_fractions": diagram.success_fractions(),
        }),
    )?;
    println!("{} trials written to {}", diagram.records.len(), a.out_dir.display());
    Ok(Outcome::Done)
}

fn convergence(a: &ConvergenceArgs, scenario: Scenario, cfg: &SolverConfig, seed: u64) -> Result<Outcome> {
    if a.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    create_dir(&a.out_dir)?;
    let mut summary = String::new();
    let mut reports = Vec::new();
    for t in 0..a.trials {
        let report = run_convergence_experiment_with(scenario, seed.wrapping_add(t), cfg)?;
        for (i, line) in report.summary_csv().lines().enumerate() {
            if i == 0 {
                if t == 0 {
                    summary.push_str(&format!("seed,{line}\n"));
                }
            } else {
                summary.push_str(&format!("{},{line}\n", report.seed));
            }
        }
        if scenario != Scenario::RhoSweep {
            for run in &report.runs {
                let name = format!("trace_{}_{}.csv", run.algorithm, report.seed);
                write_text(&a.out_dir.join(name), &run.trace.to_csv())?;
            }
        }
        for run in &report.runs {
            if scenario != Scenario::RhoSweep {
                println!(
                    "seed {} {}: RelErr(S) {:.3e}, RelErr(L) {:.3e}, {} iterations",
                    report.seed, run.algorithm, run.relerr_s, run.relerr_l, run.iters
                );
            }
        }
        reports.push(report);
    }
    write_text(&a.out_dir.join("summary.csv"), &summary)?;
    write_json(&a.out_dir.join("summary.json"), &json!({ "reports": reports }))?;
    Ok(Outcome::Done)
}

fn video(a: &VideoArgs, cfg: &SolverConfig, strict: bool) -> Result<Outcome> {
    let frames = io::read_frames_dir(&a.frames_dir)?;
    let (d1, d2, k) = frames.dims();
    let blur = match a.blur.as_str() {
        "paper_blur" => Some(gen_filter(&FilterKind::PaperBlur { m1: d1, m2: d2 }, 0)?),
        "identity" => None,
        other => return Err(Error::Config(format!("unknown blur `{other}`"))),
    };
    let out = separate_video(&frames, blur.as_ref(), cfg)?;
    create_dir(&a.out_dir)?;
    write_frames(&a.out_dir, "foreground", &out.foreground)?;
    write_frames(&a.out_dir, "background", &out.background)?;
    write_text(&a.out_dir.join("trace.csv"), &out.result.trace.to_csv())?;
    println!(
        "separated {k} frames of {d1}x{d2} in {} iterations",
        out.result.trace.len()
    );
    Ok(outcome(out.result.terminated_by, strict))
}

fn write_frames(dir: &Path, prefix: &str, t: &Tensor3) -> Result<()> {
    let (_, _, k) = t.dims();
    for i in 0..k {
        io::write_pgm(&dir.join(format!("{prefix}_{i:04}.pgm")), &t.slice(i))?;
    }
    Ok(())
}
