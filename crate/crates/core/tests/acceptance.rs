//! One test per acceptance criterion. Each prints a `criterion N: PASS|FAIL`
//! line on stderr (outside the test harness capture) before asserting.

mod common;

use std::io::Write;
use std::ops::RangeInclusive;
use std::time::Instant;

use common::{
    conjugate_by_dft, gaussian, gaussian_tensor, gaussian_vec, naive_matmul, naive_transpose, rel_diff, rng,
};
use matsep::lasso::Backend;
use matsep::numerics::{
    circulant_dense, circulant_spectrum, columnwise_reshape, kron, kron_diag_image, mat3, singular_value_threshold,
    soft_threshold, vectorize,
};
use matsep::synth::video::{separate_video, synthetic_video, video_config};
use matsep::synth::{
    gen_filter, phase_config, rel_err, rel_err_tensor, run_convergence_experiment, run_phase_diagram,
    scenario_config, scenario_problem, ExperimentGrid, FilterKind, Scenario, SparseValues,
};
use matsep::{
    gms, gts, pgms, precondition_filter, DenseMatrix, FilterSpec, LassoConfig, PrefactoredOperator, SolverConfig,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn report(criterion: u32, pass: bool, started: Instant, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let secs = started.elapsed().as_secs_f64();
    let mut err = std::io::stderr().lock();
    writeln!(err, "criterion {criterion}: {verdict} ({secs:.1} s) {detail}").unwrap();
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_gaussian_filter_table() {
    let t = Instant::now();
    let cfg = scenario_config(Scenario::Table2);
    let mut pgms_ok = 0;
    let mut gms_ok = 0;
    let mut rows = Vec::new();
    for seed in SEEDS {
        let p = scenario_problem(Scenario::Table2, seed).unwrap();
        let truth = Some((&p.l0, &p.s0));
        let pre = pgms(&p.m0, &p.h, &cfg, truth).unwrap();
        let (es, el, it) = (rel_err(&p.s0, &pre.s_hat).unwrap(), rel_err(&p.l0, &pre.l_hat).unwrap(), pre.trace.len());
        if es <= 1e-5 && el <= 1e-3 && it <= 150 {
            pgms_ok += 1;
        }
        let plain = gms(&p.m0, &p.h, &cfg, truth).unwrap();
        let gl = rel_err(&p.l0, &plain.l_hat).unwrap();
        if gl >= 1e-1 {
            gms_ok += 1;
        }
        rows.push(format!("seed {seed}: pgms S {es:.2e} L {el:.2e} in {it}; gms L {gl:.2e} in {}", plain.trace.len()));
    }
    let pass = pgms_ok >= 4 && gms_ok >= 4;
    report(1, pass, t, &format!("pgms {pgms_ok}/5, gms stalled {gms_ok}/5 [{}]", rows.join("; ")));
}

#[test]
fn criterion_2_circulant_filter_table() {
    let t = Instant::now();
    let cfg = scenario_config(Scenario::Table3);
    let mut ok = 0;
    let mut rows = Vec::new();
    for seed in SEEDS {
        let p = scenario_problem(Scenario::Table3, seed).unwrap();
        let out = pgms(&p.m0, &p.h, &cfg, None).unwrap();
        let es = rel_err(&p.s0, &out.s_hat).unwrap();
        if es <= 1e-5 && out.trace.len() <= 60 {
            ok += 1;
        }
        rows.push(format!("seed {seed}: S {es:.2e} in {}", out.trace.len()));
    }
    report(2, ok >= 4, t, &format!("pgms {ok}/5 [{}]", rows.join("; ")));
}

#[test]
fn criterion_3_fixed_budget_traces() {
    let t = Instant::now();
    let cfg = scenario_config(Scenario::Fig1);
    let p = scenario_problem(Scenario::Fig1, 1).unwrap();
    let truth = Some((&p.l0, &p.s0));
    let pre = pgms(&p.m0, &p.h, &cfg, truth).unwrap();
    let plain = gms(&p.m0, &p.h, &cfg, truth).unwrap();
    let best_pre = pre.trace.best_relerr_s().unwrap();
    let best_plain = plain.trace.best_relerr_s().unwrap();
    let pass = best_pre <= 1e-8 && best_plain >= 1e-3;
    report(3, pass, t, &format!("pgms best S {best_pre:.2e}, gms best S {best_plain:.2e}"));
}

#[test]
fn criterion_4_step_size_sweep() {
    let t = Instant::now();
    let report_ = run_convergence_experiment(Scenario::RhoSweep, 1).unwrap();
    let fraction = |alg: &str| {
        let runs: Vec<_> = report_.runs_of(alg).collect();
        runs.iter().filter(|r| r.success(1e-3)).count() as f64 / runs.len() as f64
    };
    let (p, g) = (fraction("pgms"), fraction("gms"));
    let cells = report_.runs_of("pgms").count();
    report(4, p >= 0.8 && g < 0.5, t, &format!("{cells} cells: pgms {:.1}%, gms {:.1}%", 100.0 * p, 100.0 * g));
}

fn lasso_path(op: &PrefactoredOperator, b: &DenseMatrix, cfg: &LassoConfig) -> Vec<DenseMatrix> {
    let mut xs = Vec::new();
    op.lasso_observed(b, cfg, None, |_, x| xs.push(x.clone())).unwrap();
    xs
}

fn path_gap(a: &[DenseMatrix], b: &[DenseMatrix]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| rel_diff(x, y)).fold(0.0, f64::max)
}

/// Gaussian matrix with dimensions drawn from the given ranges.
fn sized(r: &mut ChaCha8Rng, rows: RangeInclusive<usize>, cols: RangeInclusive<usize>) -> DenseMatrix {
    let (m, n) = (r.random_range(rows), r.random_range(cols));
    gaussian(r, m, n)
}

fn random_cfg(r: &mut ChaCha8Rng) -> LassoConfig {
    LassoConfig::new(r.random_range(0.05..1.0), r.random_range(0.3..3.0), 25, 1e-300).unwrap()
}

/// Structured operators next to their dense matrices, all at most 64 wide.
fn random_backends(r: &mut ChaCha8Rng, rho: f64) -> Vec<(&'static str, PrefactoredOperator, DenseMatrix)> {
    let (m, n) = (r.random_range(4..=64), r.random_range(2..=40));
    let a = gaussian(r, m.max(n), n);
    let len = r.random_range(3..=64);
    let col = gaussian_vec(r, len);
    let (g1, g2) = (sized(r, 1..=8, 1..=8), sized(r, 1..=8, 1..=8));
    let (s1, s2, k1, k2) = (r.random_range(1..=4), r.random_range(1..=4), r.random_range(1..=4), r.random_range(1..=4));
    let (e1, e2) = (gaussian(r, s1, s1), gaussian(r, s2, s2));
    let (c1, c2) = (gaussian_vec(r, s1), gaussian_vec(r, s2));
    let tile = |e: &DenseMatrix, k| kron(&DenseMatrix::identity(k), e);
    let block_dense = kron(&tile(&e2, k2), &tile(&e1, k1));
    let bc_dense = kron(&tile(&circulant_dense(&c2), k2), &tile(&circulant_dense(&c1), k1));
    vec![
        ("cholesky", PrefactoredOperator::cholesky(&a, rho).unwrap(), a),
        ("circulant", PrefactoredOperator::circulant(&col, rho).unwrap(), circulant_dense(&col)),
        ("separable", PrefactoredOperator::separable(&g1, &g2, rho).unwrap(), kron(&g2, &g1)),
        ("block", PrefactoredOperator::block(&e1, &e2, k1, k2, rho).unwrap(), block_dense),
        ("block-circulant", PrefactoredOperator::block_circulant(&c1, &c2, k1, k2, rho).unwrap(), bc_dense),
    ]
}

#[test]
fn criterion_5_backend_equivalence() {
    let t = Instant::now();
    let mut worst_lasso: f64 = 0.0;
    let mut worst_tensor: f64 = 0.0;
    for problem in 0..10 {
        let mut r = rng(500 + problem);
        let cfg = random_cfg(&mut r);
        for (_, op, dense) in random_backends(&mut r, cfg.rho) {
            let b = sized(&mut r, dense.rows()..=dense.rows(), 1..=5);
            let reference = PrefactoredOperator::dense_svd(&dense, cfg.rho).unwrap();
            worst_lasso = worst_lasso.max(path_gap(&lasso_path(&op, &b, &cfg), &lasso_path(&reference, &b, &cfg)));
        }

        let (s1, s2) = (r.random_range(1..=3), r.random_range(1..=3));
        let h = if problem % 2 == 0 {
            FilterSpec::Separable {
                g1: sized(&mut r, 2..=5, 2..=5),
                g2: sized(&mut r, 2..=5, 2..=5),
            }
        } else {
            FilterSpec::Block {
                e1: gaussian(&mut r, s1, s1),
                e2: gaussian(&mut r, s2, s2),
                k1: r.random_range(1..=3),
                k2: r.random_range(1..=3),
            }
        };
        let ((_, _), (m1, m2)) = h.frames().unwrap();
        let frames = r.random_range(2..=6);
        let m0 = gaussian_tensor(&mut r, m1, m2, frames);
        let dense = FilterSpec::Dense(h.densify());
        for outer in 1..=6 {
            let solver = SolverConfig {
                max_outer: outer,
                max_inner: 10,
                tol_outer: 1e-300,
                tol_inner: 1e-300,
                ..SolverConfig::default()
            };
            let ten = gts(&m0, &h, &solver, None).unwrap();
            let mat = gms(&mat3(&m0), &dense, &SolverConfig { backend: Backend::DenseSvd, ..solver }, None).unwrap();
            worst_tensor = worst_tensor.max(rel_diff(&mat3(&ten.s_hat), &mat.s_hat)).max(rel_diff(&mat3(&ten.l_hat), &mat.l_hat));
        }
    }
    let pass = worst_lasso <= 1e-8 && worst_tensor <= 1e-8;
    report(5, pass, t, &format!("worst LASSO iterate gap {worst_lasso:.2e}, worst tensor iterate gap {worst_tensor:.2e}"));
}

fn svt_objective(x: &DenseMatrix, y: &DenseMatrix, rho: f64) -> f64 {
    rho * x.svd().unwrap().singular_values.iter().sum::<f64>() + 0.5 * x.sub(y).frobenius_norm().powi(2)
}

#[test]
fn criterion_6_proximal_and_algebra_suite() {
    let t = Instant::now();
    let mut r = rng(600);
    let mut failures = Vec::new();

    let grid: Vec<f64> = (0..=200_000).map(|i| -10.0 + i as f64 * 1e-4).collect();
    let f = |a: f64, l: f64, b: f64| l * b.abs() + 0.5 * (b - a).powi(2);
    for _ in 0..100 {
        let (a, l) = (r.random_range(-8.0..8.0), r.random_range(0.0..3.0));
        let best = grid.iter().map(|&b| f(a, l, b)).fold(f64::INFINITY, f64::min);
        if f(a, l, soft_threshold(&[a], l).unwrap()[0]) > best + 1e-6 {
            failures.push("soft threshold grid search");
        }
    }

    let y = gaussian(&mut r, 8, 6);
    let rho = 1.1;
    let d = singular_value_threshold(&y, rho).unwrap();
    let best = svt_objective(&d, &y, rho);
    for _ in 0..100_000 {
        let delta = gaussian(&mut r, 8, 6);
        let x = d.add(&delta.scale(r.random_range(0.0..1.0) / delta.frobenius_norm()));
        if svt_objective(&x, &y, rho) < best - 1e-12 {
            failures.push("svt perturbation");
            break;
        }
    }

    for _ in 0..20 {
        let y = gaussian(&mut r, 9, 7);
        let rho = r.random_range(0.2..3.0);
        let sy = y.svd().unwrap().singular_values;
        let sd = singular_value_threshold(&y, rho).unwrap().svd().unwrap().singular_values;
        let shrunk_ok = sy.iter().zip(&sd).all(|(a, b)| (b - (a - rho).max(0.0)).abs() <= 1e-10 * (1.0 + a));
        let rank_ok = sd.iter().filter(|&&v| v > 1e-10).count() == sy.iter().filter(|&&v| v > rho).count();
        if !(shrunk_ok && rank_ok) {
            failures.push("svt rank and threshold");
        }
    }

    for _ in 0..10 {
        let (a, b, x) = (gaussian(&mut r, 3, 2), gaussian(&mut r, 4, 3), gaussian(&mut r, 3, 2));
        let lhs = naive_matmul(&kron(&a, &b), &DenseMatrix::from_col_major(6, 1, vectorize(&x)).unwrap());
        let rhs = DenseMatrix::from_col_major(12, 1, vectorize(&naive_matmul(&naive_matmul(&b, &x), &naive_transpose(&a)))).unwrap();
        let [p, q, u, v] = [(); 4].map(|_| gaussian(&mut r, 3, 3));
        let mixed = rel_diff(&naive_matmul(&kron(&p, &q), &kron(&u, &v)), &kron(&naive_matmul(&p, &u), &naive_matmul(&q, &v)));
        if rel_diff(&lhs, &rhs) > 1e-12 || mixed > 1e-12 {
            failures.push("kronecker laws");
        }
    }

    for n in [1, 2, 3, 4, 7, 16, 33, 64] {
        let c = gaussian_vec(&mut r, n);
        let eig = circulant_spectrum(&c).unwrap().eigenvalues;
        let fcf = conjugate_by_dft(&circulant_dense(&c));
        let (mut num, mut den) = (0.0, 0.0);
        for (j, row) in fcf.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let want = if j == k { eig[j] * n as f64 } else { 0.0.into() };
                num += (v - want).norm_sqr();
                den += want.norm_sqr();
            }
        }
        if (num / den).sqrt() > 1e-12 {
            failures.push("circulant diagonalization");
        }
    }

    let (da, db) = (gaussian_vec(&mut r, 3), gaussian_vec(&mut r, 4));
    let dense = kron(&DenseMatrix::from_diag(&da), &DenseMatrix::from_diag(&db));
    if kron_diag_image(&da, &db) != columnwise_reshape(&dense.diagonal(), 4, 3).unwrap() {
        failures.push("diagonal kronecker image");
    }

    failures.dedup();
    report(6, failures.is_empty(), t, &format!("failed checks: {failures:?}"));
}

#[test]
fn criterion_7_preconditioner_invariants() {
    let t = Instant::now();
    let mut r = rng(700);
    let mut worst_sv: f64 = 0.0;
    let mut worst_pinv: f64 = 0.0;
    let mut probes_ok = true;
    for i in 0..20 {
        let h = match i % 4 {
            0 => gaussian(&mut r, 16, 16),
            1 => gaussian(&mut r, 24, 10),
            2 => gaussian(&mut r, 9, 21),
            _ => naive_matmul(&gaussian(&mut r, 15, 4), &gaussian(&mut r, 4, 13)),
        };
        let pre = precondition_filter(&FilterSpec::Dense(h.clone()), 1e-10).unwrap();
        let ht = pre.h_tilde.densify();
        let rank = pre.retained_rank;
        let sv = ht.svd().unwrap().singular_values;
        worst_sv = worst_sv.max(sv[..rank].iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max));
        worst_sv = worst_sv.max(sv[rank..].iter().copied().fold(0.0, f64::max));

        // Penrose conditions with X = H̃ᵀ
        let x = naive_transpose(&ht);
        let hx = naive_matmul(&ht, &x);
        let xh = naive_matmul(&x, &ht);
        for (got, want) in [
            (naive_matmul(&hx, &ht), ht.clone()),
            (naive_matmul(&xh, &x), x.clone()),
            (naive_transpose(&hx), hx.clone()),
            (naive_transpose(&xh), xh.clone()),
        ] {
            worst_pinv = worst_pinv.max(rel_diff(&got, &want));
        }

        let svd = h.svd().unwrap();
        let hn = svd.singular_values[0];
        let vr = DenseMatrix::from_fn(h.cols(), rank, |a, b| svd.vt.get(b, a));
        let proj = naive_matmul(&vr, &naive_transpose(&vr));
        for _ in 0..5 {
            let g = gaussian(&mut r, h.cols(), 1);
            let row = naive_matmul(&proj, &g);
            let ker = g.sub(&row);
            for (probe, kernel) in [(row, false), (ker, true)] {
                let norm = probe.frobenius_norm();
                if norm < 1e-6 {
                    continue;
                }
                let u = probe.scale(1.0 / norm);
                let in_h = naive_matmul(&h, &u).frobenius_norm() <= 1e-8 * hn;
                let in_ht = naive_matmul(&ht, &u).frobenius_norm() <= 1e-8;
                probes_ok &= in_h == kernel && in_ht == kernel;
            }
        }
    }
    let pass = worst_sv <= 1e-10 && worst_pinv <= 1e-10 && probes_ok;
    report(7, pass, t, &format!("singular value gap {worst_sv:.2e}, pseudoinverse gap {worst_pinv:.2e}, kernel probes ok: {probes_ok}"));
}

#[test]
fn criterion_8_phase_diagram_smoke() {
    let t = Instant::now();
    let grid = ExperimentGrid {
        rank_ratios: vec![0.02, 0.1, 0.5],
        sparsity_ratios: vec![0.02, 0.1, 0.5],
        trials: 3,
        threshold: 1e-3,
        base_seed: 1,
        size: 50,
    };
    let kind = FilterKind::Gaussian { m: 50, p: 50 };
    let a = run_phase_diagram(&grid, &kind, SparseValues::Gaussian, &phase_config()).unwrap();
    let b = run_phase_diagram(&grid, &kind, SparseValues::Gaussian, &phase_config()).unwrap();
    let deterministic = a.trials_csv() == b.trials_csv();
    let easy = a.fraction_at(0.02, 0.02).unwrap();
    let hard = a.fraction_at(0.5, 0.5).unwrap();
    let pass = deterministic && easy == 1.0 && hard == 0.0;
    report(8, pass, t, &format!("deterministic {deterministic}, (2%,2%) {easy}, (50%,50%) {hard}"));
}

#[test]
fn criterion_9_video_pipeline() {
    let t = Instant::now();
    let video = synthetic_video(16, 16, 6, 1).unwrap();
    let blur = gen_filter(&FilterKind::PaperBlur { m1: 16, m2: 16 }, 0).unwrap();
    let cfg = video_config();
    let blurred = separate_video(&video.frames, Some(&blur), &cfg).unwrap();
    let fg_err = rel_err_tensor(&video.sparse, &blurred.result.s_hat).unwrap();

    let plain = separate_video(&video.frames, None, &cfg).unwrap();
    let m = mat3(&video.frames.map(|v| 1.0 - v));
    let rpca = gms(&m, &FilterSpec::Dense(DenseMatrix::identity(256)), &cfg, None).unwrap();
    // the pipeline reports M₀ − Ŝ as its low-rank part; the RPCA iterate is the inner one
    let inner_l = mat3(plain.result.y_diag.as_ref().unwrap());
    let gap = rel_diff(&mat3(&plain.result.s_hat), &rpca.s_hat).max(rel_diff(&inner_l, &rpca.l_hat));

    let pass = fg_err <= 1e-2 && gap <= 1e-8;
    report(9, pass, t, &format!("blurred foreground RelErr {fg_err:.2e}, identity path vs RPCA {gap:.2e}"));
}
