mod common;

use common::{gaussian, gaussian_tensor, low_rank, naive_matmul, naive_transpose, rel_diff, rng, spikes};
use matsep::numerics::{kron, mat3, singular_value_threshold, soft_threshold_matrix, ten3};
use matsep::separation::precondition_axes;
use matsep::synth::rel_err;
use matsep::synth::video::{separate_video, synthetic_video, video_config};
use matsep::synth::{gen_filter, FilterKind};
use matsep::{
    gms, gts, pgms, pgts, precondition_filter, recover_low_rank, Backend, DenseMatrix, Error, FilterSpec,
    SolverConfig, Termination,
};
use rand_chacha::ChaCha8Rng;

fn cfg(max_outer: usize) -> SolverConfig {
    SolverConfig {
        max_outer,
        max_inner: 50,
        tol_outer: 1e-10,
        tol_inner: 1e-10,
        ..SolverConfig::default()
    }
}

fn spectrum(a: &DenseMatrix) -> Vec<f64> {
    a.svd().unwrap().singular_values
}

/// Dense filters covering the tall, wide, square and rank-deficient cases.
fn random_filters(r: &mut ChaCha8Rng) -> Vec<DenseMatrix> {
    let mut out = Vec::new();
    for (m, p, rank) in [(12, 12, 12), (20, 9, 9), (7, 15, 7), (14, 14, 5), (18, 11, 3)] {
        out.push(if rank < m.min(p) {
            naive_matmul(&gaussian(r, m, rank), &gaussian(r, rank, p))
        } else {
            gaussian(r, m, p)
        });
    }
    out
}

#[test]
fn preconditioned_filter_is_a_partial_isometry() {
    let mut r = rng(50);
    for h in random_filters(&mut r) {
        let rank = spectrum(&h).iter().filter(|&&s| s > 1e-10 * spectrum(&h)[0]).count();
        let pre = precondition_filter(&FilterSpec::Dense(h.clone()), 1e-10).unwrap();
        assert_eq!(pre.retained_rank, rank);
        let ht = pre.h_tilde.densify();
        let sv = spectrum(&ht);
        for s in &sv[..rank] {
            assert!((s - 1.0).abs() <= 1e-10, "singular value {s}");
        }
        for s in &sv[rank..] {
            assert!(s.abs() <= 1e-10);
        }
        // H̃ H̃ᵀ H̃ = H̃ characterises H̃ᵀ as the pseudoinverse of a partial isometry
        let back = naive_matmul(&naive_matmul(&ht, &naive_transpose(&ht)), &ht);
        assert!(rel_diff(&back, &ht) <= 1e-10);
        // C H = H̃
        assert!(rel_diff(&naive_matmul(&pre.c, &h), &ht) <= 1e-10);
    }
}

#[test]
fn preconditioned_filter_keeps_the_kernel() {
    let mut r = rng(51);
    for h in random_filters(&mut r) {
        let pre = precondition_filter(&FilterSpec::Dense(h.clone()), 1e-10).unwrap();
        let ht = pre.h_tilde.densify();
        let svd = h.svd().unwrap();
        let hn = svd.singular_values[0];
        let rank = pre.retained_rank;
        let vr = DenseMatrix::from_fn(h.cols(), rank, |i, j| svd.vt.get(j, i));
        let row_proj = naive_matmul(&vr, &naive_transpose(&vr));
        for _ in 0..10 {
            let g = gaussian(&mut r, h.cols(), 1);
            let row = naive_matmul(&row_proj, &g);
            let ker = g.sub(&row);
            for (probe, kernel) in [(&row, false), (&ker, true)] {
                if kernel && ker.frobenius_norm() < 1e-6 {
                    continue;
                }
                let unit = probe.scale(1.0 / probe.frobenius_norm());
                assert_eq!(naive_matmul(&h, &unit).frobenius_norm() <= 1e-8 * hn, kernel);
                assert_eq!(naive_matmul(&ht, &unit).frobenius_norm() <= 1e-8, kernel);
            }
        }
        let proj_h = naive_matmul(&naive_transpose(&ht), &ht);
        let row = naive_matmul(&naive_transpose(&h), &gaussian(&mut r, h.rows(), 1));
        assert!(rel_diff(&naive_matmul(&proj_h, &row), &row) <= 1e-10);
    }
}

#[test]
fn rowspace_projector_matches_pseudoinverse_form() {
    let mut r = rng(52);
    let h = gaussian(&mut r, 40, 35);
    let pre = precondition_filter(&FilterSpec::Dense(h.clone()), 1e-12).unwrap();
    let ht = pre.h_tilde.densify();
    let p = naive_matmul(&naive_transpose(&ht), &ht);
    assert!(rel_diff(&p, &DenseMatrix::identity(35)) <= 1e-10);
}

#[test]
fn zero_filter_is_degenerate() {
    let err = precondition_filter(&FilterSpec::Dense(DenseMatrix::zeros(4, 3)), 1e-12).unwrap_err();
    assert!(matches!(err, Error::DegenerateFilter(_)), "{err}");
    let err = pgms(&DenseMatrix::zeros(4, 2), &FilterSpec::Dense(DenseMatrix::zeros(4, 3)), &cfg(5), None).unwrap_err();
    assert!(matches!(err, Error::DegenerateFilter(_)));
}

#[test]
fn zero_data_stays_at_zero() {
    let h = FilterSpec::Dense(gaussian(&mut rng(53), 8, 6));
    for solve in [gms, pgms] {
        let out = solve(&DenseMatrix::zeros(8, 5), &h, &cfg(20), None).unwrap();
        assert_eq!(out.s_hat, DenseMatrix::zeros(6, 5));
        assert_eq!(out.l_hat, DenseMatrix::zeros(8, 5));
        assert_eq!(out.terminated_by, Termination::Tolerance);
        assert_eq!(out.trace.len(), 1);
    }
}

#[test]
fn identity_filter_recovers_rank_one_plus_spikes() {
    let mut r = rng(54);
    let l0 = low_rank(&mut r, 50, 50, 1);
    let s0 = spikes(&mut r, 50, 50, 50);
    let m0 = l0.add(&s0);
    let c = SolverConfig {
        max_outer: 500,
        ..cfg(500)
    };
    let out = gms(&m0, &FilterSpec::Dense(DenseMatrix::identity(50)), &c, Some((&l0, &s0))).unwrap();
    let err = rel_err(&s0, &out.s_hat).unwrap();
    assert!(err <= 1e-4, "RelErr(S) {err:e}");
}

/// Outer ADMM with `H = I`, one inner step and a warm start, written out by hand.
fn rpca_oracle(m0: &DenseMatrix, lambda: f64, rho_o: f64, rho_i: f64, iters: usize) -> (DenseMatrix, DenseMatrix) {
    let (m, n) = m0.shape();
    let mut l = DenseMatrix::zeros(m, n);
    let mut s = DenseMatrix::zeros(m, n);
    let mut u = DenseMatrix::zeros(m, n);
    let mut z = DenseMatrix::zeros(m, n);
    let mut w = DenseMatrix::zeros(m, n);
    for _ in 0..iters {
        l = singular_value_threshold(&m0.sub(&s).sub(&u), 1.0 / rho_o).unwrap();
        let b = m0.sub(&u).sub(&l);
        let x = b.add(&z.sub(&w).scale(rho_i)).scale(1.0 / (1.0 + rho_i));
        let zn = soft_threshold_matrix(&x.add(&w), lambda / rho_o / rho_i).unwrap();
        w = w.add(&x).sub(&zn);
        z = zn;
        s = x;
        u = u.add(&l).add(&s).sub(m0);
    }
    (l, s)
}

#[test]
fn single_inner_step_matches_hand_written_rpca_admm() {
    let mut r = rng(55);
    let m0 = low_rank(&mut r, 20, 20, 2).add(&spikes(&mut r, 20, 20, 12));
    let c = SolverConfig {
        max_outer: 30,
        max_inner: 1,
        tol_outer: 1e-300,
        warm_start_inner: true,
        rho_outer: 1.3,
        rho_inner: 0.8,
        ..SolverConfig::default()
    };
    let out = gms(&m0, &FilterSpec::Dense(DenseMatrix::identity(20)), &c, None).unwrap();
    let (l, s) = rpca_oracle(&m0, c.lambda_for(20, 20), 1.3, 0.8, 30);
    assert!(rel_diff(&out.l_hat, &l) <= 1e-10);
    assert!(rel_diff(&out.s_hat, &s) <= 1e-10);
}

#[test]
fn scaling_the_data_scales_the_solution() {
    let mut r = rng(56);
    let h = gaussian(&mut r, 15, 12);
    let l0 = low_rank(&mut r, 15, 10, 1);
    let s0 = spikes(&mut r, 12, 10, 6);
    let m0 = l0.add(&naive_matmul(&h, &s0));
    let h = FilterSpec::Dense(h);
    let c = SolverConfig {
        max_outer: 40,
        tol_outer: 1e-300,
        ..cfg(40)
    };
    let alpha = 3.0;
    let scaled_cfg = SolverConfig {
        rho_outer: c.rho_outer / alpha,
        ..c.clone()
    };
    // (αL, αS) solves the problem for αM₀ when 1/ρ_O scales with α
    let base = pgms(&m0, &h, &c, None).unwrap();
    let scaled = pgms(&m0.scale(alpha), &h, &scaled_cfg, None).unwrap();
    assert!(rel_diff(&scaled.s_hat, &base.s_hat.scale(alpha)) <= 1e-8);
    assert!(rel_diff(&scaled.l_hat, &base.l_hat.scale(alpha)) <= 1e-8);
}

#[test]
fn runs_are_bit_identical() {
    let mut r = rng(57);
    let h = FilterSpec::Dense(gaussian(&mut r, 14, 10));
    let m0 = gaussian(&mut r, 14, 9);
    let a = pgms(&m0, &h, &cfg(25), None).unwrap();
    let b = pgms(&m0, &h, &cfg(25), None).unwrap();
    assert_eq!(a.s_hat, b.s_hat);
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
}

#[test]
fn orthogonal_filter_needs_no_preconditioning() {
    let mut r = rng(58);
    let q = gaussian(&mut r, 10, 10).svd().unwrap().u;
    let h = FilterSpec::Dense(q);
    let m0 = gaussian(&mut r, 10, 6);
    let a = gms(&m0, &h, &cfg(30), None).unwrap();
    let b = pgms(&m0, &h, &cfg(30), None).unwrap();
    assert!(rel_diff(&b.s_hat, &a.s_hat) <= 1e-8);
    assert!(rel_diff(b.y_diag.as_ref().unwrap(), &a.l_hat) <= 1e-8);
    assert!(rel_diff(&b.l_hat, &recover_low_rank(&m0, &h, &a.s_hat).unwrap()) <= 1e-8);
}

#[test]
fn preconditioned_low_rank_is_the_residual() {
    let mut r = rng(59);
    let h = FilterSpec::Dense(gaussian(&mut r, 12, 9));
    let m0 = gaussian(&mut r, 12, 7);
    let out = pgms(&m0, &h, &cfg(20), None).unwrap();
    assert!(rel_diff(&out.l_hat.add(&h.apply(&out.s_hat).unwrap()), &m0) <= 1e-14);
    assert_eq!(out.l_hat, recover_low_rank(&m0, &h, &out.s_hat).unwrap());
}

#[test]
fn tensor_solver_matches_matrix_solver_on_densified_filter() {
    let mut r = rng(60);
    let g1 = gaussian(&mut r, 3, 3);
    let g2 = gaussian(&mut r, 2, 2);
    let h = FilterSpec::Separable { g1: g1.clone(), g2: g2.clone() };
    let m0 = gaussian_tensor(&mut r, 3, 2, 5);
    let c = SolverConfig {
        tol_outer: 1e-300,
        ..cfg(30)
    };
    let t = gts(&m0, &h, &c, None).unwrap();
    let dense = FilterSpec::Dense(kron(&g2, &g1));
    let d = gms(&mat3(&m0), &dense, &SolverConfig { backend: Backend::DenseSvd, ..c.clone() }, None).unwrap();
    assert!(rel_diff(&mat3(&t.s_hat), &d.s_hat) <= 1e-8);
    assert!(rel_diff(&mat3(&t.l_hat), &d.l_hat) <= 1e-8);

    let t = pgts(&m0, &h, &c, None).unwrap();
    let d = pgms(&mat3(&m0), &dense, &c, None).unwrap();
    assert!(rel_diff(&mat3(&t.s_hat), &d.s_hat) <= 1e-8);
    assert!(rel_diff(&mat3(&t.l_hat), &d.l_hat) <= 1e-8);
}

#[test]
fn axis_preconditioner_matches_dense_one() {
    let mut r = rng(61);
    let h = FilterSpec::Separable {
        g1: gaussian(&mut r, 4, 4),
        g2: gaussian(&mut r, 3, 3),
    };
    let axes = precondition_axes(&h, 1e-12).unwrap();
    let dense = precondition_filter(&FilterSpec::Dense(h.densify()), 1e-12).unwrap();
    assert!(rel_diff(&axes.h_tilde.densify(), &dense.h_tilde.densify()) <= 1e-10);
    let m = gaussian_tensor(&mut r, 4, 3, 2);
    let via_axes = mat3(&axes.apply_c(&m).unwrap());
    assert!(rel_diff(&via_axes, &dense.c.matmul(&mat3(&m))) <= 1e-10);
}

#[test]
fn tensor_identity_filter_recovers_spikes() {
    let mut r = rng(62);
    let l0 = low_rank(&mut r, 64, 40, 1);
    let s0 = spikes(&mut r, 64, 40, 77);
    let m0 = ten3(&l0.add(&s0), 8, 8).unwrap();
    let h = FilterSpec::Block {
        e1: DenseMatrix::identity(1),
        e2: DenseMatrix::identity(1),
        k1: 8,
        k2: 8,
    };
    let out = gts(&m0, &h, &cfg(500), None).unwrap();
    let err = rel_err(&s0, &mat3(&out.s_hat)).unwrap();
    assert!(err <= 1e-4, "RelErr(S) {err:e}");
}

#[test]
fn blurred_video_foreground_is_recovered() {
    let video = synthetic_video(16, 16, 6, 7).unwrap();
    let blur = gen_filter(&FilterKind::PaperBlur { m1: 16, m2: 16 }, 0).unwrap();
    let out = separate_video(&video.frames, Some(&blur), &video_config()).unwrap();
    let err = matsep::synth::rel_err_tensor(&video.sparse, &out.result.s_hat).unwrap();
    assert!(err <= 1e-2, "foreground RelErr {err:e}");
}

#[test]
fn mismatched_shapes_are_rejected() {
    let h = FilterSpec::Dense(DenseMatrix::identity(4));
    assert!(matches!(gms(&DenseMatrix::zeros(5, 2), &h, &cfg(5), None), Err(Error::Shape(_))));
    let l0 = DenseMatrix::zeros(4, 3);
    assert!(matches!(gms(&DenseMatrix::zeros(4, 2), &h, &cfg(5), Some((&l0, &l0))), Err(Error::Shape(_))));
    let mut bad = DenseMatrix::zeros(4, 2);
    bad.set(0, 0, f64::INFINITY);
    assert!(matches!(pgms(&bad, &h, &cfg(5), None), Err(Error::Data(_))));
}
