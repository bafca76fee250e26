//! A cyclic difference filter handled through its DFT.

use matsep::lasso::Backend;
use matsep::numerics::circulant_spectrum;
use matsep::synth::{gen_filter, rel_err, FilterKind, Problem, SparseModel};
use matsep::{gms, pgms, FilterSpec, SolverConfig};

fn main() -> matsep::Result<()> {
    let n = 128;
    let h = gen_filter(&FilterKind::CirculantDiff { n }, 0)?;
    if let FilterSpec::Circulant(c) = &h {
        let spec = circulant_spectrum(c)?;
        let smallest = spec.eigenvalues.iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min);
        println!("eigenvalue moduli: min {smallest:.2e} (the constant vector is in the kernel)");
    }
    let p = Problem::generate(n, h, 0.05, &SparseModel::gaussian(0.05), 3, 4)?;
    let truth = Some((&p.l0, &p.s0));

    let fft = SolverConfig {
        backend: Backend::Circulant,
        ..SolverConfig::default()
    };
    let plain = gms(&p.m0, &p.h, &fft, truth)?;
    let pre = pgms(&p.m0, &p.h, &SolverConfig::default(), truth)?;
    println!("gms  (FFT solves): RelErr(S) {:.2e} after {}", rel_err(&p.s0, &plain.s_hat)?, plain.trace.len());
    println!("pgms (dense H~):   RelErr(S) {:.2e} after {}", rel_err(&p.s0, &pre.s_hat)?, pre.trace.len());
    Ok(())
}
