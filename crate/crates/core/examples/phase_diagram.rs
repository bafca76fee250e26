//! A small recovery phase diagram; the full-size grid is behind `--full`.

use matsep::synth::{phase_config, run_phase_diagram, ExperimentGrid, FilterKind, SparseValues};

fn main() -> matsep::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let grid = if full {
        ExperimentGrid::default()
    } else {
        ExperimentGrid {
            rank_ratios: vec![0.02, 0.1, 0.3],
            sparsity_ratios: vec![0.02, 0.1, 0.3],
            trials: 2,
            size: 40,
            ..ExperimentGrid::default()
        }
    };
    let kind = FilterKind::Gaussian { m: grid.size, p: grid.size };
    let diagram = run_phase_diagram(&grid, &kind, SparseValues::Gaussian, &phase_config())?;

    print!("rank \\ sparsity");
    for s in &grid.sparsity_ratios {
        print!("{s:>8}");
    }
    println!();
    for (r, row) in grid.rank_ratios.iter().zip(diagram.success_fractions()) {
        print!("{r:>15}");
        for f in row {
            print!("{f:>8.2}");
        }
        println!();
    }
    Ok(())
}
