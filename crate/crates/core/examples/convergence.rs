//! Error traces of both solvers on the 100×100 Gaussian-filter scenario,
//! printed as CSV.

use matsep::synth::{run_convergence_experiment, Scenario};

fn main() -> matsep::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let report = run_convergence_experiment(Scenario::Fig1, seed)?;
    let traces: Vec<_> = report.runs.iter().map(|r| (r.algorithm, &r.trace)).collect();
    println!("iteration,{}", traces.iter().map(|(a, _)| format!("{a}_relerr_s")).collect::<Vec<_>>().join(","));
    let len = traces.iter().map(|(_, t)| t.len()).max().unwrap_or(0);
    for k in 0..len {
        let cells: Vec<String> = traces
            .iter()
            .map(|(_, t)| t.records.get(k).and_then(|r| r.relerr_s).map(|e| format!("{e:e}")).unwrap_or_default())
            .collect();
        println!("{},{}", k + 1, cells.join(","));
    }
    Ok(())
}
