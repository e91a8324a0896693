//! Identify the repulsive-attractive potential from 1% noisy data with and
//! without the adaptive support penalty.
//!
//! ```text
//! cargo run --release -p aggid --example identify
//! ```

use aggid::bregman::{RegularizerSpec, SolverConfig};
use aggid::config::ExperimentConfig;
use aggid::experiment::{corrupt, identify_and_evaluate, simulate, true_potential};
use aggid::PotentialSpec;

fn main() -> aggid::Result<()> {
    let config = ExperimentConfig::with_potential(PotentialSpec::repulsive_attractive(5.0, 2.0, 15.0));
    let clean = simulate(&config)?.field;
    let noisy = corrupt(&config, &clean)?;
    let truth = true_potential(&config)?.expect("static potential");
    let reg = RegularizerSpec::tv_and_smooth(1e-5, 1e-7);
    for gamma in [0.0, 10.0] {
        let solver = SolverConfig { gamma, ..SolverConfig::default() };
        let run = identify_and_evaluate(&noisy, &reg, &solver, Some(&clean), Some(&truth))?;
        let d = &run.identification.diagnostics;
        println!(
            "gamma {gamma:>4}: e_phi {:6.2}%  mean e* {:5.2}%  iterations {}  radius {:.2}",
            run.evaluation.report.e_phi.unwrap_or(f64::NAN),
            run.evaluation.e_star_average().unwrap_or(f64::NAN),
            d.iterations,
            d.final_radius,
        );
    }
    Ok(())
}
