//! Agents sampled from a simulated density, blurred by position noise,
//! turned back into a density by kernel estimation, then identified.
//!
//! ```text
//! cargo run --release -p aggid --example agents_kde
//! ```

use aggid::bregman::{RegularizerSpec, SolverConfig};
use aggid::config::ExperimentConfig;
use aggid::experiment::{agent_density, identify_and_evaluate, make_agents, simulate, true_potential};
use aggid::metrics::e_phi;
use aggid::PotentialSpec;

fn main() -> aggid::Result<()> {
    let mut config = ExperimentConfig::with_potential(PotentialSpec::repulsive_attractive(5.0, 2.0, 12.0));
    let clean = simulate(&config)?.field;
    let truth = true_potential(&config)?.expect("static potential");
    let reg = RegularizerSpec::tv_and_smooth(1e-3, 1e-7);
    let solver = SolverConfig { gamma: 10.0, ..SolverConfig::default() };
    for count in [1_000, 10_000, 100_000] {
        config.agents.count = count;
        let agents = make_agents(&config, Some(&clean))?;
        let density = agent_density(&config, &agents)?;
        let run = identify_and_evaluate(&density, &reg, &solver, None, None)?;
        println!(
            "V = {count:>6}: mean e~ {:6.2}%  e_phi {:6.2}%",
            run.evaluation.e_tilde_average().unwrap_or(f64::NAN),
            e_phi(&run.identification.potential, &truth)?,
        );
    }
    Ok(())
}
