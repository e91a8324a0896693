//! Splitting-and-merge identification of a potential that switches between
//! two repulsive-attractive shapes. Noise-free data.
//!
//! ```text
//! cargo run --release -p aggid --example time_varying
//! ```

use aggid::bregman::{RegularizerSpec, SolverConfig};
use aggid::config::ExperimentConfig;
use aggid::experiment::{identify_time_varying, simulate};
use aggid::PotentialSpec;

fn main() -> aggid::Result<()> {
    let spec = PotentialSpec::TimeVaryingBlend {
        kappa: 8.0,
        t_b: 1.5,
        inner1: Box::new(PotentialSpec::repulsive_attractive(5.0, 2.0, 15.0)),
        inner2: Box::new(PotentialSpec::repulsive_attractive(8.0, 3.0, 20.0)),
    };
    let config = ExperimentConfig::with_potential(spec.clone());
    let clean = simulate(&config)?.field;
    let reg = RegularizerSpec::tv_and_smooth(1e-4, 1e-7);
    let solver = SolverConfig { gamma: 10.0, ..SolverConfig::default() };
    for q in [1, 3, 6] {
        let run = identify_time_varying(&clean, &reg, &solver, q, 0.5, 0.19, Some(&clean), Some(&spec))?;
        let e = run.evaluation.report.e_tilde.as_ref();
        println!(
            "Q = {q}: mean e~ {:6.2}%  peak at t = {:.2}  mean e_phi {:6.2}%",
            e.map_or(f64::NAN, |s| s.time_average()),
            e.map_or(f64::NAN, |s| s.argmax()),
            run.e_phi_average.unwrap_or(f64::NAN),
        );
        if let Some(w) = &run.evaluation.forward_warning {
            println!("        {w}");
        }
    }
    Ok(())
}
