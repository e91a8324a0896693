//! The eight regularizer combinations on a coarse grid, each with its best
//! weights, ranked by time-averaged e*.
//!
//! ```text
//! cargo run --release -p aggid --example regularizer_sweep
//! AGGID_THREADS=4 cargo run --release -p aggid --example regularizer_sweep
//! ```

use aggid::bregman::SolverConfig;
use aggid::config::ExperimentConfig;
use aggid::experiment::{corrupt, simulate};
use aggid::sweep::{alpha_grid, beta_grid, compare_regularizers};
use aggid::PotentialSpec;

fn main() -> aggid::Result<()> {
    let mut config = ExperimentConfig::with_potential(PotentialSpec::repulsive_attractive(5.0, 1.0, 2.5));
    config.grid.half_count = 50;
    config.time.count = 150;
    let clean = simulate(&config)?.field;
    let noisy = corrupt(&config, &clean)?;
    let table = compare_regularizers(&noisy, &clean, &SolverConfig::default(), &alpha_grid(), &beta_grid())?;
    for row in table.grid_rows() {
        println!("{}", row.iter().map(|c| format!("{c:>9}")).collect::<String>());
    }
    println!();
    for cell in table.ranking() {
        let w = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.0e}"));
        println!("{:<18} {:>8.4}  alpha {:>5}  beta {:>5}", cell.label(), cell.value.unwrap_or(f64::NAN), w(cell.alpha), w(cell.beta));
    }
    Ok(())
}
