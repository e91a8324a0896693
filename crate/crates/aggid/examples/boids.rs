//! A potential for agents that were never governed by an aggregation
//! equation: repulsive boids in the plane.
//!
//! ```text
//! cargo run --release -p aggid --example boids
//! ```

use aggid::agents::{boids_simulate, density_field, BoidsMode, BoidsParams, KdeConfig};
use aggid::assembly::DerivativeMode;
use aggid::bregman::{RegularizerSpec, SolverConfig};
use aggid::experiment::identify_and_evaluate;
use aggid::SpatialGrid;

fn main() -> aggid::Result<()> {
    let agents = boids_simulate(500, 200, 0.01, BoidsMode::Repulsive, &BoidsParams::default(), 0)?;
    let grid = SpatialGrid::new(2, 1.0, 10)?;
    let kde = KdeConfig { bandwidth: [0.15, 0.15], time_bandwidth: None, memory: None };
    let density = density_field(&agents, &grid, &kde)?;
    let reg = RegularizerSpec::tv_and_smooth(1e-7, 1e-9);
    let solver = SolverConfig { derivative_mode: DerivativeMode::Raw, ..SolverConfig::default() };
    let run = identify_and_evaluate(&density, &reg, &solver, None, None)?;
    let phi = run.identification.potential.values();
    println!("cross-section x1 = 0:");
    for j in 10..=20 {
        let [_, y] = grid.point(grid.flat_index([10, j]));
        println!("  x2 = {y:.1}  phi = {:+.4e}", phi[grid.flat_index([10, j])]);
    }
    if let Some(e) = &run.evaluation.report.e_tilde {
        println!("e~: mean {:.2}%, max {:.2}% at t = {:.2}", e.time_average(), e.max(), e.argmax());
    }
    Ok(())
}
