//! Moving least squares on a noisy profile and successively denoised
//! differentiation compared with raw central differences.
//!
//! ```text
//! cargo run --release -p aggid --example denoise
//! ```

use aggid::config::ExperimentConfig;
use aggid::denoise::{mls_smooth_x, sdd_dx};
use aggid::experiment::{corrupt, simulate};
use aggid::grid::dx_central;
use aggid::metrics::relative_l1;
use aggid::PotentialSpec;

fn main() -> aggid::Result<()> {
    let config = ExperimentConfig::with_potential(PotentialSpec::repulsive_attractive(5.0, 2.0, 15.0));
    let clean = simulate(&config)?.field;
    let noisy = corrupt(&config, &clean)?;
    let grid = *clean.grid();
    let n = 150;

    let smoothed = mls_smooth_x(noisy.frame(n), &grid, 0.04)?;
    println!("frame error, noisy    {:6.2}%", relative_l1(noisy.frame(n), clean.frame(n))?);
    println!("frame error, smoothed {:6.2}%", relative_l1(&smoothed, clean.frame(n))?);

    let exact = dx_central(clean.frame(n), &grid, 0)?;
    let raw = dx_central(noisy.frame(n), &grid, 0)?;
    let sdd = sdd_dx(&noisy, 0.04, 0)?;
    println!("derivative error, raw {:6.2}%", relative_l1(&raw, &exact)?);
    println!("derivative error, SDD {:6.2}%", relative_l1(sdd.frame(n), &exact)?);
    Ok(())
}
