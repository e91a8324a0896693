//! Forward solve with the repulsive-attractive potential and print how the
//! density evolves.
//!
//! ```text
//! cargo run --release -p aggid --example simulate
//! ```

use aggid::forward::{initial_condition_1d, solve_forward};
use aggid::{PotentialSpec, SpatialGrid, TimeGrid};

fn main() -> aggid::Result<()> {
    let grid = SpatialGrid::new(1, 1.0, 100)?;
    let times = TimeGrid::new(3.0, 300)?;
    let u0 = initial_condition_1d(&grid, 0.6)?;
    let run = solve_forward(&u0, &PotentialSpec::repulsive_attractive(5.0, 2.0, 15.0), &grid, &times)?;
    if let Some(w) = &run.warning {
        eprintln!("warning: {w}");
    }
    let field = &run.field;
    println!("{:>5} {:>10} {:>10} {:>14}", "t", "max u", "mass", "min u");
    for n in (0..field.num_frames()).step_by(50) {
        let frame = field.frame(n);
        let max = frame.iter().copied().fold(f64::MIN, f64::max);
        let min = frame.iter().copied().fold(f64::MAX, f64::min);
        println!("{:>5.2} {max:>10.4} {:>10.6} {min:>14.3e}", times.time(n), field.mass(n));
    }
    Ok(())
}
