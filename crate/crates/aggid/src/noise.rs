//! Additive Gaussian noise calibrated as a percentage of the data's space-time L² norm.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpaceTimeField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub percent: f64,
    pub seed: u64,
}

/// `σ = (ρ/100) (Σ_{n≥1} Σ_i (u_i^n)² Δx^d Δt)^{1/2}`; frame 0 is excluded from the sum.
pub fn noise_sigma(field: &SpaceTimeField, percent: f64) -> Result<f64> {
    if !(percent >= 0.0 && percent.is_finite()) {
        return Err(Error::invalid("noise percent must be nonnegative"));
    }
    if field.num_frames() < 2 {
        return Err(Error::invalid("noise level needs at least two frames"));
    }
    let weight = field.grid().cell_volume() * field.times().step();
    let sum: f64 = (1..field.num_frames())
        .map(|n| field.frame(n).iter().map(|u| u * u).sum::<f64>())
        .sum();
    Ok(percent / 100.0 * (sum * weight).sqrt())
}

/// Adds i.i.d. `N(0, σ²)` samples; frame `n` draws from stream `n` of the seeded generator.
pub fn add_noise(field: &SpaceTimeField, spec: &NoiseSpec) -> Result<SpaceTimeField> {
    let sigma = noise_sigma(field, spec.percent)?;
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut out = field.clone();
    for n in 0..field.num_frames() {
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        rng.set_stream(n as u64);
        for v in out.frame_mut(n) {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(out)
}
