//! Agent trajectories: position noise, kernel density estimation onto a grid,
//! sampling agents from a density, and a simple pairwise-force simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpatialGrid, TimeGrid};

/// Positions `x_v(t^n)`, stored frame by frame, agent by agent, axis by axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentData {
    dim: usize,
    times: Vec<f64>,
    count: usize,
    positions: Vec<f64>,
}

impl AgentData {
    pub fn new(dim: usize, times: Vec<f64>, count: usize, positions: Vec<f64>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid("agents live in one or two dimensions"));
        }
        if count == 0 {
            return Err(Error::invalid("need at least one agent"));
        }
        let expected = times.len() * count * dim;
        if positions.len() != expected {
            return Err(Error::SizeMismatch { expected, got: positions.len() });
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("agent positions must be finite"));
        }
        Ok(Self { dim, times, count, positions })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn num_frames(&self) -> usize {
        self.times.len()
    }

    /// Positions of frame `n` as `count × dim` values.
    pub fn frame(&self, n: usize) -> &[f64] {
        let len = self.count * self.dim;
        &self.positions[n * len..(n + 1) * len]
    }

    pub fn position(&self, n: usize, v: usize) -> &[f64] {
        &self.frame(n)[v * self.dim..(v + 1) * self.dim]
    }
}

/// `x̃ = x + ε`, `ε ~ N(0, σ² I)`; frame `n` draws from stream `n`.
pub fn add_position_noise(agents: &AgentData, sigma: f64, seed: u64) -> Result<AgentData> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("position noise σ must be nonnegative"));
    }
    if sigma == 0.0 {
        return Ok(agents.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut out = agents.clone();
    let len = agents.count * agents.dim;
    for n in 0..agents.num_frames() {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        for p in &mut out.positions[n * len..(n + 1) * len] {
            *p += normal.sample(&mut rng);
        }
    }
    Ok(out)
}

fn unit_ball_volume(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        PI
    }
}

/// `u(t^n, x_i) = (1/V) Σ_v det(H)^{-1/2} K(H^{-1/2}(x_i - x_v))` with the spherical
/// Epanechnikov kernel; `bandwidth` is the diagonal of `H`.
pub fn kde_frame(agents: &AgentData, n: usize, grid: &SpatialGrid, bandwidth: &[f64]) -> Result<Vec<f64>> {
    if n >= agents.num_frames() {
        return Err(Error::invalid(format!("frame {n} out of range")));
    }
    if grid.dim() != agents.dim || bandwidth.len() != agents.dim {
        return Err(Error::GridMismatch("agent, grid and bandwidth dimensions differ".into()));
    }
    if bandwidth.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::invalid("bandwidth entries must be positive"));
    }
    let dim = agents.dim;
    let norm = (dim as f64 + 2.0) / (2.0 * unit_ball_volume(dim))
        / bandwidth.iter().product::<f64>().sqrt()
        / agents.count as f64;
    let reach: Vec<f64> = bandwidth.iter().map(|h| h.sqrt()).collect();
    let step = grid.step();
    let l = grid.half_width();
    let last = grid.axis_len() as isize - 1;
    let coords = grid.axis_coords();
    let span = |c: f64, r: f64| -> Option<(usize, usize)> {
        let lo = (((c - r + l) / step).ceil() as isize).max(0);
        let hi = (((c + r + l) / step).floor() as isize).min(last);
        (lo <= hi).then_some((lo as usize, hi as usize))
    };
    let mut out = vec![0.0; grid.len()];
    for v in 0..agents.count {
        let p = agents.position(n, v);
        let Some((lo0, hi0)) = span(p[0], reach[0]) else { continue };
        if dim == 1 {
            for k in lo0..=hi0 {
                let s = (coords[k] - p[0]).powi(2) / bandwidth[0];
                if s <= 1.0 {
                    out[k] += norm * (1.0 - s);
                }
            }
        } else {
            let Some((lo1, hi1)) = span(p[1], reach[1]) else { continue };
            for k0 in lo0..=hi0 {
                let s0 = (coords[k0] - p[0]).powi(2) / bandwidth[0];
                if s0 > 1.0 {
                    continue;
                }
                for k1 in lo1..=hi1 {
                    let s = s0 + (coords[k1] - p[1]).powi(2) / bandwidth[1];
                    if s <= 1.0 {
                        out[grid.flat_index([k0, k1])] += norm * (1.0 - s);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Causal temporal KDE at `t`: frames with `0 ≤ t - t^n < memory`, weighted by the
/// Epanechnikov profile of `(t - t^n)/h` and renormalized.
pub fn kde_time(frames: &[Vec<f64>], times: &[f64], t: f64, h: f64, memory: f64) -> Result<Vec<f64>> {
    if frames.len() != times.len() || frames.is_empty() {
        return Err(Error::invalid("frames and times must be nonempty and of equal length"));
    }
    if !(h > 0.0 && memory > 0.0) {
        return Err(Error::invalid("temporal bandwidth and memory must be positive"));
    }
    let tol = 1e-9 * h;
    let mut total = 0.0;
    let mut out = vec![0.0; frames[0].len()];
    for (f, &tn) in frames.iter().zip(times) {
        let lag = t - tn;
        if lag < -tol || lag >= memory - tol {
            continue;
        }
        let s = lag.max(0.0) / h;
        let w = if s <= 1.0 { 0.75 * (1.0 - s * s) } else { 0.0 };
        if w == 0.0 {
            continue;
        }
        total += w;
        for (o, x) in out.iter_mut().zip(f) {
            *o += w * x;
        }
    }
    if total == 0.0 {
        return Err(Error::invalid(format!("no frame inside the memory window at t = {t}")));
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    /// Diagonal of `H`.
    pub bandwidth: [f64; 2],
    /// Temporal bandwidth `h`; `None` disables temporal smoothing.
    pub time_bandwidth: Option<f64>,
    /// Memory horizon `r`; defaults to `h`.
    pub memory: Option<f64>,
}

/// Grid density from agents: spatial KDE per frame, then causal temporal KDE at each frame time.
pub fn density_field(agents: &AgentData, grid: &SpatialGrid, config: &KdeConfig) -> Result<SpaceTimeField> {
    let n = agents.num_frames();
    if n < 2 {
        return Err(Error::invalid("density estimation needs at least two frames"));
    }
    let times = time_grid_of(agents)?;
    let bandwidth = &config.bandwidth[..agents.dim];
    let frames = (0..n).map(|k| kde_frame(agents, k, grid, bandwidth)).collect::<Result<Vec<_>>>()?;
    let frames = match config.time_bandwidth {
        None => frames,
        Some(h) => {
            let memory = config.memory.unwrap_or(h);
            (0..n)
                .map(|k| kde_time(&frames[..=k], &agents.times[..=k], agents.times[k], h, memory))
                .collect::<Result<Vec<_>>>()?
        }
    };
    SpaceTimeField::from_frames(*grid, times, &frames)
}

fn time_grid_of(agents: &AgentData) -> Result<TimeGrid> {
    let n = agents.num_frames() - 1;
    let t = &agents.times;
    let step = (t[n] - t[0]) / n as f64;
    let regular = t.iter().enumerate().all(|(k, &tk)| (tk - t[0] - k as f64 * step).abs() < 1e-9 * (1.0 + tk.abs()));
    if t[0].abs() > 1e-12 || !regular {
        return Err(Error::invalid("agent frames must be equally spaced from t = 0"));
    }
    TimeGrid::new(t[n], n)
}

/// `V` i.i.d. positions per frame from cell probabilities `∝ max(U_i^n, 0)`, jittered
/// uniformly inside the cell.
pub fn sample_agents_from_density(field: &SpaceTimeField, count: usize, seed: u64) -> Result<AgentData> {
    if count == 0 {
        return Err(Error::invalid("need at least one agent"));
    }
    let grid = field.grid();
    let dim = grid.dim();
    let h = grid.step();
    let mut positions = Vec::with_capacity(field.num_frames() * count * dim);
    for n in 0..field.num_frames() {
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        for &u in field.frame(n) {
            acc += u.max(0.0);
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::invalid(format!("frame {n} has no positive mass")));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        for _ in 0..count {
            let target = rng.random::<f64>() * acc;
            let cell = cumulative.partition_point(|&c| c <= target).min(grid.len() - 1);
            let centre = grid.point(cell);
            for c in centre.iter().take(dim) {
                positions.push(c + (rng.random::<f64>() - 0.5) * h);
            }
        }
    }
    let times = (0..field.num_frames()).map(|n| field.times().time(n)).collect();
    AgentData::new(dim, times, count, positions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoidsMode {
    Repulsive,
    /// Repulsion until `t_switch`, attraction afterwards.
    ExpandThenConcentrate { t_switch: f64 },
}

/// Pairwise radial force `s(t)·strength·exp(-d/length)` along `x_u - x_v`, averaged over agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoidsParams {
    pub dim: usize,
    pub strength: f64,
    pub length: f64,
    /// Agents start uniformly in `[-w, w]^d`.
    pub init_half_width: f64,
}

impl Default for BoidsParams {
    fn default() -> Self {
        Self { dim: 2, strength: 1.0, length: 0.3, init_half_width: 0.3 }
    }
}

pub fn boids_simulate(
    count: usize,
    steps: usize,
    dt: f64,
    mode: BoidsMode,
    params: &BoidsParams,
    seed: u64,
) -> Result<AgentData> {
    if count < 2 {
        return Err(Error::invalid("boids need at least two agents"));
    }
    if !(dt > 0.0) || !(params.length > 0.0) || !(params.init_half_width > 0.0) {
        return Err(Error::invalid("time step, force length and box must be positive"));
    }
    let dim = params.dim;
    if dim != 1 && dim != 2 {
        return Err(Error::invalid("boids live in one or two dimensions"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let w = params.init_half_width;
    let mut current: Vec<f64> = (0..count * dim).map(|_| rng.random_range(-w..w)).collect();
    let mut positions = current.clone();
    let mut times = vec![0.0];
    let mut velocity = vec![0.0; count * dim];
    for step in 0..steps {
        let t = step as f64 * dt;
        let sign = match mode {
            BoidsMode::Repulsive => 1.0,
            BoidsMode::ExpandThenConcentrate { t_switch } => {
                if t < t_switch {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        velocity.iter_mut().for_each(|v| *v = 0.0);
        for u in 0..count {
            for v in 0..count {
                if u == v {
                    continue;
                }
                let mut diff = [0.0; 2];
                let mut d2 = 0.0;
                for a in 0..dim {
                    diff[a] = current[u * dim + a] - current[v * dim + a];
                    d2 += diff[a] * diff[a];
                }
                let d = d2.sqrt();
                if d == 0.0 {
                    continue;
                }
                let f = sign * params.strength * (-d / params.length).exp() / count as f64;
                for a in 0..dim {
                    velocity[u * dim + a] += f * diff[a] / d;
                }
            }
        }
        for (x, v) in current.iter_mut().zip(&velocity) {
            *x = (*x + dt * v).clamp(-1.0, 1.0);
        }
        positions.extend_from_slice(&current);
        times.push((step + 1) as f64 * dt);
    }
    AgentData::new(dim, times, count, positions)
}
