//! Splitting-and-merge identification of time-dependent potentials: one static
//! identification per (overlapping) time window, glued with an Epanechnikov kernel
//! centred at the window midpoints.

use std::ops::Range;

use crate::assembly::PreparedData;
use crate::bregman::{identify_prepared, Identification, RegularizerSpec, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, TimeGrid};
use crate::potential::Potential;

pub const DEFAULT_GLUE_BANDWIDTH: f64 = 0.19;

#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    pub count: usize,
    pub overlap: f64,
    /// Inclusive frame ranges `first..=last`, stored as `(first, last)`.
    pub frames: Vec<(usize, usize)>,
    pub midpoints: Vec<f64>,
}

impl TimePartition {
    /// Operator indices of window `q`: frames `first..last`, each paired with its forward neighbour.
    pub fn operator_range(&self, q: usize) -> Range<usize> {
        let (first, last) = self.frames[q];
        first..last
    }
}

/// Window `q` (1-based) spans `[(q-1-ρ)T/Q, (q+ρ)T/Q]` clipped to `[0, T]`.
pub fn partition(times: &TimeGrid, count: usize, overlap: f64) -> Result<TimePartition> {
    if count == 0 || count > times.count() {
        return Err(Error::invalid(format!("Q = {count} must lie in 1..={}", times.count())));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid("overlap ratio must lie in [0, 1)"));
    }
    let horizon = times.horizon();
    let dt = times.step();
    let width = horizon / count as f64;
    let mut frames = Vec::with_capacity(count);
    let mut midpoints = Vec::with_capacity(count);
    for q in 1..=count {
        let start = if q == 1 { 0.0 } else { ((q as f64 - 1.0 - overlap) * width).max(0.0) };
        let end = if q == count { horizon } else { ((q as f64 + overlap) * width).min(horizon) };
        let first = (start / dt - 1e-9).ceil().max(0.0) as usize;
        let last = ((end / dt + 1e-9).floor() as usize).min(times.count());
        if last < first + 1 {
            return Err(Error::invalid(format!(
                "window {q} of {count} holds fewer than two frames; reduce Q"
            )));
        }
        frames.push((first, last));
        midpoints.push((q as f64 - 0.5) * width);
    }
    Ok(TimePartition { count, overlap, frames, midpoints })
}

/// One identification per window, sharing the globally prepared derivatives.
/// Failures are reported per window.
pub fn identify_piecewise(
    data: &SpaceTimeField,
    reg: &RegularizerSpec,
    config: &SolverConfig,
    count: usize,
    overlap: f64,
) -> Result<(TimePartition, Vec<Result<Identification>>)> {
    config.validate(reg, data.grid())?;
    let parts = partition(data.times(), count, overlap)?;
    let prepared = PreparedData::new(data, config.derivative_mode, &config.mls)?;
    let results = identify_windows(&prepared, &parts, reg, config);
    Ok((parts, results))
}

pub fn identify_windows(
    prepared: &PreparedData,
    parts: &TimePartition,
    reg: &RegularizerSpec,
    config: &SolverConfig,
) -> Vec<Result<Identification>> {
    (0..parts.count)
        .map(|q| identify_prepared(prepared, parts.operator_range(q), reg, config))
        .collect()
}

fn epanechnikov(s: f64) -> f64 {
    if s.abs() <= 1.0 {
        0.75 * (1.0 - s * s)
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct TimeVaryingPotential {
    midpoints: Vec<f64>,
    potentials: Vec<Potential>,
    bandwidth: f64,
}

impl TimeVaryingPotential {
    pub fn new(midpoints: Vec<f64>, potentials: Vec<Potential>, bandwidth: f64) -> Result<Self> {
        if potentials.is_empty() {
            return Err(Error::invalid("no potentials to glue"));
        }
        if midpoints.len() != potentials.len() {
            return Err(Error::SizeMismatch { expected: potentials.len(), got: midpoints.len() });
        }
        if midpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("midpoints must be strictly increasing"));
        }
        if !(bandwidth > 0.0) {
            return Err(Error::invalid("glue bandwidth must be positive"));
        }
        let grid = potentials[0].grid();
        if potentials.iter().any(|p| p.grid() != grid) {
            return Err(Error::GridMismatch("glued potentials must share a grid".into()));
        }
        Ok(Self { midpoints, potentials, bandwidth })
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    /// Normalized kernel weights at `t`; falls back to the nearest midpoint when all vanish.
    pub fn weights(&self, t: f64) -> Vec<f64> {
        let raw: Vec<f64> = self
            .midpoints
            .iter()
            .map(|m| epanechnikov((t - m) / self.bandwidth) / self.bandwidth)
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|w| w / total).collect();
        }
        let nearest = self
            .midpoints
            .iter()
            .enumerate()
            .min_by(|a, b| (t - a.1).abs().total_cmp(&(t - b.1).abs()))
            .map_or(0, |(k, _)| k);
        (0..raw.len()).map(|k| if k == nearest { 1.0 } else { 0.0 }).collect()
    }

    pub fn glue(&self, t: f64) -> Result<Potential> {
        let weights = self.weights(t);
        let grid = *self.potentials[0].grid();
        let mut values = vec![0.0; grid.len()];
        for (w, p) in weights.iter().zip(&self.potentials) {
            if *w == 0.0 {
                continue;
            }
            for (v, x) in values.iter_mut().zip(p.full_values()) {
                *v += w * x;
            }
        }
        Potential::new(grid, values)
    }
}
