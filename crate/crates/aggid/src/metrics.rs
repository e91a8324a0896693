//! Relative L1 errors in percent.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::SpaceTimeField;
use crate::potential::Potential;

fn l1(v: impl Iterator<Item = f64>) -> f64 {
    v.map(f64::abs).sum()
}

/// `100 ‖φ̂ - φ*‖₁ / ‖φ*‖₁` over all nodes; half representations are expanded first.
pub fn e_phi(estimate: &Potential, truth: &Potential) -> Result<f64> {
    if estimate.grid() != truth.grid() {
        return Err(Error::GridMismatch("potentials live on different grids".into()));
    }
    let est = estimate.full_values();
    let tru = truth.full_values();
    relative_l1(&est, &tru)
}

pub fn relative_l1(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    if estimate.len() != reference.len() {
        return Err(Error::SizeMismatch { expected: reference.len(), got: estimate.len() });
    }
    let denom = l1(reference.iter().copied());
    if denom == 0.0 {
        return Err(Error::invalid("reference has zero L1 norm"));
    }
    Ok(100.0 * l1(estimate.iter().zip(reference).map(|(a, b)| a - b)) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ErrorSeries {
    /// `(1/N) Σ_{n=1}^{N} e(t^n)`; frame 0 is excluded as in the sweep criterion.
    pub fn time_average(&self) -> f64 {
        let tail = &self.values[1.min(self.values.len())..];
        if tail.is_empty() {
            return self.values.first().copied().unwrap_or(0.0);
        }
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(*v))
    }

    /// Time of the largest error.
    pub fn argmax(&self) -> f64 {
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bk, bv), (k, &v)| if v > bv { (k, v) } else { (bk, bv) });
        self.times[k]
    }
}

/// Per-frame `100 ‖û(t^n) - ref(t^n)‖₁ / ‖ref(t^n)‖₁`.
pub fn e_series(estimate: &SpaceTimeField, reference: &SpaceTimeField) -> Result<ErrorSeries> {
    if estimate.grid() != reference.grid() || estimate.num_frames() != reference.num_frames() {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    let values = (0..reference.num_frames())
        .map(|n| relative_l1(estimate.frame(n), reference.frame(n)))
        .collect::<Result<Vec<_>>>()?;
    let times = (0..reference.num_frames()).map(|n| reference.times().time(n)).collect();
    Ok(ErrorSeries { times, values })
}

/// `e_φ` with the `e*`/`ẽ` series of one run.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub e_phi: Option<f64>,
    pub e_star: Option<ErrorSeries>,
    pub e_tilde: Option<ErrorSeries>,
}
