//! Moving least squares smoothing and successively denoised differentiation.
//!
//! The MLS smoother is linear in the data, so it is materialized once per axis as
//! a dense matrix. Row `i` evaluates at `x_i` the degree-2 polynomial fitted with
//! Gaussian weights `exp(-(x_j - x_i)²/h²)` over the whole axis.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dx_central, SpaceTimeField, SpatialGrid, TimeGrid};

pub const DEFAULT_WIDTH: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlsConfig {
    pub h_x: f64,
    pub h_t: f64,
}

impl Default for MlsConfig {
    fn default() -> Self {
        Self { h_x: DEFAULT_WIDTH, h_t: DEFAULT_WIDTH }
    }
}

/// Linear MLS smoother on a set of sample positions.
#[derive(Debug, Clone)]
pub struct Smoother {
    matrix: DMatrix<f64>,
}

impl Smoother {
    pub fn new(positions: &[f64], width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid("MLS width must be positive"));
        }
        let n = positions.len();
        if n < 3 {
            return Err(Error::invalid("MLS needs at least three samples"));
        }
        let mut matrix = DMatrix::zeros(n, n);
        let mut weights = vec![0.0; n];
        let mut offsets = vec![0.0; n];
        for i in 0..n {
            let mut normal = Matrix3::zeros();
            for j in 0..n {
                let d = (positions[j] - positions[i]) / width;
                let w = (-d * d).exp();
                offsets[j] = d;
                weights[j] = w;
                if w > 0.0 {
                    let b = Vector3::new(1.0, d, d * d);
                    normal += w * b * b.transpose();
                }
            }
            let coef = normal
                .cholesky()
                .ok_or_else(|| Error::Singular(format!("MLS normal equations at sample {i}")))?
                .solve(&Vector3::x());
            for j in 0..n {
                let d = offsets[j];
                matrix[(i, j)] = weights[j] * (coef[0] + coef[1] * d + coef[2] * d * d);
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let out = &self.matrix * DVector::from_column_slice(v);
        out.as_slice().to_vec()
    }
}

/// Spatial smoother for a grid; two-dimensional frames are smoothed along each axis in turn.
#[derive(Debug, Clone)]
pub struct SpatialSmoother {
    grid: SpatialGrid,
    axis: Smoother,
}

impl SpatialSmoother {
    pub fn new(grid: &SpatialGrid, h_x: f64) -> Result<Self> {
        Ok(Self { grid: *grid, axis: Smoother::new(&grid.axis_coords(), h_x)? })
    }

    pub fn apply(&self, frame: &[f64]) -> Result<Vec<f64>> {
        self.grid.check(frame)?;
        if self.grid.dim() == 1 {
            return Ok(self.axis.apply(frame));
        }
        let n1 = self.grid.axis_len();
        // frame is row-major (i0, i1); nalgebra is column-major, so this view is its transpose
        let vt = DMatrix::from_column_slice(n1, n1, frame);
        let s = self.axis.matrix();
        let smoothed_t = s * vt * s.transpose();
        Ok(smoothed_t.as_slice().to_vec())
    }
}

pub fn mls_smooth_x(frame: &[f64], grid: &SpatialGrid, h_x: f64) -> Result<Vec<f64>> {
    SpatialSmoother::new(grid, h_x)?.apply(frame)
}

/// Smooths every node's time series with the MLS fit in `t`.
pub fn mls_smooth_t(field: &SpaceTimeField, h_t: f64) -> Result<SpaceTimeField> {
    let times: Vec<f64> = (0..field.num_frames()).map(|n| field.times().time(n)).collect();
    let frames: Vec<Vec<f64>> = field.frames().map(<[f64]>::to_vec).collect();
    let smoothed = smooth_frames_in_time(&frames, &times, h_t)?;
    SpaceTimeField::from_frames(*field.grid(), *field.times(), &smoothed)
}

/// Applies the time smoother across a list of frames sampled at `times`.
pub fn smooth_frames_in_time(frames: &[Vec<f64>], times: &[f64], h_t: f64) -> Result<Vec<Vec<f64>>> {
    if frames.len() < 3 {
        return Err(Error::invalid("time smoothing needs at least three frames"));
    }
    let s = Smoother::new(times, h_t)?;
    let nodes = frames[0].len();
    // columns are frames
    let mut data = DMatrix::zeros(nodes, frames.len());
    for (n, f) in frames.iter().enumerate() {
        data.column_mut(n).copy_from_slice(f);
    }
    let out = data * s.matrix().transpose();
    Ok((0..frames.len()).map(|n| out.column(n).as_slice().to_vec()).collect())
}

/// `S_x D_x S_x U^n` along `axis` for every frame.
pub fn sdd_dx(field: &SpaceTimeField, h_x: f64, axis: usize) -> Result<SpaceTimeField> {
    let grid = *field.grid();
    let smoother = SpatialSmoother::new(&grid, h_x)?;
    field.map_frames(|f| smoother.apply(&dx_central(&smoother.apply(f)?, &grid, axis)?))
}

/// `S_t D_t S_x U^n` for `n = 0..N-1`, returned on a grid of `N` frames.
pub fn sdd_dt(field: &SpaceTimeField, h_x: f64, h_t: f64) -> Result<SpaceTimeField> {
    let n_steps = field.times().count();
    if n_steps < 3 {
        return Err(Error::invalid("sdd_dt needs at least three time steps"));
    }
    let smoother = SpatialSmoother::new(field.grid(), h_x)?;
    let smoothed = field.frames().map(|f| smoother.apply(f)).collect::<Result<Vec<_>>>()?;
    let dt = field.times().step();
    let rates: Vec<Vec<f64>> = (0..n_steps)
        .map(|n| smoothed[n + 1].iter().zip(&smoothed[n]).map(|(a, b)| (a - b) / dt).collect())
        .collect();
    let times: Vec<f64> = (0..n_steps).map(|n| field.times().time(n)).collect();
    let out = smooth_frames_in_time(&rates, &times, h_t)?;
    let grid = TimeGrid::new((n_steps - 1) as f64 * dt, n_steps - 1)?;
    SpaceTimeField::from_frames(*field.grid(), grid, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> SpatialGrid {
        SpatialGrid::with_step(1, 1.0, 0.01).unwrap()
    }

    #[test]
    fn reproduces_quadratics() {
        let g = line();
        let x = g.axis_coords();
        let v: Vec<f64> = x.iter().map(|x| 3.0 * x * x - 0.5 * x + 2.0).collect();
        let s = mls_smooth_x(&v, &g, 0.04).unwrap();
        for (a, b) in s.iter().zip(&v) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reproduces_quadratics_in_2d() {
        let g = SpatialGrid::new(2, 1.0, 15).unwrap();
        let v: Vec<f64> = (0..g.len())
            .map(|i| {
                let [a, b] = g.point(i);
                1.0 + a - 2.0 * b + a * b + 0.5 * a * a - b * b
            })
            .collect();
        let s = mls_smooth_x(&v, &g, 0.1).unwrap();
        for (a, b) in s.iter().zip(&v) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn sdd_of_quadratic() {
        let g = line();
        let t = TimeGrid::new(1.0, 4).unwrap();
        let x = g.axis_coords();
        let frame: Vec<f64> = x.iter().map(|x| x * x).collect();
        let f = SpaceTimeField::from_frames(g, t, &vec![frame; 5]).unwrap();
        let d = sdd_dx(&f, 0.04, 0).unwrap();
        for (v, x) in d.frame(2)[30..170].iter().zip(&x[30..170]) {
            assert!((v - 2.0 * x).abs() < 1e-6);
        }
    }

    #[test]
    fn sdd_dt_of_separable_field() {
        let g = line();
        let t = TimeGrid::with_step(1.0, 0.01).unwrap();
        let x = g.axis_coords();
        let frames: Vec<Vec<f64>> = (0..t.len())
            .map(|n| x.iter().map(|x| x.sin() * t.time(n)).collect())
            .collect();
        let f = SpaceTimeField::from_frames(g, t, &frames).unwrap();
        let r = sdd_dt(&f, 0.04, 0.04).unwrap();
        assert_eq!(r.num_frames(), 100);
        for n in 0..100 {
            for (v, x) in r.frame(n)[30..170].iter().zip(&x[30..170]) {
                assert!((v - x.sin()).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn time_smoothing_needs_three_frames() {
        let g = line();
        let t = TimeGrid::new(1.0, 1).unwrap();
        let f = SpaceTimeField::zeros(g, t);
        assert!(mls_smooth_t(&f, 0.04).is_err());
    }
}
