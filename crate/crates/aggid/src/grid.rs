//! Regular space and time grids, finite-difference stencils and the discrete
//! convolution. Every stencil treats values beyond the outermost node as zero.
//!
//! Spatial arrays are flat slices. In two dimensions node `(i0, i1)` lives at
//! `i0 * (2M+1) + i1`, so axis 0 has stride `2M+1` and axis 1 has stride 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    dim: usize,
    half_width: f64,
    half_count: usize,
}

impl SpatialGrid {
    pub fn new(dim: usize, half_width: f64, half_count: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid("half width must be positive"));
        }
        if half_count == 0 {
            return Err(Error::invalid("half count must be at least 1"));
        }
        Ok(Self { dim, half_width, half_count })
    }

    /// Grid on `[-L, L]^d` with the node count implied by `step`.
    pub fn with_step(dim: usize, half_width: f64, step: f64) -> Result<Self> {
        let m = (half_width / step).round();
        if !(m >= 1.0) || ((m * step - half_width).abs() > 1e-9 * half_width) {
            return Err(Error::invalid(format!(
                "step {step} does not divide half width {half_width}"
            )));
        }
        Self::new(dim, half_width, m as usize)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn half_count(&self) -> usize {
        self.half_count
    }

    pub fn step(&self) -> f64 {
        self.half_width / self.half_count as f64
    }

    /// Nodes per axis, `2M+1`.
    pub fn axis_len(&self) -> usize {
        2 * self.half_count + 1
    }

    /// Total node count, `(2M+1)^d`.
    pub fn len(&self) -> usize {
        self.axis_len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `Δx^d`, the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.step().powi(self.dim as i32)
    }

    /// Coordinate of axis position `k` in `0..2M+1`; the endpoints are exactly `±L`.
    pub fn coord(&self, k: usize) -> f64 {
        let m = self.half_count;
        if k == 0 {
            -self.half_width
        } else if k == 2 * m {
            self.half_width
        } else {
            (k as f64 - m as f64) * self.step()
        }
    }

    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.axis_len()).map(|k| self.coord(k)).collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        if self.dim == 2 && axis == 0 {
            self.axis_len()
        } else {
            1
        }
    }

    /// Per-axis positions of a flat node index.
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            let n1 = self.axis_len();
            [idx / n1, idx % n1]
        }
    }

    pub fn flat_index(&self, ix: [usize; 2]) -> usize {
        if self.dim == 1 {
            ix[0]
        } else {
            ix[0] * self.axis_len() + ix[1]
        }
    }

    /// Coordinates of a node; the second entry is 0 in one dimension.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let ix = self.multi_index(idx);
        if self.dim == 1 {
            [self.coord(ix[0]), 0.0]
        } else {
            [self.coord(ix[0]), self.coord(ix[1])]
        }
    }

    pub fn norm(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    }

    /// True for nodes on the outermost layer of the grid.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let last = 2 * self.half_count;
        let ix = self.multi_index(idx);
        (0..self.dim).any(|a| ix[a] == 0 || ix[a] == last)
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: v.len() });
        }
        Ok(())
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::invalid(format!("axis {axis} out of range for a {}D grid", self.dim)));
        }
        Ok(())
    }

    /// Neighbour of `idx` shifted by `offset` along `axis`, if it is on the grid.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> Option<usize> {
        let mut ix = self.multi_index(idx);
        let k = ix[axis] as isize + offset;
        if k < 0 || k >= self.axis_len() as isize {
            return None;
        }
        ix[axis] = k as usize;
        Some(self.flat_index(ix))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    count: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, count: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("time horizon must be positive"));
        }
        if count == 0 {
            return Err(Error::invalid("time step count must be at least 1"));
        }
        Ok(Self { horizon, count })
    }

    pub fn with_step(horizon: f64, step: f64) -> Result<Self> {
        let n = (horizon / step).round();
        if !(n >= 1.0) || ((n * step - horizon).abs() > 1e-9 * horizon) {
            return Err(Error::invalid(format!("step {step} does not divide horizon {horizon}")));
        }
        Self::new(horizon, n as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `N`; there are `N+1` nodes.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.count + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.count as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.count {
            self.horizon
        } else {
            n as f64 * self.step()
        }
    }
}

/// Samples `U_i^n` on a space-time grid, stored frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: SpatialGrid,
    times: TimeGrid,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(grid: SpatialGrid, times: TimeGrid, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * times.len();
        if values.len() != expected {
            return Err(Error::SizeMismatch { expected, got: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::BlowUp { frame: pos / grid.len() });
        }
        Ok(Self { grid, times, values })
    }

    pub fn zeros(grid: SpatialGrid, times: TimeGrid) -> Self {
        let values = vec![0.0; grid.len() * times.len()];
        Self { grid, times, values }
    }

    pub fn from_frames(grid: SpatialGrid, times: TimeGrid, frames: &[Vec<f64>]) -> Result<Self> {
        if frames.len() != times.len() {
            return Err(Error::SizeMismatch { expected: times.len(), got: frames.len() });
        }
        let mut values = Vec::with_capacity(grid.len() * times.len());
        for f in frames {
            grid.check(f)?;
            values.extend_from_slice(f);
        }
        Self::new(grid, times, values)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_frames(&self) -> usize {
        self.times.len()
    }

    pub fn frame(&self, n: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[n * len..(n + 1) * len]
    }

    pub fn frame_mut(&mut self, n: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.values[n * len..(n + 1) * len]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.grid.len())
    }

    /// Applies `f` to every frame, keeping the grids.
    pub fn map_frames(&self, mut f: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Self> {
        let frames = self.frames().map(&mut f).collect::<Result<Vec<_>>>()?;
        Self::from_frames(self.grid, self.times, &frames)
    }

    /// `Σ_i U_i^n Δx^d` for frame `n`.
    pub fn mass(&self, n: usize) -> f64 {
        self.frame(n).iter().sum::<f64>() * self.grid.cell_volume()
    }
}

pub fn dx_forward(v: &[f64], grid: &SpatialGrid, axis: usize) -> Result<Vec<f64>> {
    grid.check(v)?;
    grid.check_axis(axis)?;
    let h = grid.step();
    Ok((0..v.len())
        .map(|i| {
            let next = grid.neighbor(i, axis, 1).map_or(0.0, |j| v[j]);
            (next - v[i]) / h
        })
        .collect())
}

pub fn dx_backward(v: &[f64], grid: &SpatialGrid, axis: usize) -> Result<Vec<f64>> {
    grid.check(v)?;
    grid.check_axis(axis)?;
    let h = grid.step();
    Ok((0..v.len())
        .map(|i| {
            let prev = grid.neighbor(i, axis, -1).map_or(0.0, |j| v[j]);
            (v[i] - prev) / h
        })
        .collect())
}

/// Central difference `(D⁺ + D⁻)/2` along `axis`.
pub fn dx_central(v: &[f64], grid: &SpatialGrid, axis: usize) -> Result<Vec<f64>> {
    let fwd = dx_forward(v, grid, axis)?;
    let bwd = dx_backward(v, grid, axis)?;
    Ok(fwd.iter().zip(&bwd).map(|(a, b)| (a + b) / 2.0).collect())
}

/// `Σ_axes D⁻D⁺ v`.
pub fn laplacian(v: &[f64], grid: &SpatialGrid) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    for axis in 0..grid.dim() {
        let lap = dx_backward(&dx_forward(v, grid, axis)?, grid, axis)?;
        out.iter_mut().zip(&lap).for_each(|(o, l)| *o += l);
    }
    grid.check(v)?;
    Ok(out)
}

/// `(U^{n+1} - U^n)/Δt`.
pub fn dt_forward(field: &SpaceTimeField, n: usize) -> Result<Vec<f64>> {
    if n >= field.times().count() {
        return Err(Error::invalid(format!(
            "frame {n} has no forward neighbour (N = {})",
            field.times().count()
        )));
    }
    let dt = field.times().step();
    Ok(field
        .frame(n + 1)
        .iter()
        .zip(field.frame(n))
        .map(|(a, b)| (a - b) / dt)
        .collect())
}

/// `(p*q)_i = Σ_j p_j q_{i-j}`, with `q` zero outside the grid. No quadrature weight.
pub fn convolve(p: &[f64], q: &[f64], grid: &SpatialGrid) -> Result<Vec<f64>> {
    grid.check(p)?;
    grid.check(q)?;
    let n1 = grid.axis_len() as isize;
    let m = grid.half_count() as isize;
    let mut out = vec![0.0; grid.len()];
    match grid.dim() {
        1 => {
            for (i, o) in out.iter_mut().enumerate() {
                let i = i as isize;
                // q index i - j + M must lie in 0..n1
                let lo = (i + m - (n1 - 1)).max(0);
                let hi = (i + m).min(n1 - 1);
                let mut acc = 0.0;
                for j in lo..=hi {
                    acc += p[j as usize] * q[(i - j + m) as usize];
                }
                *o = acc;
            }
        }
        _ => {
            let n = n1 as usize;
            for i0 in 0..n1 {
                let lo0 = (i0 + m - (n1 - 1)).max(0);
                let hi0 = (i0 + m).min(n1 - 1);
                for i1 in 0..n1 {
                    let lo1 = (i1 + m - (n1 - 1)).max(0);
                    let hi1 = (i1 + m).min(n1 - 1);
                    let mut acc = 0.0;
                    for j0 in lo0..=hi0 {
                        let prow = &p[j0 as usize * n..(j0 as usize + 1) * n];
                        let qrow = (i0 - j0 + m) as usize * n;
                        for j1 in lo1..=hi1 {
                            acc += prow[j1 as usize] * q[qrow + (i1 - j1 + m) as usize];
                        }
                    }
                    out[i0 as usize * n + i1 as usize] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Copy of `v` with the outermost layer set to zero.
pub fn zero_boundary(v: &[f64], grid: &SpatialGrid) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| if grid.on_boundary(i) { 0.0 } else { x })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(m: usize) -> SpatialGrid {
        SpatialGrid::new(1, 1.0, m).unwrap()
    }

    #[test]
    fn endpoints_exact() {
        let g = SpatialGrid::with_step(1, 1.0, 0.01).unwrap();
        assert_eq!(g.coord(0), -1.0);
        assert_eq!(g.coord(200), 1.0);
        assert_eq!(g.axis_len(), 201);
        let t = TimeGrid::with_step(3.0, 0.01).unwrap();
        assert_eq!(t.time(t.count()), 3.0);
        assert_eq!(t.len(), 301);
    }

    #[test]
    fn forward_difference_of_linear() {
        let g = line(10);
        let v: Vec<f64> = g.axis_coords();
        let d = dx_forward(&v, &g, 0).unwrap();
        for x in &d[..20] {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_boundary_case() {
        let g = SpatialGrid::new(1, 1.0, 2).unwrap();
        let mut v = vec![0.0; 5];
        v[4] = 2.0;
        assert_eq!(dx_forward(&v, &g, 0).unwrap()[4], -4.0);
    }

    #[test]
    fn backward_boundary_case() {
        let g = SpatialGrid::new(1, 2.0, 2).unwrap();
        let mut v = vec![0.0; 5];
        v[0] = 3.0;
        assert_eq!(dx_backward(&v, &g, 0).unwrap()[0], 3.0);
        assert!(dx_backward(&[0.0; 5], &g, 0).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn central_exact_on_quadratic() {
        let g = line(20);
        let x = g.axis_coords();
        let v: Vec<f64> = x.iter().map(|x| x * x).collect();
        let d = dx_central(&v, &g, 0).unwrap();
        for k in 1..40 {
            assert!((d[k] - 2.0 * x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_quadratic_is_two() {
        let g = line(20);
        let v: Vec<f64> = g.axis_coords().iter().map(|x| x * x).collect();
        let l = laplacian(&v, &g).unwrap();
        for v in &l[1..40] {
            assert!((v - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn laplacian_matches_three_point_stencil() {
        let g = line(7);
        let v: Vec<f64> = (0..15).map(|k| ((k * 37 % 11) as f64).sin()).collect();
        let l = laplacian(&v, &g).unwrap();
        let h2 = g.step() * g.step();
        for k in 1..14 {
            let direct = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / h2;
            assert!((l[k] - direct).abs() < 1e-9 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn dt_forward_rate_and_last_frame() {
        let g = line(2);
        let t = TimeGrid::new(1.0, 4).unwrap();
        let frames: Vec<Vec<f64>> = (0..5).map(|n| vec![t.time(n); 5]).collect();
        let f = SpaceTimeField::from_frames(g, t, &frames).unwrap();
        assert!(dt_forward(&f, 1).unwrap().iter().all(|r| (r - 1.0).abs() < 1e-12));
        assert!(dt_forward(&f, 4).is_err());
    }

    #[test]
    fn convolution_examples() {
        let g = line(1);
        assert_eq!(convolve(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.0], &g).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(convolve(&[0.0; 3], &[4.0, 1.0, 2.0], &g).unwrap(), vec![0.0; 3]);
        // hand sums: out_{-1} = p_{-1} q_0 + p_0 q_{-1}, out_0 = p_{-1}q_1 + p_0 q_0 + p_1 q_{-1}
        let out = convolve(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &g).unwrap();
        assert_eq!(out, vec![1.0 * 5.0 + 2.0 * 4.0, 1.0 * 6.0 + 2.0 * 5.0 + 3.0 * 4.0, 2.0 * 6.0 + 3.0 * 5.0]);
    }

    #[test]
    fn convolution_2d_delta_identity() {
        let g = SpatialGrid::new(2, 1.0, 2).unwrap();
        let p: Vec<f64> = (0..25).map(|k| k as f64 * 0.3 - 1.0).collect();
        let mut delta = vec![0.0; 25];
        delta[12] = 1.0;
        assert_eq!(convolve(&p, &delta, &g).unwrap(), p);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let g = line(3);
        assert!(matches!(dx_forward(&[1.0; 4], &g, 0), Err(Error::SizeMismatch { .. })));
        assert!(convolve(&[1.0; 7], &[1.0; 6], &g).is_err());
    }
}
