//! Initial conditions and the conservative finite-volume forward solver for
//! `u_t = ∇·(u ∇(φ*u))` with explicit Euler stepping.
//!
//! The density is taken as zero on the outermost node layer when fluxes are
//! formed, and the convolution carries the quadrature weight `Δx^d`.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::grid::{convolve, dx_central, zero_boundary, SpaceTimeField, SpatialGrid, TimeGrid};
use crate::potential::{Potential, PotentialSpec};

const YAO_WIDTH: f64 = 0.15;

/// Compactly supported parabolic profile of total discrete mass `mass`.
pub fn initial_condition_1d(grid: &SpatialGrid, mass: f64) -> Result<Vec<f64>> {
    if grid.dim() != 1 {
        return Err(Error::invalid("initial_condition_1d needs a 1D grid"));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::invalid("initial mass must be positive"));
    }
    let amp = YAO_WIDTH.cbrt() * mass;
    let denom = 12.0 * YAO_WIDTH.powf(2.0 / 3.0);
    let x = grid.axis_coords();
    let profile = |c0: f64| -> Vec<f64> {
        x.iter().map(|x| amp * (c0 - x * x / denom).max(0.0)).collect()
    };
    let discrete_mass = |c0: f64| profile(c0).iter().sum::<f64>() * grid.step();

    let mut hi = 1.0;
    while discrete_mass(hi) < mass {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::invalid("cannot normalize initial condition"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if discrete_mass(mid) > mass {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(profile(0.5 * (lo + hi)))
}

/// Two unit Gaussians of width 0.2 centred at `(0, ∓0.3)`.
pub fn initial_condition_2d(grid: &SpatialGrid) -> Result<Vec<f64>> {
    if grid.dim() != 2 {
        return Err(Error::invalid("initial_condition_2d needs a 2D grid"));
    }
    Ok((0..grid.len())
        .map(|i| {
            let [x1, x2] = grid.point(i);
            let bump = |c: f64| (-(x1 * x1 + (x2 - c) * (x2 - c)) / 0.04).exp();
            bump(-0.3) + bump(0.3)
        })
        .collect())
}

/// Node fluxes `F^a_i = U_i Δx^d ((∂_a U) * φ)_i`, one array per axis.
pub fn node_flux(u: &[f64], phi: &Potential, grid: &SpatialGrid) -> Result<Vec<Vec<f64>>> {
    grid.check(u)?;
    if phi.grid() != grid {
        return Err(Error::GridMismatch("potential and density grids differ".into()));
    }
    let phi = phi.full_values();
    let u = zero_boundary(u, grid);
    let w = grid.cell_volume();
    (0..grid.dim())
        .map(|axis| {
            let du = dx_central(&u, grid, axis)?;
            let conv = convolve(&du, &phi, grid)?;
            Ok(u.iter().zip(&conv).map(|(a, c)| a * w * c).collect())
        })
        .collect()
}

/// Face fluxes `F_{i+1/2} = (F_i + F_{i+1})/2`; entry `i` holds the face on the positive side of node `i`.
pub fn flux(u: &[f64], phi: &Potential, grid: &SpatialGrid) -> Result<Vec<Vec<f64>>> {
    let nodes = node_flux(u, phi, grid)?;
    Ok(nodes
        .iter()
        .enumerate()
        .map(|(axis, f)| {
            (0..f.len())
                .map(|i| {
                    let next = grid.neighbor(i, axis, 1).map_or(0.0, |j| f[j]);
                    0.5 * (f[i] + next)
                })
                .collect()
        })
        .collect())
}

/// Rate `∇·F` of the flux-form scheme.
pub fn rate(u: &[f64], phi: &Potential, grid: &SpatialGrid) -> Result<Vec<f64>> {
    let nodes = node_flux(u, phi, grid)?;
    let h = grid.step();
    let mut out = vec![0.0; u.len()];
    for (axis, f) in nodes.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            let upper = 0.5 * (f[i] + grid.neighbor(i, axis, 1).map_or(0.0, |j| f[j]));
            let lower = 0.5 * (f[i] + grid.neighbor(i, axis, -1).map_or(0.0, |j| f[j]));
            *o += (upper - lower) / h;
        }
    }
    Ok(out)
}

pub fn step_forward(u: &[f64], phi: &Potential, grid: &SpatialGrid, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let r = rate(u, phi, grid)?;
    let next: Vec<f64> = u.iter().zip(&r).map(|(a, b)| a + dt * b).collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp { frame: 1 });
    }
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct ForwardRun {
    pub field: SpaceTimeField,
    /// `max|U^n| / max|U^0|` over the run.
    pub growth: f64,
    pub warning: Option<String>,
}

pub const DEFAULT_GROWTH_LIMIT: f64 = 10.0;

pub fn solve_forward(
    u0: &[f64],
    spec: &PotentialSpec,
    grid: &SpatialGrid,
    times: &TimeGrid,
) -> Result<ForwardRun> {
    spec.validate()?;
    if spec.is_time_varying() {
        solve_forward_with(u0, grid, times, DEFAULT_GROWTH_LIMIT, |t| {
            spec.eval(grid, Some(t)).map(Cow::Owned)
        })
    } else {
        let phi = spec.eval(grid, None)?;
        solve_forward_with(u0, grid, times, DEFAULT_GROWTH_LIMIT, |_| Ok(Cow::Borrowed(&phi)))
    }
}

/// Forward solve with `potential_at(t^n)` sampled at the start of each step.
pub fn solve_forward_with<'a>(
    u0: &[f64],
    grid: &SpatialGrid,
    times: &TimeGrid,
    growth_limit: f64,
    mut potential_at: impl FnMut(f64) -> Result<Cow<'a, Potential>>,
) -> Result<ForwardRun> {
    grid.check(u0)?;
    if let Some(pos) = u0.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("initial condition is not finite at node {pos}")));
    }
    let dt = times.step();
    let mut values = Vec::with_capacity(grid.len() * times.len());
    values.extend_from_slice(u0);
    let mut current = u0.to_vec();
    let start_max = current.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut peak = start_max;
    for n in 0..times.count() {
        let phi = potential_at(times.time(n))?;
        current = step_forward(&current, &phi, grid, dt).map_err(|e| match e {
            Error::BlowUp { .. } => Error::BlowUp { frame: n + 1 },
            other => other,
        })?;
        peak = current.iter().fold(peak, |m, v| m.max(v.abs()));
        values.extend_from_slice(&current);
    }
    let growth = if start_max > 0.0 { peak / start_max } else { 1.0 };
    let warning = (growth > growth_limit)
        .then(|| format!("max |U| grew by a factor {growth:.3} (limit {growth_limit})"));
    let field = SpaceTimeField::new(*grid, *times, values)?;
    Ok(ForwardRun { field, growth, warning })
}
