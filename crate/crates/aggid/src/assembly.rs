//! Per-frame linear operators `A^n` with `L_{U^n} φ = A^n φ`, the normal
//! equations they induce, and the difference matrices of the regularizers.
//!
//! Row `i` of `A^n` is the flux-form divergence
//! `(F_{i+e} - F_{i-e}) / (2Δx)` summed over axes, where
//! `F_k = U_k Δx^d Σ_j DU_{k-j} φ_j` and `U` vanishes on the outermost layer.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::denoise::{smooth_frames_in_time, MlsConfig, SpatialSmoother};
use crate::error::{Error, Result};
use crate::grid::{dx_central, zero_boundary, SpaceTimeField, SpatialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Raw,
    Sdd,
}

/// `A^n` for one data frame.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub frame: usize,
    pub matrix: DMatrix<f64>,
}

/// Flux factors, spatial derivatives and time rates extracted from a dataset.
///
/// In SDD mode the density factors come from the smoothed frames `S_x U^n` as
/// well, not only the derivatives.
#[derive(Debug, Clone)]
pub struct PreparedData {
    grid: SpatialGrid,
    dt: f64,
    factors: Vec<Vec<f64>>,
    gradients: Vec<Vec<Vec<f64>>>,
    rates: Vec<Vec<f64>>,
    denoised: SpaceTimeField,
}

impl PreparedData {
    pub fn new(data: &SpaceTimeField, mode: DerivativeMode, mls: &MlsConfig) -> Result<Self> {
        let grid = *data.grid();
        let n_steps = data.times().count();
        let dt = data.times().step();
        let base = match mode {
            DerivativeMode::Raw => data.clone(),
            DerivativeMode::Sdd => {
                let s = SpatialSmoother::new(&grid, mls.h_x)?;
                data.map_frames(|f| s.apply(f))?
            }
        };
        let smoother = match mode {
            DerivativeMode::Raw => None,
            DerivativeMode::Sdd => Some(SpatialSmoother::new(&grid, mls.h_x)?),
        };
        let mut factors = Vec::with_capacity(n_steps);
        let mut gradients = Vec::with_capacity(n_steps);
        for n in 0..n_steps {
            let factor = zero_boundary(base.frame(n), &grid);
            let grads = (0..grid.dim())
                .map(|axis| {
                    let d = dx_central(&factor, &grid, axis)?;
                    match &smoother {
                        Some(s) => s.apply(&d),
                        None => Ok(d),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            factors.push(factor);
            gradients.push(grads);
        }
        let raw_rates: Vec<Vec<f64>> = (0..n_steps)
            .map(|n| base.frame(n + 1).iter().zip(base.frame(n)).map(|(a, b)| (a - b) / dt).collect())
            .collect();
        let rates = match mode {
            DerivativeMode::Raw => raw_rates,
            DerivativeMode::Sdd => {
                let times: Vec<f64> = (0..n_steps).map(|n| data.times().time(n)).collect();
                if n_steps >= 3 {
                    smooth_frames_in_time(&raw_rates, &times, mls.h_t)?
                } else {
                    raw_rates
                }
            }
        };
        Ok(Self { grid, dt, factors, gradients, rates, denoised: base })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of frames with an operator, `N`.
    pub fn steps(&self) -> usize {
        self.rates.len()
    }

    /// The data the operators were built from: `S_x U` in SDD mode, `U` otherwise.
    pub fn denoised(&self) -> &SpaceTimeField {
        &self.denoised
    }

    pub fn rate(&self, n: usize) -> &[f64] {
        &self.rates[n]
    }

    pub fn operator(&self, n: usize) -> OperatorMatrix {
        OperatorMatrix {
            frame: n,
            matrix: operator_from_parts(&self.factors[n], &self.gradients[n], &self.grid),
        }
    }

    /// Normal equations `Σ_{n∈range} Δt (A^n)ᵀA^n φ = Σ Δt (A^n)ᵀ D_t U^n`.
    pub fn normal_system(&self, range: Range<usize>) -> Result<NormalSystem> {
        if range.is_empty() || range.end > self.steps() {
            return Err(Error::invalid(format!(
                "frame range {range:?} outside 0..{}",
                self.steps()
            )));
        }
        let n = self.grid.len();
        let mut matrix = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        let mut energy = 0.0;
        for k in range {
            let a = self.operator(k).matrix;
            let at = a.transpose();
            let rate = DVector::from_column_slice(&self.rates[k]);
            matrix.gemm(self.dt, &at, &a, 1.0);
            rhs.gemv(self.dt, &at, &rate, 1.0);
            energy += self.dt * rate.norm_squared();
        }
        // restore exact symmetry lost to rounding
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Ok(NormalSystem { matrix: sym, rhs, energy })
    }
}

/// The quadratic fidelity `½φᵀGφ - bᵀφ + ½c` of a dataset.
#[derive(Debug, Clone)]
pub struct NormalSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// `Σ Δt |D_t U^n|²`.
    pub energy: f64,
}

impl NormalSystem {
    /// Restricts the system to even potentials through `φ = Eφ_half`.
    pub fn fold_symmetric(&self, grid: &SpatialGrid) -> Result<NormalSystem> {
        let e = expansion_matrix(grid)?;
        let et = e.transpose();
        Ok(NormalSystem {
            matrix: &et * &self.matrix * &e,
            rhs: &et * &self.rhs,
            energy: self.energy,
        })
    }

    /// `½ Σ Δt |A^nφ - D_tU^n|²` without the `Δx^d` weight.
    pub fn fidelity(&self, phi: &DVector<f64>) -> f64 {
        0.5 * (phi.dot(&(&self.matrix * phi)) - 2.0 * self.rhs.dot(phi) + self.energy)
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }
}

/// `E` with `(Eφ_half)_i = φ_half[|i|]`, of shape `(2M+1) × (M+1)`.
pub fn expansion_matrix(grid: &SpatialGrid) -> Result<DMatrix<f64>> {
    if grid.dim() != 1 {
        return Err(Error::invalid("symmetric potentials are one-dimensional"));
    }
    let m = grid.half_count();
    let mut e = DMatrix::zeros(grid.len(), m + 1);
    for k in 0..grid.len() {
        e[(k, k.abs_diff(m))] = 1.0;
    }
    Ok(e)
}

fn operator_from_parts(factor: &[f64], gradients: &[Vec<f64>], grid: &SpatialGrid) -> DMatrix<f64> {
    let n = grid.len();
    let m = grid.half_count() as isize;
    let n1 = grid.axis_len() as isize;
    let scale = grid.cell_volume() / (2.0 * grid.step());
    let mut a = DMatrix::zeros(n, n);
    for (axis, du) in gradients.iter().enumerate() {
        for i in 0..n {
            for (offset, sign) in [(1isize, 1.0), (-1, -1.0)] {
                let Some(k) = grid.neighbor(i, axis, offset) else { continue };
                let coef = sign * scale * factor[k];
                if coef == 0.0 {
                    continue;
                }
                // F_k = U_k w Σ_m DU_{k-m} φ_m, with k - m indexed from -M
                let [k0, k1] = grid.multi_index(k).map(|v| v as isize);
                if grid.dim() == 1 {
                    let lo = (k0 + m - (n1 - 1)).max(0);
                    let hi = (k0 + m).min(n1 - 1);
                    for col in lo..=hi {
                        a[(i, col as usize)] += coef * du[(k0 - col + m) as usize];
                    }
                } else {
                    let (lo0, hi0) = ((k0 + m - (n1 - 1)).max(0), (k0 + m).min(n1 - 1));
                    let (lo1, hi1) = ((k1 + m - (n1 - 1)).max(0), (k1 + m).min(n1 - 1));
                    for c0 in lo0..=hi0 {
                        let row = (k0 - c0 + m) * n1;
                        for c1 in lo1..=hi1 {
                            let col = (c0 * n1 + c1) as usize;
                            a[(i, col)] += coef * du[(row + k1 - c1 + m) as usize];
                        }
                    }
                }
            }
        }
    }
    a
}

/// `A^n` of a single frame, so that `A^nφ` is the scheme's rate for density `u`.
pub fn build_operator(
    u: &[f64],
    grid: &SpatialGrid,
    mode: DerivativeMode,
    h_x: f64,
) -> Result<DMatrix<f64>> {
    grid.check(u)?;
    let (factor, smoother) = match mode {
        DerivativeMode::Raw => (zero_boundary(u, grid), None),
        DerivativeMode::Sdd => {
            let s = SpatialSmoother::new(grid, h_x)?;
            (zero_boundary(&s.apply(u)?, grid), Some(s))
        }
    };
    let grads = (0..grid.dim())
        .map(|axis| {
            let d = dx_central(&factor, grid, axis)?;
            match &smoother {
                Some(s) => s.apply(&d),
                None => Ok(d),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(operator_from_parts(&factor, &grads, grid))
}

/// Operator on the half vector `φ_0..φ_M`: the column for `φ_k` collects the
/// contributions of both `φ_k` and `φ_{-k}`.
pub fn build_operator_symmetric(
    u: &[f64],
    grid: &SpatialGrid,
    mode: DerivativeMode,
    h_x: f64,
) -> Result<DMatrix<f64>> {
    if grid.dim() != 1 {
        return Err(Error::invalid("symmetric operator needs a 1D grid"));
    }
    let full = build_operator(u, grid, mode, h_x)?;
    Ok(fold_columns(&full, grid.half_count()))
}

pub(crate) fn fold_columns(full: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let mut half = DMatrix::zeros(full.nrows(), m + 1);
    half.column_mut(0).copy_from(&full.column(m));
    for k in 1..=m {
        let sum = full.column(m + k) + full.column(m - k);
        half.column_mut(k).copy_from(&sum);
    }
    half
}

/// Dense forms of the stencils entering the φ-update.
#[derive(Debug, Clone)]
pub struct DiffMatrices {
    /// `D⁺` per axis.
    pub forward: Vec<DMatrix<f64>>,
    /// `D⁻` per axis.
    pub backward: Vec<DMatrix<f64>>,
    /// `Σ_a D⁻_a D⁺_a`.
    pub laplacian: DMatrix<f64>,
    /// `(Σ_a D⁻_a D⁺_a)²`.
    pub bilaplacian: DMatrix<f64>,
}

pub fn build_diff_matrices(grid: &SpatialGrid) -> DiffMatrices {
    let n = grid.len();
    let h = grid.step();
    let mut forward = Vec::new();
    let mut backward = Vec::new();
    for axis in 0..grid.dim() {
        let mut fwd = DMatrix::zeros(n, n);
        let mut bwd = DMatrix::zeros(n, n);
        for i in 0..n {
            fwd[(i, i)] = -1.0 / h;
            bwd[(i, i)] = 1.0 / h;
            if let Some(j) = grid.neighbor(i, axis, 1) {
                fwd[(i, j)] = 1.0 / h;
            }
            if let Some(j) = grid.neighbor(i, axis, -1) {
                bwd[(i, j)] = -1.0 / h;
            }
        }
        forward.push(fwd);
        backward.push(bwd);
    }
    finish(forward, backward)
}

/// Stencils on the half grid `0..M`, each zero-extended beyond both ends.
pub fn build_half_diff_matrices(grid: &SpatialGrid) -> Result<DiffMatrices> {
    if grid.dim() != 1 {
        return Err(Error::invalid("half-grid stencils are one-dimensional"));
    }
    let n = grid.half_count() + 1;
    let h = grid.step();
    let mut fwd = DMatrix::zeros(n, n);
    let mut bwd = DMatrix::zeros(n, n);
    for i in 0..n {
        fwd[(i, i)] = -1.0 / h;
        bwd[(i, i)] = 1.0 / h;
        if i + 1 < n {
            fwd[(i, i + 1)] = 1.0 / h;
        }
        if i > 0 {
            bwd[(i, i - 1)] = -1.0 / h;
        }
    }
    Ok(finish(vec![fwd], vec![bwd]))
}

fn finish(forward: Vec<DMatrix<f64>>, backward: Vec<DMatrix<f64>>) -> DiffMatrices {
    let n = forward[0].nrows();
    let mut laplacian = DMatrix::zeros(n, n);
    for (f, b) in forward.iter().zip(&backward) {
        laplacian += b * f;
    }
    let bilaplacian = &laplacian * &laplacian;
    DiffMatrices { forward, backward, laplacian, bilaplacian }
}
