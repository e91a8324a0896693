//! Analytic interaction potentials and their discretization.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `m0 (|x|^θ1/θ1 - |x|^θ2/θ2) exp(-|x|²/(4τ²)) / sqrt(4πτ²)`.
    RepulsiveAttractive {
        theta1: f64,
        theta2: f64,
        m0: f64,
        #[serde(default = "default_tau")]
        tau: f64,
    },
    Morse {
        c_a: f64,
        l_a: f64,
        c_r: f64,
        l_r: f64,
        #[serde(default = "default_tau")]
        tau: f64,
    },
    Topaz {
        a: f64,
        #[serde(default = "default_tau")]
        tau: f64,
    },
    /// Two-dimensional attraction-repulsion potential.
    AttractRepel2d,
    /// Two-dimensional anisotropic Gaussian.
    Aniso2d,
    /// `g(t) φ1 + (1 - g(t)) φ2` with `g(t) = 0.5 + 0.5 tanh(κ (t - t_B))`.
    TimeVaryingBlend {
        kappa: f64,
        t_b: f64,
        inner1: Box<PotentialSpec>,
        inner2: Box<PotentialSpec>,
    },
    Tabulated { potential: Potential },
    Zero,
}

fn default_tau() -> f64 {
    0.1
}

impl PotentialSpec {
    pub fn repulsive_attractive(theta1: f64, theta2: f64, m0: f64) -> Self {
        PotentialSpec::RepulsiveAttractive { theta1, theta2, m0, tau: 0.1 }
    }

    pub fn morse_default() -> Self {
        PotentialSpec::Morse { c_a: 0.5, l_a: 0.5, c_r: 0.2, l_r: 0.4, tau: 0.1 }
    }

    pub fn topaz_default() -> Self {
        PotentialSpec::Topaz { a: -0.1, tau: 0.1 }
    }

    pub fn is_time_varying(&self) -> bool {
        matches!(self, PotentialSpec::TimeVaryingBlend { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::RepulsiveAttractive { theta1, theta2, tau, .. } => {
                if *tau <= 0.0 || *theta1 <= 0.0 || *theta2 <= 0.0 {
                    return Err(Error::invalid("power-law exponents and τ must be positive"));
                }
            }
            PotentialSpec::Morse { tau, l_a, l_r, .. } => {
                if *tau <= 0.0 || *l_a <= 0.0 || *l_r <= 0.0 {
                    return Err(Error::invalid("Morse length scales and τ must be positive"));
                }
            }
            PotentialSpec::Topaz { tau, .. } => {
                if *tau <= 0.0 {
                    return Err(Error::invalid("τ must be positive"));
                }
            }
            PotentialSpec::TimeVaryingBlend { kappa, inner1, inner2, .. } => {
                if *kappa <= 0.0 {
                    return Err(Error::invalid("κ must be positive"));
                }
                if inner1.is_time_varying() || inner2.is_time_varying() {
                    return Err(Error::invalid("blend components must be static"));
                }
                inner1.validate()?;
                inner2.validate()?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Value at a point of `ℝ^d` for static analytic variants.
    fn value_at(&self, p: [f64; 2], dim: usize) -> Result<f64> {
        let r2 = p[0] * p[0] + p[1] * p[1];
        let r = r2.sqrt();
        let gauss = |tau: f64| (-r2 / (4.0 * tau * tau)).exp() / (4.0 * PI * tau * tau).sqrt();
        let need_dim = |want: usize| {
            if dim == want {
                Ok(())
            } else {
                Err(Error::invalid(format!("potential needs a {want}D grid")))
            }
        };
        Ok(match *self {
            PotentialSpec::RepulsiveAttractive { theta1, theta2, m0, tau } => {
                if r == 0.0 {
                    0.0
                } else {
                    m0 * (r.powf(theta1) / theta1 - r.powf(theta2) / theta2) * gauss(tau)
                }
            }
            PotentialSpec::Morse { c_a, l_a, c_r, l_r, tau } => {
                (-c_a * (-r / l_a).exp() + c_r * (-r / l_r).exp()) * gauss(tau)
            }
            PotentialSpec::Topaz { a, tau } => (1.0 + r).powf(-a) * gauss(tau),
            PotentialSpec::AttractRepel2d => {
                need_dim(2)?;
                10.0 * (r2.powf(0.55) / 1.1 - r) * (-r / 0.1).exp()
            }
            PotentialSpec::Aniso2d => {
                need_dim(2)?;
                0.2 * (-(p[0] * p[0] + 3.0 * p[1] * p[1]) / 0.04).exp()
            }
            PotentialSpec::Zero => 0.0,
            _ => unreachable!("handled by eval"),
        })
    }

    /// Discretizes the potential on `grid`; `t` is required exactly for time-varying variants.
    pub fn eval(&self, grid: &SpatialGrid, t: Option<f64>) -> Result<Potential> {
        match (self, t) {
            (PotentialSpec::TimeVaryingBlend { .. }, None) => {
                Err(Error::invalid("time-varying potential evaluated without a time"))
            }
            (PotentialSpec::TimeVaryingBlend { kappa, t_b, inner1, inner2 }, Some(t)) => {
                let g = blend_weight(*kappa, *t_b, t);
                let p1 = inner1.eval(grid, None)?;
                let p2 = inner2.eval(grid, None)?;
                let values = p1.full_values().iter().zip(p2.full_values())
                    .map(|(a, b)| g * a + (1.0 - g) * b)
                    .collect();
                Potential::new(*grid, values)
            }
            (_, Some(_)) => Err(Error::invalid("static potential evaluated with a time")),
            (PotentialSpec::Tabulated { potential }, None) => {
                if potential.grid() != grid {
                    return Err(Error::GridMismatch("tabulated potential is on a different grid".into()));
                }
                Ok(potential.clone())
            }
            (spec, None) => {
                let values = (0..grid.len())
                    .map(|i| spec.value_at(grid.point(i), grid.dim()))
                    .collect::<Result<Vec<_>>>()?;
                Potential::new(*grid, values)
            }
        }
    }

    /// Evaluates at `t` when time-varying, ignores `t` otherwise.
    pub fn eval_at(&self, grid: &SpatialGrid, t: f64) -> Result<Potential> {
        if self.is_time_varying() {
            self.eval(grid, Some(t))
        } else {
            self.eval(grid, None)
        }
    }
}

pub fn blend_weight(kappa: f64, t_b: f64, t: f64) -> f64 {
    0.5 + 0.5 * (kappa * (t - t_b)).tanh()
}

/// Discretized potential, stored in full or in the symmetric half form `φ_0..φ_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    grid: SpatialGrid,
    values: Vec<f64>,
    symmetric: bool,
}

impl Potential {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        grid.check(&values)?;
        Ok(Self { grid, values, symmetric: false })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()], symmetric: false }
    }

    /// Half representation `φ_0..φ_M` of an even one-dimensional potential.
    pub fn symmetric(grid: SpatialGrid, half: Vec<f64>) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::invalid("symmetric representation is one-dimensional"));
        }
        if half.len() != grid.half_count() + 1 {
            return Err(Error::SizeMismatch { expected: grid.half_count() + 1, got: half.len() });
        }
        Ok(Self { grid, values: half, symmetric: true })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Stored values, half or full.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values on every node, expanding `φ_{-i} := φ_i` for the half form.
    pub fn full_values(&self) -> Vec<f64> {
        if !self.symmetric {
            return self.values.clone();
        }
        let m = self.grid.half_count();
        (0..self.grid.len()).map(|k| self.values[k.abs_diff(m)]).collect()
    }

    pub fn to_full(&self) -> Potential {
        Potential { grid: self.grid, values: self.full_values(), symmetric: false }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
