//! Split Bregman minimization of
//! `½ Σ Δt |A^nφ - D_tU^n|² + R(φ) + γ-weighted support penalty`,
//! with optional adaptive support radius and an even-potential mode.
//!
//! Every sum carries the same `Δx^d` quadrature weight, so the linear systems
//! below omit it.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assembly::{
    build_diff_matrices, build_half_diff_matrices, DerivativeMode, DiffMatrices, NormalSystem,
    PreparedData,
};
use crate::denoise::MlsConfig;
use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpatialGrid};
use crate::linalg::{max_abs, Factorization};
use crate::potential::Potential;

/// Serialized as `none`, `l1:W` or `l2:W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(into = "String", try_from = "String")]
pub enum Penalty {
    #[default]
    None,
    L1(f64),
    L2(f64),
}

impl Penalty {
    pub fn weight(&self) -> f64 {
        match *self {
            Penalty::None => 0.0,
            Penalty::L1(w) | Penalty::L2(w) => w,
        }
    }

    fn l1(&self) -> Option<f64> {
        match *self {
            Penalty::L1(w) => Some(w),
            _ => None,
        }
    }

    fn l2(&self) -> Option<f64> {
        match *self {
            Penalty::L2(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::None => write!(f, "none"),
            Penalty::L1(w) => write!(f, "l1:{w:e}"),
            Penalty::L2(w) => write!(f, "l2:{w:e}"),
        }
    }
}

impl From<Penalty> for String {
    fn from(p: Penalty) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Penalty {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(Penalty::None);
        }
        let (norm, weight) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("penalty `{s}` is not of the form l1:W or l2:W")))?;
        let weight: f64 = weight
            .parse()
            .map_err(|_| Error::invalid(format!("bad penalty weight `{weight}`")))?;
        match norm {
            "l1" => Ok(Penalty::L1(weight)),
            "l2" => Ok(Penalty::L2(weight)),
            _ => Err(Error::invalid(format!("unknown penalty norm `{norm}`"))),
        }
    }
}

/// Penalties on `∇φ` (weight α) and `∇²φ` (weight β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RegularizerSpec {
    pub grad: Penalty,
    pub lap: Penalty,
}

impl RegularizerSpec {
    /// `α|∇φ| + (β/2)|∇²φ|²`.
    pub fn tv_and_smooth(alpha: f64, beta: f64) -> Self {
        Self { grad: Penalty::L1(alpha), lap: Penalty::L2(beta) }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn has_l1(&self) -> bool {
        self.grad.l1().is_some() || self.lap.l1().is_some()
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.grad, self.lap] {
            let w = p.weight();
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid("regularizer weights must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for RegularizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "grad={} lap={}", self.grad, self.lap)
    }
}

/// Parses `grad=l1:1e-5 lap=l2:1e-7`; missing terms are `none`.
impl FromStr for RegularizerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = RegularizerSpec::none();
        for part in s.split_whitespace() {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("regularizer term `{part}` lacks `=`")))?;
            match key {
                "grad" => spec.grad = value.parse()?,
                "lap" => spec.lap = value.parse()?,
                _ => return Err(Error::invalid(format!("unknown regularizer term `{key}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Zero,
    H1,
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Init::Zero),
            "h1" => Ok(Init::H1),
            _ => Err(Error::invalid(format!("unknown init `{s}` (zero|h1)"))),
        }
    }
}

/// How the even-potential mode closes the system at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricClosure {
    /// Half-grid stencils zero-extended past the origin; the boundary term is a zero ghost flux.
    #[default]
    Variational,
    /// Replace the first equation by `φ_0 = φ_1 + (ψ_0 - b_0)Δx`.
    NaturalRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub gamma: f64,
    /// Initial support radius; `None` means `L/100`.
    pub r0: Option<f64>,
    pub eps: f64,
    pub max_iter: usize,
    pub init: Init,
    pub symmetric: bool,
    pub closure: SymmetricClosure,
    pub derivative_mode: DerivativeMode,
    pub mls: MlsConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.05,
            gamma: 0.0,
            r0: None,
            eps: 1e-6,
            max_iter: 500,
            init: Init::Zero,
            symmetric: false,
            closure: SymmetricClosure::Variational,
            derivative_mode: DerivativeMode::Sdd,
            mls: MlsConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, reg: &RegularizerSpec, grid: &SpatialGrid) -> Result<()> {
        reg.validate()?;
        if reg.has_l1() && !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("λ must be positive when an L1 term is active"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("γ must be finite and nonnegative"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("ε must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        let r0 = self.initial_radius(grid);
        if !(r0 > 0.0 && r0 <= grid.half_width()) {
            return Err(Error::invalid(format!("r0 = {r0} outside (0, L]")));
        }
        if self.symmetric && grid.dim() != 1 {
            return Err(Error::invalid("the symmetric scheme is one-dimensional"));
        }
        Ok(())
    }

    pub fn initial_radius(&self, grid: &SpatialGrid) -> f64 {
        self.r0.unwrap_or(grid.half_width() / 100.0)
    }
}

/// Iterate of the adaptive split Bregman scheme.
#[derive(Debug, Clone)]
pub struct BregmanState {
    pub phi: DVector<f64>,
    /// Gradient split variable, one vector per axis.
    pub psi: Vec<DVector<f64>>,
    pub b: Vec<DVector<f64>>,
    /// Laplacian split pair, present iff the Laplacian penalty is L1.
    pub psi_lap: Option<DVector<f64>>,
    pub b_lap: Option<DVector<f64>>,
    pub radius: f64,
    pub iteration: usize,
    pub last_delta: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub objective: Vec<f64>,
    pub delta: Vec<f64>,
    pub radius: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub last_delta: f64,
    pub final_radius: f64,
}

#[derive(Debug, Clone)]
pub struct Identification {
    pub potential: Potential,
    pub diagnostics: Diagnostics,
}

/// Isotropic soft threshold `max(0, 1 - α/(λ|p|)) p`; `p[axis][node]`.
pub fn shrink(p: &[Vec<f64>], alpha: f64, lambda: f64) -> Vec<Vec<f64>> {
    let threshold = alpha / lambda;
    let nodes = p.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; nodes]; p.len()];
    for i in 0..nodes {
        let mag = p.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt();
        if mag > threshold {
            let factor = 1.0 - threshold / mag;
            for (o, c) in out.iter_mut().zip(p) {
                o[i] = factor * c[i];
            }
        }
    }
    out
}

/// `b + Dφ - ψ`.
pub fn update_b(b: &[f64], d_phi: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
    if b.len() != d_phi.len() || b.len() != psi.len() {
        return Err(Error::SizeMismatch { expected: b.len(), got: d_phi.len().min(psi.len()) });
    }
    Ok(b.iter().zip(d_phi).zip(psi).map(|((b, d), p)| b + d - p).collect())
}

/// `r + (γ/2) ∮_{|x|=r} φ² ds`, capped at `L`. In 1D the integral is `φ(-r)² + φ(r)²`
/// at the nearest nodes; in 2D a trapezoidal rule with bilinear interpolation.
pub fn update_radius(radius: f64, phi: &Potential, gamma: f64, grid: &SpatialGrid) -> f64 {
    if gamma == 0.0 {
        return radius;
    }
    let boundary = boundary_integral(radius, phi, grid);
    (radius + 0.5 * gamma * boundary).min(grid.half_width()).max(radius)
}

fn boundary_integral(radius: f64, phi: &Potential, grid: &SpatialGrid) -> f64 {
    let h = grid.step();
    let m = grid.half_count();
    let k = ((radius / h).round() as usize).min(m);
    if phi.is_symmetric() {
        let v = phi.values()[k];
        return 2.0 * v * v;
    }
    let values = phi.values();
    if grid.dim() == 1 {
        let a = values[m - k];
        let b = values[m + k];
        return a * a + b * b;
    }
    let samples = ((2.0 * std::f64::consts::PI * radius / h).ceil() as usize * 2).max(16);
    let ds = 2.0 * std::f64::consts::PI * radius / samples as f64;
    (0..samples)
        .map(|s| {
            let theta = 2.0 * std::f64::consts::PI * s as f64 / samples as f64;
            let v = bilinear(values, grid, radius * theta.cos(), radius * theta.sin());
            v * v * ds
        })
        .sum()
}

fn bilinear(values: &[f64], grid: &SpatialGrid, x: f64, y: f64) -> f64 {
    let h = grid.step();
    let l = grid.half_width();
    let last = grid.axis_len() - 1;
    let locate = |c: f64| {
        let s = ((c + l) / h).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        (i, s - i as f64)
    };
    let (i, fx) = locate(x);
    let (j, fy) = locate(y);
    let v = |a: usize, b: usize| values[grid.flat_index([a, b])];
    (1.0 - fx) * ((1.0 - fy) * v(i, j) + fy * v(i, j + 1))
        + fx * ((1.0 - fy) * v(i + 1, j) + fy * v(i + 1, j + 1))
}

/// One identification problem: the fidelity, its regularizers and the solver settings.
pub struct Problem {
    grid: SpatialGrid,
    reg: RegularizerSpec,
    config: SolverConfig,
    system: NormalSystem,
    diff: DiffMatrices,
    /// `|x|` for each unknown.
    norms: Vec<f64>,
    /// `G + R + λS`, before the support mask.
    base: DMatrix<f64>,
    cached_mask: Option<(Vec<bool>, Factorization)>,
}

impl Problem {
    /// `system` is the full-grid normal system; it is folded here in symmetric mode.
    pub fn new(
        system: &NormalSystem,
        grid: &SpatialGrid,
        reg: &RegularizerSpec,
        config: &SolverConfig,
    ) -> Result<Self> {
        config.validate(reg, grid)?;
        if system.dim() != grid.len() {
            return Err(Error::SizeMismatch { expected: grid.len(), got: system.dim() });
        }
        let (system, diff, norms) = if config.symmetric {
            let half = system.fold_symmetric(grid)?;
            let diff = build_half_diff_matrices(grid)?;
            let norms = (0..=grid.half_count()).map(|k| k as f64 * grid.step()).collect();
            (half, diff, norms)
        } else {
            let norms = (0..grid.len()).map(|i| grid.norm(i)).collect();
            (system.clone(), build_diff_matrices(grid), norms)
        };
        let mut base = system.matrix.clone();
        if let Some(alpha) = reg.grad.l2() {
            base -= &diff.laplacian * alpha;
        }
        if let Some(beta) = reg.lap.l2() {
            base += &diff.bilaplacian * beta;
        }
        if reg.grad.l1().is_some() {
            base -= &diff.laplacian * config.lambda;
        }
        if reg.lap.l1().is_some() {
            base += &diff.bilaplacian * config.lambda;
        }
        Ok(Self {
            grid: *grid,
            reg: *reg,
            config: config.clone(),
            system,
            diff,
            norms,
            base,
            cached_mask: None,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.system.dim()
    }

    fn axes(&self) -> usize {
        self.diff.forward.len()
    }

    pub fn init_state(&self) -> Result<BregmanState> {
        let n = self.unknowns();
        let axes = self.axes();
        let lap_pair = self.reg.lap.l1().is_some();
        let mut state = BregmanState {
            phi: DVector::zeros(n),
            psi: vec![DVector::zeros(n); axes],
            b: vec![DVector::zeros(n); axes],
            psi_lap: lap_pair.then(|| DVector::zeros(n)),
            b_lap: lap_pair.then(|| DVector::zeros(n)),
            radius: self.config.initial_radius(&self.grid),
            iteration: 0,
            last_delta: f64::INFINITY,
        };
        if self.config.init == Init::H1 {
            let alpha = self.reg.grad.weight();
            let matrix = &self.system.matrix - &self.diff.laplacian * alpha;
            let phi = self.solve_constrained(&Factorization::new(reduce(&matrix, self.dirichlet()))?, &self.system.rhs)
                .map_err(|e| Error::Singular(format!("H1 initialization: {e}")))?;
            for axis in 0..axes {
                state.psi[axis] = &self.diff.forward[axis] * &phi;
            }
            if let Some(psi_lap) = state.psi_lap.as_mut() {
                *psi_lap = &self.diff.laplacian * &phi;
            }
            state.phi = phi;
        }
        Ok(state)
    }

    fn dirichlet(&self) -> bool {
        self.config.symmetric
    }

    fn natural_row(&self) -> bool {
        self.config.symmetric && self.config.closure == SymmetricClosure::NaturalRow
    }

    fn mask(&self, radius: f64) -> Vec<bool> {
        self.norms.iter().map(|&x| x > radius + 1e-12).collect()
    }

    fn factor_for(&mut self, radius: f64) -> Result<()> {
        let mask = if self.config.gamma > 0.0 { self.mask(radius) } else { vec![false; self.unknowns()] };
        if matches!(&self.cached_mask, Some((cached, _)) if *cached == mask) {
            return Ok(());
        }
        let mut matrix = self.base.clone();
        for (i, &outside) in mask.iter().enumerate() {
            if outside {
                matrix[(i, i)] += self.config.gamma;
            }
        }
        let natural = self.natural_row();
        let mut reduced = reduce(&matrix, self.dirichlet());
        let factor = if natural {
            reduced.row_mut(0).fill(0.0);
            reduced[(0, 0)] = 1.0;
            reduced[(0, 1)] = -1.0;
            Factorization::lu(reduced)?
        } else {
            Factorization::new(reduced)?
        };
        self.cached_mask = Some((mask, factor));
        Ok(())
    }

    fn solve_constrained(&self, factor: &Factorization, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let n = rhs.len();
        if !self.dirichlet() {
            return factor.solve(rhs);
        }
        let reduced = factor.solve(&rhs.rows(0, n - 1).into_owned())?;
        let mut out = DVector::zeros(n);
        out.rows_mut(0, n - 1).copy_from(&reduced);
        Ok(out)
    }

    /// Right-hand side of the φ-update for the current split variables.
    fn update_rhs(&self, state: &BregmanState) -> DVector<f64> {
        let lambda = self.config.lambda;
        let mut rhs = self.system.rhs.clone();
        if self.reg.grad.l1().is_some() {
            for axis in 0..self.axes() {
                let diff = &state.psi[axis] - &state.b[axis];
                rhs -= &self.diff.backward[axis] * diff * lambda;
            }
        }
        if let (Some(psi), Some(b)) = (&state.psi_lap, &state.b_lap) {
            rhs += &self.diff.laplacian * (psi - b) * lambda;
        }
        if self.natural_row() {
            rhs[0] = (state.psi[0][0] - state.b[0][0]) * self.grid.step();
        }
        rhs
    }

    /// Solves the linear system of the φ-update at the state's radius.
    pub fn update_phi(&mut self, state: &BregmanState) -> Result<DVector<f64>> {
        self.factor_for(state.radius)?;
        let rhs = self.update_rhs(state);
        let (_, factor) = self.cached_mask.as_ref().expect("factor cached above");
        self.solve_constrained(factor, &rhs)
    }

    /// One full iteration: φ, then the split pairs, then the radius.
    pub fn step(&mut self, state: &mut BregmanState) -> Result<()> {
        let phi = self.update_phi(state)?;
        if let Some(alpha) = self.reg.grad.l1() {
            let p: Vec<Vec<f64>> = (0..self.axes())
                .map(|a| (&state.b[a] + &self.diff.forward[a] * &phi).as_slice().to_vec())
                .collect();
            let psi = shrink(&p, alpha, self.config.lambda);
            for a in 0..self.axes() {
                let psi_a = DVector::from_vec(psi[a].clone());
                state.b[a] = DVector::from_vec(p[a].clone()) - &psi_a;
                state.psi[a] = psi_a;
            }
        }
        if let (Some(beta), Some(b_lap)) = (self.reg.lap.l1(), state.b_lap.as_mut()) {
            let p = &*b_lap + &self.diff.laplacian * &phi;
            let psi = DVector::from_vec(shrink(&[p.as_slice().to_vec()], beta, self.config.lambda).remove(0));
            *b_lap = p - &psi;
            state.psi_lap = Some(psi);
        }
        if self.config.gamma > 0.0 {
            let pot = self.potential(&phi)?;
            state.radius = update_radius(state.radius, &pot, self.config.gamma, &self.grid);
        }
        state.last_delta = max_abs(&(&phi - &state.phi));
        state.phi = phi;
        state.iteration += 1;
        Ok(())
    }

    fn potential(&self, phi: &DVector<f64>) -> Result<Potential> {
        if self.config.symmetric {
            Potential::symmetric(self.grid, phi.as_slice().to_vec())
        } else {
            Potential::new(self.grid, phi.as_slice().to_vec())
        }
    }

    /// Fidelity plus active regularizers, without the common `Δx^d` weight.
    pub fn objective(&self, phi: &DVector<f64>) -> f64 {
        let mut value = self.system.fidelity(phi);
        let grads: Vec<DVector<f64>> = self.diff.forward.iter().map(|d| d * phi).collect();
        match self.reg.grad {
            Penalty::L1(alpha) => {
                value += alpha
                    * (0..phi.len())
                        .map(|i| grads.iter().map(|g| g[i] * g[i]).sum::<f64>().sqrt())
                        .sum::<f64>();
            }
            Penalty::L2(alpha) => {
                value += 0.5 * alpha * grads.iter().map(|g| g.norm_squared()).sum::<f64>();
            }
            Penalty::None => {}
        }
        let lap = &self.diff.laplacian * phi;
        match self.reg.lap {
            Penalty::L1(beta) => value += beta * lap.iter().map(|v| v.abs()).sum::<f64>(),
            Penalty::L2(beta) => value += 0.5 * beta * lap.norm_squared(),
            Penalty::None => {}
        }
        value
    }

    pub fn run(mut self) -> Result<Identification> {
        let mut diagnostics = Diagnostics::default();
        if !self.reg.has_l1() && self.config.gamma == 0.0 && self.config.init == Init::Zero {
            let state = self.init_state()?;
            let phi = self.update_phi(&state)?;
            diagnostics.objective.push(self.objective(&phi));
            diagnostics.iterations = 1;
            diagnostics.converged = true;
            diagnostics.last_delta = max_abs(&phi);
            diagnostics.final_radius = state.radius;
            diagnostics.radius.push(state.radius);
            diagnostics.delta.push(diagnostics.last_delta);
            return Ok(Identification { potential: self.potential(&phi)?, diagnostics });
        }
        let mut state = self.init_state()?;
        while state.iteration < self.config.max_iter {
            self.step(&mut state)?;
            diagnostics.objective.push(self.objective(&state.phi));
            diagnostics.delta.push(state.last_delta);
            diagnostics.radius.push(state.radius);
            if state.last_delta < self.config.eps {
                diagnostics.converged = true;
                break;
            }
        }
        diagnostics.iterations = state.iteration;
        diagnostics.last_delta = state.last_delta;
        diagnostics.final_radius = state.radius;
        Ok(Identification { potential: self.potential(&state.phi)?, diagnostics })
    }
}

fn reduce(matrix: &DMatrix<f64>, drop_last: bool) -> DMatrix<f64> {
    if drop_last {
        let n = matrix.nrows() - 1;
        matrix.view((0, 0), (n, n)).into_owned()
    } else {
        matrix.clone()
    }
}

/// Identifies a static potential from all frames of `data`.
pub fn identify(data: &SpaceTimeField, reg: &RegularizerSpec, config: &SolverConfig) -> Result<Identification> {
    config.validate(reg, data.grid())?;
    if data.num_frames() < 2 {
        return Err(Error::invalid("identification needs at least two frames"));
    }
    let prepared = PreparedData::new(data, config.derivative_mode, &config.mls)?;
    identify_prepared(&prepared, 0..prepared.steps(), reg, config)
}

/// Identifies from the operators of frames `range` of already prepared data.
pub fn identify_prepared(
    prepared: &PreparedData,
    range: std::ops::Range<usize>,
    reg: &RegularizerSpec,
    config: &SolverConfig,
) -> Result<Identification> {
    let system = prepared.normal_system(range)?;
    Problem::new(&system, prepared.grid(), reg, config)?.run()
}
