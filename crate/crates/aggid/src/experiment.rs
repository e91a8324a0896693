//! End-to-end pipelines shared by the command line, the examples and the tests:
//! simulate, corrupt, identify, re-simulate and score.

use std::borrow::Cow;

use crate::agents::{add_position_noise, boids_simulate, density_field, sample_agents_from_density, AgentData};
use crate::assembly::PreparedData;
use crate::bregman::{identify_prepared, Identification, RegularizerSpec, SolverConfig};
use crate::config::{AgentSource, ExperimentConfig};
use crate::error::{Error, Result};
use crate::forward::{initial_condition_1d, initial_condition_2d, solve_forward, solve_forward_with, ForwardRun, DEFAULT_GROWTH_LIMIT};
use crate::grid::{SpaceTimeField, TimeGrid};
use crate::metrics::{e_phi, e_series, ErrorReport, ErrorSeries};
use crate::noise::add_noise;
use crate::potential::{Potential, PotentialSpec};
use crate::timevary::{identify_windows, partition, TimePartition, TimeVaryingPotential};

pub fn initial_density(config: &ExperimentConfig) -> Result<Vec<f64>> {
    let grid = config.spatial_grid()?;
    match grid.dim() {
        1 => initial_condition_1d(&grid, config.initial.mass),
        _ => initial_condition_2d(&grid),
    }
}

/// Clean data from the configured potential and initial density.
pub fn simulate(config: &ExperimentConfig) -> Result<ForwardRun> {
    let grid = config.spatial_grid()?;
    let times = config.time_grid()?;
    solve_forward(&initial_density(config)?, &config.potential, &grid, &times)
}

pub fn corrupt(config: &ExperimentConfig, clean: &SpaceTimeField) -> Result<SpaceTimeField> {
    add_noise(clean, &config.noise_spec())
}

/// Re-simulation of a candidate potential and its errors.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub simulated: Option<SpaceTimeField>,
    pub report: ErrorReport,
    /// Numerical failure or growth warning from the re-simulation.
    pub forward_warning: Option<String>,
}

impl Evaluation {
    pub fn e_star_average(&self) -> Option<f64> {
        self.report.e_star.as_ref().map(ErrorSeries::time_average)
    }

    pub fn e_tilde_average(&self) -> Option<f64> {
        self.report.e_tilde.as_ref().map(ErrorSeries::time_average)
    }
}

/// Forward-solves from `reference.frame(0)` with `potential_at(t)` and scores the result
/// against `reference` (ẽ) and, when given, the clean data (e*).
pub fn evaluate_with<'a>(
    reference: &SpaceTimeField,
    clean: Option<&SpaceTimeField>,
    potential_at: impl FnMut(f64) -> Result<Cow<'a, Potential>>,
) -> Result<Evaluation> {
    let run = solve_forward_with(reference.frame(0), reference.grid(), reference.times(), DEFAULT_GROWTH_LIMIT, potential_at);
    let run = match run {
        Ok(run) => run,
        Err(e) if e.is_numerical() => {
            return Ok(Evaluation {
                simulated: None,
                report: ErrorReport { e_phi: None, e_star: None, e_tilde: None },
                forward_warning: Some(e.to_string()),
            })
        }
        Err(e) => return Err(e),
    };
    let e_tilde = Some(e_series(&run.field, reference)?);
    let e_star = clean.map(|c| e_series(&run.field, c)).transpose()?;
    Ok(Evaluation {
        simulated: Some(run.field),
        report: ErrorReport { e_phi: None, e_star, e_tilde },
        forward_warning: run.warning,
    })
}

pub fn evaluate_static(
    phi: &Potential,
    reference: &SpaceTimeField,
    clean: Option<&SpaceTimeField>,
    truth: Option<&Potential>,
) -> Result<Evaluation> {
    let mut out = evaluate_with(reference, clean, |_| Ok(Cow::Borrowed(phi)))?;
    out.report.e_phi = truth.map(|t| e_phi(phi, t)).transpose()?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct IdentifyRun {
    pub identification: Identification,
    /// `S_x U` in SDD mode, the data itself otherwise.
    pub denoised: SpaceTimeField,
    pub evaluation: Evaluation,
}

/// Identify from (noisy) `data`, then re-simulate from the denoised first frame.
pub fn identify_and_evaluate(
    data: &SpaceTimeField,
    reg: &RegularizerSpec,
    solver: &SolverConfig,
    clean: Option<&SpaceTimeField>,
    truth: Option<&Potential>,
) -> Result<IdentifyRun> {
    solver.validate(reg, data.grid())?;
    let prepared = PreparedData::new(data, solver.derivative_mode, &solver.mls)?;
    identify_and_evaluate_prepared(&prepared, reg, solver, clean, truth)
}

pub fn identify_and_evaluate_prepared(
    prepared: &PreparedData,
    reg: &RegularizerSpec,
    solver: &SolverConfig,
    clean: Option<&SpaceTimeField>,
    truth: Option<&Potential>,
) -> Result<IdentifyRun> {
    let identification = identify_prepared(prepared, 0..prepared.steps(), reg, solver)?;
    let denoised = prepared.denoised().clone();
    let evaluation = evaluate_static(&identification.potential, &denoised, clean, truth)?;
    Ok(IdentifyRun { identification, denoised, evaluation })
}

/// The true potential on the configured grid, when it is static.
pub fn true_potential(config: &ExperimentConfig) -> Result<Option<Potential>> {
    if config.potential.is_time_varying() {
        return Ok(None);
    }
    Ok(Some(config.potential.eval(&config.spatial_grid()?, None)?))
}

#[derive(Debug)]
pub struct TimeVaryingRun {
    pub partition: TimePartition,
    pub windows: Vec<Result<Identification>>,
    pub glued: TimeVaryingPotential,
    pub denoised: SpaceTimeField,
    pub evaluation: Evaluation,
    /// Mean over frames of `e_φ(glue(t^n), φ*(t^n))`, when the truth is known.
    pub e_phi_average: Option<f64>,
}

/// Splitting-and-merge identification; failed windows are dropped from the glue.
#[allow(clippy::too_many_arguments)]
pub fn identify_time_varying(
    data: &SpaceTimeField,
    reg: &RegularizerSpec,
    solver: &SolverConfig,
    count: usize,
    overlap: f64,
    bandwidth: f64,
    clean: Option<&SpaceTimeField>,
    truth: Option<&PotentialSpec>,
) -> Result<TimeVaryingRun> {
    solver.validate(reg, data.grid())?;
    let parts = partition(data.times(), count, overlap)?;
    let prepared = PreparedData::new(data, solver.derivative_mode, &solver.mls)?;
    let windows = identify_windows(&prepared, &parts, reg, solver);
    let mut midpoints = Vec::new();
    let mut potentials = Vec::new();
    for (q, w) in windows.iter().enumerate() {
        if let Ok(id) = w {
            midpoints.push(parts.midpoints[q]);
            potentials.push(id.potential.to_full());
        }
    }
    if potentials.is_empty() {
        let first = windows.into_iter().find_map(|w| w.err()).expect("at least one window");
        return Err(first);
    }
    let glued = TimeVaryingPotential::new(midpoints, potentials, bandwidth)?;
    let denoised = prepared.denoised().clone();
    let evaluation = evaluate_with(&denoised, clean, |t| glued.glue(t).map(Cow::Owned))?;
    let e_phi_average = match truth {
        Some(spec) => {
            let grid = *data.grid();
            let times = data.times();
            let mut total = 0.0;
            for n in 0..times.len() {
                let t = times.time(n);
                total += e_phi(&glued.glue(t)?, &spec.eval_at(&grid, t)?)?;
            }
            Some(total / times.len() as f64)
        }
        None => None,
    };
    Ok(TimeVaryingRun { partition: parts, windows, glued, denoised, evaluation, e_phi_average })
}

/// Agents from the configured source, with position noise applied.
pub fn make_agents(config: &ExperimentConfig, clean: Option<&SpaceTimeField>) -> Result<AgentData> {
    let a = &config.agents;
    let agents = match a.source {
        AgentSource::Density => {
            let clean = clean.ok_or_else(|| Error::invalid("density-sampled agents need a simulated field"))?;
            sample_agents_from_density(clean, a.count, config.seed)?
        }
        AgentSource::Boids => {
            let times = config.time_grid()?;
            let mut params = a.boids;
            params.dim = config.grid.dim;
            boids_simulate(a.count, times.count(), times.step(), a.boids_mode, &params, config.seed)?
        }
    };
    add_position_noise(&agents, a.sigma, config.seed.wrapping_add(1))
}

/// Grid density of agent data on the configured grid.
pub fn agent_density(config: &ExperimentConfig, agents: &AgentData) -> Result<SpaceTimeField> {
    density_field(agents, &config.spatial_grid()?, &config.kde_config()?)
}

/// Time grid check used before comparing fields from different sources.
pub fn same_times(a: &TimeGrid, b: &TimeGrid) -> bool {
    a.count() == b.count() && (a.horizon() - b.horizon()).abs() <= 1e-12 * a.horizon().abs().max(1.0)
}
