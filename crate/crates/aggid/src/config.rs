//! Experiment configuration as flat JSON with dotted keys, for example
//! `{"potential.kind": "morse", "grid.half_count": 50, "solver.gamma": 10}`.
//! Only `potential.kind` (plus that potential's parameters) is required.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::agents::{BoidsMode, BoidsParams, KdeConfig};
use crate::assembly::DerivativeMode;
use crate::bregman::{Init, Penalty, RegularizerSpec, SolverConfig, SymmetricClosure};
use crate::denoise::{MlsConfig, DEFAULT_WIDTH};
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::noise::NoiseSpec;
use crate::potential::PotentialSpec;
use crate::timevary::DEFAULT_GLUE_BANDWIDTH;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub half_width: f64,
    pub half_count: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dim: 1, half_width: 1.0, half_count: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: f64,
    /// Number of steps `N`; frames are `0..=N`.
    pub count: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { horizon: 3.0, count: 300 }
    }
}

/// Initial density: the compact parabolic profile of mass `mass` in 1D, two Gaussian bumps in 2D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub mass: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { mass: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub percent: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { percent: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseSection {
    pub mode: DerivativeMode,
    pub h_x: f64,
    pub h_t: f64,
}

impl Default for DenoiseSection {
    fn default() -> Self {
        Self { mode: DerivativeMode::Sdd, h_x: DEFAULT_WIDTH, h_t: DEFAULT_WIDTH }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegSection {
    pub grad: Penalty,
    pub lap: Penalty,
}

impl Default for RegSection {
    fn default() -> Self {
        Self { grad: Penalty::L1(1e-5), lap: Penalty::L2(1e-7) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub lambda: f64,
    pub gamma: f64,
    pub r0: Option<f64>,
    pub eps: f64,
    pub max_iter: usize,
    pub init: Init,
    pub symmetric: bool,
    pub closure: SymmetricClosure,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            lambda: d.lambda,
            gamma: d.gamma,
            r0: d.r0,
            eps: d.eps,
            max_iter: d.max_iter,
            init: d.init,
            symmetric: d.symmetric,
            closure: d.closure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeVarySection {
    pub q: usize,
    pub rho: f64,
    pub h: f64,
}

impl Default for TimeVarySection {
    fn default() -> Self {
        Self { q: 10, rho: 0.5, h: DEFAULT_GLUE_BANDWIDTH }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AgentSource {
    /// Sample agents from the simulated density.
    #[default]
    Density,
    /// Run the pairwise-force simulator.
    Boids,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub source: AgentSource,
    pub count: usize,
    /// Position noise σ.
    pub sigma: f64,
    /// Diagonal entry of `H`; `None` means `4Δx`.
    pub bandwidth: Option<f64>,
    pub time_smoothing: bool,
    /// Temporal bandwidth; `None` means `2Δt`.
    pub time_bandwidth: Option<f64>,
    /// Memory horizon; `None` means the temporal bandwidth.
    pub memory: Option<f64>,
    pub boids_mode: BoidsMode,
    pub boids: BoidsParams,
}

impl Default for AgentSection {
    fn default() -> Self {
        Self {
            source: AgentSource::Density,
            count: 10_000,
            sigma: 0.01,
            bandwidth: None,
            time_smoothing: true,
            time_bandwidth: None,
            memory: None,
            boids_mode: BoidsMode::Repulsive,
            boids: BoidsParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub denoise: DenoiseSection,
    #[serde(default)]
    pub reg: RegSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub timevary: TimeVarySection,
    #[serde(default)]
    pub agents: AgentSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn unflatten(flat: Map<String, Value>) -> Result<Map<String, Value>> {
    let mut root = Map::new();
    for (key, value) in flat {
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("malformed key `{key}`")));
        }
        let mut node = &mut root;
        for part in &parts[..parts.len() - 1] {
            let entry = node.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
            node = entry
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("key `{key}` conflicts with a scalar entry")))?;
        }
        let last = parts[parts.len() - 1].to_string();
        if node.contains_key(&last) {
            return Err(Error::Config(format!("key `{key}` given twice")));
        }
        node.insert(last, value);
    }
    Ok(root)
}

fn flatten_into(prefix: &str, value: Value, out: &mut Map<String, Value>) {
    match value {
        Value::Object(map) if !map.is_empty() => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
                flatten_into(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other);
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates flat dotted-key JSON.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let Value::Object(flat) = value else {
            return Err(Error::Config("configuration must be a JSON object".into()));
        };
        let nested = unflatten(flat)?;
        let has_kind = nested
            .get("potential")
            .and_then(Value::as_object)
            .is_some_and(|p| p.contains_key("kind"));
        if !has_kind {
            return Err(Error::Config("missing required field `potential.kind`".into()));
        }
        let config: Self =
            serde_json::from_value(Value::Object(nested)).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Flat JSON with every default materialized.
    pub fn to_json_string(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        let mut flat = Map::new();
        flatten_into("", value, &mut flat);
        serde_json::to_string_pretty(&Value::Object(flat)).map_err(|e| Error::Config(e.to_string()))
    }

    /// Default settings around a given potential.
    pub fn with_potential(potential: PotentialSpec) -> Self {
        Self {
            grid: GridSection::default(),
            time: TimeSection::default(),
            potential,
            initial: InitialSection::default(),
            noise: NoiseSection::default(),
            seed: 0,
            denoise: DenoiseSection::default(),
            reg: RegSection::default(),
            solver: SolverSection::default(),
            timevary: TimeVarySection::default(),
            agents: AgentSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.dim, self.grid.half_width, self.grid.half_count)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.time.horizon, self.time.count)
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec { percent: self.noise.percent, seed: self.seed }
    }

    pub fn regularizer(&self) -> RegularizerSpec {
        RegularizerSpec { grad: self.reg.grad, lap: self.reg.lap }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            lambda: self.solver.lambda,
            gamma: self.solver.gamma,
            r0: self.solver.r0,
            eps: self.solver.eps,
            max_iter: self.solver.max_iter,
            init: self.solver.init,
            symmetric: self.solver.symmetric,
            closure: self.solver.closure,
            derivative_mode: self.denoise.mode,
            mls: MlsConfig { h_x: self.denoise.h_x, h_t: self.denoise.h_t },
        }
    }

    pub fn kde_config(&self) -> Result<KdeConfig> {
        let grid = self.spatial_grid()?;
        let times = self.time_grid()?;
        let h = self.agents.bandwidth.unwrap_or(4.0 * grid.step());
        let time_bandwidth = self
            .agents
            .time_smoothing
            .then(|| self.agents.time_bandwidth.unwrap_or(2.0 * times.step()));
        Ok(KdeConfig { bandwidth: [h, h], time_bandwidth, memory: self.agents.memory })
    }

    /// Checks every section; nothing is computed before this passes.
    pub fn validate(&self) -> Result<()> {
        let grid = self.spatial_grid()?;
        let times = self.time_grid()?;
        self.potential.validate()?;
        self.potential.eval(&grid, self.potential.is_time_varying().then_some(0.0))?;
        if grid.dim() == 1 && !(self.initial.mass > 0.0 && self.initial.mass.is_finite()) {
            return Err(Error::Config("initial.mass must be positive".into()));
        }
        if !(self.noise.percent >= 0.0 && self.noise.percent.is_finite()) {
            return Err(Error::Config("noise.percent must be nonnegative".into()));
        }
        if !(self.denoise.h_x > 0.0 && self.denoise.h_t > 0.0) {
            return Err(Error::Config("denoise widths must be positive".into()));
        }
        self.solver_config().validate(&self.regularizer(), &grid)?;
        let tv = &self.timevary;
        if tv.q == 0 || tv.q > times.count() {
            return Err(Error::Config(format!("timevary.q must lie in 1..={}", times.count())));
        }
        if !(0.0..1.0).contains(&tv.rho) {
            return Err(Error::Config("timevary.rho must lie in [0, 1)".into()));
        }
        if !(tv.h > 0.0) {
            return Err(Error::Config("timevary.h must be positive".into()));
        }
        let a = &self.agents;
        if a.count == 0 {
            return Err(Error::Config("agents.count must be positive".into()));
        }
        if !(a.sigma >= 0.0 && a.sigma.is_finite()) {
            return Err(Error::Config("agents.sigma must be nonnegative".into()));
        }
        let positive = |v: Option<f64>| v.is_none_or(|v| v > 0.0 && v.is_finite());
        if !(positive(a.bandwidth) && positive(a.time_bandwidth) && positive(a.memory)) {
            return Err(Error::Config("agent bandwidths must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json_str(
            r#"{"potential.kind": "repulsive_attractive", "potential.theta1": 5, "potential.theta2": 2, "potential.m0": 15}"#,
        )
        .unwrap();
        assert_eq!(c.solver.lambda, 0.05);
        assert_eq!(c.solver_config().initial_radius(&c.spatial_grid().unwrap()), 0.01);
        assert_eq!(c.denoise.h_x, 0.04);
        assert_eq!(c.reg.grad, Penalty::L1(1e-5));
    }

    #[test]
    fn missing_potential_is_named() {
        let err = ExperimentConfig::from_json_str(r#"{"grid.dim": 1}"#).unwrap_err();
        assert!(err.to_string().contains("potential.kind"), "{err}");
        let err = ExperimentConfig::from_json_str(r#"{"potential.kind": "zero", "solver.lamda": 1}"#).unwrap_err();
        assert!(err.to_string().contains("lamda"), "{err}");
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::with_potential(PotentialSpec::TimeVaryingBlend {
            kappa: 8.0,
            t_b: 1.5,
            inner1: Box::new(PotentialSpec::repulsive_attractive(5.0, 2.0, 15.0)),
            inner2: Box::new(PotentialSpec::morse_default()),
        });
        c.solver.r0 = Some(0.2);
        c.agents.boids_mode = BoidsMode::ExpandThenConcentrate { t_switch: 2.0 };
        let text = c.to_json_string().unwrap();
        assert!(text.contains("\"potential.inner1.kind\""));
        let back = ExperimentConfig::from_json_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json_string().unwrap(), text);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_json_str(r#"{"potential.kind": "zero", "grid.dim": 3}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"potential.kind": "zero", "timevary.rho": 1.0}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"potential.kind": "zero", "reg.grad": "l3:1"}"#).is_err());
    }
}
