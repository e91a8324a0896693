//! `aggid`: command-line driver for simulation, identification and evaluation runs.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 solver did not
//! converge (outputs are still written).

use std::borrow::Cow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aggid::bregman::{Init, RegularizerSpec};
use aggid::config::ExperimentConfig;
use aggid::experiment::{
    agent_density, corrupt, evaluate_with, identify_and_evaluate, identify_time_varying, make_agents, simulate,
    true_potential, Evaluation,
};
use aggid::io::{fmt_f64, read_field, read_potential, write_agents, write_diagnostics, write_error_series, write_field, write_potential, write_table};
use aggid::metrics::e_phi;
use aggid::sweep::{alpha_grid, beta_grid, compare_regularizers, TERM_LABELS};
use aggid::{Error, SpaceTimeField};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "aggid", version, about = "Identify interaction potentials of aggregation equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat JSON configuration with dotted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` entries; values are parsed as JSON, else taken as strings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    /// Identify an even potential on the half grid.
    #[arg(long)]
    symmetric: bool,
    /// Weight of the support penalty.
    #[arg(long)]
    gamma: Option<f64>,
    /// Regularizer, e.g. `grad=l1:1e-5 lap=l2:1e-7`.
    #[arg(long)]
    reg: Option<String>,
    /// Initial guess: `zero` or `h1`.
    #[arg(long)]
    init: Option<String>,
}

#[derive(Args)]
struct DataFlags {
    /// Observed field CSV; without it data are simulated and corrupted from the config.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Clean field CSV used for e*; simulated from the config when `--data` is absent.
    #[arg(long)]
    clean: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and write the clean field.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Identify a static potential and write it with diagnostics and error curves.
    Identify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        data: DataFlags,
    },
    /// Compare the eight regularizer combinations over the weight lists.
    CompareReg {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Identify a time-varying potential by splitting and merging.
    IdentifyTv {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        data: DataFlags,
        /// Number of windows (overrides `timevary.q`).
        #[arg(long)]
        q: Option<usize>,
    },
    /// Generate agents, estimate their density and optionally identify from it.
    Agents {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
        /// Also identify a potential from the estimated density.
        #[arg(long)]
        identify: bool,
    },
    /// Forward-solve with a given potential and report e*/ẽ.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataFlags,
        /// Potential CSV.
        #[arg(long)]
        potential: PathBuf,
    },
    /// Print the configuration with every default filled in.
    ShowConfig {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common, solver: Option<&SolverFlags>) -> Result<ExperimentConfig, Error> {
    let mut flat = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            match serde_json::from_str::<Value>(&text).map_err(|e| Error::Config(e.to_string()))? {
                Value::Object(map) => map,
                _ => return Err(Error::Config("configuration must be a JSON object".into())),
            }
        }
        None => Map::new(),
    };
    for entry in &common.set {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("`--set {entry}` is not KEY=VALUE")))?;
        let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        flat.insert(key.to_string(), value);
    }
    if let Some(flags) = solver {
        if flags.symmetric {
            flat.insert("solver.symmetric".into(), Value::Bool(true));
        }
        if let Some(g) = flags.gamma {
            flat.insert("solver.gamma".into(), json!(g));
        }
        if let Some(reg) = &flags.reg {
            let spec: RegularizerSpec = reg.parse()?;
            flat.insert("reg.grad".into(), Value::String(spec.grad.to_string()));
            flat.insert("reg.lap".into(), Value::String(spec.lap.to_string()));
        }
        if let Some(init) = &flags.init {
            let init: Init = init.parse()?;
            flat.insert("solver.init".into(), serde_json::to_value(init).map_err(|e| Error::Config(e.to_string()))?);
        }
    }
    if let Some(dir) = &common.out_dir {
        flat.insert("output.dir".into(), Value::String(dir.to_string_lossy().into_owned()));
    }
    ExperimentConfig::from_json_str(&Value::Object(flat).to_string())
}

fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Observed and clean data, from files or simulated from the config.
fn load_data(config: &ExperimentConfig, flags: &DataFlags) -> Result<(SpaceTimeField, Option<SpaceTimeField>), Error> {
    let width = config.grid.half_width;
    let clean = flags.clean.as_deref().map(|p| read_field(p, width)).transpose()?;
    match &flags.data {
        Some(path) => Ok((read_field(path, width)?, clean)),
        None => {
            let clean = match clean {
                Some(c) => c,
                None => simulate(config)?.field,
            };
            Ok((corrupt(config, &clean)?, Some(clean)))
        }
    }
}

fn series_summary(ev: &Evaluation) -> Value {
    json!({
        "e_star_average": ev.e_star_average(),
        "e_star_max": ev.report.e_star.as_ref().map(|s| s.max()),
        "e_tilde_average": ev.e_tilde_average(),
        "e_tilde_max": ev.report.e_tilde.as_ref().map(|s| s.max()),
        "forward_warning": ev.forward_warning,
    })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::ShowConfig { common } => {
            println!("{}", load_config(&common, None)?.to_json_string()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { common } => {
            let config = load_config(&common, None)?;
            let run = simulate(&config)?;
            let path = config.output.dir.join("clean.csv");
            write_field(&path, &run.field)?;
            let m0 = run.field.mass(0);
            let drift = (0..run.field.num_frames()).map(|n| (run.field.mass(n) - m0).abs()).fold(0.0, f64::max);
            println!("wrote {} ({} frames, mass drift {drift:.3e})", path.display(), run.field.num_frames());
            if let Some(w) = run.warning {
                eprintln!("warning: {w}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Identify { common, solver, data } => {
            let config = load_config(&common, Some(&solver))?;
            let (observed, clean) = load_data(&config, &data)?;
            let truth = true_potential(&config)?;
            let run = identify_and_evaluate(&observed, &config.regularizer(), &config.solver_config(), clean.as_ref(), truth.as_ref())?;
            let dir = &config.output.dir;
            write_potential(&dir.join("potential.csv"), &run.identification.potential)?;
            write_diagnostics(&dir.join("diagnostics.csv"), &run.identification.diagnostics)?;
            let report = &run.evaluation.report;
            write_error_series(&dir.join("errors.csv"), report.e_star.as_ref(), report.e_tilde.as_ref())?;
            let d = &run.identification.diagnostics;
            let mut summary = series_summary(&run.evaluation);
            summary["e_phi"] = json!(report.e_phi);
            summary["iterations"] = json!(d.iterations);
            summary["converged"] = json!(d.converged);
            summary["final_radius"] = json!(d.final_radius);
            summary["regularizer"] = json!(config.regularizer().to_string());
            write_json(&dir.join("report.json"), &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            Ok(if d.converged { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Command::CompareReg { common, solver } => {
            let config = load_config(&common, Some(&solver))?;
            let clean = simulate(&config)?.field;
            let observed = corrupt(&config, &clean)?;
            let table = compare_regularizers(&observed, &clean, &config.solver_config(), &alpha_grid(), &beta_grid())?;
            let dir = &config.output.dir;
            let mut header = vec![""];
            header.extend(TERM_LABELS);
            write_table(&dir.join("table.csv"), &header, &table.grid_rows())?;
            let opt = |v: Option<f64>| v.map_or(String::new(), fmt_f64);
            let rows: Vec<Vec<String>> = table
                .cells
                .iter()
                .map(|c| vec![c.label(), opt(c.alpha), opt(c.beta), opt(c.value), c.runs.to_string(), c.failures.to_string()])
                .collect();
            write_table(&dir.join("cells.csv"), &["combination", "alpha", "beta", "e_star_average", "runs", "failures"], &rows)?;
            for row in table.grid_rows() {
                println!("{}", row.join("\t"));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::IdentifyTv { common, solver, data, q } => {
            let mut config = load_config(&common, Some(&solver))?;
            if let Some(q) = q {
                config.timevary.q = q;
                config.validate()?;
            }
            let (observed, clean) = load_data(&config, &data)?;
            let tv = &config.timevary;
            let run = identify_time_varying(
                &observed,
                &config.regularizer(),
                &config.solver_config(),
                tv.q,
                tv.rho,
                tv.h,
                clean.as_ref(),
                Some(&config.potential),
            )?;
            let dir = &config.output.dir;
            let mut rows = Vec::new();
            let mut converged = true;
            for (q, w) in run.windows.iter().enumerate() {
                let (first, last) = run.partition.frames[q];
                let status = match w {
                    Ok(id) => {
                        write_potential(&dir.join(format!("potential_{:03}.csv", q + 1)), &id.potential)?;
                        converged &= id.diagnostics.converged;
                        if id.diagnostics.converged { "converged" } else { "not_converged" }.to_string()
                    }
                    Err(e) => format!("failed: {e}"),
                };
                rows.push(vec![(q + 1).to_string(), first.to_string(), last.to_string(), fmt_f64(run.partition.midpoints[q]), status]);
            }
            write_table(&dir.join("windows.csv"), &["window", "first_frame", "last_frame", "midpoint", "status"], &rows)?;
            let report = &run.evaluation.report;
            write_error_series(&dir.join("errors.csv"), report.e_star.as_ref(), report.e_tilde.as_ref())?;
            let mut summary = series_summary(&run.evaluation);
            summary["e_phi_average"] = json!(run.e_phi_average);
            summary["windows"] = json!(tv.q);
            write_json(&dir.join("report.json"), &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            Ok(if converged { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Command::Agents { common, solver, identify } => {
            let config = load_config(&common, Some(&solver))?;
            let clean = match config.agents.source {
                aggid::config::AgentSource::Density => Some(simulate(&config)?.field),
                aggid::config::AgentSource::Boids => None,
            };
            let agents = make_agents(&config, clean.as_ref())?;
            let density = agent_density(&config, &agents)?;
            let dir = &config.output.dir;
            write_agents(&dir.join("agents.csv"), &agents)?;
            write_field(&dir.join("density.csv"), &density)?;
            let masses: Vec<f64> = (0..density.num_frames()).map(|n| density.mass(n)).collect();
            let worst = masses.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
            let mut summary = json!({ "agents": agents.count(), "frames": agents.num_frames(), "max_mass_deviation": worst });
            let mut code = ExitCode::SUCCESS;
            if identify {
                let run = identify_and_evaluate(&density, &config.regularizer(), &config.solver_config(), None, None)?;
                write_potential(&dir.join("potential.csv"), &run.identification.potential)?;
                write_error_series(&dir.join("errors.csv"), None, run.evaluation.report.e_tilde.as_ref())?;
                summary["e_tilde_average"] = json!(run.evaluation.e_tilde_average());
                summary["forward_warning"] = json!(run.evaluation.forward_warning);
                if !run.identification.diagnostics.converged {
                    code = ExitCode::from(4);
                }
            }
            write_json(&dir.join("report.json"), &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            Ok(code)
        }
        Command::Evaluate { common, data, potential } => {
            let config = load_config(&common, None)?;
            let phi = read_potential(&potential)?;
            let width = config.grid.half_width;
            let clean = match (&data.clean, &data.data) {
                (Some(p), _) => Some(read_field(p, width)?),
                (None, Some(_)) => None,
                (None, None) => Some(simulate(&config)?.field),
            };
            let reference = match &data.data {
                Some(p) => read_field(p, width)?,
                None => clean.clone().expect("simulated"),
            };
            if phi.grid() != reference.grid() {
                return Err(Error::GridMismatch("potential and data grids differ".into()));
            }
            let ev = evaluate_with(&reference, clean.as_ref(), |_| Ok(Cow::Borrowed(&phi)))?;
            write_error_series(&config.output.dir.join("errors.csv"), ev.report.e_star.as_ref(), ev.report.e_tilde.as_ref())?;
            let mut summary = series_summary(&ev);
            if let Some(truth) = true_potential(&config)? {
                if truth.grid() == phi.grid() {
                    summary["e_phi"] = json!(e_phi(&phi, &truth)?);
                }
            }
            write_json(&config.output.dir.join("report.json"), &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            Ok(if ev.simulated.is_some() { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
