//! Regularizer comparison: for each of eight penalty combinations, search the
//! weight lists and keep the weights with the smallest time-averaged `e*`.

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::PreparedData;
use crate::bregman::{Penalty, RegularizerSpec, SolverConfig};
use crate::error::{Error, Result};
use crate::experiment::identify_and_evaluate_prepared;
use crate::grid::SpaceTimeField;

/// Table axis order: `|∇φ|`, `|∇²φ|`, `|∇φ|²`, `|∇²φ|²`.
pub const TERM_LABELS: [&str; 4] = ["grad_l1", "lap_l1", "grad_l2", "lap_l2"];

/// Populated `(row, column)` cells of the upper-triangle table.
pub const CELLS: [(usize, usize); 8] = [(0, 0), (0, 1), (0, 3), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3)];

/// `{1, 5} × 10^k` from `10^lo` up to `5 × 10^hi`.
pub fn one_five_ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).flat_map(|k| [format!("1e{k}"), format!("5e{k}")]).map(|s| s.parse().expect("literal")).collect()
}

/// `1e-6, 5e-6, …, 5e-2`.
pub fn alpha_grid() -> Vec<f64> {
    one_five_ladder(-6, -2)
}

/// `1e-7, 5e-7, …, 5e-3`.
pub fn beta_grid() -> Vec<f64> {
    one_five_ladder(-7, -3)
}

fn term(index: usize, weight: f64) -> (bool, Penalty) {
    match index {
        0 => (true, Penalty::L1(weight)),
        1 => (false, Penalty::L1(weight)),
        2 => (true, Penalty::L2(weight)),
        _ => (false, Penalty::L2(weight)),
    }
}

/// Candidate `(α, β, spec)` triples for one cell; `α` or `β` is `None` when that term is absent.
pub fn candidates(cell: (usize, usize), alphas: &[f64], betas: &[f64]) -> Vec<(Option<f64>, Option<f64>, RegularizerSpec)> {
    let is_grad = |k: usize| k == 0 || k == 2;
    let weights = |k: usize| if is_grad(k) { alphas } else { betas };
    let (row, col) = cell;
    let mut out = Vec::new();
    if row == col {
        for &w in weights(row) {
            let (grad, p) = term(row, w);
            let spec = if grad { RegularizerSpec { grad: p, lap: Penalty::None } } else { RegularizerSpec { grad: Penalty::None, lap: p } };
            let (a, b) = if grad { (Some(w), None) } else { (None, Some(w)) };
            out.push((a, b, spec));
        }
        return out;
    }
    let (g, l) = if is_grad(row) { (row, col) } else { (col, row) };
    for &a in alphas {
        for &b in betas {
            let spec = RegularizerSpec { grad: term(g, a).1, lap: term(l, b).1 };
            out.push((Some(a), Some(b), spec));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub row: usize,
    pub col: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Best time-averaged `e*`, `None` when every candidate failed.
    pub value: Option<f64>,
    pub runs: usize,
    pub failures: usize,
}

impl SweepCell {
    pub fn label(&self) -> String {
        if self.row == self.col {
            TERM_LABELS[self.row].to_string()
        } else {
            format!("{}+{}", TERM_LABELS[self.row], TERM_LABELS[self.col])
        }
    }

    pub fn regularizer(&self) -> Option<RegularizerSpec> {
        let pick = |k: usize| if k == 0 || k == 2 { self.alpha } else { self.beta };
        let mut spec = RegularizerSpec::none();
        for k in [self.row, self.col] {
            let (grad, p) = term(k, pick(k)?);
            if grad {
                spec.grad = p;
            } else {
                spec.lap = p;
            }
        }
        Some(spec)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    /// Cells sorted by value, failed cells last.
    pub fn ranking(&self) -> Vec<&SweepCell> {
        let mut v: Vec<&SweepCell> = self.cells.iter().collect();
        v.sort_by(|a, b| a.value.unwrap_or(f64::INFINITY).total_cmp(&b.value.unwrap_or(f64::INFINITY)));
        v
    }

    /// Rows of the 4×4 table; `---` for unpopulated or failed cells.
    pub fn grid_rows(&self) -> Vec<Vec<String>> {
        (0..4)
            .map(|r| {
                let mut row = vec![TERM_LABELS[r].to_string()];
                for c in 0..4 {
                    let cell = self.cells.iter().find(|x| x.row == r && x.col == c);
                    row.push(match cell.and_then(|x| x.value) {
                        Some(v) => format!("{v:.4}"),
                        None => "---".to_string(),
                    });
                }
                row
            })
            .collect()
    }
}

/// Worker threads: `AGGID_THREADS` if set and positive, otherwise rayon's default.
pub fn thread_count() -> Option<usize> {
    std::env::var("AGGID_THREADS").ok()?.parse().ok().filter(|&n: &usize| n > 0)
}

/// Time-averaged `e*` of one candidate; `None` when identification or re-simulation fails.
pub fn score(prepared: &PreparedData, reg: &RegularizerSpec, solver: &SolverConfig, clean: &SpaceTimeField) -> Option<f64> {
    let run = identify_and_evaluate_prepared(prepared, reg, solver, Some(clean), None).ok()?;
    run.evaluation.e_star_average().filter(|v| v.is_finite())
}

/// Runs every cell over the weight lists. Cells are independent; failures are counted per cell.
pub fn compare_regularizers(
    data: &SpaceTimeField,
    clean: &SpaceTimeField,
    solver: &SolverConfig,
    alphas: &[f64],
    betas: &[f64],
) -> Result<SweepTable> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::invalid("weight lists must be nonempty"));
    }
    solver.validate(&RegularizerSpec::tv_and_smooth(alphas[0], betas[0]), data.grid())?;
    let prepared = PreparedData::new(data, solver.derivative_mode, &solver.mls)?;
    let jobs: Vec<(usize, Option<f64>, Option<f64>, RegularizerSpec)> = CELLS
        .iter()
        .enumerate()
        .flat_map(|(k, &cell)| candidates(cell, alphas, betas).into_iter().map(move |(a, b, s)| (k, a, b, s)))
        .collect();
    let work = || -> Vec<Option<f64>> {
        jobs.par_iter().map(|(_, _, _, spec)| score(&prepared, spec, solver, clean)).collect()
    };
    let scores = match thread_count() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut cells: Vec<SweepCell> = CELLS
        .iter()
        .map(|&(row, col)| SweepCell { row, col, alpha: None, beta: None, value: None, runs: 0, failures: 0 })
        .collect();
    for ((k, a, b, _), s) in jobs.iter().zip(scores) {
        let cell = &mut cells[*k];
        cell.runs += 1;
        match s {
            None => cell.failures += 1,
            Some(v) => {
                if cell.value.is_none_or(|best| v < best) {
                    cell.value = Some(v);
                    cell.alpha = *a;
                    cell.beta = *b;
                }
            }
        }
    }
    Ok(SweepTable { cells })
}
