//! Acceptance criteria 1-10. Prints one `criterion N: PASS|FAIL` line each.
//!
//! Runs all criteria by default; pass numbers to run a subset
//! (`cargo test --test acceptance -- 4 5`). Set `AGGID_ACCEPTANCE_STRICT=1` to
//! turn any FAIL into a nonzero exit status.

use std::time::Instant;

use aggid::agents::{kde_frame, sample_agents_from_density, AgentData};
use aggid::assembly::{build_operator, DerivativeMode};
use aggid::bregman::{shrink, update_radius, Penalty, RegularizerSpec, SolverConfig};
use aggid::config::ExperimentConfig;
use aggid::denoise::mls_smooth_x;
use aggid::experiment::{
    agent_density, corrupt, identify_and_evaluate, identify_time_varying, simulate, true_potential,
};
use aggid::forward::{initial_condition_1d, rate, solve_forward};
use aggid::metrics::e_phi;
use aggid::potential::{Potential, PotentialSpec};
use aggid::sweep::{alpha_grid, beta_grid, compare_regularizers, SweepTable, CELLS};
use aggid::timevary::TimeVaryingPotential;
use aggid::{SpaceTimeField, SpatialGrid, TimeGrid};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(",")
}

fn config_1d(spec: PotentialSpec, dx: f64, dt: f64, horizon: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::with_potential(spec);
    c.grid.half_count = (1.0 / dx).round() as usize;
    c.time.horizon = horizon;
    c.time.count = (horizon / dt).round() as usize;
    c
}

fn solver(alpha: f64, beta: f64, gamma: f64) -> (RegularizerSpec, SolverConfig) {
    let config = SolverConfig { gamma, ..SolverConfig::default() };
    (RegularizerSpec::tv_and_smooth(alpha, beta), config)
}

fn identify_e_phi(config: &ExperimentConfig, clean: &SpaceTimeField, seed: u64, reg: &RegularizerSpec, solver: &SolverConfig) -> f64 {
    let mut c = config.clone();
    c.seed = seed;
    let noisy = corrupt(&c, clean).expect("noise");
    let truth = true_potential(&c).expect("truth").expect("static");
    match identify_and_evaluate(&noisy, reg, solver, Some(clean), Some(&truth)) {
        Ok(run) => run.evaluation.report.e_phi.expect("e_phi"),
        Err(e) => {
            eprintln!("  seed {seed}: identification failed: {e}");
            f64::INFINITY
        }
    }
}

fn ra_data() -> (ExperimentConfig, SpaceTimeField) {
    let c = config_1d(PotentialSpec::repulsive_attractive(5.0, 2.0, 15.0), 0.01, 0.01, 3.0);
    let clean = simulate(&c).expect("simulate").field;
    (c, clean)
}

fn criterion_1() -> Outcome {
    let (c, clean) = ra_data();
    let mut per_gamma = Vec::new();
    let mut slowest: f64 = 0.0;
    for gamma in [10.0, 0.0] {
        let (reg, s) = solver(1e-5, 1e-7, gamma);
        let errs: Vec<f64> = SEEDS
            .iter()
            .map(|&seed| {
                let start = Instant::now();
                let e = identify_e_phi(&c, &clean, seed, &reg, &s);
                slowest = slowest.max(start.elapsed().as_secs_f64());
                e
            })
            .collect();
        per_gamma.push(errs);
    }
    let m10 = median(per_gamma[0].clone());
    let m0 = median(per_gamma[1].clone());
    Outcome {
        pass: m10 <= 20.0 && m0 <= 25.0 && m10 < m0 && slowest <= 300.0,
        detail: format!(
            "median e_phi gamma=10 {m10:.2}% [{}], gamma=0 {m0:.2}% [{}], slowest run {slowest:.1}s",
            fmt_list(&per_gamma[0]),
            fmt_list(&per_gamma[1])
        ),
    }
}

fn criterion_2() -> Outcome {
    let (c, clean) = ra_data();
    let s = SolverConfig { derivative_mode: DerivativeMode::Raw, ..SolverConfig::default() };
    let errs: Vec<f64> = SEEDS.iter().map(|&seed| identify_e_phi(&c, &clean, seed, &RegularizerSpec::none(), &s)).collect();
    let m = median(errs.clone());
    Outcome { pass: m >= 100.0, detail: format!("median e_phi {m:.1}% [{}]", fmt_list(&errs)) }
}

fn criterion_3() -> Outcome {
    let (reg, s) = solver(1e-5, 1e-7, 10.0);
    let mut medians = Vec::new();
    let mut detail = String::new();
    for (name, spec, horizon) in [("Morse", PotentialSpec::morse_default(), 1.0), ("Topaz", PotentialSpec::topaz_default(), 0.6)] {
        let c = config_1d(spec, 0.1, 0.1, horizon);
        let clean = simulate(&c).expect("simulate").field;
        let errs: Vec<f64> = SEEDS.iter().map(|&seed| identify_e_phi(&c, &clean, seed, &reg, &s)).collect();
        let m = median(errs.clone());
        detail += &format!("{name} median e_phi {m:.2}% [{}]; ", fmt_list(&errs));
        medians.push(m);
    }
    Outcome { pass: medians[0] <= 25.0 && medians[1] <= 20.0, detail: detail.trim_end_matches("; ").to_string() }
}

fn two_d(spec: PotentialSpec, phi_bound: f64, star_bound: f64) -> Outcome {
    let mut c = ExperimentConfig::with_potential(spec);
    c.grid.dim = 2;
    c.grid.half_count = 15;
    c.time.horizon = 4.0;
    c.time.count = 200;
    let clean = simulate(&c).expect("simulate").field;
    let truth = true_potential(&c).expect("truth").expect("static");
    let reg = RegularizerSpec::tv_and_smooth(2e-4, 2e-7);
    let s = SolverConfig { lambda: 2.0, gamma: 0.0, ..SolverConfig::default() };
    let mut phis = Vec::new();
    let mut stars = Vec::new();
    let mut slowest: f64 = 0.0;
    for &seed in &SEEDS {
        c.seed = seed;
        let start = Instant::now();
        let noisy = corrupt(&c, &clean).expect("noise");
        match identify_and_evaluate(&noisy, &reg, &s, Some(&clean), Some(&truth)) {
            Ok(run) => {
                phis.push(run.evaluation.report.e_phi.expect("e_phi"));
                stars.push(run.evaluation.report.e_star.as_ref().map_or(f64::INFINITY, |s| s.max()));
            }
            Err(e) => {
                eprintln!("  seed {seed}: {e}");
                phis.push(f64::INFINITY);
                stars.push(f64::INFINITY);
            }
        }
        slowest = slowest.max(start.elapsed().as_secs_f64());
    }
    let mp = median(phis.clone());
    let ms = median(stars.clone());
    Outcome {
        pass: mp <= phi_bound && ms <= star_bound && slowest <= 1200.0,
        detail: format!(
            "median e_phi {mp:.2}% [{}], median max e* {ms:.2}% [{}], slowest run {slowest:.1}s",
            fmt_list(&phis),
            fmt_list(&stars)
        ),
    }
}

fn criterion_4() -> Outcome {
    two_d(PotentialSpec::AttractRepel2d, 35.0, 5.0)
}

fn criterion_5() -> Outcome {
    two_d(PotentialSpec::Aniso2d, 40.0, 3.0)
}

fn criterion_6() -> Outcome {
    let (mut c, clean) = ra_data();
    c.noise.percent = 5.0;
    let (reg_sym, s_sym) = solver(1e-3, 1e-6, 20.0);
    let s_sym = SolverConfig { symmetric: true, ..s_sym };
    let (reg_full, s_full) = solver(1e-3, 5e-6, 10.0);
    let sym: Vec<f64> = SEEDS.iter().map(|&seed| identify_e_phi(&c, &clean, seed, &reg_sym, &s_sym)).collect();
    let full: Vec<f64> = SEEDS.iter().map(|&seed| identify_e_phi(&c, &clean, seed, &reg_full, &s_full)).collect();
    let (ms, mf) = (median(sym.clone()), median(full.clone()));
    Outcome {
        pass: ms < mf,
        detail: format!("median e_phi symmetric {ms:.2}% [{}], unconstrained {mf:.2}% [{}]", fmt_list(&sym), fmt_list(&full)),
    }
}

fn criterion_7() -> Outcome {
    let spec = PotentialSpec::TimeVaryingBlend {
        kappa: 8.0,
        t_b: 1.5,
        inner1: Box::new(PotentialSpec::repulsive_attractive(8.0, 3.0, 55.0)),
        inner2: Box::new(PotentialSpec::repulsive_attractive(2.0, 5.0, 15.0)),
    };
    let c = config_1d(spec.clone(), 0.01, 0.01, 5.0);
    let clean = simulate(&c).expect("simulate").field;
    let (reg, s) = solver(1e-4, 1e-7, 10.0);
    let mut averages = Vec::new();
    let mut peak_time = f64::NAN;
    for q in [1, 10, 50] {
        match identify_time_varying(&clean, &reg, &s, q, 0.5, 0.19, Some(&clean), Some(&spec)) {
            Ok(run) => {
                let failed = run.windows.iter().filter(|w| w.is_err()).count();
                if failed > 0 {
                    eprintln!("  Q = {q}: {failed} windows failed");
                }
                match &run.evaluation.report.e_tilde {
                    Some(series) => {
                        averages.push(series.time_average());
                        if q == 10 {
                            peak_time = series.argmax();
                        }
                    }
                    None => {
                        eprintln!("  Q = {q}: {}", run.evaluation.forward_warning.clone().unwrap_or_default());
                        averages.push(f64::INFINITY);
                    }
                }
            }
            Err(e) => {
                eprintln!("  Q = {q}: {e}");
                averages.push(f64::INFINITY);
            }
        }
    }
    Outcome {
        pass: averages[1] < averages[0] && averages[1] < averages[2] && (1.0..=2.0).contains(&peak_time),
        detail: format!(
            "mean e~ Q=1 {:.2}%, Q=10 {:.2}%, Q=50 {:.2}%; Q=10 peak at t={peak_time:.2}",
            averages[0], averages[1], averages[2]
        ),
    }
}

fn agent_e_tilde(c: &ExperimentConfig, clean: &SpaceTimeField, count: usize, sigma: f64, seed: u64) -> f64 {
    let mut c = c.clone();
    c.seed = seed;
    c.agents.count = count;
    c.agents.sigma = sigma;
    let agents = aggid::experiment::make_agents(&c, Some(clean)).expect("agents");
    let density = agent_density(&c, &agents).expect("density");
    let (reg, s) = solver(1e-3, 1e-7, 10.0);
    match identify_and_evaluate(&density, &reg, &s, None, None) {
        Ok(run) => run.evaluation.e_tilde_average().unwrap_or(f64::INFINITY),
        Err(e) => {
            eprintln!("  V={count} sigma={sigma} seed {seed}: {e}");
            f64::INFINITY
        }
    }
}

fn criterion_8() -> Outcome {
    let c = config_1d(PotentialSpec::repulsive_attractive(5.0, 2.0, 12.0), 0.01, 0.01, 3.0);
    let clean = simulate(&c).expect("simulate").field;
    let counts = [100, 1_000, 10_000, 100_000];
    let by_count: Vec<f64> = counts
        .iter()
        .map(|&v| median(SEEDS.iter().map(|&seed| agent_e_tilde(&c, &clean, v, 0.01, seed)).collect()))
        .collect();
    let by_sigma: Vec<f64> = [0.01, 0.1, 0.5]
        .iter()
        .map(|&sigma| {
            if sigma == 0.01 {
                by_count[2]
            } else {
                median(SEEDS.iter().map(|&seed| agent_e_tilde(&c, &clean, 10_000, sigma, seed)).collect())
            }
        })
        .collect();
    let monotone_v = by_count.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    let monotone_s = by_sigma.windows(2).all(|w| w[1] > w[0]);
    Outcome {
        pass: monotone_v && monotone_s,
        detail: format!(
            "median mean e~ over V=1e2..1e5: [{}]; over sigma=0.01,0.1,0.5 at V=1e4: [{}]",
            fmt_list(&by_count),
            fmt_list(&by_sigma)
        ),
    }
}

/// Median over seeds of each cell's best averaged e*, then the cells' ranking.
fn sweep_medians(spec: PotentialSpec, horizon: f64) -> Result<Vec<(String, f64)>, String> {
    let mut c = config_1d(spec, 0.02, 0.02, horizon);
    let clean = simulate(&c).map_err(|e| format!("clean data: {e}"))?.field;
    let s = SolverConfig { gamma: 0.0, ..SolverConfig::default() };
    let tables: Vec<SweepTable> = SEEDS
        .iter()
        .map(|&seed| {
            c.seed = seed;
            let noisy = corrupt(&c, &clean).expect("noise");
            compare_regularizers(&noisy, &clean, &s, &alpha_grid(), &beta_grid()).expect("sweep")
        })
        .collect();
    let mut out: Vec<(String, f64)> = (0..CELLS.len())
        .map(|k| {
            let label = tables[0].cells[k].label();
            (label, median(tables.iter().map(|t| t.cells[k].value.unwrap_or(f64::INFINITY)).collect()))
        })
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(out)
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    // The attractive Lipschitz point of RA(1,5,1.5) concentrates mass; the explicit
    // scheme stays nonnegative only until about t = 0.7 on this grid.
    for (theta1, theta2, m0, horizon) in [(1.0, 5.0, 1.5, 0.6), (5.0, 1.0, 2.5, 3.0)] {
        let ranked = match sweep_medians(PotentialSpec::repulsive_attractive(theta1, theta2, m0), horizon) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                detail += &format!("RA({theta1},{theta2},{m0}): {e}; ");
                continue;
            }
        };
        let tv_top = ranked[..2].iter().any(|(label, _)| label.starts_with("grad_l1"));
        pass &= tv_top;
        let top: Vec<String> = ranked[..3].iter().map(|(l, v)| format!("{l} {v:.3}")).collect();
        detail += &format!("RA({theta1},{theta2},{m0}), T={horizon} top: {}; ", top.join(", "));
    }
    Outcome { pass, detail: detail.trim_end_matches("; ").to_string() }
}

fn pseudo(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    // forward mass conservation per step
    let grid = SpatialGrid::new(1, 1.0, 100).unwrap();
    let times = TimeGrid::new(1.0, 100).unwrap();
    let u0 = initial_condition_1d(&grid, 0.6).unwrap();
    let run = solve_forward(&u0, &PotentialSpec::repulsive_attractive(5.0, 2.0, 15.0), &grid, &times).unwrap();
    let m0 = run.field.mass(0);
    let worst = (1..run.field.num_frames()).map(|n| (run.field.mass(n) - run.field.mass(n - 1)).abs() / m0).fold(0.0, f64::max);
    check(worst < 1e-12, "mass conservation");

    // shrinkage closed forms
    let s = shrink(&[vec![3.0], vec![4.0]], 2.5, 1.0);
    check((s[0][0] - 1.5).abs() < 1e-15 && (s[1][0] - 2.0).abs() < 1e-15, "shrink vector");
    check(shrink(&[vec![-0.3]], 1.0, 2.0) == vec![vec![0.0]], "shrink below threshold");
    check(shrink(&[vec![-3.0]], 2.0, 2.0) == vec![vec![-2.0]], "shrink negative");

    // radius monotone along random potentials
    let mut radius = 0.01;
    for k in 0..50 {
        let phi = Potential::new(grid, pseudo(grid.len(), k)).unwrap();
        let next = update_radius(radius, &phi, 3.0, &grid);
        check(next >= radius && next <= 1.0, "radius monotone");
        radius = next;
    }

    // MLS quadratic reproduction
    let x = grid.axis_coords();
    let quad: Vec<f64> = x.iter().map(|x| 0.3 - 1.2 * x + 2.5 * x * x).collect();
    let smoothed = mls_smooth_x(&quad, &grid, 0.04).unwrap();
    check(smoothed.iter().zip(&quad).all(|(a, b)| (a - b).abs() < 1e-10), "MLS reproduction");

    // brute-force assembly on M = 4
    for dim in [1, 2] {
        let g = SpatialGrid::new(dim, 1.0, 4).unwrap();
        let u: Vec<f64> = pseudo(g.len(), 7).iter().map(|v| v + 1.0).collect();
        let op = build_operator(&u, &g, DerivativeMode::Raw, 0.04).unwrap();
        let scale = op.amax();
        let mut worst: f64 = 0.0;
        for k in 0..g.len() {
            let mut e = vec![0.0; g.len()];
            e[k] = 1.0;
            let col = rate(&u, &Potential::new(g, e).unwrap(), &g).unwrap();
            for (i, v) in col.iter().enumerate() {
                worst = worst.max((op[(i, k)] - v).abs() / scale);
            }
        }
        check(worst < 1e-12, "assembly brute force");
    }

    // L2-only identify against gradient descent
    check(gradient_descent_agrees(), "L2 identify vs gradient descent");

    // symmetric expansion
    let half: Vec<f64> = pseudo(101, 3);
    let sym = Potential::symmetric(grid, half.clone()).unwrap();
    let full = sym.full_values();
    check((0..=100).all(|k| full[100 + k] == half[k] && full[100 - k] == half[k]), "symmetric expansion");
    check(e_phi(&sym, &sym.to_full()).unwrap() == 0.0, "symmetric e_phi");

    // glue partition of unity
    let pots: Vec<Potential> = (0..5).map(|k| Potential::new(grid, pseudo(grid.len(), k)).unwrap()).collect();
    let tv = TimeVaryingPotential::new(vec![0.25, 0.75, 1.25, 1.75, 2.25], pots, 0.19).unwrap();
    for k in 0..200 {
        let t = 2.5 * k as f64 / 199.0;
        check((tv.weights(t).iter().sum::<f64>() - 1.0).abs() < 1e-12, "glue partition of unity");
    }

    // KDE mass
    let fine = SpatialGrid::new(1, 1.0, 500).unwrap();
    let positions: Vec<f64> = pseudo(2000, 11).iter().map(|v| v * 0.8).collect();
    let agents = AgentData::new(1, vec![0.0], 2000, positions).unwrap();
    let u = kde_frame(&agents, 0, &fine, &[0.01]).unwrap();
    let mass: f64 = u.iter().sum::<f64>() * fine.step();
    check((mass - 1.0).abs() < 0.03, "KDE mass");
    let field_grid = SpatialGrid::new(1, 1.0, 100).unwrap();
    let tg = TimeGrid::new(0.01, 1).unwrap();
    let mut f = SpaceTimeField::zeros(field_grid, tg);
    for n in 0..2 {
        f.frame_mut(n).copy_from_slice(&u0);
    }
    let sampled = sample_agents_from_density(&f, 20_000, 5).unwrap();
    let kde = kde_frame(&sampled, 1, &fine, &[0.01]).unwrap();
    let mass: f64 = kde.iter().sum::<f64>() * fine.step();
    check((mass - 1.0).abs() < 0.03, "KDE mass of sampled agents");

    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() { "all properties hold".into() } else { format!("failed: {}", failures.join(", ")) },
    }
}

/// Minimizes `½ Σ Δt |A^n φ - D_t U^n|² + (α/2)|D⁺φ|² + (β/2)|D⁻D⁺φ|²` by accelerated
/// gradient descent with columns of `A^n` from the forward rate, and compares with `identify`.
fn gradient_descent_agrees() -> bool {
    let grid = SpatialGrid::new(1, 1.0, 8).unwrap();
    let times = TimeGrid::new(0.5, 5).unwrap();
    let frames: Vec<Vec<f64>> = (0..6)
        .map(|n| grid.axis_coords().iter().map(|x| (1.0 - x * x) * (1.0 + 0.1 * n as f64 * x) + 0.05 * (5.0 * x).sin()).collect())
        .collect();
    let data = SpaceTimeField::from_frames(grid, times, &frames).unwrap();
    let (alpha, beta) = (1e-2, 1e-5);
    let reg = RegularizerSpec { grad: Penalty::L2(alpha), lap: Penalty::L2(beta) };
    let config = SolverConfig { derivative_mode: DerivativeMode::Raw, ..SolverConfig::default() };
    let phi = aggid::bregman::identify(&data, &reg, &config).unwrap().potential.values().to_vec();

    let n = grid.len();
    let dt = times.step();
    let columns: Vec<Vec<Vec<f64>>> = (0..5)
        .map(|t| {
            (0..n)
                .map(|k| {
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    rate(data.frame(t), &Potential::new(grid, e).unwrap(), &grid).unwrap()
                })
                .collect()
        })
        .collect();
    let apply = |t: usize, v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (k, col) in columns[t].iter().enumerate() {
            for i in 0..n {
                out[i] += col[i] * v[k];
            }
        }
        out
    };
    let apply_t = |t: usize, r: &[f64]| -> Vec<f64> { columns[t].iter().map(|col| col.iter().zip(r).map(|(a, b)| a * b).sum()).collect() };
    let fwd = |v: &[f64]| aggid::grid::dx_forward(v, &grid, 0).unwrap();
    let fwd_t = |v: &[f64]| -> Vec<f64> { aggid::grid::dx_backward(v, &grid, 0).unwrap().iter().map(|x| -x).collect() };
    let lap = |v: &[f64]| aggid::grid::dx_backward(&fwd(v), &grid, 0).unwrap();
    let gradient = |p: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        for t in 0..5 {
            let target: Vec<f64> = data.frame(t + 1).iter().zip(data.frame(t)).map(|(a, b)| (a - b) / dt).collect();
            let resid: Vec<f64> = apply(t, p).iter().zip(&target).map(|(a, b)| a - b).collect();
            for (gi, v) in g.iter_mut().zip(apply_t(t, &resid)) {
                *gi += dt * v;
            }
        }
        for (gi, v) in g.iter_mut().zip(fwd_t(&fwd(p))) {
            *gi += alpha * v;
        }
        for (gi, v) in g.iter_mut().zip(lap(&lap(p))) {
            *gi += beta * v;
        }
        g
    };
    // Lipschitz bound by power iteration on the (affine) gradient's linear part.
    let zero = gradient(&vec![0.0; n]);
    let hess = |v: &[f64]| -> Vec<f64> { gradient(v).iter().zip(&zero).map(|(a, b)| a - b).collect() };
    let mut v = vec![1.0; n];
    let mut lip = 1.0;
    for _ in 0..500 {
        let w = hess(&v);
        lip = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / lip).collect();
    }
    let step = 1.0 / (1.05 * lip);
    let mut x = vec![0.0; n];
    let mut y = x.clone();
    let mut tk: f64 = 1.0;
    for _ in 0..2_000_000 {
        let g = gradient(&y);
        let next: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        y = next.iter().zip(&x).map(|(a, b)| a + (tk - 1.0) / t_next * (a - b)).collect();
        x = next;
        tk = t_next;
        if gradient(&x).iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-13 * lip {
            break;
        }
    }
    let diff: f64 = x.iter().zip(&phi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let rel = diff / norm;
    if rel >= 1e-5 {
        eprintln!("  gradient descent relative difference {rel:.3e}");
    }
    rel < 1e-5
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut any_fail = false;
    for (id, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        any_fail |= !outcome.pass;
        println!(
            "criterion {id}: {} ({}; {:.1}s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if any_fail && std::env::var("AGGID_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
