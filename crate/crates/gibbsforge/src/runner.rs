//! Experiment orchestration: resolves "auto" knobs, runs the requested
//! experiment, and writes the output tables and summaries.

use std::path::PathBuf;
use std::sync::Arc;

use crate::config::{Experiment, ExperimentConfig};
use crate::dynamics::{
    auto_sigma, builtin_map, check_hypotheses, suggested_gamma, HypothesisReport, IntervalMap,
};
use crate::equilibrium::equilibrium_state;
use crate::error::{Error, Result};
use crate::gibbs::{default_delta, gibbs_ratio};
use crate::hyptimes::{first_time_tail, hyperbolic_times, OrbitRecord};
use crate::potentials::{builtin_potential, Potential};
use crate::report::{fmt_f64, write_csv, write_json, JsonValue, TOOLKIT_VERSION};
use crate::rng::Rng;
use crate::stability::{statistical_sweep, stochastic_sweep, PerturbationFamily};
use crate::transfer::{build_matrix, power_eigendata, EigenData, Grid};

pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 100_000;

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

struct Resolved {
    map: IntervalMap,
    phi: Potential,
    sigma: f64,
    gamma: f64,
    c: f64,
    delta: f64,
    report: HypothesisReport,
}

fn resolve(config: &ExperimentConfig) -> Result<Resolved> {
    let map = builtin_map(&config.map_name, &config.map_params)?;
    let phi = builtin_potential(&config.potential_name, &config.potential_params, &map)?;
    let sigma = config.sigma.resolve(|| auto_sigma(&map));
    let gamma = config.gamma.resolve(|| suggested_gamma(&map, sigma));
    let report = check_hypotheses(&map, &phi, sigma, gamma)?;
    let c = config.c.resolve(|| report.admissible_c);
    let delta = config.delta.resolve(|| default_delta(&map));
    Ok(Resolved { map, phi, sigma, gamma, c, delta, report })
}

fn metadata(config: &ExperimentConfig, resolved: &Resolved, grid_bins: Option<usize>) -> Vec<(&'static str, String)> {
    let mut meta = vec![
        ("toolkit_version", TOOLKIT_VERSION.to_string()),
        ("experiment", config.experiment.name().to_string()),
        ("map", resolved.map.name.clone()),
        ("potential", resolved.phi.name.clone()),
        ("seed", config.seed.to_string()),
        ("grid_n_requested", config.grid_n.to_string()),
        ("sigma", fmt_f64(resolved.sigma)),
        ("gamma", fmt_f64(resolved.gamma)),
        ("c", fmt_f64(resolved.c)),
        ("delta", fmt_f64(resolved.delta)),
        ("eigen_tol", fmt_f64(EIGEN_TOL)),
    ];
    if let Some(bins) = grid_bins {
        meta.push(("grid_n_actual", bins.to_string()));
    }
    if config.timestamp {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default();
        meta.push(("timestamp", now));
    }
    meta
}

fn eigen_for(map: &IntervalMap, phi: &Potential, grid: &Arc<Grid>) -> Result<EigenData> {
    let matrix = build_matrix(map, phi, grid)?;
    power_eigendata(&matrix, EIGEN_TOL, EIGEN_MAX_ITER)
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    std::fs::create_dir_all(&config.output_dir)?;
    let resolved = resolve(config)?;
    // every numeric experiment presumes the hypothesis gate; on failure the
    // report is still written so the failing condition is visible
    if config.experiment != Experiment::Analyze && !resolved.report.all_pass() {
        let mut outcome = run_analyze(config, &resolved)?;
        outcome.exit_code = 2;
        return Ok(outcome);
    }
    match config.experiment {
        Experiment::Analyze => run_analyze(config, &resolved),
        Experiment::Equilibrium => run_equilibrium(config, &resolved),
        Experiment::Gibbs => run_gibbs(config, &resolved),
        Experiment::Hyptimes => run_hyptimes(config, &resolved),
        Experiment::StatSweep => run_stat_sweep(config, &resolved),
        Experiment::StochSweep => run_stoch_sweep(config, &resolved),
    }
}

fn run_analyze(config: &ExperimentConfig, resolved: &Resolved) -> Result<RunOutcome> {
    let rep = &resolved.report;
    let path = config.output_dir.join("hypothesis_report.json");
    let failing: Vec<JsonValue> = rep
        .failing()
        .iter()
        .map(|s| JsonValue::Text(s.to_string()))
        .collect();
    let meta = metadata(config, resolved, None);
    let mut pairs: Vec<(&str, JsonValue)> = meta
        .iter()
        .map(|(k, v)| (*k, JsonValue::Text(v.clone())))
        .collect();
    pairs.extend([
        ("h_f", JsonValue::Number(rep.h_f)),
        ("l_sup_inside", JsonValue::Number(rep.l_sup_inside)),
        ("l_sup_outside", JsonValue::Number(rep.l_sup_outside)),
        ("sigma_used", JsonValue::Number(rep.sigma)),
        ("q", JsonValue::Integer(rep.q as i64)),
        ("p_margin", JsonValue::Number(rep.p_margin)),
        ("p_margin_weak", JsonValue::Number(rep.p_margin_weak)),
        ("eps0", JsonValue::Number(rep.eps0)),
        ("admissible_c", JsonValue::Number(rep.admissible_c)),
        ("gamma_used", JsonValue::Number(rep.gamma)),
        ("passes_H1", JsonValue::Bool(rep.passes_h1)),
        ("passes_H2", JsonValue::Bool(rep.passes_h2)),
        ("passes_P", JsonValue::Bool(rep.passes_p)),
        ("failing", JsonValue::List(failing)),
    ]);
    write_json(&path, &pairs)?;
    let exit_code = if rep.all_pass() { 0 } else { 2 };
    Ok(RunOutcome { exit_code, files: vec![path] })
}

fn run_equilibrium(config: &ExperimentConfig, resolved: &Resolved) -> Result<RunOutcome> {
    let grid = Grid::aligned(&resolved.map, config.grid_n)?;
    let eigen = eigen_for(&resolved.map, &resolved.phi, &grid)?;
    let eq = equilibrium_state(&resolved.map, &resolved.phi, &eigen)?;
    let meta = metadata(config, resolved, Some(grid.n_bins()));

    let eigen_path = config.output_dir.join("eigendata.csv");
    let rows: Vec<Vec<String>> = (0..grid.n_bins())
        .map(|j| {
            vec![
                fmt_f64(grid.midpoints()[j]),
                fmt_f64(eigen.eigenfunction[j]),
                fmt_f64(eigen.eigenmeasure.weights[j]),
            ]
        })
        .collect();
    write_csv(&eigen_path, &meta, &["midpoint", "h", "nu_weight"], &rows)?;

    let density_path = config.output_dir.join("equilibrium.csv");
    let rows: Vec<Vec<String>> = (0..grid.n_bins())
        .map(|j| {
            vec![
                fmt_f64(grid.midpoints()[j]),
                fmt_f64(eq.density_vs_nu[j]),
                fmt_f64(eq.measure.weights[j]),
            ]
        })
        .collect();
    write_csv(&density_path, &meta, &["midpoint", "density_vs_nu", "mu_weight"], &rows)?;

    let json_path = config.output_dir.join("equilibrium.json");
    let mut pairs: Vec<(&str, JsonValue)> = meta
        .iter()
        .map(|(k, v)| (*k, JsonValue::Text(v.clone())))
        .collect();
    pairs.extend([
        ("lambda", JsonValue::Number(eigen.lambda)),
        ("pressure", JsonValue::Number(eigen.lambda.ln())),
        ("residual_right", JsonValue::Number(eigen.residual_right)),
        ("residual_left", JsonValue::Number(eigen.residual_left)),
        ("iterations", JsonValue::Integer(eigen.iterations as i64)),
        ("entropy", JsonValue::Number(eq.entropy)),
        ("phi_integral", JsonValue::Number(eq.phi_integral)),
        ("variational_defect", JsonValue::Number(eq.variational_defect)),
        ("rokhlin_discrepancy", JsonValue::Number(eq.rokhlin_discrepancy)),
        ("density_sup", JsonValue::Number(eq.density_sup)),
        ("density_inf", JsonValue::Number(eq.density_inf)),
    ]);
    write_json(&json_path, &pairs)?;
    Ok(RunOutcome { exit_code: 0, files: vec![eigen_path, density_path, json_path] })
}

fn run_gibbs(config: &ExperimentConfig, resolved: &Resolved) -> Result<RunOutcome> {
    if resolved.c <= 0.0 {
        return Err(Error::InvalidParameter(
            "admissible c is zero; pass an explicit positive c".into(),
        ));
    }
    let grid = Grid::aligned(&resolved.map, config.grid_n)?;
    let eigen = eigen_for(&resolved.map, &resolved.phi, &grid)?;
    let nu = eigen.eigenmeasure.clone();
    let orbit_cap = 64;
    let point_budget = config.samples.clamp(20, 500);

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    for k in 0..point_budget {
        let mut rng = Rng::derive(config.seed, k as u64);
        let x = nu.sample(&mut rng);
        let Ok(orbit) = OrbitRecord::new(&resolved.map, x, orbit_cap) else {
            continue;
        };
        let times = hyperbolic_times(&orbit, resolved.c).times;
        for &n in times.iter().filter(|&&n| n <= 20).take(4) {
            match gibbs_ratio(
                &resolved.map,
                &resolved.phi,
                &eigen,
                &nu,
                x,
                n,
                resolved.delta,
                resolved.c,
            ) {
                Ok(r) => {
                    ratios.push(r);
                    rows.push(vec![fmt_f64(x), n.to_string(), fmt_f64(r)]);
                }
                Err(Error::DegenerateBall) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    let meta = metadata(config, resolved, Some(grid.n_bins()));
    let csv_path = config.output_dir.join("gibbs_ratios.csv");
    write_csv(&csv_path, &meta, &["x", "n", "ratio"], &rows)?;

    let sup = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let k_obs = if ratios.is_empty() { f64::NAN } else { sup.max(1.0 / inf) };
    let json_path = config.output_dir.join("gibbs_summary.json");
    let mut pairs: Vec<(&str, JsonValue)> = meta
        .iter()
        .map(|(k, v)| (*k, JsonValue::Text(v.clone())))
        .collect();
    pairs.extend([
        ("lambda", JsonValue::Number(eigen.lambda)),
        ("ratio_count", JsonValue::Integer(ratios.len() as i64)),
        ("ratio_sup", JsonValue::Number(sup)),
        ("ratio_inf", JsonValue::Number(inf)),
        ("observed_K", JsonValue::Number(k_obs)),
    ]);
    write_json(&json_path, &pairs)?;
    Ok(RunOutcome { exit_code: 0, files: vec![csv_path, json_path] })
}

fn run_hyptimes(config: &ExperimentConfig, resolved: &Resolved) -> Result<RunOutcome> {
    if resolved.c <= 0.0 {
        return Err(Error::InvalidParameter(
            "admissible c is zero; pass an explicit positive c".into(),
        ));
    }
    let grid = Grid::aligned(&resolved.map, config.grid_n)?;
    let eigen = eigen_for(&resolved.map, &resolved.phi, &grid)?;
    let nu = eigen.eigenmeasure.clone();
    let samples = config.samples.max(1000);
    let tail = first_time_tail(&resolved.map, &nu, resolved.c, config.n_max, samples, config.seed)?;

    let meta = metadata(config, resolved, Some(grid.n_bins()));
    let csv_path = config.output_dir.join("hyptimes_tail.csv");
    let rows: Vec<Vec<String>> = tail
        .tail
        .iter()
        .map(|&(n, p)| vec![n.to_string(), fmt_f64(p)])
        .collect();
    write_csv(&csv_path, &meta, &["n", "probability"], &rows)?;

    // non-lacunarity diagnostic over ν-sampled orbits
    let orbit_len = config.orbit_len.clamp(100, 100_000);
    let orbit_count = 200.min(samples);
    let mut gap_ratios: Vec<f64> = Vec::new();
    for k in 0..orbit_count {
        let mut rng = Rng::derive(config.seed ^ 0xa5a5, k as u64);
        let x0 = nu.sample(&mut rng);
        if let Ok(orbit) = OrbitRecord::sampled(&resolved.map, x0, orbit_len, &mut rng) {
            let rec = hyperbolic_times(&orbit, resolved.c);
            if rec.max_gap_ratio.is_finite() {
                gap_ratios.push(rec.max_gap_ratio);
            }
        }
    }
    gap_ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p95 = gap_ratios
        .get((gap_ratios.len() as f64 * 0.95) as usize)
        .copied()
        .unwrap_or(f64::NAN);

    let json_path = config.output_dir.join("hyptimes_summary.json");
    let mut pairs: Vec<(&str, JsonValue)> = meta
        .iter()
        .map(|(k, v)| (*k, JsonValue::Text(v.clone())))
        .collect();
    pairs.extend([
        ("mean_first_time", JsonValue::Number(tail.mean_first_time)),
        ("samples", JsonValue::Integer(tail.samples as i64)),
        ("escaped", JsonValue::Integer(tail.escaped as i64)),
        ("censored", JsonValue::Integer(tail.censored as i64)),
        ("horizon", JsonValue::Integer(tail.horizon as i64)),
        ("orbit_len", JsonValue::Integer(orbit_len as i64)),
        ("gap_ratio_p95", JsonValue::Number(p95)),
    ]);
    write_json(&json_path, &pairs)?;
    Ok(RunOutcome { exit_code: 0, files: vec![csv_path, json_path] })
}

fn run_stat_sweep(config: &ExperimentConfig, resolved: &Resolved) -> Result<RunOutcome> {
    if config.sweep.is_empty() {
        return Err(Error::InvalidParameter("stat-sweep needs a sweep list".into()));
    }
    let map_name = config.map_name.clone();
    let map_tail: Vec<f64> = config.map_params.iter().skip(1).copied().collect();
    let pot_name = config.potential_name.clone();
    let pot_params = config.potential_params.clone();
    let family = PerturbationFamily::new(
        config.sweep.clone(),
        *config.sweep.last().unwrap(),
        Arc::new(move |t| {
            let mut params = vec![t];
            params.extend_from_slice(&map_tail);
            builtin_map(&map_name, &params)
        }),
        Arc::new(move |_t, map| builtin_potential(&pot_name, &pot_params, map)),
    );
    // fixed grid across the whole family
    let grid = Grid::uniform(config.grid_n);
    let sweep = statistical_sweep(&family, &grid, resolved.sigma, resolved.gamma)?;
    write_sweep(config, resolved, &sweep.parameter, &sweep, grid.n_bins(), "parameter")
}

fn run_stoch_sweep(config: &ExperimentConfig, resolved: &Resolved) -> Result<RunOutcome> {
    if config.sweep.is_empty() {
        return Err(Error::InvalidParameter("stoch-sweep needs a sweep list".into()));
    }
    let grid = Grid::aligned(&resolved.map, config.grid_n)?;
    let sweep = stochastic_sweep(
        &resolved.map,
        &resolved.phi,
        &grid,
        &config.sweep,
        resolved.sigma,
        resolved.gamma,
    )?;
    write_sweep(config, resolved, &sweep.parameter, &sweep, grid.n_bins(), "epsilon")
}

fn write_sweep(
    config: &ExperimentConfig,
    resolved: &Resolved,
    params: &[f64],
    sweep: &crate::stability::SweepResult,
    bins: usize,
    param_label: &str,
) -> Result<RunOutcome> {
    let meta = metadata(config, resolved, Some(bins));
    let csv_path = config.output_dir.join("sweep.csv");
    let rows: Vec<Vec<String>> = params
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            vec![
                fmt_f64(p),
                fmt_f64(sweep.distance_l1[i]),
                fmt_f64(sweep.distance_kolmogorov[i]),
                fmt_f64(sweep.lambdas[i]),
                fmt_f64(sweep.pressures[i]),
            ]
        })
        .collect();
    write_csv(
        &csv_path,
        &meta,
        &[param_label, "l1_distance", "kolmogorov_distance", "lambda", "pressure"],
        &rows,
    )?;
    let json_path = config.output_dir.join("sweep_summary.json");
    let mut pairs: Vec<(&str, JsonValue)> = meta
        .iter()
        .map(|(k, v)| (*k, JsonValue::Text(v.clone())))
        .collect();
    let final_l1 = sweep.distance_l1.last().copied().unwrap_or(f64::NAN);
    pairs.extend([
        ("points", JsonValue::Integer(params.len() as i64)),
        ("final_l1_distance", JsonValue::Number(final_l1)),
        (
            "max_l1_distance",
            JsonValue::Number(sweep.distance_l1.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        ),
    ]);
    write_json(&json_path, &pairs)?;
    Ok(RunOutcome { exit_code: 0, files: vec![csv_path, json_path] })
}

/// Maps library errors onto the CLI exit convention: 2 for hypothesis
/// violations, 3 for numerical non-convergence, 1 otherwise.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::HypothesisViolated { .. } => 2,
        Error::NoConvergence { .. } => 3,
        _ => 1,
    }
}
