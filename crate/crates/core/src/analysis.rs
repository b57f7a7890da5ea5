//! Step-response comparison and the end-to-end ladder fitting pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fdd::SeriesConfig;
use crate::fitting::{fitting_grid, pareto_sweep, select_optimal, FitProblem, OptimizerConfig, ParetoPoint};
use crate::ilt::TalbotConfig;
use crate::ladder::{build_ladder, ladder_break_frequency, ladder_freq_response, ladder_step_response, LadderSpec};
use crate::models::{fo2pdt_step_response, fopdt_step_response, fopfdd_step_response, Family, ModelParams};
use crate::signal::{SampledSignal, TimeGrid};

/// Fractions of the final value at which step errors are reported.
pub const ETAS: [f64; 3] = [0.30, 0.63, 0.90];

/// Mean of the last 1% of the samples (at least one sample).
pub fn final_value(y: &SampledSignal) -> f64 {
    let v = y.values();
    let m = (v.len() / 100).max(1);
    v[v.len() - m..].iter().sum::<f64>() / m as f64
}

/// First time `y` reaches `eta` times its final value, by linear
/// interpolation between samples. The response is taken to start from
/// `y(0) = 0`.
pub fn reach_time(y: &SampledSignal, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("fraction must lie in (0, 1), got {eta}")));
    }
    let target = eta * final_value(y);
    if !(target > 0.0) {
        return Err(Error::NotReached { eta });
    }
    let (mut t0, mut y0) = (0.0, 0.0);
    for (t, v) in y.iter() {
        if v >= target {
            return Ok(t0 + (target - y0) / (v - y0) * (t - t0));
        }
        t0 = t;
        y0 = v;
    }
    Err(Error::NotReached { eta })
}

/// Mean squared difference of two responses over `t <= t_eta`, where
/// `t_eta` is the reach time of `y_true`.
pub fn step_error(y_true: &SampledSignal, y_model: &SampledSignal, eta: f64) -> Result<f64> {
    if !y_true.grid().same_as(y_model.grid()) {
        return Err(Error::GridMismatch);
    }
    let t_eta = reach_time(y_true, eta)?;
    step_error_until(y_true, y_model, t_eta)
}

fn step_error_until(y_true: &SampledSignal, y_model: &SampledSignal, t_eta: f64) -> Result<f64> {
    let grid = y_true.grid();
    let n = grid.times().take_while(|&t| t <= t_eta * (1.0 + 1e-12)).count();
    if n == 0 {
        return Err(invalid("grid", "no samples before the reach time"));
    }
    let s: f64 = y_true.values()[..n]
        .iter()
        .zip(&y_model.values()[..n])
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(s / n as f64)
}

/// Step response of a model with explicit numerical settings.
pub fn model_step(m: &ModelParams, grid: TimeGrid, series: &SeriesConfig, talbot: &TalbotConfig) -> Result<SampledSignal> {
    match m.family() {
        Family::Fopdt => fopdt_step_response(m, grid),
        Family::Fo2pdt => fo2pdt_step_response(m, grid, talbot),
        Family::Fopfdd => fopfdd_step_response(m, grid, series),
    }
}

/// Settings of the table pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub optimizer: OptimizerConfig,
    /// Number of uniform weights in `[0, 1]`.
    pub weights: usize,
    pub series: SeriesConfig,
    pub talbot: TalbotConfig,
    /// Samples per `t_90` of the true response on the shared step grid.
    pub samples_per_t90: usize,
    /// Step grid length in multiples of `t_90`.
    pub horizon_t90: f64,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            weights: 21,
            series: SeriesConfig::default(),
            talbot: TalbotConfig::default(),
            samples_per_t90: 2000,
            horizon_t90: 3.0,
        }
    }
}

/// Ladder used as ground truth for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSystem {
    pub n: usize,
    pub omega_b: f64,
    /// `t_30`, `t_63`, `t_90` of the true step response.
    pub reach_times: [f64; 3],
    pub grid: TimeGrid,
}

/// Fit and step errors of one model family against one ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepErrorReport {
    pub n: usize,
    pub family: Family,
    pub params: ModelParams,
    pub selected: ParetoPoint,
    pub front: Vec<ParetoPoint>,
    /// `J_30`, `J_63`, `J_90`.
    pub j: [f64; 3],
    /// `t_30`, `t_63`, `t_90` of the true system.
    pub t: [f64; 3],
}

/// One `(n, family)` row. Failures are kept as messages so that one bad
/// row does not hide the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub family: Family,
    pub outcome: std::result::Result<StepErrorReport, String>,
}

/// Builds the reference for an `n`-stage unit ladder: break frequency,
/// fitting target and the shared step grid `t_s = t_90 / 2000`,
/// `t_max = 3 t_90`.
pub fn reference_system(n: usize, config: &TableConfig) -> Result<(ReferenceSystem, crate::signal::FrequencyResponseSamples, SampledSignal)> {
    let ss = build_ladder(&LadderSpec::uniform(n)?);
    let omega_b = ladder_break_frequency(&ss)?;
    let target = ladder_freq_response(&ss, &fitting_grid(omega_b))?;

    // Provisional grid to locate t_90, extended until it is reached.
    let mut horizon = 20.0 / omega_b;
    let t90 = loop {
        let g = TimeGrid::with_samples(horizon, 20_000)?;
        let y = ladder_step_response(&ss, g)?;
        let fv = final_value(&y);
        if (fv - 1.0).abs() < 1e-3 {
            break reach_time(&y, 0.9)?;
        }
        horizon *= 2.0;
        if horizon > 1e6 / omega_b {
            return Err(Error::NotReached { eta: 0.9 });
        }
    };
    let grid = TimeGrid::new(t90 / config.samples_per_t90 as f64, config.horizon_t90 * t90)?;
    let y_true = ladder_step_response(&ss, grid)?;
    let mut reach_times = [0.0; 3];
    for (slot, eta) in reach_times.iter_mut().zip(ETAS) {
        *slot = reach_time(&y_true, eta)?;
    }
    Ok((
        ReferenceSystem {
            n,
            omega_b,
            reach_times,
            grid,
        },
        target,
        y_true,
    ))
}

/// Fits one family to one reference and scores its step response.
pub fn evaluate_family(
    reference: &ReferenceSystem,
    target: &crate::signal::FrequencyResponseSamples,
    y_true: &SampledSignal,
    family: Family,
    config: &TableConfig,
) -> Result<StepErrorReport> {
    let mut problem = FitProblem::new(target.clone(), family, reference.omega_b)?;
    problem.optimizer = config.optimizer;
    problem.weight_grid = crate::fitting::weight_grid(config.weights);
    let front = pareto_sweep(&problem)?;
    let selected = select_optimal(&front)?;
    let y_model = model_step(&selected.params, reference.grid, &config.series, &config.talbot)?;
    let mut j = [0.0; 3];
    for (slot, t_eta) in j.iter_mut().zip(reference.reach_times) {
        *slot = step_error_until(y_true, &y_model, t_eta)?;
    }
    Ok(StepErrorReport {
        n: reference.n,
        family,
        params: selected.params,
        selected,
        front,
        j,
        t: reference.reach_times,
    })
}

/// Runs the whole pipeline for every `n` and family. Rows come back sorted
/// by `(n, family)`.
pub fn reproduce_tables(ns: &[usize], families: &[Family], config: &TableConfig) -> Result<Vec<TableRow>> {
    if ns.is_empty() {
        return Err(invalid("ns", "need at least one ladder size"));
    }
    if families.is_empty() {
        return Err(invalid("families", "need at least one model family"));
    }
    if let Some(&bad) = ns.iter().find(|&&n| n == 0) {
        return Err(invalid("ns", format!("ladder size must be >= 1, got {bad}")));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut families = families.to_vec();
    families.sort();
    families.dedup();

    let rows: Vec<Vec<TableRow>> = ns
        .par_iter()
        .map(|&n| match reference_system(n, config) {
            Ok((reference, target, y_true)) => families
                .par_iter()
                .map(|&family| TableRow {
                    n,
                    family,
                    outcome: evaluate_family(&reference, &target, &y_true, family, config).map_err(|e| e.to_string()),
                })
                .collect(),
            Err(e) => families
                .iter()
                .map(|&family| TableRow {
                    n,
                    family,
                    outcome: Err(e.to_string()),
                })
                .collect(),
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}
