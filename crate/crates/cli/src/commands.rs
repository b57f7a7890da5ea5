use std::path::PathBuf;

use clap::Args;
use fopfdd::analysis::{reproduce_tables, TableConfig, TableRow};
use fopfdd::fdd::{fdd_adaptive_integrals, fdd_area, fdd_energy_numeric, fdd_energy_spectral, fdd_impulse_response};
use fopfdd::fitting::{fitting_grid, pareto_sweep, select_optimal, weight_grid, FitProblem, OptimizerConfig, ParetoPoint};
use fopfdd::ilt::TalbotConfig;
use fopfdd::ladder::{break_frequency, build_ladder, ladder_break_frequency, ladder_freq_response, ladder_step_response};
use fopfdd::models::{fo2pdt_step_response, fopdt_step_response, fopfdd_step_response, Family, ModelParams};
use fopfdd::signal::logspace;
use fopfdd::{FddParams, FrequencyResponseSamples, TimeGrid};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::failure::{CliResult, Failure};
use crate::output::{Column, Output, Table};
use crate::system::{ladder_spec, SeriesArgs, System, SystemArgs};

#[derive(Debug, Args)]
pub struct ImpulseArgs {
    /// Delay scale L in seconds.
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    /// Fractional exponent, in (0, 1).
    #[arg(long)]
    pub alpha: f64,
    /// Sample period; defaults to t_max / 2000.
    #[arg(long = "t-s")]
    pub t_s: Option<f64>,
    /// Final time; defaults to 40 L.
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[command(flatten)]
    pub series: SeriesArgs,
}

pub fn impulse(args: &ImpulseArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let params = FddParams::new(args.l, args.alpha)?;
    let config = args.series.config()?;
    let t_max = args.t_max.unwrap_or(40.0 * args.l);
    let t_s = args.t_s.unwrap_or(t_max / 2000.0);
    let grid = TimeGrid::new(t_s, t_max)?;
    let f = fdd_impulse_response(params, grid, &config)?;

    out.table(
        "impulse",
        &Table::new()
            .with("t", Column::Float(grid.times().collect()))
            .with("f", Column::Float(f.values().to_vec())),
    )?;

    // The grid only holds part of the mass; the octave chain certifies the
    // whole-line area and energy.
    let (area, energy, window, adaptive_error) = match fdd_adaptive_integrals(params, &config) {
        Ok(r) => (json!(r.area), json!(r.energy), json!([r.t_min, r.t_max]), Value::Null),
        Err(e) => (Value::Null, Value::Null, Value::Null, json!(e.to_string())),
    };
    let (k, peak) = f.argmax();
    let config_json = json!({
        "L": args.l,
        "alpha": args.alpha,
        "t_s": t_s,
        "t_max": t_max,
        "series": config,
    });
    let summary = json!({
        "area": area,
        "energy": energy,
        "adaptive_window": window,
        "adaptive_error": adaptive_error,
        "area_grid": fdd_area(&f),
        "energy_grid": fdd_energy_numeric(&f),
        "energy_spectral": fdd_energy_spectral(params),
        "argmax": { "t": grid.time(k), "f": peak },
        "samples": grid.len(),
    });
    out.json("impulse_summary.json", &summary)?;
    out.manifest("impulse", seed, config_json)
}

#[derive(Debug, Args)]
pub struct FreqRespArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long = "omega-min", default_value_t = 1e-3)]
    pub omega_min: f64,
    #[arg(long = "omega-max", default_value_t = 1e3)]
    pub omega_max: f64,
    /// Log-spaced frequencies between the bounds.
    #[arg(long, default_value_t = 500)]
    pub points: usize,
}

pub fn freqresp(args: &FreqRespArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    if !(args.omega_min.is_finite() && args.omega_min > 0.0) {
        return Err(Failure::usage("--omega-min", format!("must be > 0, got {}", args.omega_min)));
    }
    if !(args.omega_max.is_finite() && args.omega_max > args.omega_min) {
        return Err(Failure::usage(
            "--omega-max",
            format!("must exceed --omega-min = {}, got {}", args.omega_min, args.omega_max),
        ));
    }
    if args.points < 2 {
        return Err(Failure::usage("--points", "need at least 2 frequencies"));
    }
    let system = args.system.resolve()?;
    let omegas = logspace(args.omega_min, args.omega_max, args.points);
    let (mag, phase) = system.bode(&omegas)?;
    out.table(
        "freqresp",
        &Table::new()
            .with("omega", Column::Float(omegas))
            .with("mag_db", Column::Float(mag))
            .with("phase_rad", Column::Float(phase)),
    )?;
    let config = json!({
        "system": system.describe(),
        "omega_min": args.omega_min,
        "omega_max": args.omega_max,
        "points": args.points,
    });
    out.manifest("freqresp", seed, config)
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("stages").required(true).args(["ladder", "r"])))]
pub struct LadderArgs {
    /// Uniform ladder with N unit stages.
    #[arg(long, value_name = "N")]
    pub ladder: Option<usize>,
    #[arg(long = "r", value_delimiter = ',', num_args = 1.., requires = "c")]
    pub r: Option<Vec<f64>>,
    #[arg(long = "c", value_delimiter = ',', num_args = 1.., requires = "r")]
    pub c: Option<Vec<f64>>,
}


fn matrix_rows(m: &DMatrix<f64>) -> Value {
    json!(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

pub fn ladder(args: &LadderArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let spec = ladder_spec(args.ladder, &args.r, &args.c)?;
    let ss = build_ladder(&spec);
    let (num, den) = ss.transfer_function();
    let eig: Vec<[f64; 2]> = ss.eigenvalues().iter().map(|z| [z.re, z.im]).collect();
    let report = json!({
        "n": spec.n(),
        "E": matrix_rows(&ss.e),
        "A": matrix_rows(&ss.a),
        "B": ss.b.iter().collect::<Vec<_>>(),
        "C": ss.c.iter().collect::<Vec<_>>(),
        "A_hat": matrix_rows(&ss.a_hat),
        "B_hat": ss.b_hat.iter().collect::<Vec<_>>(),
        "numerator": num,
        "denominator": den,
        "dc_gain": ss.dc_gain()?,
        "break_frequency": ladder_break_frequency(&ss)?,
        "eigenvalues": eig,
    });
    out.json("ladder.json", &report)?;
    let config = json!({
        "resistances": spec.resistances(),
        "capacitances": spec.capacitances(),
    });
    out.manifest("ladder", seed, config)
}

#[derive(Debug, Args)]
pub struct StepRespArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Sample period; defaults to t_max / 2000.
    #[arg(long = "t-s")]
    pub t_s: Option<f64>,
    #[arg(long = "t-max", default_value_t = 10.0)]
    pub t_max: f64,
    #[command(flatten)]
    pub series: SeriesArgs,
}

pub fn stepresp(args: &StepRespArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let system = args.system.resolve()?;
    let series = args.series.config()?;
    let talbot = TalbotConfig::default();
    let t_s = args.t_s.unwrap_or(args.t_max / 2000.0);
    let grid = TimeGrid::new(t_s, args.t_max)?;
    let y = match &system {
        System::Ladder(_, ss) => ladder_step_response(ss, grid)?,
        System::Model(m) => match m.family() {
            Family::Fopdt => fopdt_step_response(m, grid)?,
            Family::Fo2pdt => fo2pdt_step_response(m, grid, &talbot)?,
            Family::Fopfdd => fopfdd_step_response(m, grid, &series)?,
        },
        System::Fdd(p) => fdd_impulse_response(*p, grid, &series)?.cumulative_integral(),
    };
    out.table(
        "step",
        &Table::new()
            .with("t", Column::Float(grid.times().collect()))
            .with("y", Column::Float(y.into_values())),
    )?;
    let config = json!({
        "system": system.describe(),
        "t_s": t_s,
        "t_max": args.t_max,
        "series": series,
        "talbot": talbot,
    });
    out.manifest("stepresp", seed, config)
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["ladder", "r", "target"])))]
pub struct FitArgs {
    /// Fit the response of a uniform ladder with N unit stages.
    #[arg(long, value_name = "N")]
    pub ladder: Option<usize>,
    #[arg(long = "r", value_delimiter = ',', num_args = 1.., requires = "c")]
    pub r: Option<Vec<f64>>,
    #[arg(long = "c", value_delimiter = ',', num_args = 1.., requires = "r")]
    pub c: Option<Vec<f64>>,
    /// CSV with columns omega, re, im.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Break frequency of the target; found from the data when omitted.
    #[arg(long = "omega-b")]
    pub omega_b: Option<f64>,
    /// Model family: fopdt, fo2pdt, fopfdd (or h1, h2, h3).
    #[arg(long)]
    pub family: String,
    /// Number of uniform weights on [0, 1].
    #[arg(long, default_value_t = 21)]
    pub weights: usize,
    /// Random starts per weight.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long = "max-iterations", default_value_t = 2000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
}

#[derive(Deserialize)]
struct TargetRow {
    omega: f64,
    re: f64,
    im: f64,
}

fn read_target(path: &PathBuf) -> CliResult<FrequencyResponseSamples> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::usage("--target", format!("cannot read {}: {e}", path.display())))?;
    let mut omegas = Vec::new();
    let mut values = Vec::new();
    for row in reader.deserialize::<TargetRow>() {
        let row = row.map_err(|e| Failure::usage("--target", format!("{}: {e}", path.display())))?;
        omegas.push(row.omega);
        values.push(Complex64::new(row.re, row.im));
    }
    FrequencyResponseSamples::new(omegas, values).map_err(|e| Failure::usage("--target", e))
}

fn params_columns(points: &[ParetoPoint]) -> [Vec<f64>; 4] {
    let get = |f: fn(&ModelParams) -> f64| points.iter().map(|p| f(&p.params)).collect();
    [
        get(ModelParams::k),
        get(ModelParams::tau),
        get(ModelParams::l),
        get(|m| m.alpha().unwrap_or(f64::NAN)),
    ]
}

pub fn fit(args: &FitArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let family: Family = args.family.parse()?;
    if args.weights == 0 {
        return Err(Failure::usage("--weights", "need at least one weight"));
    }
    let (target, omega_b, source) = match &args.target {
        Some(path) => {
            let target = read_target(path)?;
            let omega_b = match args.omega_b {
                Some(w) => w,
                None => break_frequency(&target)?,
            };
            (target, omega_b, json!({ "target": path.display().to_string() }))
        }
        None => {
            let spec = ladder_spec(args.ladder, &args.r, &args.c)?;
            let ss = build_ladder(&spec);
            let omega_b = match args.omega_b {
                Some(w) => w,
                None => ladder_break_frequency(&ss)?,
            };
            let target = ladder_freq_response(&ss, &fitting_grid(omega_b))?;
            let source = json!({
                "resistances": spec.resistances(),
                "capacitances": spec.capacitances(),
            });
            (target, omega_b, source)
        }
    };
    let mut problem = FitProblem::new(target, family, omega_b)?;
    problem.weight_grid = weight_grid(args.weights);
    problem.optimizer = OptimizerConfig {
        restarts: args.restarts,
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        seed,
    };
    let front = pareto_sweep(&problem)?;
    let selected = select_optimal(&front)?;

    let [k, tau, l, alpha] = params_columns(&front);
    out.table(
        "front",
        &Table::new()
            .with("q1", Column::Float(front.iter().map(|p| p.q1).collect()))
            .with("e_mag", Column::Float(front.iter().map(|p| p.e_mag).collect()))
            .with("e_phase", Column::Float(front.iter().map(|p| p.e_phase).collect()))
            .with("K", Column::Float(k))
            .with("tau", Column::Float(tau))
            .with("L", Column::Float(l))
            .with("alpha", Column::Float(alpha))
            .with("stalled", Column::Bool(front.iter().map(|p| p.stalled).collect()))
            .with("converged", Column::Bool(front.iter().map(|p| p.converged).collect()))
            .with("evaluations", Column::Int(front.iter().map(|p| p.evaluations as u64).collect())),
    )?;
    out.json(
        "selected.json",
        &json!({
            "family": family,
            "omega_b": omega_b,
            "point": selected,
        }),
    )?;
    let config = json!({
        "source": source,
        "family": family,
        "omega_b": omega_b,
        "bounds": problem.bounds,
        "weight_grid": problem.weight_grid,
        "optimizer": problem.optimizer,
    });
    out.manifest("fit", seed, config)?;
    match selected.stall_error() {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    /// Ladder sizes, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "4,5,6,7,8,32,64")]
    pub ns: Vec<usize>,
    /// Model families, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "fopdt,fo2pdt,fopfdd")]
    pub families: Vec<String>,
    #[arg(long, default_value_t = 21)]
    pub weights: usize,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long = "samples-per-t90", default_value_t = 2000)]
    pub samples_per_t90: usize,
    #[arg(long = "horizon-t90", default_value_t = 3.0)]
    pub horizon_t90: f64,
}

fn text_column(rows: &[TableRow], f: impl Fn(&TableRow) -> String) -> Column {
    Column::Text(rows.iter().map(f).collect())
}

fn float_column(rows: &[TableRow], f: impl Fn(&fopfdd::analysis::StepErrorReport) -> f64) -> Column {
    Column::Float(rows.iter().map(|r| r.outcome.as_ref().map_or(f64::NAN, &f)).collect())
}

pub fn tables(args: &TablesArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let families = args
        .families
        .iter()
        .map(|f| f.parse::<Family>())
        .collect::<Result<Vec<_>, _>>()?;
    if args.weights == 0 {
        return Err(Failure::usage("--weights", "need at least one weight"));
    }
    let config = TableConfig {
        optimizer: OptimizerConfig {
            restarts: args.restarts,
            seed,
            ..OptimizerConfig::default()
        },
        weights: args.weights,
        samples_per_t90: args.samples_per_t90,
        horizon_t90: args.horizon_t90,
        ..TableConfig::default()
    };
    let rows = reproduce_tables(&args.ns, &families, &config)?;

    let n = Column::Int(rows.iter().map(|r| r.n as u64).collect());
    let status = |r: &TableRow| match &r.outcome {
        Ok(_) => "ok".to_string(),
        Err(e) => e.clone(),
    };
    out.csv(
        "table1.csv",
        &Table::new()
            .with("n", n)
            .with("model", text_column(&rows, |r| r.family.label().into()))
            .with("family", text_column(&rows, |r| r.family.name().into()))
            .with("K", float_column(&rows, |s| s.params.k()))
            .with("tau", float_column(&rows, |s| s.params.tau()))
            .with("L", float_column(&rows, |s| s.params.l()))
            .with("alpha", float_column(&rows, |s| s.params.alpha().unwrap_or(f64::NAN)))
            .with("q1", float_column(&rows, |s| s.selected.q1))
            .with("e_mag", float_column(&rows, |s| s.selected.e_mag))
            .with("e_phase", float_column(&rows, |s| s.selected.e_phase))
            .with("status", text_column(&rows, status)),
    )?;
    out.csv(
        "table2.csv",
        &Table::new()
            .with("n", Column::Int(rows.iter().map(|r| r.n as u64).collect()))
            .with("model", text_column(&rows, |r| r.family.label().into()))
            .with("family", text_column(&rows, |r| r.family.name().into()))
            .with("J30", float_column(&rows, |s| s.j[0]))
            .with("J63", float_column(&rows, |s| s.j[1]))
            .with("J90", float_column(&rows, |s| s.j[2]))
            .with("t30", float_column(&rows, |s| s.t[0]))
            .with("t63", float_column(&rows, |s| s.t[1]))
            .with("t90", float_column(&rows, |s| s.t[2]))
            .with("status", text_column(&rows, status)),
    )?;

    // Every front point of every row, for trade-off plots.
    let mut fn_ = Vec::new();
    let mut fm = Vec::new();
    let mut fq = Vec::new();
    let mut fe = Vec::new();
    let mut fp = Vec::new();
    for r in &rows {
        if let Ok(rep) = &r.outcome {
            for p in &rep.front {
                fn_.push(r.n as u64);
                fm.push(r.family.label().to_string());
                fq.push(p.q1);
                fe.push(p.e_mag);
                fp.push(p.e_phase);
            }
        }
    }
    out.csv(
        "fronts.csv",
        &Table::new()
            .with("n", Column::Int(fn_))
            .with("model", Column::Text(fm))
            .with("q1", Column::Float(fq))
            .with("e_mag", Column::Float(fe))
            .with("e_phase", Column::Float(fp)),
    )?;
    out.manifest("tables", seed, json!({ "ns": args.ns, "families": families, "table": config }))?;

    if rows.iter().all(|r| r.outcome.is_err()) {
        return Err(Failure::Numeric("every table row failed; see table1.csv".into()));
    }
    Ok(())
}
