//! Two-objective Bode fitting: magnitude error in dB² and phase error in
//! rad², traded off by a weighted sum over a grid of weights.

mod simplex;

use std::f64::consts::{FRAC_PI_2, LN_10};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{Family, ModelParams};
use crate::signal::{logspace, FrequencyResponseSamples};

/// Closed interval for one parameter.
pub type Interval = (f64, f64);

/// Search box of a fit. `alpha` is `None` for FOPDT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub k: Interval,
    pub tau: Interval,
    pub l: Interval,
    pub alpha: Option<Interval>,
}

impl Bounds {
    /// Scale-aware defaults around the break frequency `omega_b`.
    pub fn for_family(family: Family, omega_b: f64) -> Self {
        let k = match family {
            Family::Fopfdd => (0.5, 1.5),
            _ => (0.99, 1.01),
        };
        Self {
            k,
            tau: (1e-3 / omega_b, 1e3 / omega_b),
            l: (1e-4 / omega_b, 1e2 / omega_b),
            alpha: family.alpha_range(),
        }
    }

    fn validate(&self, family: Family) -> Result<()> {
        let ok = |(lo, hi): Interval| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.k) {
            return Err(invalid("bounds", "K interval must be finite with lo < hi"));
        }
        if !(ok(self.tau) && self.tau.0 > 0.0) {
            return Err(invalid("bounds", "tau interval must be positive with lo < hi"));
        }
        if !(ok(self.l) && self.l.0 > 0.0) {
            return Err(invalid("bounds", "L interval must be positive with lo < hi"));
        }
        match (family.alpha_range(), self.alpha) {
            (None, None) => Ok(()),
            (Some((flo, fhi)), Some((lo, hi))) if ok((lo, hi)) && lo >= flo && hi <= fhi => Ok(()),
            _ => Err(invalid(
                "bounds",
                format!("alpha interval must lie inside the {family} range"),
            )),
        }
    }

    /// Per-coordinate maps, in `[K, tau, L, alpha]` order.
    fn maps(&self) -> Vec<Map> {
        let mut m = vec![
            Map::Linear(self.k),
            Map::Log(self.tau),
            Map::Log(self.l),
        ];
        if let Some(a) = self.alpha {
            m.push(Map::Linear(a));
        }
        m
    }
}

/// Logistic map from an unconstrained coordinate into an interval, linear or
/// logarithmic in the parameter.
#[derive(Debug, Clone, Copy)]
enum Map {
    Linear(Interval),
    Log(Interval),
}

impl Map {
    fn to_param(self, u: f64) -> f64 {
        let s = logistic(u);
        match self {
            Map::Linear((lo, hi)) => lo + (hi - lo) * s,
            Map::Log((lo, hi)) => (lo.ln() + (hi.ln() - lo.ln()) * s).exp(),
        }
    }

    fn to_search(self, p: f64) -> f64 {
        let s = match self {
            Map::Linear((lo, hi)) => (p - lo) / (hi - lo),
            Map::Log((lo, hi)) => (p.ln() - lo.ln()) / (hi.ln() - lo.ln()),
        };
        let s = s.clamp(1e-12, 1.0 - 1e-12);
        (s / (1.0 - s)).ln()
    }
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Restart and stopping settings of the local searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Random starts per weight, on top of the heuristic and warm starts.
    pub restarts: usize,
    pub max_iterations: usize,
    /// Spread of the scalarized objective across the simplex at which a
    /// search stops.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 2000,
            tolerance: 1e-10,
            seed: 0,
        }
    }
}

/// A target response, a model family and everything the search needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProblem {
    pub target: FrequencyResponseSamples,
    pub family: Family,
    /// Break frequency of the target; sets the heuristic start.
    pub omega_b: f64,
    pub bounds: Bounds,
    pub weight_grid: Vec<f64>,
    pub optimizer: OptimizerConfig,
}

impl FitProblem {
    /// Default bounds, 21 uniform weights and default optimizer settings.
    pub fn new(target: FrequencyResponseSamples, family: Family, omega_b: f64) -> Result<Self> {
        if !(omega_b.is_finite() && omega_b > 0.0) {
            return Err(invalid("omega_b", format!("break frequency must be > 0, got {omega_b}")));
        }
        Ok(Self {
            target,
            family,
            omega_b,
            bounds: Bounds::for_family(family, omega_b),
            weight_grid: default_weight_grid(),
            optimizer: OptimizerConfig::default(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.optimizer.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate(self.family)?;
        if self.weight_grid.is_empty() || self.weight_grid.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(invalid("weight_grid", "weights must be a nonempty list in [0, 1]"));
        }
        if self.optimizer.max_iterations == 0 || !(self.optimizer.tolerance >= 0.0) {
            return Err(invalid("optimizer", "need max_iterations > 0 and tolerance >= 0"));
        }
        Ok(())
    }

    /// `K = 1`, `tau = 1/omega_b`, `L = tau/5`, `alpha = 0.9` (FO²PDT) or
    /// `0.7` (FOPFDD), pulled inside the bounds.
    pub fn initial_guess(&self) -> ModelParams {
        let tau = 1.0 / self.omega_b;
        let v = match self.family {
            Family::Fopdt => vec![1.0, tau, tau / 5.0],
            Family::Fo2pdt => vec![1.0, tau, tau / 5.0, 0.9],
            Family::Fopfdd => vec![1.0, tau, tau / 5.0, 0.7],
        };
        let maps = self.bounds.maps();
        let inside: Vec<f64> = v
            .iter()
            .zip(&maps)
            .map(|(p, m)| m.to_param(m.to_search(*p)))
            .collect();
        unchecked(self.family, &inside)
    }
}

/// `n` uniformly spaced weights on `[0, 1]`; 21 by default.
pub fn default_weight_grid() -> Vec<f64> {
    weight_grid(21)
}

pub fn weight_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// The fitting frequency grid: 200 log-spaced points over one decade on
/// either side of `omega_b`.
pub fn fitting_grid(omega_b: f64) -> Vec<f64> {
    logspace(omega_b / 10.0, omega_b * 10.0, 200)
}

/// One point of the front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub q1: f64,
    /// Mean squared magnitude error, dB².
    pub e_mag: f64,
    /// Mean squared phase error, rad².
    pub e_phase: f64,
    pub params: ModelParams,
    /// No search improved on the heuristic start for this weight.
    pub stalled: bool,
    /// Objective evaluations over all starts and polish rounds.
    pub evaluations: usize,
    /// The simplex that produced this point met its tolerance.
    pub converged: bool,
}

impl ParetoPoint {
    pub fn objective(&self) -> f64 {
        self.q1 * self.e_mag + (1.0 - self.q1) * self.e_phase
    }

    /// Stall diagnostics as an error value, if this point stalled.
    pub fn stall_error(&self) -> Option<Error> {
        self.stalled.then(|| {
            Error::OptimizerStall(format!(
                "q1 = {}: no start improved on the initial guess (e_mag = {:e}, e_phase = {:e})",
                self.q1, self.e_mag, self.e_phase
            ))
        })
    }
}

/// Target magnitude in dB and phase unwrapped along increasing frequency.
struct Objective {
    omegas: Vec<f64>,
    ln_omegas: Vec<f64>,
    target_db: Vec<f64>,
    target_phase: Vec<f64>,
}

const DB_PER_NEPER: f64 = 20.0 / LN_10;

impl Objective {
    fn new(target: &FrequencyResponseSamples) -> Self {
        Self {
            omegas: target.omegas().to_vec(),
            ln_omegas: target.omegas().iter().map(|w| w.ln()).collect(),
            target_db: target.magnitudes_db(),
            target_phase: target.unwrapped_phase(),
        }
    }

    /// `(e_mag, e_phase)` of raw parameters; no validation, the search maps
    /// keep them in range.
    fn errors(&self, family: Family, p: &[f64]) -> (f64, f64) {
        let (k, tau, l) = (p[0], p[1], p[2]);
        let ln_k = k.abs().ln();
        let k_phase = if k < 0.0 { std::f64::consts::PI } else { 0.0 };
        let (ln_tau, ln_l) = (tau.ln(), l.ln());
        let (sa, ca) = match family {
            Family::Fopdt => (1.0, 0.0),
            _ => (p[3] * FRAC_PI_2).sin_cos(),
        };
        let mut em = 0.0;
        let mut ep = 0.0;
        for i in 0..self.omegas.len() {
            let w = self.omegas[i];
            let (ln_m, ph) = match family {
                Family::Fopdt => {
                    let wt = w * tau;
                    (-0.5 * wt.mul_add(wt, 1.0).ln(), -wt.atan() - w * l)
                }
                Family::Fo2pdt => {
                    let pw = (ln_tau + p[3] * self.ln_omegas[i]).exp();
                    let (re, im) = (pw.mul_add(ca, 1.0), pw * sa);
                    (-re.hypot(im).ln(), -im.atan2(re) - w * l)
                }
                Family::Fopfdd => {
                    let wt = w * tau;
                    let x = (p[3] * (ln_l + self.ln_omegas[i])).exp();
                    (
                        -0.5 * wt.mul_add(wt, 1.0).ln() - x * ca,
                        -wt.atan() - x * sa,
                    )
                }
            };
            let dm = DB_PER_NEPER * (ln_m + ln_k) - self.target_db[i];
            let dp = ph + k_phase - self.target_phase[i];
            em += dm * dm;
            ep += dp * dp;
        }
        let n = self.omegas.len() as f64;
        (em / n, ep / n)
    }
}

fn unchecked(family: Family, v: &[f64]) -> ModelParams {
    match family {
        Family::Fopdt => ModelParams::Fopdt { k: v[0], tau: v[1], l: v[2] },
        Family::Fo2pdt => ModelParams::Fo2pdt { k: v[0], tau: v[1], l: v[2], alpha: v[3] },
        Family::Fopfdd => ModelParams::Fopfdd { k: v[0], tau: v[1], l: v[2], alpha: v[3] },
    }
}

/// Magnitude (dB²) and phase (rad²) mean squared errors of a model against
/// a target. The model phase is its continuous phase from `omega = 0`; the
/// target phase is unwrapped from its first sample.
pub fn objective_errors(m: &ModelParams, target: &FrequencyResponseSamples) -> Result<(f64, f64)> {
    m.validate()?;
    Ok(Objective::new(target).errors(m.family(), &m.to_vec()))
}

/// Errors between two sampled responses on the same grid, both phases
/// unwrapped numerically.
pub fn response_errors(model: &FrequencyResponseSamples, target: &FrequencyResponseSamples) -> Result<(f64, f64)> {
    if model.omegas() != target.omegas() {
        return Err(Error::GridMismatch);
    }
    let (ma, mb) = (model.magnitudes_db(), target.magnitudes_db());
    let (pa, pb) = (model.unwrapped_phase(), target.unwrapped_phase());
    let n = ma.len() as f64;
    let em = ma.iter().zip(&mb).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    let ep = pa.iter().zip(&pb).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    Ok((em, ep))
}

/// Extra searches restarted from the incumbent with a fresh simplex.
const POLISH_ROUNDS: usize = 3;
/// Spread of random starts in search coordinates.
const START_SPREAD: f64 = 4.0;
const SIMPLEX_STEP: f64 = 0.5;

/// Minimizes `q1 e_mag + (1 - q1) e_phase`.
pub fn fit_scalarized(problem: &FitProblem, q1: f64) -> Result<ParetoPoint> {
    problem.validate()?;
    if !(0.0..=1.0).contains(&q1) {
        return Err(invalid("q1", format!("weight must lie in [0, 1], got {q1}")));
    }
    let objective = Objective::new(&problem.target);
    let q_index = problem
        .weight_grid
        .iter()
        .position(|&q| q == q1)
        .unwrap_or(usize::MAX);
    Ok(fit_with(problem, &objective, q1, q_index, None))
}

fn fit_with(
    problem: &FitProblem,
    objective: &Objective,
    q1: f64,
    q_index: usize,
    warm: Option<&[f64]>,
) -> ParetoPoint {
    let family = problem.family;
    let maps = problem.bounds.maps();
    let to_params = |u: &[f64]| -> Vec<f64> { u.iter().zip(&maps).map(|(x, m)| m.to_param(*x)).collect() };
    let scalar = |u: &[f64]| {
        let (em, ep) = objective.errors(family, &to_params(u));
        q1 * em + (1.0 - q1) * ep
    };
    let opt = &problem.optimizer;

    let guess = problem.initial_guess().to_vec();
    let guess_u: Vec<f64> = guess.iter().zip(&maps).map(|(p, m)| m.to_search(*p)).collect();
    let guess_f = scalar(&guess_u);

    let mut starts = Vec::with_capacity(opt.restarts + 2);
    if let Some(w) = warm {
        starts.push(w.to_vec());
    }
    starts.push(guess_u.clone());
    for r in 0..opt.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(start_seed(opt.seed, q_index, r));
        starts.push(
            (0..maps.len())
                .map(|_| rng.gen_range(-START_SPREAD..START_SPREAD))
                .collect(),
        );
    }

    let runs: Vec<simplex::SimplexResult> = starts
        .par_iter()
        .map(|x0| simplex::minimize(scalar, x0, SIMPLEX_STEP, opt.max_iterations, opt.tolerance))
        .collect();
    let mut evaluations: usize = runs.iter().map(|r| r.evaluations).sum();
    let mut best = runs
        .into_iter()
        .reduce(|a, b| if b.f < a.f { b } else { a })
        .expect("at least one start");
    for _ in 0..POLISH_ROUNDS {
        let again = simplex::minimize(scalar, &best.x, SIMPLEX_STEP / 10.0, opt.max_iterations, opt.tolerance);
        evaluations += again.evaluations;
        let improved = again.f < best.f - opt.tolerance;
        if again.f < best.f {
            best = again;
        }
        if !improved {
            break;
        }
    }

    let p = to_params(&best.x);
    let (e_mag, e_phase) = objective.errors(family, &p);
    ParetoPoint {
        q1,
        e_mag,
        e_phase,
        params: unchecked(family, &p),
        stalled: guess_f > 0.0 && best.f >= guess_f,
        evaluations,
        converged: best.converged,
    }
}

/// Deterministic seed for one random start.
fn start_seed(seed: u64, q_index: usize, restart: usize) -> u64 {
    // splitmix64 finalizer over the packed indices
    let mut z = seed
        ^ (q_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (restart as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits every weight of the grid in order, warm-starting from the previous
/// solution, then removes dominated points. Sorted by `q1`.
pub fn pareto_sweep(problem: &FitProblem) -> Result<Vec<ParetoPoint>> {
    problem.validate()?;
    let objective = Objective::new(&problem.target);
    let maps = problem.bounds.maps();
    let mut order: Vec<usize> = (0..problem.weight_grid.len()).collect();
    order.sort_by(|&a, &b| problem.weight_grid[a].total_cmp(&problem.weight_grid[b]));
    let mut warm: Option<Vec<f64>> = None;
    let mut points = Vec::with_capacity(order.len());
    for i in order {
        let q1 = problem.weight_grid[i];
        let point = fit_with(problem, &objective, q1, i, warm.as_deref());
        warm = Some(
            point
                .params
                .to_vec()
                .iter()
                .zip(&maps)
                .map(|(p, m)| m.to_search(*p))
                .collect(),
        );
        points.push(point);
    }
    Ok(prune_dominated(points))
}

/// Drops every point whose two errors are both strictly larger than those
/// of some other point.
pub fn prune_dominated(points: Vec<ParetoPoint>) -> Vec<ParetoPoint> {
    let keep: Vec<bool> = points
        .iter()
        .map(|p| {
            !points
                .iter()
                .any(|o| o.e_mag < p.e_mag && o.e_phase < p.e_phase)
        })
        .collect();
    let mut out: Vec<ParetoPoint> = points
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect();
    out.sort_by(|a, b| a.q1.total_cmp(&b.q1));
    out
}

/// Point minimizing the sum of both errors, each divided by its smallest
/// positive value on the front. Ties go to the weight closest to 1/2.
pub fn select_optimal(front: &[ParetoPoint]) -> Result<ParetoPoint> {
    if front.is_empty() {
        return Err(invalid("front", "cannot select from an empty front"));
    }
    let min_pos = |f: fn(&ParetoPoint) -> f64| {
        front
            .iter()
            .map(f)
            .filter(|v| *v > 0.0)
            .fold(f64::INFINITY, f64::min)
    };
    let norm = |m: f64| if m.is_finite() { m } else { 1.0 };
    let nm = norm(min_pos(|p| p.e_mag));
    let np = norm(min_pos(|p| p.e_phase));
    let score = |p: &ParetoPoint| p.e_mag / nm + p.e_phase / np;
    let best = front
        .iter()
        .min_by(|a, b| {
            score(a)
                .total_cmp(&score(b))
                .then((a.q1 - 0.5).abs().total_cmp(&(b.q1 - 0.5).abs()))
                .then(a.q1.total_cmp(&b.q1))
        })
        .expect("nonempty");
    Ok(*best)
}
