//! The fractional diffusive delay `exp(-(L s)^alpha)`: exact frequency
//! response, truncated-series impulse and step responses, and the area and
//! energy diagnostics that certify a truncation.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{trapezoid, SampledSignal, TimeGrid};

/// Largest argument accepted by `exp` before the result overflows.
const EXP_OVERFLOW: f64 = 709.0;
/// Below this argument `exp` underflows to zero.
const EXP_UNDERFLOW: f64 = -745.0;
/// Terms smaller than the largest term by this many e-folds cannot change
/// the f64 sum and are skipped.
const NEGLIGIBLE_SPREAD: f64 = 40.0;

/// Delay scale `L` (seconds) and fractional exponent `alpha` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FddParams {
    l: f64,
    alpha: f64,
}

impl FddParams {
    pub fn new(l: f64, alpha: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(invalid("L", format!("delay scale must be > 0, got {l}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(
                "alpha",
                format!("exponent must lie in the open interval (0, 1), got {alpha}"),
            ));
        }
        Ok(Self { l, alpha })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Default evaluation grid: `t_max = 40 L`, 2000 samples.
    pub fn default_grid(&self) -> TimeGrid {
        TimeGrid::with_samples(40.0 * self.l, 2000).expect("positive L gives a valid grid")
    }
}

/// How the series terms are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    /// Log-magnitude terms via the Gamma reflection identity, summed in f64.
    #[default]
    LogDomain,
    /// Terms and sum in MPFR with `precision_digits` significant digits.
    #[cfg(feature = "mpfr")]
    Extended,
}

/// Truncation, filtering and precision settings of the series evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    /// Highest series index `N`.
    pub n_terms: usize,
    /// Samples up to the last one whose magnitude exceeds this are discarded.
    pub peak_threshold: f64,
    /// `i alpha` closer than this to an integer is treated as an integer.
    pub integer_tol: f64,
    /// Significant digits used by [`Arithmetic::Extended`].
    pub precision_digits: u32,
    pub arithmetic: Arithmetic,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            n_terms: 200,
            peak_threshold: 10.0,
            integer_tol: 1e-9,
            precision_digits: 200,
            arithmetic: Arithmetic::LogDomain,
        }
    }
}

impl SeriesConfig {
    pub fn with_terms(n_terms: usize) -> Self {
        Self {
            n_terms,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_terms < 1 {
            return Err(invalid("n_terms", "need at least one series term"));
        }
        if !(self.peak_threshold.is_finite() && self.peak_threshold > 0.0) {
            return Err(invalid(
                "peak_threshold",
                format!("must be finite and > 0, got {}", self.peak_threshold),
            ));
        }
        if !(self.integer_tol > 0.0 && self.integer_tol < 1e-3) {
            return Err(invalid(
                "integer_tol",
                format!("must lie in (0, 1e-3), got {}", self.integer_tol),
            ));
        }
        if self.precision_digits < 17 {
            return Err(invalid(
                "precision_digits",
                format!("must be at least 17, got {}", self.precision_digits),
            ));
        }
        Ok(())
    }
}

/// `exp(-(L omega)^alpha cos(alpha pi / 2)) * exp(-j (L omega)^alpha sin(alpha pi / 2))`.
pub fn fdd_frequency_response(params: FddParams, omega: f64) -> Complex64 {
    debug_assert!(omega >= 0.0);
    if omega == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let (ln_m, phase) = fdd_log_response(params, omega);
    Complex64::from_polar(ln_m.exp(), phase)
}

/// Natural-log modulus and continuous phase of the frequency response.
fn fdd_log_response(params: FddParams, omega: f64) -> (f64, f64) {
    log_response_raw(params.l, params.alpha, omega)
}

pub(crate) fn log_response_raw(l: f64, alpha: f64, omega: f64) -> (f64, f64) {
    let x = (l * omega).powf(alpha);
    let (s, c) = (alpha * FRAC_PI_2).sin_cos();
    (-x * c, -x * s)
}

/// Laplace-domain value `exp(-(L s)^alpha)` on the principal branch.
pub fn fdd_laplace(params: FddParams, s: Complex64) -> Complex64 {
    (-(s * params.l).powf(params.alpha)).exp()
}

/// Precomputed series coefficients in log-magnitude form.
///
/// Term `i` of the impulse series is `sign_i * exp(ln_c_i - (x_i + 1) ln t)`
/// with `x_i = i alpha`.
struct SeriesTerms {
    terms: Vec<Term>,
}

#[derive(Clone, Copy)]
struct Term {
    /// `i alpha`
    x: f64,
    ln_c: f64,
    sign: f64,
}

impl SeriesTerms {
    fn impulse(params: FddParams, config: &SeriesConfig) -> Self {
        let ln_l = params.l.ln();
        let terms = (1..=config.n_terms)
            .filter_map(|i| {
                let x = i as f64 * params.alpha;
                let r = x - x.round();
                if r.abs() < config.integer_tol {
                    return None;
                }
                // ln|Gamma(-x)| = ln(pi) - ln|sin(pi x)| - lnGamma(1 + x)
                let ln_abs_gamma_neg = PI.ln() - (PI * r.abs()).sin().ln() - lgamma(1.0 + x);
                let ln_c = x * ln_l - lgamma(i as f64 + 1.0) - ln_abs_gamma_neg;
                // sign Gamma(-x) = (-1)^(floor(x) + 1)
                let sign = parity(i as i64 + x.floor() as i64 + 1);
                Some(Term { x, ln_c, sign })
            })
            .collect();
        Self { terms }
    }

    /// Value at `t`, or NaN if any term overflows or cancellation has eaten
    /// more than half of the f64 digits. Such a sample is unresolved rather
    /// than small, and the post-filter treats it like an overflow.
    fn eval(&self, t: f64) -> f64 {
        let (v, mag) = self.eval_with_magnitude(t);
        if mag > CANCELLATION_LIMIT * v.abs() {
            f64::NAN
        } else {
            v
        }
    }

    /// Like [`Self::eval`], and also NaN while the terms are still large at
    /// the cut. The last term overstates the remainder when later terms
    /// rotate in sign, so this is a conservative test.
    fn eval_converged(&self, t: f64) -> f64 {
        let v = self.eval(t);
        if self.last_term(t) > TRUNCATION_LIMIT * v.abs() {
            f64::NAN
        } else {
            v
        }
    }

    /// Size of the highest retained term. When it is not negligible the
    /// series is still growing at the cut and the partial sum means nothing.
    fn last_term(&self, t: f64) -> f64 {
        self.terms
            .last()
            .map_or(0.0, |term| (term.ln_c - (term.x + 1.0) * t.ln()).exp())
    }

    /// Value at `t` together with the sum of absolute term values, which
    /// bounds the cancellation error of the f64 sum.
    fn eval_with_magnitude(&self, t: f64) -> (f64, f64) {
        let ln_t = t.ln();
        let arg = |term: &Term| term.ln_c - (term.x + 1.0) * ln_t;
        let peak = self.terms.iter().map(arg).fold(f64::NEG_INFINITY, f64::max);
        if peak > EXP_OVERFLOW {
            return (f64::NAN, f64::INFINITY);
        }
        let floor = (peak - NEGLIGIBLE_SPREAD).max(EXP_UNDERFLOW);
        let mut sum = 0.0;
        let mut magnitude = 0.0;
        for term in &self.terms {
            let a = arg(term);
            if a >= floor {
                let v = a.exp();
                sum += term.sign * v;
                magnitude += v;
            }
        }
        (sum, magnitude)
    }
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Zeroes everything up to the last sample that is non-finite or larger in
/// magnitude than `peak_threshold`, then everything up to the last negative
/// sample. Returns the number of leading samples that were zeroed.
fn post_filter(values: &mut [f64], peak_threshold: f64) -> usize {
    let mut cut = 0;
    if let Some(k) = values
        .iter()
        .rposition(|v| !v.is_finite() || v.abs() > peak_threshold)
    {
        values[..=k].fill(0.0);
        cut = k + 1;
    }
    if let Some(k) = values.iter().rposition(|&v| v < 0.0) {
        values[..=k].fill(0.0);
        cut = cut.max(k + 1);
    }
    cut
}

/// Series values on `times`, filtered, without any error checks.
fn filtered_series(
    params: FddParams,
    times: &[f64],
    config: &SeriesConfig,
    peak_threshold: f64,
) -> (Vec<f64>, usize) {
    let mut values = raw_series(params, times, config);
    let cut = post_filter(&mut values, peak_threshold);
    (values, cut)
}

fn raw_series(params: FddParams, times: &[f64], config: &SeriesConfig) -> Vec<f64> {
    match config.arithmetic {
        Arithmetic::LogDomain => {
            let terms = SeriesTerms::impulse(params, config);
            times.par_iter().map(|&t| terms.eval_converged(t)).collect()
        }
        #[cfg(feature = "mpfr")]
        Arithmetic::Extended => crate::extended::impulse_series(params, times, config),
    }
}

/// Impulse response of the FDD from the truncated series, post-filtered.
///
/// Fails with [`Error::NonConvergent`] when nothing survives filtering and
/// with [`Error::Config`] when filtering discards more than 10% of the mass
/// the grid should carry, which means `n_terms` is too small for the grid.
pub fn fdd_impulse_response(
    params: FddParams,
    grid: TimeGrid,
    config: &SeriesConfig,
) -> Result<SampledSignal> {
    config.validate()?;
    let times: Vec<f64> = grid.times().collect();
    let (values, _) = filtered_series(params, &times, config, config.peak_threshold);
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::NonConvergent(format!(
            "L = {}, alpha = {}, grid ({}, {}] with N = {}",
            params.l,
            params.alpha,
            grid.t_s(),
            grid.last_time(),
            config.n_terms
        )));
    }
    let signal = SampledSignal::new(grid, values)?;
    check_captured_mass(params, &signal, config)?;
    Ok(signal)
}

/// Compares the trapezoidal area on `[t_1, t_K]` with the exact mass the
/// step series assigns to that window.
fn check_captured_mass(params: FddParams, signal: &SampledSignal, config: &SeriesConfig) -> Result<()> {
    let grid = signal.grid();
    let step_config = SeriesConfig {
        arithmetic: Arithmetic::LogDomain,
        ..*config
    };
    let Some(upper) = fdd_step_value(params, grid.last_time(), &step_config) else {
        return Ok(());
    };
    let lower = fdd_step_value(params, grid.time(0), &step_config).unwrap_or(0.0);
    let expected = upper - lower;
    let area = trapezoid(signal.values(), grid.t_s());
    if expected > 1e-3 && (area - expected).abs() > 0.1 * expected {
        return Err(Error::Config(format!(
            "N = {} gives area {area:.4} where {expected:.4} is expected on the grid; \
             increase n_terms or adjust peak_threshold",
            config.n_terms
        )));
    }
    Ok(())
}

/// Step response (running integral of the impulse response) from its own
/// series `S(t) = 1 + sum_i (-1)^i (L/t)^(i alpha) / (i! Gamma(1 - i alpha))`.
///
/// Returns `None` where the truncated series is not trustworthy: overflow,
/// round-off above 1e-8 from cancelling terms, or a value outside `[0, 1]`.
pub fn fdd_step_value(params: FddParams, t: f64, config: &SeriesConfig) -> Option<f64> {
    let ln_ratio = (params.l / t).ln();
    let mut args = Vec::with_capacity(config.n_terms);
    for i in 1..=config.n_terms {
        let x = i as f64 * params.alpha;
        let r = x - x.round();
        if r.abs() < config.integer_tol {
            continue;
        }
        // 1/Gamma(1-x) = Gamma(x) sin(pi x) / pi
        let ln_mag = x * ln_ratio - lgamma(i as f64 + 1.0) + lgamma(x) + (PI * r.abs()).sin().ln()
            - PI.ln();
        let sign = parity(i as i64 + x.floor() as i64);
        args.push((ln_mag, sign));
    }
    let peak = args.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    if peak > EXP_OVERFLOW {
        return None;
    }
    let floor = (peak - NEGLIGIBLE_SPREAD).max(EXP_UNDERFLOW);
    let mut sum = 1.0;
    let mut magnitude = 1.0;
    for (a, sign) in args {
        if a >= floor {
            let v = a.exp();
            sum += sign * v;
            magnitude += v;
        }
    }
    // Round-off bound of the f64 sum; the value is a probability, so the
    // bound is absolute.
    let slack = STEP_TOL.max(4.0 * f64::EPSILON * magnitude);
    (sum.is_finite() && slack <= STEP_TOL && sum >= -slack && sum <= 1.0 + slack)
        .then(|| sum.clamp(0.0, 1.0))
}

/// Closed-form impulse response at `alpha = 1/2`:
/// `g(t) = Lambda / (2 sqrt(pi) t^1.5) exp(-Lambda^2 / (4 t))`, `Lambda = sqrt(L)`.
pub fn fdd_impulse_closed_form_half(l: f64, grid: TimeGrid) -> Result<SampledSignal> {
    if !(l.is_finite() && l > 0.0) {
        return Err(invalid("L", format!("delay scale must be > 0, got {l}")));
    }
    SampledSignal::from_fn(grid, |t| closed_form_half(l, t))
}

pub(crate) fn closed_form_half(l: f64, t: f64) -> f64 {
    let lambda = l.sqrt();
    lambda / (2.0 * PI.sqrt() * t.powf(1.5)) * (-l / (4.0 * t)).exp()
}

/// Trapezoidal area of an impulse response, anchored at `f(0) = 0`.
pub fn fdd_area(signal: &SampledSignal) -> f64 {
    signal.integral_from_origin(0.0)
}

/// Trapezoidal integral of the squared signal, anchored at `f(0) = 0`.
pub fn fdd_energy_numeric(signal: &SampledSignal) -> f64 {
    let h = signal.grid().t_s();
    let v = signal.values();
    0.5 * h * v[0] * v[0] + trapezoid_sq(v, h)
}

fn trapezoid_sq(values: &[f64], h: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    trapezoid(&sq, h)
}

/// Energy from the spectrum:
/// `(1/pi) Gamma(1 + 1/alpha) / (2 L^alpha cos(alpha pi / 2))^(1/alpha)`.
pub fn fdd_energy_spectral(params: FddParams) -> f64 {
    let a = params.alpha;
    let c = 2.0 * params.l.powf(a) * (a * FRAC_PI_2).cos();
    (lgamma(1.0 + 1.0 / a) - c.ln() / a).exp() / PI
}

/// Area and energy over `(0, inf)` from the series, accumulated over a
/// chain of octaves `[a, 2a]` so that both the sharp head and the heavy tail
/// are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveIntegrals {
    pub area: f64,
    pub energy: f64,
    /// Lower end of the lowest octave that contributed.
    pub t_min: f64,
    /// Upper end of the chain, where `|f(t)| t` fell below the tail tolerance.
    pub t_max: f64,
    pub octaves: usize,
}

/// Absolute accuracy demanded of the step series.
const STEP_TOL: f64 = 1e-8;

/// Samples per octave.
const OCTAVE_SAMPLES: usize = 512;
/// The upward walk stops once `|f(T)| T` is below this.
const TAIL_TOL: f64 = 1e-5;
/// The downward walk stops once an octave adds less than this much area.
const HEAD_TOL: f64 = 1e-10;
const MAX_OCTAVES: usize = 400;
/// Largest tolerated ratio of absolute term sum to the series value.
const CANCELLATION_LIMIT: f64 = 1e12;
/// Largest tolerated ratio of the highest retained term to the series value.
const TRUNCATION_LIMIT: f64 = 1e-3;

/// Integrates the impulse response over geometrically growing windows.
///
/// The chain starts at `[L/2, L]` and walks down until the head is
/// negligible or the series stops resolving it, then walks up from `L` until
/// the tail criterion `|f(T)| T < 1e-5` holds.
pub fn fdd_adaptive_integrals(params: FddParams, config: &SeriesConfig) -> Result<AdaptiveIntegrals> {
    config.validate()?;
    let mut area = 0.0;
    let mut energy = 0.0;
    let mut octaves = 0;

    let mut down = Vec::new();
    let mut a = params.l / 2.0;
    let mut t_min = params.l;
    loop {
        let oct = octave(params, a, config);
        octaves += 1;
        down.push(oct);
        if oct.area > 0.0 || oct.energy > 0.0 {
            t_min = a;
        }
        let negligible = oct.area < HEAD_TOL && oct.energy < HEAD_TOL * (energy + oct.energy).max(1.0);
        energy += oct.energy;
        area += oct.area;
        if oct.truncated || negligible || octaves >= MAX_OCTAVES {
            break;
        }
        a /= 2.0;
    }

    let mut a = params.l;
    let t_max = loop {
        let oct = octave(params, a, config);
        octaves += 1;
        area += oct.area;
        energy += oct.energy;
        if oct.tail_weight < TAIL_TOL {
            break 2.0 * a;
        }
        if octaves >= 2 * MAX_OCTAVES {
            return Err(Error::NonConvergent(format!(
                "tail of L = {}, alpha = {} not resolved by t = {:e}",
                params.l,
                params.alpha,
                2.0 * a
            )));
        }
        a *= 2.0;
    };

    Ok(AdaptiveIntegrals {
        area,
        energy,
        t_min,
        t_max,
        octaves,
    })
}

#[derive(Debug, Clone, Copy)]
struct Octave {
    area: f64,
    energy: f64,
    /// Filtering removed samples inside the octave.
    truncated: bool,
    /// `|f(2a)| * 2a`
    tail_weight: f64,
}

fn octave(params: FddParams, a: f64, config: &SeriesConfig) -> Octave {
    let h = a / OCTAVE_SAMPLES as f64;
    let times: Vec<f64> = (OCTAVE_SAMPLES..=2 * OCTAVE_SAMPLES)
        .map(|k| k as f64 * h)
        .collect();
    // A legitimate peak of a density living on [a, 2a] can reach a few
    // multiples of 1/a, so the garbage threshold scales with the window.
    let p = config.peak_threshold.max(100.0 / a);
    let mut values: Vec<f64> = match config.arithmetic {
        Arithmetic::LogDomain => {
            let terms = SeriesTerms::impulse(params, config);
            times.par_iter().map(|&t| terms.eval(t)).collect()
        }
        #[cfg(feature = "mpfr")]
        Arithmetic::Extended => raw_series(params, &times, config),
    };
    let cut = post_filter(&mut values, p);
    let area = trapezoid(&values, h);
    let energy = trapezoid_sq(&values, h);
    let last = *values.last().unwrap();
    Octave {
        area,
        energy,
        truncated: cut > 0,
        tail_weight: last.abs() * times[times.len() - 1],
    }
}
