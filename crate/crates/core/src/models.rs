//! Candidate process models: FOPDT, FO²PDT and FOPFDD.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fdd::{self, FddParams, SeriesConfig};
use crate::ilt::{ilt_at, FnTransform, TalbotConfig};
use crate::signal::{FrequencyResponseSamples, SampledSignal, TimeGrid};

/// Model family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `K / (tau s + 1) exp(-L s)`
    Fopdt,
    /// `K / (tau s^alpha + 1) exp(-L s)`, `alpha` in `(0, 2)`
    Fo2pdt,
    /// `K / (tau s + 1) exp(-(L s)^alpha)`, `alpha` in `(0, 1)`
    Fopfdd,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Fopdt, Family::Fo2pdt, Family::Fopfdd];

    pub fn name(self) -> &'static str {
        match self {
            Family::Fopdt => "fopdt",
            Family::Fo2pdt => "fo2pdt",
            Family::Fopfdd => "fopfdd",
        }
    }

    /// Short label `H1`, `H2` or `H3`.
    pub fn label(self) -> &'static str {
        match self {
            Family::Fopdt => "H1",
            Family::Fo2pdt => "H2",
            Family::Fopfdd => "H3",
        }
    }

    pub fn has_alpha(self) -> bool {
        !matches!(self, Family::Fopdt)
    }

    /// Open interval of admissible `alpha`.
    pub fn alpha_range(self) -> Option<(f64, f64)> {
        match self {
            Family::Fopdt => None,
            Family::Fo2pdt => Some((0.0, 2.0)),
            Family::Fopfdd => Some((0.0, 1.0)),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fopdt" | "h1" => Ok(Family::Fopdt),
            "fo2pdt" | "h2" => Ok(Family::Fo2pdt),
            "fopfdd" | "h3" => Ok(Family::Fopfdd),
            _ => Err(invalid(
                "family",
                format!("unknown model family `{s}`; expected fopdt, fo2pdt or fopfdd"),
            )),
        }
    }
}

/// Parameters of one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelParams {
    Fopdt { k: f64, tau: f64, l: f64 },
    Fo2pdt { k: f64, tau: f64, l: f64, alpha: f64 },
    Fopfdd { k: f64, tau: f64, l: f64, alpha: f64 },
}

impl ModelParams {
    pub fn fopdt(k: f64, tau: f64, l: f64) -> Result<Self> {
        Self::Fopdt { k, tau, l }.validated()
    }

    pub fn fo2pdt(k: f64, tau: f64, l: f64, alpha: f64) -> Result<Self> {
        Self::Fo2pdt { k, tau, l, alpha }.validated()
    }

    pub fn fopfdd(k: f64, tau: f64, l: f64, alpha: f64) -> Result<Self> {
        Self::Fopfdd { k, tau, l, alpha }.validated()
    }

    /// Builds a model from a family and the parameter vector
    /// `[K, tau, L]` or `[K, tau, L, alpha]`.
    pub fn from_vec(family: Family, v: &[f64]) -> Result<Self> {
        let need = if family.has_alpha() { 4 } else { 3 };
        if v.len() != need {
            return Err(invalid(
                "params",
                format!("{family} takes {need} parameters, got {}", v.len()),
            ));
        }
        match family {
            Family::Fopdt => Self::fopdt(v[0], v[1], v[2]),
            Family::Fo2pdt => Self::fo2pdt(v[0], v[1], v[2], v[3]),
            Family::Fopfdd => Self::fopfdd(v[0], v[1], v[2], v[3]),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            Self::Fopdt { k, tau, l } => vec![k, tau, l],
            Self::Fo2pdt { k, tau, l, alpha } | Self::Fopfdd { k, tau, l, alpha } => {
                vec![k, tau, l, alpha]
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Fopdt { .. } => Family::Fopdt,
            Self::Fo2pdt { .. } => Family::Fo2pdt,
            Self::Fopfdd { .. } => Family::Fopfdd,
        }
    }

    pub fn k(&self) -> f64 {
        self.to_vec()[0]
    }

    pub fn tau(&self) -> f64 {
        self.to_vec()[1]
    }

    pub fn l(&self) -> f64 {
        self.to_vec()[2]
    }

    pub fn alpha(&self) -> Option<f64> {
        self.to_vec().get(3).copied()
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.to_vec();
        if !v[0].is_finite() {
            return Err(invalid("K", "gain must be finite"));
        }
        if !(v[1].is_finite() && v[1] > 0.0) {
            return Err(invalid("tau", format!("time constant must be > 0, got {}", v[1])));
        }
        let l_ok = match self.family() {
            Family::Fopfdd => v[2] > 0.0,
            _ => v[2] >= 0.0,
        };
        if !(v[2].is_finite() && l_ok) {
            return Err(invalid("L", format!("delay out of range: {}", v[2])));
        }
        if let Some((lo, hi)) = self.family().alpha_range() {
            if !(v[3] > lo && v[3] < hi) {
                return Err(invalid(
                    "alpha",
                    format!("{} needs alpha in ({lo}, {hi}), got {}", self.family(), v[3]),
                ));
            }
        }
        Ok(())
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Natural-log modulus and phase of `H(j omega)`. The phase is the one
    /// obtained by continuation from `omega = 0`, not a principal value.
    pub fn log_response(&self, omega: f64) -> (f64, f64) {
        let (ln_m, phase) = self.log_response_unit_gain(omega);
        let k = self.k();
        let flip = if k < 0.0 { std::f64::consts::PI } else { 0.0 };
        (ln_m + k.abs().ln(), phase + flip)
    }

    fn log_response_unit_gain(&self, omega: f64) -> (f64, f64) {
        match *self {
            Self::Fopdt { tau, l, .. } => {
                let wt = omega * tau;
                (-0.5 * wt.mul_add(wt, 1.0).ln(), -wt.atan() - omega * l)
            }
            Self::Fo2pdt { tau, l, alpha, .. } => {
                let (s, c) = (alpha * FRAC_PI_2).sin_cos();
                let p = tau * omega.powf(alpha);
                let (re, im) = (1.0 + p * c, p * s);
                (-re.hypot(im).ln(), -im.atan2(re) - omega * l)
            }
            Self::Fopfdd { tau, l, alpha, .. } => {
                let wt = omega * tau;
                let (ln_m, ph) = fdd::log_response_raw(l, alpha, omega);
                (ln_m - 0.5 * wt.mul_add(wt, 1.0).ln(), -wt.atan() + ph)
            }
        }
    }

    /// `H(s)` at a complex point, principal branch for fractional powers.
    pub fn laplace(&self, s: Complex64) -> Complex64 {
        match *self {
            Self::Fopdt { k, tau, l } => k / (s * tau + 1.0) * (-s * l).exp(),
            Self::Fo2pdt { k, tau, l, alpha } => k / (s.powf(alpha) * tau + 1.0) * (-s * l).exp(),
            Self::Fopfdd { k, tau, l, alpha } => {
                k / (s * tau + 1.0) * (-(s * l).powf(alpha)).exp()
            }
        }
    }
}

/// `H(j omega)` of a model at every frequency.
pub fn model_freq_response(m: &ModelParams, omegas: &[f64]) -> Result<FrequencyResponseSamples> {
    m.validate()?;
    FrequencyResponseSamples::from_fn(omegas.to_vec(), |w| {
        let (ln_m, phase) = m.log_response(w);
        Complex64::from_polar(ln_m.exp(), phase)
    })
}

/// `K (1 - exp(-(t - L) / tau))` for `t >= L`, zero before.
pub fn fopdt_step_response(m: &ModelParams, grid: TimeGrid) -> Result<SampledSignal> {
    let ModelParams::Fopdt { k, tau, l } = *m else {
        return Err(invalid("family", format!("expected fopdt, got {}", m.family())));
    };
    m.validate()?;
    SampledSignal::from_fn(grid, |t| {
        if t < l {
            0.0
        } else {
            -k * (-(t - l) / tau).exp_m1()
        }
    })
}

/// Inverts `K / (s (tau s^alpha + 1))` on the contour and delays by `L`.
pub fn fo2pdt_step_response(
    m: &ModelParams,
    grid: TimeGrid,
    config: &TalbotConfig,
) -> Result<SampledSignal> {
    let ModelParams::Fo2pdt { k, tau, l, alpha } = *m else {
        return Err(invalid("family", format!("expected fo2pdt, got {}", m.family())));
    };
    m.validate()?;
    config.validate()?;
    let f = FnTransform::new(move |s: Complex64| k / (s * (s.powf(alpha) * tau + 1.0)));
    let times: Vec<f64> = grid.times().collect();
    let values = times
        .par_iter()
        .map(|&t| if t <= l { Ok(0.0) } else { ilt_at(&f, t - l, config) })
        .collect::<Result<Vec<f64>>>()?;
    SampledSignal::new(grid, values)
}

/// First-order step response convolved with the FDD impulse response.
///
/// The kernel is evaluated on the grid expressed in units of `L`, so the
/// series settings apply to the normalized response `f_1`.
/// The sampled kernel is rescaled so that its rectangle-rule mass equals the
/// exact FDD mass on `(0, t_max]`, taken from the step series. When that
/// value cannot be trusted the kernel is rescaled to unit mass.
pub fn fopfdd_step_response(
    m: &ModelParams,
    grid: TimeGrid,
    config: &SeriesConfig,
) -> Result<SampledSignal> {
    let ModelParams::Fopfdd { k, tau, l, alpha } = *m else {
        return Err(invalid("family", format!("expected fopfdd, got {}", m.family())));
    };
    m.validate()?;
    // f_L(t) = f_1(t / L) / L: evaluating in units of L keeps the peak
    // threshold meaningful whatever the delay scale.
    let unit = FddParams::new(1.0, alpha)?;
    let unit_grid = grid.scaled(1.0 / l);
    let kernel = fdd::fdd_impulse_response(unit, unit_grid, config)?;
    let h = grid.t_s();
    let mass: f64 = kernel.values().iter().sum::<f64>() * unit_grid.t_s();
    let step_config = SeriesConfig {
        arithmetic: fdd::Arithmetic::LogDomain,
        ..*config
    };
    let target = fdd::fdd_step_value(unit, unit_grid.last_time(), &step_config)
        .filter(|&s| s > 0.0)
        .unwrap_or(1.0);
    let scale = if mass > 0.0 { target / mass } else { 1.0 };
    // Kernel weights t_s f_L(t_j) = (t_s / L) f_1(t_j / L).
    let f2: Vec<f64> = kernel.values().iter().map(|v| v * scale * unit_grid.t_s()).collect();
    // f1 at lags 0, t_s, 2 t_s, ...
    let f1: Vec<f64> = (0..grid.len()).map(|j| -k * (-(j as f64) * h / tau).exp_m1()).collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| (0..=i).map(|j| f2[j] * f1[i - j]).sum())
        .collect();
    SampledSignal::new(grid, values)
}

/// Step response of any family with default numerical settings.
pub fn model_step_response(m: &ModelParams, grid: TimeGrid) -> Result<SampledSignal> {
    match m.family() {
        Family::Fopdt => fopdt_step_response(m, grid),
        Family::Fo2pdt => fo2pdt_step_response(m, grid, &TalbotConfig::default()),
        Family::Fopfdd => fopfdd_step_response(m, grid, &SeriesConfig::default()),
    }
}
