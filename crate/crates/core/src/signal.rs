//! Uniform time grids, sampled signals and sampled frequency responses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform grid `t_k = k * t_s` for `k = 1..=K`, `K = floor(t_max / t_s)`.
///
/// The grid never contains `t = 0`: the impulse-response series is singular
/// there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_s: f64,
    t_max: f64,
    len: usize,
}

impl TimeGrid {
    pub fn new(t_s: f64, t_max: f64) -> Result<Self> {
        if !(t_s.is_finite() && t_s > 0.0) {
            return Err(invalid("t_s", format!("sample period must be > 0, got {t_s}")));
        }
        if !(t_max.is_finite() && t_max > t_s) {
            return Err(invalid(
                "t_max",
                format!("final time must exceed the sample period {t_s}, got {t_max}"),
            ));
        }
        // Tolerate t_max being a hair below an exact multiple of t_s.
        let len = (t_max / t_s * (1.0 + 1e-12)).floor() as usize;
        Ok(Self { t_s, t_max, len })
    }

    /// Grid with `samples` points ending at `t_max`.
    pub fn with_samples(t_max: f64, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(invalid("samples", "need at least two samples"));
        }
        Self::new(t_max / samples as f64, t_max)
    }

    pub fn t_s(&self) -> f64 {
        self.t_s
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Time of the sample at zero-based `index`.
    pub fn time(&self, index: usize) -> f64 {
        (index + 1) as f64 * self.t_s
    }

    /// Time of the last sample.
    pub fn last_time(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.time(k))
    }

    /// Zero-based index of the sample closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let k = (t / self.t_s).round() as isize - 1;
        k.clamp(0, self.len as isize - 1) as usize
    }

    /// The same samples with time multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> TimeGrid {
        assert!(factor > 0.0 && factor.is_finite(), "time scale factor must be > 0");
        TimeGrid {
            t_s: self.t_s * factor,
            t_max: self.t_max * factor,
            len: self.len,
        }
    }

    pub(crate) fn same_as(&self, other: &TimeGrid) -> bool {
        self.len == other.len && (self.t_s - other.t_s).abs() <= 1e-12 * self.t_s
    }
}

/// Values sampled on a [`TimeGrid`]. All values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(
                "values",
                format!("non-finite sample at t = {}", grid.time(k)),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.times().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.times().zip(self.values.iter().copied())
    }

    /// Value at the sample nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        self.values[self.grid.nearest_index(t)]
    }

    /// Trapezoidal integral over `(0, t_max]`, anchoring the origin at
    /// `origin_value`.
    pub fn integral_from_origin(&self, origin_value: f64) -> f64 {
        let h = self.grid.t_s();
        let mut acc = 0.5 * (origin_value + self.values[0]);
        for pair in self.values.windows(2) {
            acc += 0.5 * (pair[0] + pair[1]);
        }
        acc * h
    }

    /// Running trapezoidal integral, origin anchored at zero.
    pub fn cumulative_integral(&self) -> SampledSignal {
        let h = self.grid.t_s();
        let mut prev = 0.0;
        let mut acc = 0.0;
        let values = self
            .values
            .iter()
            .map(|&v| {
                acc += 0.5 * h * (prev + v);
                prev = v;
                acc
            })
            .collect();
        SampledSignal {
            grid: self.grid,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SampledSignal> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Index and value of the largest sample.
    pub fn argmax(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                if v > best.1 {
                    (k, v)
                } else {
                    best
                }
            })
    }
}

/// Plain trapezoid rule over equally spaced samples (no origin anchor).
pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Complex frequency-response samples on a strictly increasing grid of
/// positive angular frequencies (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponseSamples {
    omegas: Vec<f64>,
    values: Vec<Complex64>,
}

impl FrequencyResponseSamples {
    pub fn new(omegas: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if omegas.len() != values.len() {
            return Err(Error::GridMismatch);
        }
        validate_omegas(&omegas)?;
        Ok(Self { omegas, values })
    }

    pub fn from_fn(omegas: Vec<f64>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        validate_omegas(&omegas)?;
        let values = omegas.iter().map(|&w| f(w)).collect();
        Ok(Self { omegas, values })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn magnitudes_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| 20.0 * v.norm().log10()).collect()
    }

    /// Phase in radians, unwrapped continuously along increasing frequency
    /// starting from the principal value of the first sample.
    pub fn unwrapped_phase(&self) -> Vec<f64> {
        unwrap_phase(self.values.iter().map(|v| v.arg()))
    }
}

pub(crate) fn validate_omegas(omegas: &[f64]) -> Result<()> {
    if omegas.is_empty() {
        return Err(invalid("omegas", "frequency grid is empty"));
    }
    if omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(invalid("omegas", "frequencies must be finite and > 0"));
    }
    if omegas.windows(2).any(|p| p[1] <= p[0]) {
        return Err(invalid("omegas", "frequencies must be strictly increasing"));
    }
    Ok(())
}

/// Removes 2π jumps from a sequence of principal-value angles.
pub fn unwrap_phase(angles: impl IntoIterator<Item = f64>) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out = Vec::new();
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for a in angles {
        if let Some(p) = prev {
            let d = a - p;
            if d > PI {
                offset -= TAU * ((d + PI) / TAU).floor();
            } else if d < -PI {
                offset += TAU * ((-d + PI) / TAU).floor();
            }
        }
        prev = Some(a);
        out.push(a + offset);
    }
    out
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "logspace needs 0 < lo < hi and n >= 2");
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_starts_at_sample_period() {
        let g = TimeGrid::new(0.1, 1.0).unwrap();
        assert_eq!(g.len(), 10);
        assert_relative_eq!(g.time(0), 0.1);
        assert_relative_eq!(g.last_time(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(TimeGrid::new(0.0, 1.0).is_err());
        assert!(TimeGrid::new(1.0, 0.5).is_err());
        assert!(TimeGrid::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn signal_rejects_nonfinite_and_length_mismatch() {
        let g = TimeGrid::new(0.5, 2.0).unwrap();
        assert_eq!(
            SampledSignal::new(g, vec![0.0; 3]).unwrap_err(),
            Error::GridMismatch
        );
        assert!(SampledSignal::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn trapezoid_of_linear_function_is_exact() {
        let g = TimeGrid::new(0.01, 2.0).unwrap();
        let s = SampledSignal::from_fn(g, |t| 3.0 * t).unwrap();
        assert_relative_eq!(s.integral_from_origin(0.0), 6.0, epsilon = 1e-10);
        let c = s.cumulative_integral();
        assert_relative_eq!(*c.values().last().unwrap(), 6.0, epsilon = 1e-10);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw = [3.0, -3.0, -2.5, 3.1];
        let u = unwrap_phase(raw);
        assert_relative_eq!(u[1], -3.0 + std::f64::consts::TAU, epsilon = 1e-12);
        for w in u.windows(2) {
            assert!((w[1] - w[0]).abs() < std::f64::consts::PI);
        }
    }

    #[test]
    fn omegas_must_increase() {
        let v = vec![Complex64::new(1.0, 0.0); 2];
        assert!(FrequencyResponseSamples::new(vec![1.0, 1.0], v.clone()).is_err());
        assert!(FrequencyResponseSamples::new(vec![0.0, 1.0], v.clone()).is_err());
        assert!(FrequencyResponseSamples::new(vec![1.0, 2.0], v).is_ok());
    }

    #[test]
    fn logspace_hits_endpoints() {
        let w = logspace(0.1, 10.0, 5);
        assert_eq!(w[0], 0.1);
        assert_eq!(w[4], 10.0);
        assert_relative_eq!(w[2], 1.0, epsilon = 1e-12);
    }
}
