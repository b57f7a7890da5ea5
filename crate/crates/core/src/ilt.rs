//! Numerical inverse Laplace transform on a Talbot-type contour.
//!
//! The contour is the optimized cotangent contour of Weideman and Trefethen,
//! `z(theta) = (N/t)(-0.6122 + 0.5017 theta cot(0.6407 theta) + 0.2645 i theta)`,
//! sampled at midpoints of `N` equal panels in `(-pi, pi)`. It wraps the
//! negative real axis, so transforms with a branch cut there are handled as
//! long as every singularity lies to its left.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{SampledSignal, TimeGrid};

const SIGMA: f64 = -0.6122;
const MU: f64 = 0.5017;
const A: f64 = 0.6407;
const NU: f64 = 0.2645;

/// A Laplace-domain function `F(s)` of a real-valued time function.
///
/// `F` must be analytic to the right of [`abscissa`](Self::abscissa) and
/// satisfy `F(conj s) = conj F(s)`. Fractional powers use the principal
/// branch.
pub trait LaplaceTransform: Sync {
    fn eval(&self, s: Complex64) -> Complex64;

    /// Estimate of the abscissa of convergence.
    fn abscissa(&self) -> f64 {
        0.0
    }
}

/// Wraps a closure as a [`LaplaceTransform`].
pub struct FnTransform<F> {
    f: F,
    abscissa: f64,
}

impl<F> FnTransform<F>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f, abscissa: 0.0 }
    }

    pub fn with_abscissa(f: F, abscissa: f64) -> Self {
        Self { f, abscissa }
    }
}

impl<F> LaplaceTransform for FnTransform<F>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    fn eval(&self, s: Complex64) -> Complex64 {
        (self.f)(s)
    }

    fn abscissa(&self) -> f64 {
        self.abscissa
    }
}

/// Quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TalbotConfig {
    pub nodes: usize,
    /// Node count of the confirmation pass; `None` disables the check.
    pub check_nodes: Option<usize>,
    /// Relative accuracy target. The check fails when the two passes differ
    /// by more than ten times this.
    pub accuracy: f64,
    /// Absolute floor added to the magnitude in the relative check, so
    /// values that are zero up to round-off do not trip it.
    pub abs_floor: f64,
}

impl Default for TalbotConfig {
    fn default() -> Self {
        Self {
            nodes: 32,
            check_nodes: Some(64),
            accuracy: 1e-5,
            abs_floor: 1e-10,
        }
    }
}

impl TalbotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 4 {
            return Err(invalid("nodes", "need at least 4 contour nodes"));
        }
        if matches!(self.check_nodes, Some(n) if n < 4) {
            return Err(invalid("check_nodes", "need at least 4 contour nodes"));
        }
        if !(self.accuracy > 0.0 && self.abs_floor >= 0.0) {
            return Err(invalid("accuracy", "must be > 0"));
        }
        Ok(())
    }
}

/// Contour quadrature at a single `t > 0` with `nodes` points.
///
/// The real part is the estimate of `f(t)`; the imaginary part is the
/// realness residue of the quadrature and should be negligible.
pub fn talbot_point<T: LaplaceTransform + ?Sized>(f: &T, t: f64, nodes: usize) -> Complex64 {
    let shift = f.abscissa().max(0.0);
    let n = nodes as f64;
    let scale = n / t;
    let h = 2.0 * std::f64::consts::PI / n;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..nodes {
        let theta = -std::f64::consts::PI + (k as f64 + 0.5) * h;
        let (z, dz) = contour(theta, scale);
        let term = (z * t).exp() * f.eval(z + shift) * dz;
        if term.is_finite() {
            acc += term;
        }
    }
    // (1 / 2 pi i) * integral dz, with d(theta) = 2 pi / N
    let value = acc / Complex64::new(0.0, n);
    value * (shift * t).exp()
}

fn contour(theta: f64, scale: f64) -> (Complex64, Complex64) {
    let at = A * theta;
    let (cot, d_cot_term) = if theta.abs() < 1e-8 {
        // theta cot(a theta) -> 1/a with zero slope
        (1.0 / A, 0.0)
    } else {
        let s = at.sin();
        let c = at.cos();
        (theta * c / s, c / s - at / (s * s))
    };
    let z = Complex64::new(SIGMA + MU * cot, NU * theta) * scale;
    let dz = Complex64::new(MU * d_cot_term, NU) * scale;
    (z, dz)
}

/// `f(t)` for a single `t`, with the node-doubling check from `config`.
pub fn ilt_at<T: LaplaceTransform + ?Sized>(f: &T, t: f64, config: &TalbotConfig) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid("t", format!("inversion needs t > 0, got {t}")));
    }
    let coarse = talbot_point(f, t, config.nodes).re;
    if let Some(check) = config.check_nodes {
        let fine = talbot_point(f, t, check).re;
        let scale = fine.abs() + config.abs_floor;
        if !coarse.is_finite() || !fine.is_finite() || (coarse - fine).abs() > 10.0 * config.accuracy * scale {
            return Err(Error::ContourFailure {
                t,
                nodes: config.nodes,
                check_nodes: check,
                coarse,
                fine,
            });
        }
        Ok(fine)
    } else if coarse.is_finite() {
        Ok(coarse)
    } else {
        Err(Error::ContourFailure {
            t,
            nodes: config.nodes,
            check_nodes: config.nodes,
            coarse,
            fine: coarse,
        })
    }
}

/// Inverts `f` on every point of `grid`.
pub fn ilt_evaluate<T: LaplaceTransform + ?Sized>(
    f: &T,
    grid: TimeGrid,
    config: &TalbotConfig,
) -> Result<SampledSignal> {
    config.validate()?;
    let times: Vec<f64> = grid.times().collect();
    let values = times
        .par_iter()
        .map(|&t| ilt_at(f, t, config))
        .collect::<Result<Vec<f64>>>()?;
    SampledSignal::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn contour_derivative_matches_finite_difference() {
        for theta in [-2.5, -0.7, 0.3, 1.9] {
            let h = 1e-6;
            let (zp, _) = contour(theta + h, 3.0);
            let (zm, _) = contour(theta - h, 3.0);
            let (_, dz) = contour(theta, 3.0);
            let fd = (zp - zm) / (2.0 * h);
            assert_relative_eq!(dz.re, fd.re, epsilon = 1e-6);
            assert_relative_eq!(dz.im, fd.im, epsilon = 1e-6);
        }
    }

    #[test]
    fn unit_step() {
        let f = FnTransform::new(|s: Complex64| s.inv());
        for t in [0.1, 1.0, 37.0, 100.0] {
            assert_relative_eq!(ilt_at(&f, t, &TalbotConfig::default()).unwrap(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn shifted_abscissa_growing_exponential() {
        let f = FnTransform::with_abscissa(|s: Complex64| (s - 2.0).inv(), 2.0);
        let v = ilt_at(&f, 1.5, &TalbotConfig::default()).unwrap();
        assert_relative_eq!(v, 3f64.exp(), max_relative = 1e-8);
    }

    #[test]
    fn bad_time_rejected() {
        let f = FnTransform::new(|s: Complex64| s.inv());
        assert!(ilt_at(&f, 0.0, &TalbotConfig::default()).is_err());
    }
}
