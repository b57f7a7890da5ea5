//! Series RC ladder: implicit state-space construction, explicit form,
//! frequency response, exact step response and break frequency.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{logspace, FrequencyResponseSamples, SampledSignal, TimeGrid};

/// Stage resistances and capacitances of an `n`-stage ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    resistances: Vec<f64>,
    capacitances: Vec<f64>,
}

impl LadderSpec {
    pub fn new(resistances: Vec<f64>, capacitances: Vec<f64>) -> Result<Self> {
        if resistances.is_empty() {
            return Err(invalid("n", "ladder needs at least one stage"));
        }
        if resistances.len() != capacitances.len() {
            return Err(invalid(
                "capacitances",
                format!(
                    "got {} resistances but {} capacitances",
                    resistances.len(),
                    capacitances.len()
                ),
            ));
        }
        if resistances.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("resistances", "all resistances must be finite and > 0"));
        }
        if capacitances.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(invalid("capacitances", "all capacitances must be finite and > 0"));
        }
        Ok(Self {
            resistances,
            capacitances,
        })
    }

    /// `n` stages with unit resistance and capacitance.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n], vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.resistances.len()
    }

    pub fn resistances(&self) -> &[f64] {
        &self.resistances
    }

    pub fn capacitances(&self) -> &[f64] {
        &self.capacitances
    }
}

/// `E x' = A x + B u`, `y = C x`, together with the explicit
/// `x' = A_hat x + B_hat u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderStateSpace {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub a_hat: DMatrix<f64>,
    pub b_hat: DVector<f64>,
}

/// Capacitor voltages as states. Row `p` of `E` carries the current drawn by
/// every capacitor from stage `p` on through `R_p`.
pub fn build_ladder(spec: &LadderSpec) -> LadderStateSpace {
    let n = spec.n();
    let r = &spec.resistances;
    let cap = &spec.capacitances;
    let e = DMatrix::from_fn(n, n, |p, q| if q >= p { r[p] * cap[q] } else { 0.0 });
    let a = DMatrix::from_fn(n, n, |p, q| {
        if p == q {
            -1.0
        } else if p == q + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    let mut c = DVector::zeros(n);
    c[n - 1] = 1.0;
    let a_hat = e
        .solve_upper_triangular(&a)
        .expect("diagonal of E is strictly positive");
    let b_hat = e
        .solve_upper_triangular(&b)
        .expect("diagonal of E is strictly positive");
    LadderStateSpace {
        e,
        a,
        b,
        c,
        a_hat,
        b_hat,
    }
}

impl LadderStateSpace {
    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// `G(s) = C (sI - A_hat)^-1 B_hat` at one complex `s`.
    pub fn transfer_at(&self, s: Complex64) -> Result<Complex64> {
        let n = self.n();
        let m = DMatrix::from_fn(n, n, |p, q| {
            let d = if p == q { s } else { Complex64::new(0.0, 0.0) };
            d - self.a_hat[(p, q)]
        });
        let rhs = self.b_hat.map(|v| Complex64::new(v, 0.0));
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem(format!("sI - A_hat singular at s = {s}")))?;
        Ok(x[n - 1])
    }

    /// `-C A_hat^-1 B_hat`.
    pub fn dc_gain(&self) -> Result<f64> {
        let x = self
            .a_hat
            .clone()
            .lu()
            .solve(&self.b_hat)
            .ok_or_else(|| Error::SingularSystem("A_hat is singular".into()))?;
        Ok(-self.c.dot(&x))
    }

    /// Numerator and denominator of `G(s)`, highest power first, with a
    /// monic denominator. Uses the Faddeev-LeVerrier recursion, which is
    /// only well conditioned for small `n`.
    pub fn transfer_function(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let a = &self.a_hat;
        let mut den = vec![0.0; n + 1];
        den[0] = 1.0;
        let mut num = vec![0.0; n + 1];
        let mut m = DMatrix::<f64>::zeros(n, n);
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{k-1} I, c_k = -tr(A M_k) / k
            m = a * &m + DMatrix::identity(n, n) * den[k - 1];
            den[k] = -(a * &m).trace() / k as f64;
            num[k] = self.c.dot(&(&m * &self.b_hat));
        }
        (num, den)
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.a_hat.complex_eigenvalues().iter().copied().collect()
    }
}

/// `G(j omega)` at every frequency.
pub fn ladder_freq_response(ss: &LadderStateSpace, omegas: &[f64]) -> Result<FrequencyResponseSamples> {
    crate::signal::validate_omegas(omegas)?;
    let values = omegas
        .par_iter()
        .map(|&w| ss.transfer_at(Complex64::new(0.0, w)))
        .collect::<Result<Vec<_>>>()?;
    FrequencyResponseSamples::new(omegas.to_vec(), values)
}

/// Unit-step response under an exact zero-order-hold discretization.
pub fn ladder_step_response(ss: &LadderStateSpace, grid: TimeGrid) -> Result<SampledSignal> {
    let n = ss.n();
    let phi = (&ss.a_hat * grid.t_s()).exp();
    let rhs = (&phi - DMatrix::identity(n, n)) * &ss.b_hat;
    let gamma = ss
        .a_hat
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("A_hat is singular".into()))?;
    let mut x = DVector::zeros(n);
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        x = &phi * &x + &gamma;
        values.push(ss.c.dot(&x));
    }
    SampledSignal::new(grid, values)
}

/// Frequency where `|G|` first drops below `2^-1/2` from above, by log-log
/// interpolation between the bracketing samples.
pub fn break_frequency(fr: &FrequencyResponseSamples) -> Result<f64> {
    let thr = std::f64::consts::FRAC_1_SQRT_2;
    let w = fr.omegas();
    let m: Vec<f64> = fr.values().iter().map(|v| v.norm()).collect();
    for i in 1..m.len() {
        if m[i - 1] >= thr && m[i] < thr {
            let (l0, l1) = (m[i - 1].ln(), m[i].ln());
            let frac = (thr.ln() - l0) / (l1 - l0);
            return Ok((w[i - 1].ln() + frac * (w[i].ln() - w[i - 1].ln())).exp());
        }
    }
    Err(Error::NoCrossing)
}

/// Break frequency of a ladder: a coarse log scan, then a dense scan within
/// 5% of the first estimate.
pub fn ladder_break_frequency(ss: &LadderStateSpace) -> Result<f64> {
    let coarse = ladder_freq_response(ss, &logspace(1e-7, 1e3, 601))?;
    let w0 = break_frequency(&coarse)?;
    let fine = ladder_freq_response(ss, &logspace(0.95 * w0, 1.05 * w0, 201))?;
    break_frequency(&fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_stage() {
        let ss = build_ladder(&LadderSpec::uniform(1).unwrap());
        assert_eq!(ss.e[(0, 0)], 1.0);
        assert_eq!(ss.a[(0, 0)], -1.0);
        assert_eq!(ss.a_hat[(0, 0)], -1.0);
        assert_eq!(ss.b_hat[0], 1.0);
        let g = ss.transfer_at(Complex64::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(g.norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn two_stage_by_hand() {
        let ss = build_ladder(&LadderSpec::uniform(2).unwrap());
        let expect = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -1.0]);
        assert!((&ss.a_hat - expect).amax() < 1e-15);
        assert_eq!(ss.b_hat.as_slice(), &[1.0, 0.0]);
        let g = ss.transfer_at(Complex64::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(g.norm(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn nonuniform_diagonal() {
        let spec = LadderSpec::new(vec![1.0, 2.0, 3.0], vec![0.5, 4.0, 0.1]).unwrap();
        let ss = build_ladder(&spec);
        for p in 0..3 {
            assert_eq!(ss.e[(p, p)], spec.resistances()[p] * spec.capacitances()[p]);
        }
        assert_eq!(ss.e[(0, 2)], 1.0 * 0.1);
        assert_eq!(ss.e[(2, 0)], 0.0);
    }

    #[test]
    fn spec_rejects_bad_values() {
        assert!(LadderSpec::uniform(0).is_err());
        assert!(LadderSpec::new(vec![1.0], vec![1.0, 1.0]).is_err());
        assert!(LadderSpec::new(vec![-1.0], vec![1.0]).is_err());
        assert!(LadderSpec::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn first_order_step_and_break() {
        let ss = build_ladder(&LadderSpec::uniform(1).unwrap());
        let y = ladder_step_response(&ss, TimeGrid::new(0.01, 5.0).unwrap()).unwrap();
        assert_relative_eq!(y.at(1.0), 1.0 - (-1f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(ladder_break_frequency(&ss).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn flat_magnitude_has_no_crossing() {
        let w = logspace(0.1, 10.0, 50);
        let fr = FrequencyResponseSamples::from_fn(w, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(break_frequency(&fr).unwrap_err(), Error::NoCrossing);
    }
}
