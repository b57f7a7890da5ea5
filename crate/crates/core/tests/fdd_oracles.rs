//! Series impulse response against independent references: the alpha = 1/2
//! closed form, contour inversion of the Laplace transform, and the spectral
//! energy.

use approx::assert_relative_eq;
use fopfdd::fdd::{
    fdd_adaptive_integrals, fdd_area, fdd_energy_numeric, fdd_energy_spectral,
    fdd_impulse_closed_form_half, fdd_impulse_response, fdd_laplace, fdd_step_value,
};
use fopfdd::ilt::{ilt_at, FnTransform, TalbotConfig};
use fopfdd::{FddParams, SeriesConfig, TimeGrid};
use num_complex::Complex64;

fn params(l: f64, alpha: f64) -> FddParams {
    FddParams::new(l, alpha).unwrap()
}

#[test]
fn half_order_series_matches_closed_form() {
    let grid = TimeGrid::new(0.01, 20.0).unwrap();
    for l in [0.5, 1.0, 2.0] {
        let series = fdd_impulse_response(params(l, 0.5), grid, &SeriesConfig::default()).unwrap();
        let exact = fdd_impulse_closed_form_half(l, grid).unwrap();
        let worst = series
            .iter()
            .zip(exact.values())
            .filter(|((t, _), _)| *t >= 0.1 - 1e-12)
            .map(|((_, s), e)| ((s - e) / e).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "L = {l}: max relative error {worst:e}");
    }
}

#[test]
fn closed_form_peak_and_scaling() {
    let grid = TimeGrid::new(1e-4, 2.0).unwrap();
    let g = fdd_impulse_closed_form_half(1.0, grid).unwrap();
    let (k, _) = g.argmax();
    assert_relative_eq!(grid.time(k), 1.0 / 6.0, epsilon = 1e-4);

    let g1 = fdd_impulse_closed_form_half(1.0, TimeGrid::new(0.01, 10.0).unwrap()).unwrap();
    let g4 = fdd_impulse_closed_form_half(4.0, TimeGrid::new(0.04, 40.0).unwrap()).unwrap();
    for (a, b) in g4.values().iter().zip(g1.values()) {
        assert_relative_eq!(*a, b / 4.0, max_relative = 1e-13);
    }
}

#[test]
fn closed_form_area_and_energy() {
    // Mass on (0, T] is erfc(1 / (2 sqrt(T))) for L = 1.
    let grid = TimeGrid::new(0.01, 200.0).unwrap();
    let g = fdd_impulse_closed_form_half(1.0, grid).unwrap();
    let expect = libm::erfc(1.0 / (2.0 * 200f64.sqrt()));
    assert_relative_eq!(fdd_area(&g), expect, epsilon = 1e-6);
    assert_relative_eq!(fdd_energy_numeric(&g), std::f64::consts::FRAC_1_PI, max_relative = 1e-3);
}

#[test]
fn series_on_long_grid_carries_the_window_mass() {
    let grid = TimeGrid::new(0.01, 200.0).unwrap();
    let f = fdd_impulse_response(params(1.0, 0.5), grid, &SeriesConfig::default()).unwrap();
    let expect = libm::erfc(1.0 / (2.0 * 200f64.sqrt()));
    assert_relative_eq!(fdd_area(&f), expect, epsilon = 1e-6);
}

#[test]
fn series_matches_contour_inversion() {
    let grid = TimeGrid::new(0.01, 6.0).unwrap();
    for alpha in [0.3, 0.5, 0.8] {
        let p = params(1.0, alpha);
        let f = fdd_impulse_response(p, grid, &SeriesConfig::default()).unwrap();
        let lt = FnTransform::new(move |s: Complex64| fdd_laplace(p, s));
        for t in [0.5, 1.0, 2.0, 5.0] {
            let oracle = ilt_at(&lt, t, &TalbotConfig::default()).unwrap();
            assert!(
                (f.at(t) - oracle).abs() < 1e-4,
                "alpha = {alpha}, t = {t}: series {} vs contour {oracle}",
                f.at(t)
            );
        }
    }
}

#[test]
fn step_series_matches_contour_inversion() {
    for alpha in [0.3, 0.7, 0.9] {
        let p = params(1.5, alpha);
        let lt = FnTransform::new(move |s: Complex64| fdd_laplace(p, s) / s);
        for t in [1.0, 3.0, 10.0] {
            let oracle = ilt_at(&lt, t, &TalbotConfig::default()).unwrap();
            let s = fdd_step_value(p, t, &SeriesConfig::default()).unwrap();
            assert_relative_eq!(s, oracle, epsilon = 1e-8);
        }
    }
}

#[test]
fn adaptive_integrals_half_order() {
    let r = fdd_adaptive_integrals(params(1.0, 0.5), &SeriesConfig::default()).unwrap();
    assert!((r.area - 1.0).abs() < 1e-3, "{r:?}");
    assert_relative_eq!(r.energy, std::f64::consts::FRAC_1_PI, max_relative = 1e-3);
}

#[test]
fn energy_differs_between_orders() {
    let e5 = fdd_energy_spectral(params(1.0, 0.5));
    let e7 = fdd_energy_spectral(params(1.0, 0.7));
    assert!((e5 - e7).abs() > 1e-3);
    let cfg = SeriesConfig::default();
    let n5 = fdd_adaptive_integrals(params(1.0, 0.5), &cfg).unwrap().energy;
    let n7 = fdd_adaptive_integrals(params(1.0, 0.7), &cfg).unwrap().energy;
    assert!((n5 - n7).abs() > 1e-3);
}

#[test]
fn discrete_fourier_transform_matches_frequency_response() {
    let t_s = 0.005;
    let grid = TimeGrid::new(t_s, 400.0).unwrap();
    let p = params(1.0, 0.7);
    let f = fdd_impulse_response(p, grid, &SeriesConfig::with_terms(400)).unwrap();
    let w_max = std::f64::consts::PI / (10.0 * t_s);
    for w in [0.05, 0.5, 2.0, 10.0, w_max] {
        // Trapezoid with f(0) = 0.
        let mut acc = Complex64::new(0.0, 0.0);
        let n = f.len();
        for (k, (t, v)) in f.iter().enumerate() {
            let weight = if k + 1 == n { 0.5 } else { 1.0 };
            acc += Complex64::from_polar(v * weight * t_s, -w * t);
        }
        let exact = fopfdd::fdd::fdd_frequency_response(p, w);
        assert!((acc - exact).norm() < 1e-2, "omega = {w}: {acc} vs {exact}");
    }
}
