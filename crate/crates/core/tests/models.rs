use approx::assert_relative_eq;
use fopfdd::analysis::final_value;
use fopfdd::ilt::{ilt_at, FnTransform, TalbotConfig};
use fopfdd::models::{fo2pdt_step_response, fopdt_step_response, fopfdd_step_response, model_step_response, ModelParams};
use fopfdd::{SeriesConfig, TimeGrid};
use num_complex::Complex64;

#[test]
fn fractional_pole_with_unit_order_is_first_order() {
    let grid = TimeGrid::new(0.05, 20.0).unwrap();
    let a = fopdt_step_response(&ModelParams::fopdt(1.3, 2.0, 0.7).unwrap(), grid).unwrap();
    let b = fo2pdt_step_response(&ModelParams::fo2pdt(1.3, 2.0, 0.7, 1.0).unwrap(), grid, &TalbotConfig::default()).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() < 1e-4);
    }
}

#[test]
fn half_order_pole_matches_mittag_leffler() {
    // 1 / (s (s^0.5 + 1)) inverts to 1 - E_{1/2}(-sqrt t) = 1 - e^t erfc(sqrt t).
    let m = ModelParams::fo2pdt(1.0, 1.0, 0.5, 0.5).unwrap();
    let y = fo2pdt_step_response(&m, TimeGrid::new(0.25, 6.0).unwrap(), &TalbotConfig::default()).unwrap();
    for (t, v) in y.iter() {
        let s = t - 0.5;
        let want = if s <= 0.0 { 0.0 } else { 1.0 - s.exp() * libm::erfc(s.sqrt()) };
        assert!((v - want).abs() < 1e-6, "t = {t}: {v} vs {want}");
    }
}

#[test]
fn fdd_model_near_unit_order_approaches_dead_time() {
    let grid = TimeGrid::new(0.01, 15.0).unwrap();
    let a = fopdt_step_response(&ModelParams::fopdt(1.0, 2.0, 1.0).unwrap(), grid).unwrap();
    // Near unit order the series needs many more terms and a higher peak
    // threshold than the defaults.
    let series = SeriesConfig {
        n_terms: 1000,
        peak_threshold: 100.0,
        ..SeriesConfig::default()
    };
    let b = fopfdd_step_response(&ModelParams::fopfdd(1.0, 2.0, 1.0, 0.99).unwrap(), grid, &series).unwrap();
    let worst = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 2e-2, "max deviation {worst}");
}

#[test]
fn fdd_model_matches_contour_inversion() {
    let (k, tau, l, alpha) = (1.2, 3.0, 1.5, 0.5);
    let m = ModelParams::fopfdd(k, tau, l, alpha).unwrap();
    let y = model_step_response(&m, TimeGrid::new(0.005, 30.0).unwrap()).unwrap();
    let lt = FnTransform::new(move |s: Complex64| k * (-(s * l).powf(alpha)).exp() / (s * (s * tau + 1.0)));
    for t in [1.0, 2.0, 5.0, 10.0, 25.0] {
        let want = ilt_at(&lt, t, &TalbotConfig::default()).unwrap();
        assert!((y.at(t) - want).abs() < 1e-3, "t = {t}: {} vs {want}", y.at(t));
    }
}

#[test]
fn step_responses_settle_at_the_gain() {
    let grid = TimeGrid::new(0.05, 400.0).unwrap();
    for m in [
        ModelParams::fopdt(0.8, 2.0, 1.0).unwrap(),
        ModelParams::fo2pdt(0.8, 2.0, 1.0, 1.2).unwrap(),
        ModelParams::fopfdd(0.8, 2.0, 1.0, 0.8).unwrap(),
    ] {
        let y = model_step_response(&m, grid).unwrap();
        assert_relative_eq!(final_value(&y), 0.8, max_relative = 5e-3);
    }
}
