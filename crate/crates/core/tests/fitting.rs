use fopfdd::analysis::{evaluate_family, reference_system, TableConfig};
use fopfdd::fitting::{fit_scalarized, fitting_grid, pareto_sweep, FitProblem};
use fopfdd::ladder::break_frequency;
use fopfdd::models::{model_freq_response, Family, ModelParams};
use fopfdd::signal::logspace;

fn own_response_problem(m: &ModelParams) -> FitProblem {
    let wide = model_freq_response(m, &logspace(1e-4, 1e4, 2001)).unwrap();
    let omega_b = break_frequency(&wide).unwrap();
    let target = model_freq_response(m, &fitting_grid(omega_b)).unwrap();
    FitProblem::new(target, m.family(), omega_b).unwrap()
}

fn worst_parameter_error(a: &ModelParams, b: &ModelParams) -> f64 {
    let (a, b) = (a.to_vec(), b.to_vec());
    a.iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (x, y))| if i == 3 { (x - y).abs() } else { ((x - y) / x).abs() })
        .fold(0.0, f64::max)
}

#[test]
fn each_family_recovers_its_own_response() {
    for m in [
        ModelParams::fopdt(1.004, 3.0, 0.8).unwrap(),
        ModelParams::fo2pdt(0.997, 2.0, 0.3, 1.25).unwrap(),
        ModelParams::fo2pdt(1.0, 5.0, 1.1, 0.7).unwrap(),
        ModelParams::fopfdd(1.1, 4.0, 1.5, 0.6).unwrap(),
        ModelParams::fopfdd(0.9, 0.7, 0.2, 0.85).unwrap(),
    ] {
        let fit = fit_scalarized(&own_response_problem(&m), 0.5).unwrap();
        let err = worst_parameter_error(&m, &fit.params);
        assert!(err < 1e-4, "{m:?} fitted as {:?} (error {err:e})", fit.params);
        assert!(!fit.stalled);
    }
}

#[test]
fn sweep_is_reproducible_for_a_seed() {
    let m = ModelParams::fopfdd(1.0, 2.0, 0.5, 0.75).unwrap();
    let problem = own_response_problem(&m).with_seed(11);
    let a = pareto_sweep(&problem).unwrap();
    let b = pareto_sweep(&problem).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].q1 < w[1].q1));
}

#[test]
fn step_errors_are_stable_under_grid_refinement() {
    let coarse = TableConfig::default();
    let fine = TableConfig {
        samples_per_t90: 4000,
        ..TableConfig::default()
    };
    let (r1, target, y1) = reference_system(4, &coarse).unwrap();
    let (r2, _, y2) = reference_system(4, &fine).unwrap();
    for family in Family::ALL {
        let a = evaluate_family(&r1, &target, &y1, family, &coarse).unwrap();
        let b = evaluate_family(&r2, &target, &y2, family, &fine).unwrap();
        assert_eq!(a.params, b.params);
        for (x, y) in a.j.iter().zip(&b.j) {
            assert!(((x - y) / y).abs() < 0.05, "{family}: J {:?} vs {:?}", a.j, b.j);
        }
    }
}

#[test]
fn fdd_model_fits_a_short_ladder_best() {
    let config = TableConfig::default();
    let (r, target, y) = reference_system(5, &config).unwrap();
    let j30 = |f| evaluate_family(&r, &target, &y, f, &config).unwrap().j[0];
    let (h1, h2, h3) = (j30(Family::Fopdt), j30(Family::Fo2pdt), j30(Family::Fopfdd));
    assert!(h3 < h2 && h2 < h1, "J30: {h1:e} {h2:e} {h3:e}");
}
