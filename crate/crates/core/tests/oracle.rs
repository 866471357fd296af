use spectra_core::diffraction::AmplitudeFormula;
use spectra_core::fixtures::load_fixture;
use spectra_core::oracle::{
    brute_fb, closed_form_check, declared_tolerance, grid, smoke, uniform_distribution_test,
};
use spectra_core::windows::{solve_windows, WindowOptions};
use spectra_core::Error;

const ONE: AmplitudeFormula = AmplitudeFormula::ConstantCovering { degree: 1 };

#[test]
fn closed_forms_agree_with_cocycle() {
    let g = grid(-5.0, 5.0, 101);
    assert!(closed_form_check("fibonacci", &g).unwrap().max_error < 1e-8);
    assert!(closed_form_check("rho_tilde", &g).unwrap().max_error < 1e-6);
    assert!(closed_form_check("tribonacci", &g).is_err());
}

#[test]
fn patch_must_cover_the_averaging_window() {
    let s = load_fixture("fibonacci").unwrap();
    let p = s.patch(100.0).unwrap();
    assert!(matches!(brute_fb(&p, 0.5, 1e6), Err(Error::Oracle(_))));
}

#[test]
fn fibonacci_smoke_at_small_radius() {
    let s = load_fixture("fibonacci").unwrap();
    let report = smoke(&s, &ONE, 1e4, 5).unwrap();
    assert_eq!(report.reports.len(), 5);
    assert!(report.passed, "{}", report.max_deviation);
    assert_eq!(report.tolerance, declared_tolerance(&s, 1e4));
}

#[test]
fn declared_tolerance_tracks_internal_resolution() {
    let fib = load_fixture("fibonacci").unwrap();
    assert!((declared_tolerance(&fib, 1e5) - 1e-2).abs() < 1e-15);
    let pisa = load_fixture("pisa_6").unwrap();
    assert!(declared_tolerance(&pisa, 1e4) > 0.1);
}

#[test]
fn fibonacci_points_fill_their_windows_evenly() {
    let s = load_fixture("fibonacci").unwrap();
    let sol = solve_windows(&s, &WindowOptions::default()).unwrap();
    let patch = s.patch_with_counts(20_000).unwrap();
    let reports = uniform_distribution_test(&s, &patch, &sol, 10, 20_000).unwrap();
    for r in reports {
        assert_eq!(r.outside, 0);
        assert_eq!(r.observed.iter().sum::<usize>(), 20_000);
        assert!(r.max_deviation < 0.05, "{} {}", r.letter, r.max_deviation);
    }
}
