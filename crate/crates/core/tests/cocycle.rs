use num_complex::Complex64;
use proptest::prelude::*;
use spectra_core::cocycle::{fibonacci_q, row_cosine_defect, Cocycle, RieszOptions};
use spectra_core::fixtures::{list_fixtures, load_fixture};
use spectra_core::system::System;
use std::sync::OnceLock;

fn cocycles() -> &'static Vec<(System, Cocycle)> {
    static C: OnceLock<Vec<(System, Cocycle)>> = OnceLock::new();
    C.get_or_init(|| {
        list_fixtures()
            .iter()
            .map(|f| {
                let s = load_fixture(f.name).unwrap();
                let c = Cocycle::new(&s);
                (s, c)
            })
            .collect()
    })
}

const OPTS: RieszOptions = RieszOptions { tol: 1e-12, n_max: 1000 };

fn point() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (0usize..12, prop::collection::vec(-3.0f64..3.0, 5))
}

fn pick(idx: usize, y: &[f64]) -> (&'static System, &'static Cocycle, Vec<f64>) {
    let (s, c) = &cocycles()[idx % cocycles().len()];
    (s, c, y[..s.internal_dim()].to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cocycle_entries_are_bounded_by_matrix_powers((idx, y) in point(), n in 0usize..=20) {
        let (s, c, y) = pick(idx, &y);
        let b = c.product(&y, n).unwrap();
        let mn = s.matrix.to_dmatrix().pow(n as u32);
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                prop_assert!(b[(i, j)].norm() <= mn[(i, j)] + 1e-9);
            }
        }
    }

    #[test]
    fn riesz_product_is_hermitian((idx, y) in point()) {
        let (_, c, y) = pick(idx, &y);
        let neg: Vec<f64> = y.iter().map(|x| -x).collect();
        let a = c.limit(&y, OPTS).unwrap().c_matrix;
        let b = c.limit(&neg, OPTS).unwrap().c_matrix;
        prop_assert!((a - b.conjugate()).camax() < 1e-10);
    }

    #[test]
    fn riesz_product_has_rank_one_with_rows_along_u((idx, y) in point()) {
        let (s, c, y) = pick(idx, &y);
        let res = c.limit(&y, OPTS).unwrap();
        prop_assert!(res.converged);
        prop_assert!(res.second_singular <= 1e-6 * res.first_singular);
        prop_assert!(row_cosine_defect(&res.c_matrix, &s.pf.u) < 1e-6);
        let m = s.matrix.to_dmatrix().map(|x| Complex64::new(x, 0.0));
        let lhs = &res.c_matrix * m;
        prop_assert!((lhs - res.c_matrix.scale(s.lambda())).camax() < 1e-8);
    }

    #[test]
    fn transfer_equation((idx, y) in point()) {
        let (_, c, y) = pick(idx, &y);
        let f = c.limit(&y, OPTS).unwrap().c;
        let g = c.limit(&c.apply_r(&y), OPTS).unwrap().c;
        let bg = c.b(&y).unwrap() * nalgebra::DVector::from_vec(g);
        for (a, b) in f.iter().zip(bg.iter()) {
            prop_assert!((a - b * c.beta).norm() < 1e-8);
        }
    }
}

#[test]
fn fourier_matrix_at_zero_is_the_substitution_matrix() {
    for (s, c) in cocycles() {
        let b = c.b(&vec![0.0; s.internal_dim()]).unwrap();
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                assert_eq!(b[(i, j)].re.round() as i64, s.matrix.get(i, j));
                assert_eq!(b[(i, j)].im, 0.0);
            }
        }
    }
}

#[test]
fn riesz_product_at_zero_is_the_projector() {
    for (s, c) in cocycles() {
        let res = c.limit(&vec![0.0; s.internal_dim()], OPTS).unwrap();
        let p = s.pf.projector().map(|x| Complex64::new(x, 0.0));
        assert!((res.c_matrix - p).camax() < 1e-10, "{}", s.name());
        for (ci, vi) in res.c.iter().zip(&s.pf.v) {
            assert!((ci - vi).norm() < 1e-10);
        }
    }
}

#[test]
fn fibonacci_scalar_recursion_matches_limit() {
    let s = load_fixture("fibonacci").unwrap();
    let c = Cocycle::new(&s);
    for k in 0..=100 {
        let y = -5.0 + 0.1 * k as f64;
        let ca = c.limit(&[y], RieszOptions::default()).unwrap().c[0];
        assert!((fibonacci_q(y, 80) - ca).norm() < 1e-6, "y = {y}");
    }
}

#[test]
fn truncated_product_reports_residual() {
    let s = load_fixture("pisa_6").unwrap();
    let c = Cocycle::new(&s);
    let y = [0.10291311109829505, 0.1741458500086913, 0.06891841477378637, 0.201168544606304, 0.027938694013398085];
    let short = c.limit(&y, RieszOptions { tol: 1e-10, n_max: 50 }).unwrap();
    assert!(!short.converged);
    assert!(short.residual >= 1e-10);
    assert_eq!(short.n_used, 50);
    let long = c.limit(&y, OPTS).unwrap();
    assert!(long.converged);
    assert!(long.n_used > 200);
}
