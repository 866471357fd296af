use proptest::prelude::*;
use spectra_core::fixtures::{list_fixtures, load_fixture};
use spectra_core::numberfield::{FieldElement, NumberField};
use spectra_core::system::System;
use std::sync::OnceLock;

fn systems() -> &'static Vec<System> {
    static S: OnceLock<Vec<System>> = OnceLock::new();
    S.get_or_init(|| list_fixtures().iter().map(|f| load_fixture(f.name).unwrap()).collect())
}

fn element(field: &NumberField, coeffs: &[i64]) -> FieldElement {
    field.from_ints(&coeffs[..field.degree()])
}

fn coeffs() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-20i64..=20, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_inverse_roundtrip(idx in 0usize..12, a in coeffs(), b in coeffs()) {
        let s = &systems()[idx % systems().len()];
        let f = s.field();
        let (x, y) = (element(f, &a), element(f, &b));
        let z = f.mul(&x, &f.mul_lambda_inv(&y).unwrap());
        prop_assert_eq!(f.mul_lambda(&z), f.mul(&x, &y));
    }

    #[test]
    fn star_map_is_a_ring_homomorphism(idx in 0usize..12, a in coeffs(), b in coeffs()) {
        let s = &systems()[idx % systems().len()];
        let (f, e) = (s.field(), &s.embedding);
        let (x, y) = (element(f, &a), element(f, &b));
        let (sx, sy) = (e.star_map(&x), e.star_map(&y));
        let sum = e.star_map(&(&x + &y));
        let prod = e.star_map(&f.mul(&x, &y));
        let scale = 1.0 + sx.iter().chain(&sy).fold(0.0f64, |m, v| m.max(v.abs())).powi(2);
        for k in 0..sx.len() {
            prop_assert!((sum[k] - sx[k] - sy[k]).abs() < 1e-10 * scale);
        }
        // products per real conjugate and per complex pair
        let mut k = 0;
        for _ in 1..e.real_roots.len() {
            prop_assert!((prod[k] - sx[k] * sy[k]).abs() < 1e-10 * scale);
            k += 1;
        }
        for _ in &e.complex_roots {
            let p = (sx[k] * sy[k] - sx[k + 1] * sy[k + 1], sx[k] * sy[k + 1] + sx[k + 1] * sy[k]);
            prop_assert!((prod[k] - p.0).abs() < 1e-10 * scale);
            prop_assert!((prod[k + 1] - p.1).abs() < 1e-10 * scale);
            k += 2;
        }
    }

    #[test]
    fn q_acts_as_multiplication_by_lambda(idx in 0usize..12, a in coeffs()) {
        let s = &systems()[idx % systems().len()];
        let e = &s.embedding;
        let x = element(s.field(), &a);
        let lhs = e.star_map(&s.field().mul_lambda(&x));
        let sx = e.star_map(&x);
        let rhs = &e.contraction * nalgebra::DVector::from_column_slice(&sx);
        let scale = 1.0 + sx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..lhs.len() {
            prop_assert!((lhs[k] - rhs[k]).abs() < 1e-10 * scale);
        }
    }
}

#[test]
fn dual_basis_is_inverse_transpose() {
    for s in systems() {
        let e = &s.embedding;
        let d = e.degree();
        let id = e.basis.transpose() * &e.dual;
        assert!((id - nalgebra::DMatrix::<f64>::identity(d, d)).amax() < 1e-12, "{}", s.name());
        let dets = e.basis.determinant().abs() * e.dual.determinant().abs();
        assert!((dets - 1.0).abs() < 1e-10, "{}", s.name());
    }
}

#[test]
fn internal_contraction() {
    for s in systems() {
        assert!(s.embedding.theta_rate < 1.0);
    }
    let fib = load_fixture("fibonacci").unwrap();
    let tau = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((fib.embedding.theta_rate - (tau - 1.0)).abs() < 1e-12);
}

#[test]
fn fourier_module_generator_satisfies_trace_criterion() {
    for s in systems() {
        let e = &s.embedding;
        assert_eq!(e.theta_from_dual_basis().unwrap(), e.theta_from_trace().unwrap(), "{}", s.name());
        let f = s.field();
        for i in 0..e.degree() {
            for j in 0..e.degree() {
                let x = f.mul(&e.theta, &f.lambda_pow(i + j));
                assert!(f.trace(&x).is_integer(), "{} ({i},{j})", s.name());
            }
        }
    }
}

#[test]
fn fibonacci_module_is_z_tau_over_sqrt5() {
    let s = load_fixture("fibonacci").unwrap();
    let f = s.field();
    let two_l_minus_1 = f.from_ints(&[-1, 2]);
    assert_eq!(s.embedding.theta, f.inv(&two_l_minus_1).unwrap());
}
