//! Substitution matrix, Perron–Frobenius data, natural tile lengths,
//! displacement matrix and control-point patches.

mod geometry;
mod patch;

pub use geometry::{
    displacement_matrix, exact_eigenvector, natural_lengths, DisplacementMatrix, NaturalLengths,
};
pub use patch::{
    find_fixed_power_and_seed, iterate_patch, legal_two_letter_words, patch_with_radius, FixedSeed,
    TypedPointSet, ZLambda,
};

use crate::error::SubstitutionError;
use crate::numberfield::IntPoly;
use crate::rule::SubstitutionRule;
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubstitutionMatrix {
    /// `entries[i][j]` counts letter `i` in the image of letter `j`.
    pub entries: Vec<Vec<i64>>,
}

impl SubstitutionMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i][j]
    }

    pub fn column_sums(&self) -> Vec<i64> {
        (0..self.size())
            .map(|j| self.entries.iter().map(|row| row[j]).sum())
            .collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j] as f64)
    }

    pub fn charpoly(&self) -> IntPoly {
        IntPoly::charpoly(&self.entries)
    }

    /// `M^n` with overflow detection.
    pub fn checked_pow(&self, n: usize) -> Option<Vec<Vec<i64>>> {
        let size = self.size();
        let mut acc: Vec<Vec<i64>> = (0..size)
            .map(|i| (0..size).map(|j| i64::from(i == j)).collect())
            .collect();
        for _ in 0..n {
            acc = int_matmul(&acc, &self.entries)?;
        }
        Some(acc)
    }

    /// `M^n · x` with overflow detection.
    pub fn checked_apply_pow(&self, x: &[i64], n: usize) -> Option<Vec<i64>> {
        let mut v = x.to_vec();
        for _ in 0..n {
            let mut next = vec![0i64; v.len()];
            for (i, row) in self.entries.iter().enumerate() {
                for (j, &m) in row.iter().enumerate() {
                    next[i] = next[i].checked_add(m.checked_mul(v[j])?)?;
                }
            }
            v = next;
        }
        Some(v)
    }
}

fn int_matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = a.len();
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..n {
                out[i][j] = out[i][j].checked_add(a[i][k].checked_mul(b[k][j])?)?;
            }
        }
    }
    Some(out)
}

pub fn substitution_matrix(rule: &SubstitutionRule) -> SubstitutionMatrix {
    let n = rule.alphabet_size();
    let mut entries = vec![vec![0i64; n]; n];
    for (j, img) in rule.images.iter().enumerate() {
        for &i in img {
            entries[i][j] += 1;
        }
    }
    SubstitutionMatrix { entries }
}

/// Positivity-pattern test: repeated boolean squaring up to the Wielandt bound.
pub fn is_primitive(m: &SubstitutionMatrix) -> bool {
    let n = m.size();
    if n == 0 {
        return false;
    }
    let pattern: Vec<Vec<bool>> = m
        .entries
        .iter()
        .map(|row| row.iter().map(|&x| x > 0).collect())
        .collect();
    let bound = n * n - 2 * n + 2;
    let mut p = pattern;
    let mut k = 1;
    loop {
        if p.iter().all(|row| row.iter().all(|&b| b)) {
            return true;
        }
        if k >= bound {
            return false;
        }
        p = bool_matmul(&p, &p);
        k *= 2;
    }
}

fn bool_matmul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PFData {
    pub lambda: f64,
    /// Right eigenvector, `⟨1|v⟩ = 1`.
    pub v: Vec<f64>,
    /// Left eigenvector, `⟨u|v⟩ = 1`.
    pub u: Vec<f64>,
    pub residual: f64,
}

impl PFData {
    /// The rank-1 projector `P = |v⟩⟨u|`.
    pub fn projector(&self) -> DMatrix<f64> {
        let n = self.v.len();
        DMatrix::from_fn(n, n, |i, j| self.v[i] * self.u[j])
    }
}

const PF_MAX_ITER: usize = 100_000;

pub fn pf_eigendata(m: &SubstitutionMatrix, tol: f64) -> Result<PFData, SubstitutionError> {
    if !is_primitive(m) {
        return Err(SubstitutionError::NotPrimitive);
    }
    let a = m.to_dmatrix();
    let at = a.transpose();
    let v = power_iteration(&a)?;
    let mut u = power_iteration(&at)?;
    let av = &a * &v;
    let mut lambda = av.sum() / v.sum();
    let p = m.charpoly();
    let dp = p.derivative();
    for _ in 0..5 {
        let d = dp.eval_f64(lambda);
        if d == 0.0 {
            break;
        }
        lambda -= p.eval_f64(lambda) / d;
    }
    let uv = u.dot(&v);
    u /= uv;
    let res_v = (&a * &v - lambda * &v).amax();
    let res_u = (&at * &u - lambda * &u).amax();
    let residual = res_v.max(res_u).max((u.dot(&v) - 1.0).abs());
    if residual >= tol {
        return Err(SubstitutionError::NoConvergence(PF_MAX_ITER));
    }
    Ok(PFData {
        lambda,
        v: v.iter().copied().collect(),
        u: u.iter().copied().collect(),
        residual,
    })
}

/// Power iteration normalised to unit 1-norm; primitive input keeps iterates positive.
fn power_iteration(a: &DMatrix<f64>) -> Result<nalgebra::DVector<f64>, SubstitutionError> {
    let n = a.nrows();
    let mut x = nalgebra::DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..PF_MAX_ITER {
        let mut y = a * &x;
        y /= y.sum();
        let change = (&y - &x).amax();
        x = y;
        if change < 1e-16 {
            return Ok(x);
        }
    }
    // rounding may keep the last bits oscillating; accept if stationary to working precision
    let mut y = a * &x;
    y /= y.sum();
    if (&y - &x).amax() < 1e-13 {
        Ok(y)
    } else {
        Err(SubstitutionError::NoConvergence(PF_MAX_ITER))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::parse_rule;

    fn matrix(text: &str) -> SubstitutionMatrix {
        substitution_matrix(&parse_rule(text).unwrap())
    }

    #[test]
    fn fibonacci_matrix_and_pf() {
        let m = matrix("a -> ab ; b -> a");
        assert_eq!(m.entries, vec![vec![1, 1], vec![1, 0]]);
        assert!(is_primitive(&m));
        let pf = pf_eigendata(&m, 1e-12).unwrap();
        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((pf.lambda - tau).abs() < 1e-15);
        assert!((pf.v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((pf.v[0] - tau / (tau + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn pisa4_matrix_shape() {
        let m = matrix("a -> ab ; b -> ac ; c -> ad ; d -> a");
        assert_eq!(m.entries[0], vec![1, 1, 1, 1]);
        for i in 1..4 {
            for j in 0..4 {
                assert_eq!(m.entries[i][j], i64::from(j + 1 == i));
            }
        }
        let pf = pf_eigendata(&m, 1e-12).unwrap();
        assert!((pf.lambda - 1.927_561_975_482_925).abs() < 1e-12);
    }

    #[test]
    fn primitivity() {
        assert!(!is_primitive(&SubstitutionMatrix {
            entries: vec![vec![1, 0], vec![0, 1]]
        }));
        assert!(!is_primitive(&matrix("a -> b ; b -> a")));
        assert!(is_primitive(&matrix("a -> ab ; A -> AB ; b -> A ; B -> a")));
        assert_eq!(matrix("a -> a").entries, vec![vec![1]]);
        assert!(matches!(
            pf_eigendata(
                &SubstitutionMatrix {
                    entries: vec![vec![1, 0], vec![0, 1]]
                },
                1e-12
            ),
            Err(SubstitutionError::NotPrimitive)
        ));
    }

    #[test]
    fn projector_is_idempotent() {
        let m = matrix("a -> ab ; b -> ac ; c -> a");
        let pf = pf_eigendata(&m, 1e-12).unwrap();
        let p = pf.projector();
        assert!((&p * &p - &p).amax() < 1e-14);
        let mut mn = DMatrix::<f64>::identity(3, 3);
        let a = m.to_dmatrix() / pf.lambda;
        for _ in 0..40 {
            mn = &mn * &a;
        }
        assert!((mn - p).amax() < 1e-6);
    }
}
