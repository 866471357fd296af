//! Internal Fourier matrix `B(y)`, the cocycle `B⁽ⁿ⁾(y) = B(y)B(Ry)⋯B(R^{n-1}y)` and
//! the matrix Riesz product `C(y) = lim βⁿB⁽ⁿ⁾(y)`.

use crate::error::CocycleError;
use crate::system::System;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Entry `(i, j)` lists the star images `t★` of the displacements `T_ij`.
#[derive(Clone, Debug)]
pub struct FourierMatrixSpec {
    pub entries: Vec<Vec<Vec<Vec<f64>>>>,
    dim: usize,
}

impl FourierMatrixSpec {
    pub fn new(entries: Vec<Vec<Vec<Vec<f64>>>>, dim: usize) -> Self {
        FourierMatrixSpec { entries, dim }
    }

    pub fn from_system(system: &System) -> Self {
        Self::new(system.tstar(), system.internal_dim())
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of exponents per entry, i.e. the substitution matrix.
    pub fn counts(&self) -> Vec<Vec<usize>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(Vec::len).collect())
            .collect()
    }
}

fn check_dim(expected: usize, y: &[f64]) -> Result<(), CocycleError> {
    if y.len() != expected {
        return Err(CocycleError::Dimension {
            expected,
            found: y.len(),
        });
    }
    Ok(())
}

fn expi(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * phase)
}

/// `B_ij(y) = Σ_{t ∈ T_ij} e^{2πi⟨t★|y⟩}`.
pub fn eval_internal_b(spec: &FourierMatrixSpec, y: &[f64]) -> Result<DMatrix<Complex64>, CocycleError> {
    check_dim(spec.dim, y)?;
    Ok(eval_unchecked(spec, y))
}

fn eval_unchecked(spec: &FourierMatrixSpec, y: &[f64]) -> DMatrix<Complex64> {
    let n = spec.size();
    DMatrix::from_fn(n, n, |i, j| {
        spec.entries[i][j]
            .iter()
            .map(|t| expi(t.iter().zip(y).map(|(a, b)| a * b).sum()))
            .sum()
    })
}

fn apply(r: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    (r * DVector::from_column_slice(y)).iter().copied().collect()
}

/// `B⁽ⁿ⁾(y)`, accumulated left to right; `B⁽⁰⁾ = 1`.
pub fn cocycle_product(
    spec: &FourierMatrixSpec,
    r: &DMatrix<f64>,
    y: &[f64],
    n: usize,
) -> Result<DMatrix<Complex64>, CocycleError> {
    check_dim(spec.dim, y)?;
    let mut prod = DMatrix::identity(spec.size(), spec.size());
    let mut z = y.to_vec();
    for _ in 0..n {
        prod *= eval_unchecked(spec, &z);
        z = apply(r, &z);
    }
    Ok(prod)
}

#[derive(Clone, Copy, Debug)]
pub struct RieszOptions {
    pub tol: f64,
    pub n_max: usize,
}

impl Default for RieszOptions {
    fn default() -> Self {
        RieszOptions {
            tol: 1e-10,
            n_max: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RieszProductResult {
    #[serde(serialize_with = "ser_matrix")]
    pub c_matrix: DMatrix<Complex64>,
    #[serde(serialize_with = "ser_vector")]
    pub c: Vec<Complex64>,
    pub n_used: usize,
    /// `‖βⁿB⁽ⁿ⁾ − β^{n+1}B^{(n+1)}‖_max` at the last step.
    pub residual: f64,
    pub first_singular: f64,
    pub second_singular: f64,
    pub converged: bool,
    /// Contraction rate of `R`; the residual decays like `θⁿ`.
    pub theta: f64,
}

impl RieszProductResult {
    pub fn rank_ratio(&self) -> f64 {
        if self.first_singular == 0.0 {
            0.0
        } else {
            self.second_singular / self.first_singular
        }
    }
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<[f64; 2]> = (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

fn ser_vector<S: serde::Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Iterates `βB(y)·βB(Ry)⋯` (β applied per factor) until successive products differ by
/// less than `tol`, then extracts `c(y) = C(y)·v`.
pub fn riesz_limit(
    spec: &FourierMatrixSpec,
    r: &DMatrix<f64>,
    beta: f64,
    v: &[f64],
    y: &[f64],
    opts: RieszOptions,
) -> Result<RieszProductResult, CocycleError> {
    check_dim(spec.dim, y)?;
    if v.len() != spec.size() {
        return Err(CocycleError::Dimension {
            expected: spec.size(),
            found: v.len(),
        });
    }
    let n = spec.size();
    let mut prod = DMatrix::<Complex64>::identity(n, n);
    let mut z = y.to_vec();
    let mut residual = f64::INFINITY;
    let mut n_used = 0;
    let mut converged = false;
    while n_used < opts.n_max {
        let next = &prod * eval_unchecked(spec, &z).scale(beta);
        residual = (&next - &prod).iter().map(|x| x.norm()).fold(0.0, f64::max);
        prod = next;
        z = apply(r, &z);
        n_used += 1;
        if residual < opts.tol {
            converged = true;
            break;
        }
    }
    let vv = DVector::from_iterator(n, v.iter().map(|&x| Complex64::new(x, 0.0)));
    let c: Vec<Complex64> = (&prod * vv).iter().copied().collect();
    let sv = prod.clone().svd(false, false).singular_values;
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(RieszProductResult {
        c_matrix: prod,
        c,
        n_used,
        residual,
        first_singular: s.first().copied().unwrap_or(0.0),
        second_singular: s.get(1).copied().unwrap_or(0.0),
        converged,
        theta: spectral_radius(r),
    })
}

fn spectral_radius(r: &DMatrix<f64>) -> f64 {
    r.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `f(y) = η·c(y)`: the inverse Fourier transforms of the window indicators.
pub fn window_ft(result: &RieszProductResult, eta: f64) -> Vec<Complex64> {
    result.c.iter().map(|z| z * eta).collect()
}

/// Direct-space `B_ij(k) = Σ_{x ∈ T_ij} e^{2πixk}`.
pub fn eval_direct_b(t: &[Vec<Vec<f64>>], k: f64) -> DMatrix<Complex64> {
    let n = t.len();
    DMatrix::from_fn(n, n, |i, j| t[i][j].iter().map(|x| expi(x * k)).sum())
}

/// Everything needed to evaluate `C(y)` for one system.
#[derive(Clone, Debug)]
pub struct Cocycle {
    pub spec: FourierMatrixSpec,
    pub r: DMatrix<f64>,
    pub beta: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub lambda: f64,
}

impl Cocycle {
    pub fn new(system: &System) -> Self {
        let n = system.alphabet_size();
        Cocycle {
            spec: FourierMatrixSpec::from_system(system),
            r: system.embedding.cocycle_map(),
            beta: 1.0 / system.lambda(),
            v: system.pf.v.clone(),
            u: system.pf.u.clone(),
            matrix: DMatrix::from_fn(n, n, |i, j| system.matrix.get(i, j) as f64),
            lambda: system.lambda(),
        }
    }

    pub fn b(&self, y: &[f64]) -> Result<DMatrix<Complex64>, CocycleError> {
        eval_internal_b(&self.spec, y)
    }

    pub fn product(&self, y: &[f64], n: usize) -> Result<DMatrix<Complex64>, CocycleError> {
        cocycle_product(&self.spec, &self.r, y, n)
    }

    pub fn limit(&self, y: &[f64], opts: RieszOptions) -> Result<RieszProductResult, CocycleError> {
        riesz_limit(&self.spec, &self.r, self.beta, &self.v, y, opts)
    }

    pub fn c(&self, y: &[f64]) -> Result<Vec<Complex64>, CocycleError> {
        Ok(self.limit(y, RieszOptions::default())?.c)
    }

    pub fn apply_r(&self, y: &[f64]) -> Vec<f64> {
        apply(&self.r, y)
    }
}

/// Largest `1 - |⟨row|u⟩|/(‖row‖‖u‖)` over the rows of `C`, skipping rows below
/// `1e-6` of the largest row norm (zeros of a window transform carry only truncation noise).
pub fn row_cosine_defect(c: &DMatrix<Complex64>, u: &[f64]) -> f64 {
    let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norms: Vec<f64> = (0..c.nrows())
        .map(|i| c.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let cutoff = 1e-6 * norms.iter().copied().fold(0.0, f64::max);
    (0..c.nrows())
        .filter_map(|i| {
            let row = c.row(i);
            let rn = norms[i];
            if rn <= cutoff {
                return None;
            }
            let dot: Complex64 = row.iter().zip(u).map(|(z, x)| z * x).sum();
            Some(1.0 - dot.norm() / (rn * un))
        })
        .fold(0.0, f64::max)
}

/// Scalar recursion `q_{n+1}(y) = |σ|q_n(σy) + σ²e^{2πiσ²y}q_{n-1}(σ²y)`, `q₁ = q₀ = |σ|`,
/// whose limit is `c_a(y)` for the Fibonacci rule.
pub fn fibonacci_q(y: f64, n: usize) -> Complex64 {
    let sigma = (1.0 - 5f64.sqrt()) / 2.0;
    let s = sigma.abs();
    // q_m is only ever needed at σ^{n-m}y
    let (mut prev, mut cur) = (Complex64::new(s, 0.0), Complex64::new(s, 0.0));
    for m in 1..n {
        let z = sigma.powi((n - m + 1) as i32) * y;
        let next = cur * s + expi(z) * sigma * sigma * prev;
        prev = cur;
        cur = next;
    }
    cur
}
