//! Exact arithmetic in `Q(λ)` over the power basis `1, λ, …, λ^(d-1)`.

use super::poly::IntPoly;
use crate::error::FieldError;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Element of `Q(λ)`, stored as rational coefficients over the power basis.
///
/// Coefficient vectors always have length `d`; reduction modulo the minimal
/// polynomial happens inside [`NumberField::mul`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    coeffs: Vec<BigRational>,
}

impl FieldElement {
    pub fn zero(d: usize) -> Self {
        FieldElement {
            coeffs: vec![BigRational::zero(); d],
        }
    }

    pub fn one(d: usize) -> Self {
        Self::from_int(d, 1)
    }

    pub fn from_int(d: usize, n: i64) -> Self {
        let mut e = Self::zero(d);
        e.coeffs[0] = BigRational::from_integer(n.into());
        e
    }

    /// Builds an element from integer coefficients; shorter vectors are zero-padded.
    pub fn from_ints(d: usize, c: &[i64]) -> Self {
        assert!(c.len() <= d, "too many coefficients");
        let mut e = Self::zero(d);
        for (k, &x) in c.iter().enumerate() {
            e.coeffs[k] = BigRational::from_integer(x.into());
        }
        e
    }

    pub fn from_rationals(coeffs: Vec<BigRational>) -> Self {
        FieldElement { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// True when all coefficients are integers, i.e. the element lies in `Z[λ]`.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.coeffs
            .iter()
            .map(|c| if c.is_integer() { c.to_integer().to_i64() } else { None })
            .collect()
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        FieldElement {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn scale_int(&self, s: i64) -> Self {
        self.scale(&BigRational::from_integer(s.into()))
    }

    /// Least common multiple of the coefficient denominators.
    pub fn denominator(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Coefficients as `f64` (lossy).
    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// Renders as `(a0 + a1 L + …)/den` with `var` in place of `L`.
    pub fn display_with(&self, var: &str) -> String {
        let den = self.denominator();
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        let mut body = String::new();
        for (k, c) in ints.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if body.is_empty() {
                if neg {
                    body.push('-');
                }
            } else {
                body.push_str(if neg { " - " } else { " + " });
            }
            let mono = match k {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{k}"),
            };
            if mono.is_empty() {
                body.push_str(&mag.to_string());
            } else if mag.is_one() {
                body.push_str(&mono);
            } else {
                body.push_str(&format!("{mag}{mono}"));
            }
        }
        if body.is_empty() {
            return "0".into();
        }
        if den.is_one() {
            body
        } else {
            format!("({body})/{den}")
        }
    }

    /// Coefficients as strings `p/q`, for machine-readable output.
    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with("L"))
    }
}

impl Serialize for FieldElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        let coeffs = v
            .iter()
            .map(|s| s.parse::<BigRational>().map_err(serde::de::Error::custom))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FieldElement { coeffs })
    }
}

impl Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        FieldElement {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        FieldElement {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

/// The field `Q(λ) = Q[x]/(m(x))` for a monic irreducible integer polynomial `m`.
#[derive(Clone, Debug)]
pub struct NumberField {
    minpoly: IntPoly,
    d: usize,
    /// `tr(λ^k)` for `0 <= k < 2d - 1`.
    power_traces: Vec<BigInt>,
    lambda: f64,
}

impl NumberField {
    /// `lambda` is the real root the elements are evaluated at.
    pub fn new(minpoly: IntPoly, lambda: f64) -> Self {
        assert!(minpoly.is_monic() && minpoly.degree() >= 1);
        let d = minpoly.degree();
        let power_traces = newton_power_sums(&minpoly, 2 * d - 1);
        NumberField {
            minpoly,
            d,
            power_traces,
            lambda,
        }
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn minpoly(&self) -> &IntPoly {
        &self.minpoly
    }

    pub fn lambda_value(&self) -> f64 {
        self.lambda
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::zero(self.d)
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::one(self.d)
    }

    pub fn int(&self, n: i64) -> FieldElement {
        FieldElement::from_int(self.d, n)
    }

    pub fn from_ints(&self, c: &[i64]) -> FieldElement {
        FieldElement::from_ints(self.d, c)
    }

    /// The generator `λ` itself.
    pub fn lambda(&self) -> FieldElement {
        self.lambda_pow(1)
    }

    /// `λ^k` for `k >= 0`, reduced.
    pub fn lambda_pow(&self, k: usize) -> FieldElement {
        let mut e = self.one();
        for _ in 0..k {
            e = self.mul_lambda(&e);
        }
        e
    }

    /// Reduces an arbitrary-length coefficient vector modulo the minimal polynomial.
    pub fn reduce(&self, mut c: Vec<BigRational>) -> FieldElement {
        let m = self.minpoly.coeffs();
        while c.len() > self.d {
            let top = c.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let base = c.len() - self.d;
            for (k, mk) in m.iter().take(self.d).enumerate() {
                c[base + k] -= &top * BigRational::from_integer(mk.clone());
            }
        }
        c.resize(self.d, BigRational::zero());
        FieldElement { coeffs: c }
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let mut out = vec![BigRational::zero(); 2 * self.d - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        self.reduce(out)
    }

    pub fn mul_lambda(&self, a: &FieldElement) -> FieldElement {
        let mut c = Vec::with_capacity(self.d + 1);
        c.push(BigRational::zero());
        c.extend(a.coeffs.iter().cloned());
        self.reduce(c)
    }

    /// `λ^{-1}` from the unit relation `λ·(λ^{d-1} + a_{d-1}λ^{d-2} + … + a_1) = -a_0`.
    pub fn lambda_inv(&self) -> Result<FieldElement, FieldError> {
        let m = self.minpoly.coeffs();
        let a0 = &m[0];
        if !a0.abs().is_one() {
            return Err(FieldError::NotUnit(a0.to_string()));
        }
        let s = BigRational::from_integer(-a0.clone());
        let coeffs = (0..self.d)
            .map(|k| BigRational::from_integer(m[k + 1].clone()) * &s)
            .collect();
        Ok(FieldElement { coeffs })
    }

    /// `a / λ`, exact; requires a unit.
    pub fn mul_lambda_inv(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, &self.lambda_inv()?))
    }

    pub fn pow(&self, a: &FieldElement, mut e: u32) -> FieldElement {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Multiplication-by-`a` matrix on the power basis (column `j` is `a·λ^j`).
    pub fn mul_matrix(&self, a: &FieldElement) -> Vec<Vec<BigRational>> {
        let mut cols = Vec::with_capacity(self.d);
        let mut x = a.clone();
        for _ in 0..self.d {
            cols.push(x.coeffs.clone());
            x = self.mul_lambda(&x);
        }
        (0..self.d)
            .map(|i| (0..self.d).map(|j| cols[j][i].clone()).collect())
            .collect()
    }

    /// Inverse by an exact linear solve of `(mul-by-a)·c = e₀`.
    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        let mut rhs = vec![BigRational::zero(); self.d];
        rhs[0] = BigRational::one();
        let sol = solve_rational(self.mul_matrix(a), rhs).ok_or(FieldError::DivisionByZero)?;
        Ok(FieldElement { coeffs: sol })
    }

    pub fn div(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// Exact number-theoretic trace, from power sums of the roots.
    pub fn trace(&self, a: &FieldElement) -> BigRational {
        a.coeffs
            .iter()
            .zip(&self.power_traces)
            .map(|(c, t)| c * BigRational::from_integer(t.clone()))
            .fold(BigRational::zero(), |acc, x| acc + x)
    }

    /// `tr(λ^k)` for `k < 2d - 1`.
    pub fn power_trace(&self, k: usize) -> &BigInt {
        &self.power_traces[k]
    }

    /// Real value at the distinguished root.
    pub fn value(&self, a: &FieldElement) -> f64 {
        let c = a.coeffs_f64();
        c.iter().rev().fold(0.0, |acc, &x| acc * self.lambda + x)
    }

    /// Parses an element written as a polynomial in `L` (see [`crate::expr`]).
    pub fn parse(&self, text: &str) -> Result<FieldElement, String> {
        crate::expr::parse_field_expr(text, self)
    }
}

/// Power sums `p_k = Σ r^k` over the roots of a monic polynomial, `0 <= k < count`.
fn newton_power_sums(p: &IntPoly, count: usize) -> Vec<BigInt> {
    let d = p.degree();
    let c = p.coeffs();
    // x^d + e1' x^{d-1} + ... with a_{d-k} the coefficient of x^{d-k}
    let a = |k: usize| -> BigInt { c[d - k].clone() };
    let mut s: Vec<BigInt> = Vec::with_capacity(count);
    for k in 0..count {
        if k == 0 {
            s.push(BigInt::from(d));
            continue;
        }
        let mut val = BigInt::zero();
        let upto = k.min(d);
        for i in 1..upto {
            val -= a(i) * &s[k - i];
        }
        if k <= d {
            val -= BigInt::from(k) * a(k);
        } else {
            val -= a(d) * &s[k - d];
        }
        s.push(val);
    }
    s
}

/// Gaussian elimination over `Q`; `None` for a singular system.
pub fn solve_rational(
    mut a: Vec<Vec<BigRational>>,
    mut b: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let v = &f * &a[col][c];
                a[r][c] -= v;
            }
            let v = &f * &b[col];
            b[r] -= v;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}
