//! Dense univariate polynomials with integer and rational coefficients.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Integer polynomial, coefficients stored from the constant term upwards.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigInt::zero());
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.is_one())
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs_f64().iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs_f64()
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> IntPoly {
        if self.degree() == 0 {
            return IntPoly::new(vec![BigInt::zero()]);
        }
        IntPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigInt::from(k))
                .collect(),
        )
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    /// Division by a monic polynomial; returns `(quotient, remainder)`.
    pub fn div_rem_monic(&self, divisor: &IntPoly) -> (IntPoly, IntPoly) {
        assert!(divisor.is_monic(), "divisor must be monic");
        let dd = divisor.degree();
        if self.degree() < dd {
            return (IntPoly::new(vec![BigInt::zero()]), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigInt::zero(); self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone();
            if c.is_zero() {
                continue;
            }
            for (i, d) in divisor.coeffs.iter().enumerate() {
                rem[k + i] -= &c * d;
            }
            quot[k] = c;
        }
        rem.truncate(dd.max(1));
        (IntPoly::new(quot), IntPoly::new(rem))
    }

    pub fn divides(&self, other: &IntPoly) -> bool {
        other.div_rem_monic(self).1.is_zero()
    }

    /// Characteristic polynomial `det(xI - A)` via Faddeev-LeVerrier in exact arithmetic.
    pub fn charpoly(a: &[Vec<i64>]) -> IntPoly {
        let n = a.len();
        let am: Vec<Vec<BigInt>> = a
            .iter()
            .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut mk = vec![vec![BigInt::zero(); n]; n];
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I
            let mut next = vec![vec![BigInt::zero(); n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut s = BigInt::zero();
                    for l in 0..n {
                        s += &am[i][l] * &mk[l][j];
                    }
                    next[i][j] = s;
                }
                next[i][i] += &coeffs[n - k + 1];
            }
            let mut tr = BigInt::zero();
            for i in 0..n {
                for l in 0..n {
                    tr += &am[i][l] * &next[l][i];
                }
            }
            coeffs[n - k] = -(tr / BigInt::from(k));
            mk = next;
        }
        IntPoly::new(coeffs)
    }

    /// Numerical roots: companion-matrix eigenvalues polished by Newton steps.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let c = self.coeffs_f64();
        let lead = c[n];
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -c[i] / lead;
        }
        let eig = comp.complex_eigenvalues();
        let deriv = self.derivative();
        eig.iter()
            .map(|&z0| {
                let mut z = z0;
                for _ in 0..50 {
                    let f = self.eval_complex(z);
                    let df = deriv.eval_complex(z);
                    if df.norm() == 0.0 {
                        break;
                    }
                    let step = f / df;
                    z -= step;
                    if step.norm() <= 1e-17 * z.norm().max(1.0) {
                        break;
                    }
                }
                // keep real roots exactly real
                if z.im.abs() < 1e-13 * z.norm().max(1.0) {
                    z.im = 0.0;
                }
                z
            })
            .collect()
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_poly(&self.coeffs, "x"))
    }
}

/// Human-readable polynomial in `var`, highest degree first.
pub fn format_poly(coeffs: &[BigInt], var: &str) -> String {
    let mut out = String::new();
    for (k, c) in coeffs.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let mag = c.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mono = match k {
            0 => String::new(),
            1 => var.to_string(),
            _ => format!("{var}^{k}"),
        };
        if mono.is_empty() {
            out.push_str(&mag.to_string());
        } else if mag.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&format!("{mag}{mono}"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Rational polynomial used for gcd computations; coefficients low to high.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct RatPoly(pub Vec<BigRational>);

impl RatPoly {
    pub fn from_int(p: &IntPoly) -> Self {
        RatPoly(
            p.coeffs()
                .iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect(),
        )
        .trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.len() > 1 && self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    fn rem(&self, d: &RatPoly) -> RatPoly {
        let mut r = self.0.clone();
        let dd = d.0.len() - 1;
        let lead = d.0[dd].clone();
        while r.len() > dd && !(r.len() == 1 && r[0].is_zero()) {
            let k = r.len() - 1;
            let c = &r[k] / &lead;
            for (i, di) in d.0.iter().enumerate() {
                let idx = k - dd + i;
                r[idx] = &r[idx] - &c * di;
            }
            r.pop();
            while r.len() > 1 && r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
            if r.len() <= dd {
                break;
            }
        }
        RatPoly(r).trimmed()
    }

    pub fn gcd(a: &RatPoly, b: &RatPoly) -> RatPoly {
        let mut x = a.clone();
        let mut y = b.clone();
        while !y.is_zero() {
            let r = x.rem(&y);
            x = y;
            y = r;
        }
        let lead = x.0.last().cloned().unwrap_or_else(BigRational::one);
        RatPoly(x.0.iter().map(|c| c / &lead).collect())
    }

    /// Exact quotient `self / d` (assumes divisibility).
    pub fn div_exact(&self, d: &RatPoly) -> RatPoly {
        let dd = d.0.len() - 1;
        let n = self.0.len() - 1;
        if n < dd {
            return RatPoly(vec![BigRational::zero()]);
        }
        let mut r = self.0.clone();
        let mut q = vec![BigRational::zero(); n - dd + 1];
        let lead = d.0[dd].clone();
        for k in (0..q.len()).rev() {
            let c = &r[k + dd] / &lead;
            for (i, di) in d.0.iter().enumerate() {
                r[k + i] = &r[k + i] - &c * di;
            }
            q[k] = c;
        }
        RatPoly(q).trimmed()
    }

    /// Clears denominators and content, returning a primitive integer polynomial
    /// with positive leading coefficient.
    pub fn to_primitive_int(&self) -> IntPoly {
        use num_integer::Integer;
        let mut den = BigInt::one();
        for c in &self.0 {
            den = den.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self
            .0
            .iter()
            .map(|c| (c * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        let mut g = BigInt::zero();
        for c in &ints {
            g = g.gcd(c);
        }
        if g.is_zero() {
            return IntPoly::new(ints);
        }
        if ints.last().is_some_and(|c| c.is_negative()) {
            g = -g;
        }
        IntPoly::new(ints.into_iter().map(|c| c / &g).collect())
    }
}

/// Square-free part `p / gcd(p, p')` as a primitive integer polynomial.
pub fn squarefree_part(p: &IntPoly) -> IntPoly {
    let rp = RatPoly::from_int(p);
    let g = RatPoly::gcd(&rp, &RatPoly::from_int(&p.derivative()));
    rp.div_exact(&g).to_primitive_int()
}
