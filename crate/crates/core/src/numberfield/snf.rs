//! Smith normal form of integer matrices (invariant factors only).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Invariant factors `d_1 | d_2 | …` of an integer matrix, all positive.
/// Zero factors (rank deficiency) are omitted; the list length equals the rank.
pub fn invariant_factors(rows: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let m = a.len();
    if m == 0 {
        return Vec::new();
    }
    let n = a[0].len();
    let mut factors = Vec::new();
    let mut t = 0;
    while t < m.min(n) {
        // smallest nonzero pivot in the trailing block
        let Some((pr, pc)) = smallest_nonzero(&a, t) else {
            break;
        };
        a.swap(t, pr);
        for row in a.iter_mut() {
            row.swap(t, pc);
        }
        loop {
            let mut changed = false;
            for r in t + 1..m {
                if a[r][t].is_zero() {
                    continue;
                }
                let q = a[r][t].div_floor(&a[t][t]);
                for c in t..n {
                    let v = &q * &a[t][c];
                    a[r][c] -= v;
                }
                if !a[r][t].is_zero() {
                    a.swap(t, r);
                    changed = true;
                }
            }
            for c in t + 1..n {
                if a[t][c].is_zero() {
                    continue;
                }
                let q = a[t][c].div_floor(&a[t][t]);
                for row in a.iter_mut().skip(t) {
                    let v = &q * &row[t];
                    row[c] -= v;
                }
                if !a[t][c].is_zero() {
                    for row in a.iter_mut() {
                        row.swap(t, c);
                    }
                    changed = true;
                }
            }
            if changed {
                continue;
            }
            // pivot must divide the whole trailing block
            let bad = (t + 1..m)
                .flat_map(|r| (t + 1..n).map(move |c| (r, c)))
                .find(|&(r, c)| !(&a[r][c] % &a[t][t]).is_zero());
            match bad {
                Some((r, _)) => {
                    for c in t..n {
                        let v = a[r][c].clone();
                        a[t][c] += v;
                    }
                }
                None => break,
            }
        }
        factors.push(a[t][t].abs());
        t += 1;
    }
    factors
}

fn smallest_nonzero(a: &[Vec<BigInt>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for (r, row) in a.iter().enumerate().skip(t) {
        for (c, x) in row.iter().enumerate().skip(t) {
            if x.is_zero() {
                continue;
            }
            let ax = x.abs();
            if best.as_ref().is_none_or(|b| ax < b.2) {
                best = Some((r, c, ax));
            }
        }
    }
    best.map(|(r, c, _)| (r, c))
}

/// Index of the lattice spanned by `generators` (row vectors) inside `Z^dim`;
/// `None` when they do not span a full-rank sublattice.
pub fn lattice_index(generators: &[Vec<BigInt>], dim: usize) -> Option<BigInt> {
    let f = invariant_factors(generators);
    if f.len() < dim {
        return None;
    }
    Some(f.iter().fold(BigInt::one(), |acc, x| acc * x))
}
