use super::DisplacementMatrix;
use crate::error::SubstitutionError;
use crate::numberfield::{EmbeddingData, FieldElement};
use crate::rule::SubstitutionRule;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::collections::BTreeSet;

/// Checked 64-bit arithmetic in `Z[λ]` on power-basis coefficient vectors.
#[derive(Clone, Debug)]
pub struct ZLambda {
    /// `λ^d = Σ reduction[k] λ^k`.
    reduction: Vec<i64>,
    lambda_pows: Vec<f64>,
    star_basis: Vec<Vec<f64>>,
}

impl ZLambda {
    pub fn new(emb: &EmbeddingData) -> Self {
        let d = emb.degree();
        let m = emb.minpoly().coeffs();
        let reduction = (0..d)
            .map(|k| -m[k].to_i64().expect("minimal polynomial coefficient fits i64"))
            .collect();
        let f = emb.field();
        ZLambda {
            reduction,
            lambda_pows: (0..d).map(|k| emb.lambda().powi(k as i32)).collect(),
            star_basis: (0..d).map(|k| emb.star_map(&f.lambda_pow(k))).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.reduction.len()
    }

    pub fn mul_lambda(&self, x: &[i64]) -> Option<Vec<i64>> {
        let d = self.degree();
        let top = x[d - 1];
        let mut out = vec![0i64; d];
        for k in 0..d {
            let shifted = if k == 0 { 0 } else { x[k - 1] };
            out[k] = shifted.checked_add(top.checked_mul(self.reduction[k])?)?;
        }
        Some(out)
    }

    pub fn mul(&self, a: &[i64], b: &[i64]) -> Option<Vec<i64>> {
        let d = self.degree();
        let mut acc = vec![0i64; d];
        let mut pow = a.to_vec();
        for (k, &bk) in b.iter().enumerate() {
            if bk != 0 {
                for i in 0..d {
                    acc[i] = acc[i].checked_add(pow[i].checked_mul(bk)?)?;
                }
            }
            if k + 1 < d {
                pow = self.mul_lambda(&pow)?;
            }
        }
        Some(acc)
    }

    pub fn add(&self, a: &[i64], b: &[i64]) -> Option<Vec<i64>> {
        a.iter().zip(b).map(|(x, y)| x.checked_add(*y)).collect()
    }

    pub fn value(&self, x: &[i64]) -> f64 {
        x.iter().zip(&self.lambda_pows).map(|(&c, p)| c as f64 * p).sum()
    }

    pub fn star(&self, x: &[i64]) -> Vec<f64> {
        let m = self.star_basis.first().map_or(0, |v| v.len());
        let mut out = vec![0.0; m];
        for (&c, basis) in x.iter().zip(&self.star_basis) {
            if c != 0 {
                for (o, b) in out.iter_mut().zip(basis) {
                    *o += c as f64 * b;
                }
            }
        }
        out
    }

    pub fn from_field(&self, x: &FieldElement) -> Option<Vec<i64>> {
        x.to_i64()
    }

    pub fn to_field(&self, x: &[i64]) -> FieldElement {
        FieldElement::from_rationals(
            x.iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        )
    }
}

/// Control points of a finite patch, per letter, sorted by position.
#[derive(Clone, Debug)]
pub struct TypedPointSet {
    degree: usize,
    /// Flattened coefficient vectors, `degree` integers per point.
    coords: Vec<Vec<i64>>,
    values: Vec<Vec<f64>>,
    /// The patch covers `[left, right]`.
    pub left: f64,
    pub right: f64,
    pub iterations: usize,
}

impl TypedPointSet {
    pub fn alphabet_size(&self) -> usize {
        self.coords.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn count(&self, letter: usize) -> usize {
        self.values[letter].len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.values.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.values.iter().map(Vec::len).fold(0usize, usize::saturating_add)
    }

    /// Largest `r` with `[-r, r]` inside the patch.
    pub fn radius(&self) -> f64 {
        (-self.left).min(self.right)
    }

    pub fn point(&self, letter: usize, k: usize) -> &[i64] {
        &self.coords[letter][k * self.degree..(k + 1) * self.degree]
    }

    pub fn points(&self, letter: usize) -> impl Iterator<Item = &[i64]> {
        self.coords[letter].chunks_exact(self.degree)
    }

    /// Real positions of letter `letter`, ascending.
    pub fn values(&self, letter: usize) -> &[f64] {
        &self.values[letter]
    }

    pub fn field_point(&self, letter: usize, k: usize, ring: &ZLambda) -> FieldElement {
        ring.to_field(self.point(letter, k))
    }

    /// Star images of the points of `letter` whose position lies in `[-r, r]`.
    pub fn star_points(&self, letter: usize, ring: &ZLambda, r: f64) -> Vec<Vec<f64>> {
        self.points(letter)
            .zip(&self.values[letter])
            .filter(|(_, &x)| x.abs() <= r)
            .map(|(p, _)| ring.star(p))
            .collect()
    }

    fn from_raw(
        degree: usize,
        coords: Vec<Vec<i64>>,
        ring: &ZLambda,
        left: f64,
        right: f64,
        iterations: usize,
    ) -> Self {
        let mut sorted_coords = Vec::with_capacity(coords.len());
        let mut values = Vec::with_capacity(coords.len());
        for flat in coords {
            let mut pts: Vec<(f64, &[i64])> = flat
                .chunks_exact(degree)
                .map(|p| (ring.value(p), p))
                .collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            values.push(pts.iter().map(|p| p.0).collect());
            sorted_coords.push(pts.iter().flat_map(|p| p.1.iter().copied()).collect());
        }
        TypedPointSet {
            degree,
            coords: sorted_coords,
            values,
            left,
            right,
            iterations,
        }
    }
}

/// All two-letter words occurring in some `ϱ^k(a)`, sorted.
pub fn legal_two_letter_words(rule: &SubstitutionRule) -> Vec<(usize, usize)> {
    let mut words: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue: Vec<(usize, usize)> = Vec::new();
    let add = |w: &[usize], words: &mut BTreeSet<(usize, usize)>, queue: &mut Vec<_>| {
        for pair in w.windows(2) {
            if words.insert((pair[0], pair[1])) {
                queue.push((pair[0], pair[1]));
            }
        }
    };
    for img in &rule.images {
        add(img, &mut words, &mut queue);
    }
    while let Some((x, y)) = queue.pop() {
        let w = rule.apply(&[x, y]);
        add(&w, &mut words, &mut queue);
    }
    words.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct FixedSeed {
    pub power: usize,
    pub left: usize,
    pub right: usize,
}

/// Smallest power `p ≤ N²` with a legal seed `x|y` fixed by `ϱ^p`; lexicographically
/// first seed for that power.
pub fn find_fixed_power_and_seed(rule: &SubstitutionRule) -> Result<FixedSeed, SubstitutionError> {
    let n = rule.alphabet_size();
    let legal = legal_two_letter_words(rule);
    let first: Vec<usize> = rule.images.iter().map(|w| w[0]).collect();
    let last: Vec<usize> = rule.images.iter().map(|w| w[w.len() - 1]).collect();
    let mut first_p: Vec<usize> = (0..n).collect();
    let mut last_p: Vec<usize> = (0..n).collect();
    let cap = n * n;
    for p in 1..=cap {
        first_p = first_p.iter().map(|&a| first[a]).collect();
        last_p = last_p.iter().map(|&a| last[a]).collect();
        if let Some(&(x, y)) = legal
            .iter()
            .find(|&&(x, y)| last_p[x] == x && first_p[y] == y)
        {
            return Ok(FixedSeed {
                power: p,
                left: x,
                right: y,
            });
        }
    }
    Err(SubstitutionError::NoFixedSeed(cap))
}

/// `n` steps of the set inflation `Λ'_i = ⋃_j s·Λ_j + T_ij` from the seed `x|y`
/// (tile `x` ending at 0, tile `y` starting at 0). `rule` must be the substitution
/// that `t` was built from.
pub fn iterate_patch(
    rule: &SubstitutionRule,
    t: &DisplacementMatrix,
    seed: (usize, usize),
    n: usize,
    ring: &ZLambda,
) -> Result<TypedPointSet, SubstitutionError> {
    grow(rule, t, seed, ring, |iter, _| iter >= n)
}

/// Inflates from the seed until the patch covers `[-r, r]`.
pub fn patch_with_radius(
    rule: &SubstitutionRule,
    t: &DisplacementMatrix,
    seed: (usize, usize),
    r: f64,
    ring: &ZLambda,
) -> Result<TypedPointSet, SubstitutionError> {
    grow(rule, t, seed, ring, |_, radius| radius >= r)
}

fn grow(
    rule: &SubstitutionRule,
    t: &DisplacementMatrix,
    seed: (usize, usize),
    ring: &ZLambda,
    done: impl Fn(usize, f64) -> bool,
) -> Result<TypedPointSet, SubstitutionError> {
    let (x, y) = seed;
    if !legal_two_letter_words(rule).contains(&seed) {
        return Err(SubstitutionError::IllegalSeed(x, y));
    }
    let d = ring.degree();
    let nl = t.size();
    let ints = |e: &FieldElement| ring.from_field(e).ok_or(SubstitutionError::Overflow);
    let lengths = t.lengths.iter().map(ints).collect::<Result<Vec<_>, _>>()?;
    let s = ints(&t.inflation)?;
    let s_val = ring.value(&s);
    let tint: Vec<Vec<Vec<Vec<i64>>>> = t
        .entries
        .iter()
        .map(|row| {
            row.iter()
                .map(|cell| cell.iter().map(ints).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut cur: Vec<Vec<i64>> = vec![Vec::new(); nl];
    let neg: Vec<i64> = lengths[x].iter().map(|c| -c).collect();
    cur[x].extend_from_slice(&neg);
    cur[y].extend(std::iter::repeat_n(0, d));
    let mut left = -ring.value(&lengths[x]);
    let mut right = ring.value(&lengths[y]);
    let mut iter = 0;
    const MAX_STEPS: usize = 200;
    while !done(iter, left.abs().min(right)) {
        if iter >= MAX_STEPS {
            return Err(SubstitutionError::Overflow);
        }
        let mut next: Vec<Vec<i64>> = vec![Vec::new(); nl];
        for j in 0..nl {
            for p in cur[j].chunks_exact(d) {
                let sp = ring.mul(&s, p).ok_or(SubstitutionError::Overflow)?;
                for (i, slot) in next.iter_mut().enumerate() {
                    for off in &tint[i][j] {
                        let q = ring.add(&sp, off).ok_or(SubstitutionError::Overflow)?;
                        slot.extend_from_slice(&q);
                    }
                }
            }
        }
        cur = next;
        left *= s_val;
        right *= s_val;
        iter += 1;
    }
    Ok(TypedPointSet::from_raw(d, cur, ring, left, right, iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numberfield::{minimal_polynomial, EmbeddingData};
    use crate::rule::parse_rule;
    use crate::substitution::{
        displacement_matrix, natural_lengths, pf_eigendata, substitution_matrix,
    };

    struct Setup {
        rule: SubstitutionRule,
        emb: EmbeddingData,
        t: DisplacementMatrix,
    }

    fn setup(text: &str) -> Setup {
        let rule = parse_rule(text).unwrap();
        let m = substitution_matrix(&rule);
        let pf = pf_eigendata(&m, 1e-12).unwrap();
        let emb = EmbeddingData::new(minimal_polynomial(&m.entries, pf.lambda).unwrap()).unwrap();
        let l = natural_lengths(&m, &emb).unwrap().lengths;
        let t = displacement_matrix(&rule, &l, emb.field()).unwrap();
        Setup { rule, emb, t }
    }

    #[test]
    fn fibonacci_seed_is_square_with_a_a() {
        let s = setup("a -> ab ; b -> a");
        let f = find_fixed_power_and_seed(&s.rule).unwrap();
        assert_eq!(f, FixedSeed { power: 2, left: 0, right: 0 });
        assert_eq!(legal_two_letter_words(&s.rule), vec![(0, 0), (0, 1), (1, 0)]);
    }

    #[test]
    fn fibonacci_patch_counts() {
        let s = setup("a -> ab ; b -> a");
        let ring = ZLambda::new(&s.emb);
        let r2 = s.rule.power(2);
        let t2 = displacement_matrix(&r2, &s.t.lengths, s.emb.field()).unwrap();
        let p0 = iterate_patch(&r2, &t2, (0, 0), 0, &ring).unwrap();
        assert_eq!(p0.total(), 2);
        let p = iterate_patch(&r2, &t2, (0, 0), 1, &ring).unwrap();
        assert_eq!(p.counts(), vec![4, 2]);
        let tau = s.emb.lambda();
        assert!((p.left + tau * tau * tau).abs() < 1e-12);
    }

    #[test]
    fn illegal_seed_rejected() {
        let s = setup("a -> ab ; b -> a");
        let ring = ZLambda::new(&s.emb);
        let err = iterate_patch(&s.rule, &s.t, (1, 1), 1, &ring).unwrap_err();
        assert_eq!(err, SubstitutionError::IllegalSeed(1, 1));
    }

    #[test]
    fn tribonacci_counts_follow_matrix_powers() {
        let s = setup("a -> ab ; b -> ac ; c -> a");
        let seed = find_fixed_power_and_seed(&s.rule).unwrap();
        assert!((1..=9).contains(&seed.power));
        let ring = ZLambda::new(&s.emb);
        let p = iterate_patch(&s.rule, &s.t, (seed.left, seed.right), 10, &ring).unwrap();
        let m = substitution_matrix(&s.rule);
        let mut e = vec![0i64; 3];
        e[seed.left] += 1;
        e[seed.right] += 1;
        let expect = m.checked_apply_pow(&e, 10).unwrap();
        let got: Vec<i64> = p.counts().iter().map(|&c| c as i64).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn ring_arithmetic_matches_field() {
        let s = setup("a -> ab ; b -> ac ; c -> a");
        let ring = ZLambda::new(&s.emb);
        let f = s.emb.field();
        let a = [3, -1, 2];
        let b = [-2, 5, 1];
        let prod = ring.mul(&a, &b).unwrap();
        assert_eq!(ring.to_field(&prod), f.mul(&f.from_ints(&a), &f.from_ints(&b)));
        let star = ring.star(&a);
        let expect = s.emb.star_map(&f.from_ints(&a));
        assert!((star[0] - expect[0]).abs() < 1e-12 && (star[1] - expect[1]).abs() < 1e-12);
    }
}
