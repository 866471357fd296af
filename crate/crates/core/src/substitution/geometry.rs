use super::SubstitutionMatrix;
use crate::error::SubstitutionError;
use crate::numberfield::snf::lattice_index;
use crate::numberfield::{EmbeddingData, FieldElement, NumberField};
use crate::rule::SubstitutionRule;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

/// Exact PF eigenvector of `M` (right) or `M^T` (left) over `Q(λ)`, unnormalised.
pub fn exact_eigenvector(
    m: &SubstitutionMatrix,
    field: &NumberField,
    left: bool,
) -> Result<Vec<FieldElement>, SubstitutionError> {
    let n = m.size();
    let lam = field.lambda();
    let mut a: Vec<Vec<FieldElement>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let e = if left { m.get(j, i) } else { m.get(i, j) };
                    let x = field.int(e);
                    if i == j {
                        &x - &lam
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect();
    // reduced row echelon form
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..n).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = field
            .inv(&a[row][col])
            .map_err(|e| SubstitutionError::NoAdmissibleScaling(e.to_string()))?;
        for c in col..n {
            a[row][c] = field.mul(&a[row][c], &inv);
        }
        for r in 0..n {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..n {
                    let t = field.mul(&f, &a[row][c]);
                    a[r][c] = &a[r][c] - &t;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    if free.len() != 1 {
        return Err(SubstitutionError::NoAdmissibleScaling(format!(
            "PF eigenspace has dimension {}",
            free.len()
        )));
    }
    let f = free[0];
    let mut x = vec![field.zero(); n];
    x[f] = field.one();
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = -&a[r][f];
    }
    Ok(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct NaturalLengths {
    pub lengths: Vec<FieldElement>,
    /// The lengths equal `scale` times the PF left eigenvector normalised to smallest entry 1.
    pub scale: FieldElement,
}

const MAX_SCALING_RETRIES: usize = 8;

/// Left PF eigenvector scaled into `Z[λ]` so that the lengths (and hence all control
/// points) generate the whole of `Z[λ]`.
pub fn natural_lengths(
    m: &SubstitutionMatrix,
    emb: &EmbeddingData,
) -> Result<NaturalLengths, SubstitutionError> {
    let field = emb.field();
    let raw = exact_eigenvector(m, field, true)?;
    let values: Vec<f64> = raw.iter().map(|x| field.value(x)).collect();
    let smallest = (0..raw.len())
        .min_by(|&a, &b| values[a].abs().partial_cmp(&values[b].abs()).unwrap())
        .unwrap();
    let inv = field
        .inv(&raw[smallest])
        .map_err(|e| SubstitutionError::NoAdmissibleScaling(e.to_string()))?;
    let base: Vec<FieldElement> = raw.iter().map(|x| field.mul(x, &inv)).collect();
    let scale = primitive_integral_scale(&base);
    let lengths: Vec<FieldElement> = base.iter().map(|x| x.scale(&scale)).collect();
    let index = module_index(&lengths, field);
    let scale_fe = field.one().scale(&scale);
    if index.as_ref().is_some_and(|i| i.is_one()) {
        return Ok(NaturalLengths {
            lengths,
            scale: scale_fe,
        });
    }
    // a common non-unit factor: try dividing through by one of the lengths
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| values[a].abs().partial_cmp(&values[b].abs()).unwrap());
    for &j in order.iter().take(MAX_SCALING_RETRIES) {
        let Ok(dinv) = field.inv(&lengths[j]) else {
            continue;
        };
        let cand: Vec<FieldElement> = lengths.iter().map(|x| field.mul(x, &dinv)).collect();
        let s = primitive_integral_scale(&cand);
        let cand: Vec<FieldElement> = cand.iter().map(|x| x.scale(&s)).collect();
        if module_index(&cand, field).is_some_and(|i| i.is_one()) {
            return Ok(NaturalLengths {
                lengths: cand,
                scale: field.mul(&scale_fe, &dinv).scale(&s),
                });
        }
    }
    Err(SubstitutionError::NoAdmissibleScaling(format!(
        "lengths generate a submodule of index {}",
        index.map_or_else(|| "infinity".to_string(), |i| i.to_string())
    )))
}

/// Smallest positive rational `s` making every coefficient of `s·x` an integer with
/// no common factor.
fn primitive_integral_scale(x: &[FieldElement]) -> BigRational {
    let mut den = BigInt::one();
    for e in x {
        den = den.lcm(&e.denominator());
    }
    let mut g = BigInt::zero();
    for e in x {
        for c in e.coeffs() {
            let n = (c * BigRational::from_integer(den.clone())).to_integer();
            g = g.gcd(&n);
        }
    }
    if g.is_zero() {
        g = BigInt::one();
    }
    BigRational::new(den, g)
}

/// Index in `Z[λ]` of the module generated over `Z[λ]` by `gens`; `None` if not of full rank
/// or the generators are not integral.
fn module_index(gens: &[FieldElement], field: &NumberField) -> Option<BigInt> {
    let d = field.degree();
    let mut rows = Vec::new();
    for g in gens {
        let mut x = g.clone();
        for _ in 0..d {
            if !x.is_integral() {
                return None;
            }
            rows.push(x.coeffs().iter().map(|c| c.to_integer()).collect());
            x = field.mul_lambda(&x);
        }
    }
    lattice_index(&rows, d)
}

#[derive(Clone, Debug, Serialize)]
pub struct DisplacementMatrix {
    /// `entries[i][j]`: left endpoints of letter `i` inside the inflated tile `j`.
    pub entries: Vec<Vec<Vec<FieldElement>>>,
    pub lengths: Vec<FieldElement>,
    /// Common inflation factor: the image of tile `j` has length `inflation·ℓ_j`.
    pub inflation: FieldElement,
}

impl DisplacementMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// All distinct positions that occur in some entry.
    pub fn positions(&self) -> Vec<FieldElement> {
        let mut out: Vec<FieldElement> = Vec::new();
        for row in &self.entries {
            for cell in row {
                for t in cell {
                    if !out.contains(t) {
                        out.push(t.clone());
                    }
                }
            }
        }
        out
    }

    /// `T★`: star images of every entry.
    pub fn star(&self, emb: &EmbeddingData) -> Vec<Vec<Vec<Vec<f64>>>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| cell.iter().map(|t| emb.star_map(t)).collect())
                    .collect()
            })
            .collect()
    }

    /// Real positions of every entry.
    pub fn values(&self, field: &NumberField) -> Vec<Vec<Vec<f64>>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| cell.iter().map(|t| field.value(t)).collect())
                    .collect()
            })
            .collect()
    }

    /// Index of the `Z[λ]`-module spanned by lengths and positions (1 when minimal).
    pub fn module_index(&self, field: &NumberField) -> Option<BigInt> {
        let mut gens = self.lengths.clone();
        gens.extend(self.positions().into_iter().filter(|t| !t.is_zero()));
        module_index(&gens, field)
    }
}

/// Lays out each image left to right from 0 with the given tile lengths.
pub fn displacement_matrix(
    rule: &SubstitutionRule,
    lengths: &[FieldElement],
    field: &NumberField,
) -> Result<DisplacementMatrix, SubstitutionError> {
    let n = rule.alphabet_size();
    if lengths.len() != n {
        return Err(SubstitutionError::LengthCount {
            expected: n,
            found: lengths.len(),
        });
    }
    let mut entries = vec![vec![Vec::new(); n]; n];
    let mut totals = Vec::with_capacity(n);
    for (j, img) in rule.images.iter().enumerate() {
        let mut pos = field.zero();
        for &i in img {
            entries[i][j].push(pos.clone());
            pos = &pos + &lengths[i];
        }
        totals.push(pos);
    }
    let inflation = field
        .div(&totals[0], &lengths[0])
        .map_err(|_| SubstitutionError::TilingViolated { column: 0 })?;
    for j in 0..n {
        if field.mul(&inflation, &lengths[j]) != totals[j] {
            return Err(SubstitutionError::TilingViolated { column: j });
        }
    }
    Ok(DisplacementMatrix {
        entries,
        lengths: lengths.to_vec(),
        inflation,
    })
}
