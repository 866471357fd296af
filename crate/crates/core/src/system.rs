//! A fully prepared inflation system: rule, PF data, embedding, lengths,
//! displacements and a fixed seed.

use crate::error::{Error, RuleError, SubstitutionError};
use crate::numberfield::{minimal_polynomial, EmbeddingData, FieldElement, NumberField};
use crate::rule::{parse_rule, SubstitutionRule};
use crate::substitution::{
    displacement_matrix, exact_eigenvector, find_fixed_power_and_seed, natural_lengths,
    patch_with_radius, pf_eigendata, substitution_matrix, DisplacementMatrix, FixedSeed, PFData,
    SubstitutionMatrix, TypedPointSet, ZLambda,
};

pub const PF_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct System {
    pub rule: SubstitutionRule,
    pub matrix: SubstitutionMatrix,
    pub pf: PFData,
    pub embedding: EmbeddingData,
    pub lengths: Vec<FieldElement>,
    /// Factor relating the lengths to the PF left eigenvector with smallest entry 1;
    /// `None` when the lengths came from the rule file.
    pub length_scale: Option<FieldElement>,
    pub displacement: DisplacementMatrix,
    pub seed: FixedSeed,
    pub ring: ZLambda,
    /// Exact right PF eigenvector with `⟨1|v⟩ = 1` (letter frequencies).
    pub frequencies: Vec<FieldElement>,
    /// Exact point density `dens(Λ)`.
    pub density: FieldElement,
}

impl System {
    pub fn from_text(text: &str) -> Result<Self, Error> {
        Self::new(parse_rule(text)?)
    }

    pub fn new(rule: SubstitutionRule) -> Result<Self, Error> {
        let matrix = substitution_matrix(&rule);
        let pf = pf_eigendata(&matrix, PF_TOL)?;
        let minpoly = minimal_polynomial(&matrix.entries, pf.lambda)?;
        let embedding = EmbeddingData::new(minpoly)?;
        let field = embedding.field();
        let (lengths, length_scale) = match &rule.lengths {
            Some(exprs) => {
                let l = exprs
                    .iter()
                    .map(|e| field.parse(e).map_err(RuleError::Lengths))
                    .collect::<Result<Vec<_>, _>>()?;
                (l, None)
            }
            None => {
                let nl = natural_lengths(&matrix, &embedding)?;
                (nl.lengths, Some(nl.scale))
            }
        };
        let displacement = displacement_matrix(&rule, &lengths, field)?;
        if displacement.inflation != field.lambda() {
            return Err(SubstitutionError::TilingViolated { column: 0 }.into());
        }
        let seed = find_fixed_power_and_seed(&rule)?;
        let ring = ZLambda::new(&embedding);
        let v = exact_eigenvector(&matrix, field, false)?;
        let total = v.iter().fold(field.zero(), |acc, x| &acc + x);
        let inv_total = field.inv(&total)?;
        let frequencies: Vec<FieldElement> = v.iter().map(|x| field.mul(x, &inv_total)).collect();
        let mean = frequencies
            .iter()
            .zip(&lengths)
            .fold(field.zero(), |acc, (x, l)| &acc + &field.mul(x, l));
        let density = field.inv(&mean)?;
        Ok(System {
            rule,
            matrix,
            pf,
            embedding,
            lengths,
            length_scale,
            displacement,
            seed,
            ring,
            frequencies,
            density,
        })
    }

    pub fn name(&self) -> &str {
        &self.rule.name
    }

    pub fn field(&self) -> &NumberField {
        self.embedding.field()
    }

    pub fn alphabet_size(&self) -> usize {
        self.rule.alphabet_size()
    }

    pub fn internal_dim(&self) -> usize {
        self.embedding.internal_dim()
    }

    pub fn lambda(&self) -> f64 {
        self.embedding.lambda()
    }

    pub fn density_value(&self) -> f64 {
        self.field().value(&self.density)
    }

    /// `dens(Λ_i) = v_i·dens(Λ)`.
    pub fn letter_densities(&self) -> Vec<f64> {
        let d = self.density_value();
        self.pf.v.iter().map(|v| v * d).collect()
    }

    /// Star images `T★` of the displacement matrix.
    pub fn tstar(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        self.displacement.star(&self.embedding)
    }

    /// `ϱ^p` and its displacement matrix, for the fixed-seed power `p`.
    pub fn fixed_power(&self) -> Result<(SubstitutionRule, DisplacementMatrix), Error> {
        let rp = self.rule.power(self.seed.power);
        let tp = displacement_matrix(&rp, &self.lengths, self.field())?;
        Ok((rp, tp))
    }

    /// Patch `ϱ^n(seed)` covering at least `[-r, r]`. Every iterate of the legal seed is a
    /// patch of a fixed point of `ϱ^p`; single steps keep the overshoot below `λ`.
    pub fn patch(&self, r: f64) -> Result<TypedPointSet, Error> {
        Ok(patch_with_radius(
            &self.rule,
            &self.displacement,
            (self.seed.left, self.seed.right),
            r,
            &self.ring,
        )?)
    }

    /// Fixed-seed patch with at least `n` points of every letter inside `[-r, r]`,
    /// `r` being the covered radius.
    pub fn patch_with_counts(&self, n: usize) -> Result<TypedPointSet, Error> {
        let dens = self.letter_densities();
        let min_dens = dens.iter().copied().fold(f64::INFINITY, f64::min);
        let mut r = n as f64 / (2.0 * min_dens);
        loop {
            let p = self.patch(r)?;
            let radius = p.radius();
            let ok = (0..self.alphabet_size())
                .all(|i| p.values(i).iter().filter(|x| x.abs() <= radius).count() >= n);
            if ok {
                return Ok(p);
            }
            r = radius * 1.5;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn tribonacci_density_is_exact() {
        let s = System::from_text("a -> ab ; b -> ac ; c -> a").unwrap();
        let expect = s
            .field()
            .from_ints(&[5, 1, 2])
            .scale(&BigRational::new(1.into(), 22.into()));
        assert_eq!(s.density, expect);
        assert!((s.density_value() - 0.618_420).abs() < 1e-6);
    }

    #[test]
    fn length_override_must_tile() {
        let s = System::from_text("a -> ab ; b -> a\nlengths: L, 1").unwrap();
        assert_eq!(s.lengths[0], s.field().lambda());
        assert!(System::from_text("a -> ab ; b -> a\nlengths: 2, 1").is_err());
    }

    #[test]
    fn patch_radius() {
        let s = System::from_text("a -> ab ; b -> a").unwrap();
        let p = s.patch(1000.0).unwrap();
        assert!(p.radius() >= 1000.0);
        let total = p.values(0).iter().chain(p.values(1)).filter(|x| x.abs() <= 1000.0).count();
        let expect = 2000.0 * s.density_value();
        assert!((total as f64 - expect).abs() < 5.0);
    }
}
