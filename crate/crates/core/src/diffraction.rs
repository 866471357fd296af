//! Fourier–Bohr amplitudes `A_i(k) = dens(Λ)·c_i(k★)` and diffraction intensities
//! `I(k) = |Σ h_i A_i(k)|²` over the Fourier module `L⊛ = ϑ·Z[λ]`.

use crate::cocycle::{Cocycle, RieszOptions};
use crate::error::Error;
use crate::svg::{Svg, PALETTE};
use crate::system::System;
use crate::output::num;
use crate::windows::WindowSolution;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write;

/// `(dens(Λ), [dens(Λ_i)])`.
pub fn density(system: &System) -> (f64, Vec<f64>) {
    (system.density_value(), system.letter_densities())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum AmplitudeFormula {
    /// `A_i = dens(Λ)·c_i(k★)`, valid for a.e.-constant covering degree.
    ConstantCovering { degree: usize },
    /// `A_i = dens(Λ_i)/vol(W_i)·f_i(k★)` with per-letter window volumes.
    PerLetter { volumes: Vec<f64>, eta: f64 },
}

impl AmplitudeFormula {
    /// Chooses the formula from a window solution's covering profile.
    pub fn from_windows(sol: &WindowSolution) -> Self {
        match sol.covering.constant_level() {
            Some(degree) => AmplitudeFormula::ConstantCovering { degree },
            None => AmplitudeFormula::PerLetter {
                volumes: sol.volumes.clone(),
                eta: sol.eta,
            },
        }
    }
}

/// Amplitudes at a point of the Fourier module given the Riesz-product vector `c(k★)`.
pub fn amplitudes_from_c(c: &[Complex64], system: &System, formula: &AmplitudeFormula) -> Vec<Complex64> {
    let (dens, per_letter) = density(system);
    match formula {
        AmplitudeFormula::ConstantCovering { .. } => c.iter().map(|z| z * dens).collect(),
        AmplitudeFormula::PerLetter { volumes, eta } => c
            .iter()
            .zip(per_letter.iter().zip(volumes))
            .map(|(z, (d, vol))| z * (eta * d / vol))
            .collect(),
    }
}

/// `A_i(k)` for `k` given by its dual internal coordinate.
pub fn amplitudes_at(
    cocycle: &Cocycle,
    internal: &[f64],
    system: &System,
    formula: &AmplitudeFormula,
    opts: RieszOptions,
) -> Result<Vec<Complex64>, Error> {
    let res = cocycle.limit(internal, opts)?;
    Ok(amplitudes_from_c(&res.c, system, formula))
}

pub fn intensity(weights: &[Complex64], amplitudes: &[Complex64]) -> f64 {
    weights
        .iter()
        .zip(amplitudes)
        .map(|(h, a)| h * a)
        .sum::<Complex64>()
        .norm_sqr()
}

#[derive(Clone, Debug, Serialize)]
pub struct PeakRow {
    pub miller: Vec<i64>,
    pub k: f64,
    /// Exact `k` as an element of `Q(λ)`.
    pub k_exact: String,
    pub kstar: Vec<f64>,
    #[serde(serialize_with = "ser_complex")]
    pub amplitudes: Vec<Complex64>,
    pub intensity: f64,
    pub converged: bool,
}

fn ser_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumTable {
    pub system: String,
    pub letters: Vec<char>,
    #[serde(serialize_with = "ser_complex")]
    pub weights: Vec<Complex64>,
    pub density: f64,
    pub formula: AmplitudeFormula,
    pub floor: f64,
    pub rows: Vec<PeakRow>,
    /// Index pairs of rows with coinciding `k` (never expected; kept as a diagnostic).
    pub duplicates: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct PeakOptions {
    /// Inclusive range per Miller index.
    pub miller_box: Vec<(i64, i64)>,
    pub k_range: (f64, f64),
    /// Intensity floor relative to `|Σ h_i dens(Λ_i)|²`.
    pub floor: f64,
    pub weights: Option<Vec<Complex64>>,
    pub riesz: RieszOptions,
}

impl PeakOptions {
    pub fn symmetric(degree: usize, half_width: i64, kmax: f64) -> Self {
        PeakOptions {
            miller_box: vec![(-half_width, half_width); degree],
            k_range: (0.0, kmax),
            floor: 1e-6,
            weights: None,
            riesz: RieszOptions::default(),
        }
    }
}

fn miller_tuples(bounds: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in bounds {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (lo..=hi).map(move |m| {
                    let mut p = prefix.clone();
                    p.push(m);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn enumerate_peaks(
    system: &System,
    formula: &AmplitudeFormula,
    opts: &PeakOptions,
) -> Result<SpectrumTable, Error> {
    let n = system.alphabet_size();
    let emb = &system.embedding;
    let weights = opts
        .weights
        .clone()
        .unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); n]);
    let (_, per_letter) = density(system);
    let zero_peak = intensity(
        &weights,
        &per_letter.iter().map(|&d| Complex64::new(d, 0.0)).collect::<Vec<_>>(),
    );
    let floor = opts.floor * zero_peak;
    let basis = emb.miller_basis();
    let (kmin, kmax) = opts.k_range;
    let slack = 1e-9 * kmax.abs().max(1.0);
    let candidates: Vec<Vec<i64>> = miller_tuples(&opts.miller_box)
        .into_iter()
        .filter(|m| {
            let k: f64 = m.iter().zip(&basis).map(|(&a, (b, _))| a as f64 * b).sum();
            k >= kmin - slack && k <= kmax + slack
        })
        .collect();
    let cocycle = Cocycle::new(system);
    let rows: Vec<Option<PeakRow>> = candidates
        .par_iter()
        .map(|m| -> Result<Option<PeakRow>, Error> {
            let wv = emb.miller_to_k(m)?;
            if wv.k < kmin || wv.k > kmax {
                return Ok(None);
            }
            let res = cocycle.limit(&wv.internal, opts.riesz)?;
            let amplitudes = amplitudes_from_c(&res.c, system, formula);
            let i = intensity(&weights, &amplitudes);
            if i < floor {
                return Ok(None);
            }
            Ok(Some(PeakRow {
                miller: m.clone(),
                k: wv.k,
                k_exact: wv.k_field.to_string(),
                kstar: wv.kstar,
                amplitudes,
                intensity: i,
                converged: res.converged,
            }))
        })
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<PeakRow> = rows.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.k.total_cmp(&b.k).then_with(|| a.miller.cmp(&b.miller)));
    let mut duplicates = Vec::new();
    for i in 1..rows.len() {
        if rows[i].k_exact == rows[i - 1].k_exact {
            duplicates.push((i - 1, i));
        }
    }
    Ok(SpectrumTable {
        system: system.name().to_string(),
        letters: system.rule.letters.clone(),
        weights,
        density: system.density_value(),
        formula: formula.clone(),
        floor,
        rows,
        duplicates,
    })
}

impl SpectrumTable {
    /// Rows sorted by decreasing intensity.
    pub fn strongest(&self, count: usize) -> Vec<&PeakRow> {
        let mut r: Vec<&PeakRow> = self.rows.iter().collect();
        r.sort_by(|a, b| b.intensity.total_cmp(&a.intensity).then_with(|| a.miller.cmp(&b.miller)));
        r.truncate(count);
        r
    }

    pub fn to_csv(&self) -> String {
        let d = self.rows.first().map_or(0, |r| r.miller.len());
        let m = self.rows.first().map_or(0, |r| r.kstar.len());
        let mut cols: Vec<String> = (0..d).map(|i| format!("m{i}")).collect();
        cols.push("k".into());
        cols.extend((1..=m).map(|i| format!("kstar{i}")));
        for l in &self.letters {
            cols.push(format!("re_A_{l}"));
            cols.push(format!("im_A_{l}"));
        }
        cols.push("intensity".into());
        let mut out = cols.join(",");
        out.push('\n');
        for r in &self.rows {
            let mut f: Vec<String> = r.miller.iter().map(|x| x.to_string()).collect();
            f.push(num(r.k));
            f.extend(r.kstar.iter().map(|&x| num(x)));
            for a in &r.amplitudes {
                f.push(num(a.re));
                f.push(num(a.im));
            }
            f.push(num(r.intensity));
            let _ = writeln!(out, "{}", f.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        crate::output::json(self)
    }

    /// Stick plot with the `labels` strongest peaks annotated by their Miller indices.
    pub fn to_svg(&self, labels: usize) -> String {
        let (w, h, margin) = (900.0, 420.0, 50.0);
        let mut svg = Svg::new(w, h);
        let kmax = self.rows.iter().map(|r| r.k).fold(0.0, f64::max).max(1e-9).ceil();
        let imax = self.rows.iter().map(|r| r.intensity).fold(0.0, f64::max).max(1e-300);
        let x = |k: f64| margin + k / kmax * (w - 2.0 * margin);
        let y = |i: f64| h - margin - i / imax * (h - 2.0 * margin);
        svg.line(margin, h - margin, w - margin, h - margin, "black", 1.0);
        for t in 0..=(kmax as i64) {
            let xt = x(t as f64);
            svg.line(xt, h - margin, xt, h - margin + 5.0, "black", 1.0);
            svg.text(xt, h - margin + 18.0, 11.0, "middle", &t.to_string());
        }
        for r in &self.rows {
            svg.line(x(r.k), h - margin, x(r.k), y(r.intensity), PALETTE[0], 1.2);
        }
        for r in self.strongest(labels) {
            let label = format!(
                "({})",
                r.miller.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
            );
            svg.text(x(r.k), y(r.intensity) - 4.0, 9.0, "middle", &label);
        }
        svg.finish()
    }
}
