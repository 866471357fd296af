//! Brute-force checks: Fourier–Bohr exponential sums over exact patches, uniform
//! distribution of star images in the windows, and closed-form window transforms.

use crate::cocycle::{window_ft, Cocycle, RieszOptions};
use crate::diffraction::{amplitudes_from_c, enumerate_peaks, AmplitudeFormula, PeakOptions};
use crate::error::{Error, OracleError};
use crate::substitution::TypedPointSet;
use crate::system::System;
use crate::windows::{IntervalUnion, WindowSolution};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const CHUNK: usize = 4096;

/// Pairwise sum, so the result does not depend on how chunks were scheduled.
fn pairwise(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        n => pairwise(&v[..n / 2]) + pairwise(&v[n / 2..]),
    }
}

fn exp_sum(xs: &[f64], k: f64, r: f64) -> Complex64 {
    let partial: Vec<Complex64> = xs
        .par_chunks(CHUNK)
        .map(|c| {
            c.iter()
                .filter(|x| x.abs() <= r)
                .map(|&x| Complex64::from_polar(1.0, -2.0 * PI * k * x))
                .sum()
        })
        .collect();
    pairwise(&partial)
}

/// `(1/2r)·Σ_{x ∈ Λ_i, |x| ≤ r} e^{-2πikx}` per letter.
pub fn brute_fb(patch: &TypedPointSet, k: f64, r: f64) -> Result<Vec<Complex64>, Error> {
    let covered = patch.radius();
    if covered < r {
        return Err(OracleError::PatchTooSmall {
            covered,
            requested: r,
        }
        .into());
    }
    Ok((0..patch.alphabet_size())
        .map(|i| exp_sum(patch.values(i), k, r) / (2.0 * r))
        .collect())
}

/// The same sum over all points regardless of type.
pub fn brute_fb_untyped(patch: &TypedPointSet, k: f64, r: f64) -> Result<Complex64, Error> {
    Ok(brute_fb(patch, k, r)?.iter().sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub miller: Vec<i64>,
    pub k: f64,
    pub r: f64,
    #[serde(serialize_with = "ser_complex")]
    pub brute: Vec<Complex64>,
    #[serde(serialize_with = "ser_complex")]
    pub cocycle: Vec<Complex64>,
    /// `max_i |brute_i - cocycle_i|`.
    pub deviation: f64,
}

fn ser_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Brute amplitudes against the cocycle amplitudes at `k = ϑ·Σ m_j λ^j`.
pub fn compare_at(
    system: &System,
    patch: &TypedPointSet,
    formula: &AmplitudeFormula,
    miller: &[i64],
    r: f64,
) -> Result<OracleReport, Error> {
    let wv = system.embedding.miller_to_k(miller)?;
    let brute = brute_fb(patch, wv.k, r)?;
    let c = Cocycle::new(system).limit(&wv.internal, RieszOptions::default())?.c;
    let cocycle = amplitudes_from_c(&c, system, formula);
    let deviation = brute
        .iter()
        .zip(&cocycle)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(OracleReport {
        miller: miller.to_vec(),
        k: wv.k,
        r,
        brute,
        cocycle,
        deviation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub letter: char,
    pub points: usize,
    pub hull: (f64, f64),
    pub observed: Vec<usize>,
    pub expected: Vec<f64>,
    /// Largest `|observed - expected|/expected` over bins meeting the window.
    pub max_deviation: f64,
    /// Star images outside the window (beyond a 1e-9 tolerance).
    pub outside: usize,
}

/// Histograms of `Λ_i★` over equal-width bins of the hull of `W_i`, against counts
/// proportional to the window measure in each bin (1-D internal space).
pub fn uniform_distribution_test(
    system: &System,
    patch: &TypedPointSet,
    windows: &WindowSolution,
    bins: usize,
    points: usize,
) -> Result<Vec<UniformityReport>, Error> {
    if bins == 0 {
        return Err(OracleError::NoBins.into());
    }
    let ws = windows.intervals().ok_or(OracleError::NoBins)?;
    let mut out = Vec::new();
    for (i, w) in ws.iter().enumerate() {
        let mut stars: Vec<(f64, f64)> = patch
            .star_points(i, &system.ring, f64::INFINITY)
            .into_iter()
            .zip(patch.values(i))
            .map(|(s, &x)| (x.abs(), s[0]))
            .collect();
        if stars.len() < points {
            return Err(OracleError::InsufficientPoints {
                letter: system.rule.letter(i),
                found: stars.len(),
                needed: points,
            }
            .into());
        }
        // the `points` positions closest to the origin
        stars.sort_by(|a, b| a.0.total_cmp(&b.0));
        stars.truncate(points);
        out.push(histogram(system.rule.letter(i), w, stars.iter().map(|s| s.1), bins, points));
    }
    Ok(out)
}

fn histogram(
    letter: char,
    w: &IntervalUnion,
    ys: impl Iterator<Item = f64>,
    bins: usize,
    points: usize,
) -> UniformityReport {
    let (a, b) = w.hull().unwrap_or((0.0, 0.0));
    let width = (b - a) / bins as f64;
    let mut observed = vec![0usize; bins];
    let mut outside = 0;
    for y in ys {
        if w.intervals.iter().all(|&(l, h)| y < l - 1e-9 || y > h + 1e-9) {
            outside += 1;
        }
        let k = (((y - a) / width).floor().max(0.0) as usize).min(bins - 1);
        observed[k] += 1;
    }
    let total = w.measure();
    let expected: Vec<f64> = (0..bins)
        .map(|k| {
            let bin = IntervalUnion::single(a + k as f64 * width, a + (k + 1) as f64 * width);
            points as f64 * w.intersection_measure(&bin) / total
        })
        .collect();
    let max_deviation = observed
        .iter()
        .zip(&expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).abs() / e)
        .fold(0.0, f64::max);
    UniformityReport {
        letter,
        points,
        hull: (a, b),
        observed,
        expected,
        max_deviation,
        outside,
    }
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Closed forms `f_a(y) = e^{πiy(2τ-3)}sinc(πy)` and `f_b(y) = e^{πiy(τ-3)}/τ·sinc(πy/τ)`.
pub fn fibonacci_window_ft(y: f64) -> [Complex64; 2] {
    let tau = (1.0 + 5f64.sqrt()) / 2.0;
    [
        Complex64::from_polar(1.0, PI * y * (2.0 * tau - 3.0)) * sinc(PI * y),
        Complex64::from_polar(1.0, PI * y * (tau - 3.0)) / tau * sinc(PI * y / tau),
    ]
}

/// `f_1(y) = -Σ_n σ^{4n+1} e^{-πi(2σ+2σ^{4n}+σ^{4n+1})y} sinc(πσ^{4n+1}y)`, summed until the
/// term lengths drop below `1e-17`.
pub fn rho_tilde_f1_series(y: f64) -> Complex64 {
    let sigma = (1.0 - 5f64.sqrt()) / 2.0;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut n = 0;
    loop {
        let s4n = sigma.powi(4 * n);
        let s = s4n * sigma;
        if s.abs() < 1e-17 {
            return acc;
        }
        acc -= Complex64::from_polar(1.0, -PI * (2.0 * sigma + 2.0 * s4n + s) * y) * s * sinc(PI * s * y);
        n += 1;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedFormReport {
    pub system: String,
    pub points: usize,
    pub max_error: f64,
    /// Letter indices compared.
    pub letters: Vec<usize>,
}

/// Cocycle-path `f_i = η·c_i` against the closed forms on `grid`.
pub fn closed_form_check(system_id: &str, grid: &[f64]) -> Result<ClosedFormReport, Error> {
    let (letters, closed): (Vec<usize>, Box<dyn Fn(f64) -> Vec<Complex64>>) = match system_id {
        "fibonacci" => (vec![0, 1], Box::new(|y| fibonacci_window_ft(y).to_vec())),
        "rho_tilde" => (vec![1], Box::new(|y| vec![rho_tilde_f1_series(y)])),
        other => return Err(OracleError::UnknownSystem(other.to_string()).into()),
    };
    let system = crate::fixtures::load_fixture(system_id)?;
    let sol = crate::windows::solve_windows(&system, &Default::default())?;
    let cocycle = Cocycle::new(&system);
    let mut max_error: f64 = 0.0;
    for &y in grid {
        let f = window_ft(&cocycle.limit(&[y], RieszOptions::default())?, sol.eta);
        for (z, &i) in closed(y).iter().zip(&letters) {
            max_error = max_error.max((z - f[i]).norm());
        }
    }
    Ok(ClosedFormReport {
        system: system_id.to_string(),
        points: grid.len(),
        max_error,
        letters,
    })
}

/// Engineering tolerance for brute-versus-cocycle agreement at radius `r`: `10⁻²` at
/// `r = 10⁵`, scaled like `r^{-1/4}`, but never below `r^{-α}` with `α = -ln θ / ln λ`.
/// A patch of radius `r ≈ λⁿ` resolves the windows only to `θⁿ = r^{-α}`, which
/// dominates when the slowest internal contraction `θ` is close to 1.
pub fn declared_tolerance(system: &System, r: f64) -> f64 {
    let alpha = -system.embedding.theta_rate.ln() / system.lambda().ln();
    (1e-2 * (1e5 / r).powf(0.25)).max(r.powf(-alpha))
}

/// The `count` strongest peaks with `0 < k ≤ 4` and Miller indices in `[-3, 3]`.
pub fn strong_tuples(system: &System, formula: &AmplitudeFormula, count: usize) -> Result<Vec<Vec<i64>>, Error> {
    let d = system.embedding.degree();
    let table = enumerate_peaks(system, formula, &PeakOptions::symmetric(d, 3, 4.0))?;
    Ok(table
        .strongest(table.rows.len())
        .into_iter()
        .filter(|r| r.miller.iter().any(|&m| m != 0))
        .take(count)
        .map(|r| r.miller.clone())
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SmokeReport {
    pub system: String,
    pub r: f64,
    pub tolerance: f64,
    pub reports: Vec<OracleReport>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Brute-versus-cocycle agreement at the strongest peaks, against [`declared_tolerance`].
pub fn smoke(system: &System, formula: &AmplitudeFormula, r: f64, count: usize) -> Result<SmokeReport, Error> {
    let tuples = strong_tuples(system, formula, count)?;
    let patch = system.patch(r)?;
    let reports = tuples
        .iter()
        .map(|m| compare_at(system, &patch, formula, m, r))
        .collect::<Result<Vec<_>, _>>()?;
    let max_deviation = reports.iter().map(|x| x.deviation).fold(0.0, f64::max);
    let tolerance = declared_tolerance(system, r);
    Ok(SmokeReport {
        system: system.name().to_string(),
        r,
        tolerance,
        passed: max_deviation < tolerance,
        reports,
        max_deviation,
    })
}

/// `n` equally spaced points covering `[a, b]`.
pub fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}
