use crate::error::WindowError;
use crate::numberfield::{FieldElement, NumberField};
use serde::Serialize;
use std::collections::BTreeMap;

/// Touching or overlapping intervals closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;
/// Endpoints within this distance of a low-height `a + bλ` are snapped to it.
pub const SNAP_TOL: f64 = 1e-10;
const SNAP_HEIGHT: i64 = 60;
const SNAP_ISOLATION: f64 = 1e-7;
const MAX_INTERVALS: usize = 1 << 20;

/// Finite union of disjoint closed intervals, sorted.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IntervalUnion {
    pub intervals: Vec<(f64, f64)>,
    /// Exact endpoints where snapping succeeded.
    pub exact: Vec<(Option<FieldElement>, Option<FieldElement>)>,
}

impl IntervalUnion {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|(a, b)| a <= b);
        intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 + MERGE_TOL => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        IntervalUnion {
            intervals: merged,
            exact: Vec::new(),
        }
    }

    pub fn single(a: f64, b: f64) -> Self {
        Self::new(vec![(a, b)])
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.intervals.first()?.0, self.intervals.last()?.1))
    }

    pub fn contains(&self, y: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.1 < y);
        idx < self.intervals.len() && self.intervals[idx].0 <= y
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        IntervalUnion::new(all)
    }

    /// `q·W + t`.
    pub fn affine(&self, q: f64, t: f64) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (q * a + t, q * b + t);
                (x.min(y), x.max(y))
            })
            .collect()
    }

    fn dist(&self, y: f64) -> f64 {
        let idx = self.intervals.partition_point(|iv| iv.1 < y);
        let mut best = f64::INFINITY;
        if idx < self.intervals.len() {
            best = best.min((self.intervals[idx].0 - y).max(0.0));
        }
        if idx > 0 {
            best = best.min(y - self.intervals[idx - 1].1);
        }
        best
    }

    /// `sup_{x ∈ self} dist(x, other)`.
    fn excess(&self, other: &IntervalUnion) -> f64 {
        let mut worst: f64 = 0.0;
        for &(a, b) in &self.intervals {
            worst = worst.max(other.dist(a)).max(other.dist(b));
            // the distance function peaks at midpoints of the other set's gaps
            let lo = other.intervals.partition_point(|iv| iv.1 < a);
            for w in other.intervals[lo.saturating_sub(1)..].windows(2) {
                if w[0].1 > b {
                    break;
                }
                let mid = 0.5 * (w[0].1 + w[1].0);
                if mid >= a && mid <= b {
                    worst = worst.max(other.dist(mid));
                }
            }
        }
        worst
    }

    pub fn hausdorff(&self, other: &IntervalUnion) -> f64 {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => 0.0,
            (true, false) | (false, true) => f64::INFINITY,
            _ => self.excess(other).max(other.excess(self)),
        }
    }

    pub fn intersection_measure(&self, other: &IntervalUnion) -> f64 {
        let mut total = 0.0;
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                total += (b.min(d) - a.max(c)).max(0.0);
            }
        }
        total
    }

    /// Snaps endpoints to elements `a + bλ` of `Z[λ]` (degree-2 fields only). Endpoints
    /// closer than `SNAP_ISOLATION` to another endpoint are left alone, since near an
    /// accumulation point a low-height element within `SNAP_TOL` is not the true endpoint.
    pub fn snap(&mut self, field: &NumberField) {
        let ends: Vec<f64> = self.intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
        let isolated = |k: usize| {
            let left = k == 0 || ends[k] - ends[k - 1] > SNAP_ISOLATION;
            let right = k + 1 == ends.len() || ends[k + 1] - ends[k] > SNAP_ISOLATION;
            left && right
        };
        let snap = |k: usize| if isolated(k) { snap_value(ends[k], field) } else { None };
        self.exact = (0..self.intervals.len())
            .map(|i| (snap(2 * i), snap(2 * i + 1)))
            .collect();
        for (iv, (a, b)) in self.intervals.iter_mut().zip(&self.exact) {
            if let Some(a) = a {
                iv.0 = field.value(a);
            }
            if let Some(b) = b {
                iv.1 = field.value(b);
            }
        }
    }
}

/// Low-height `a + bλ` (by `|a| + |b|`) whose value is within [`SNAP_TOL`] of `y`.
pub fn snap_value(y: f64, field: &NumberField) -> Option<FieldElement> {
    if field.degree() != 2 {
        return None;
    }
    let lam = field.lambda_value();
    let mut best: Option<(i64, i64, i64)> = None;
    for b in -SNAP_HEIGHT..=SNAP_HEIGHT {
        let a = (y - b as f64 * lam).round();
        if (a + b as f64 * lam - y).abs() < SNAP_TOL {
            let a = a as i64;
            let h = a.abs() + b.abs();
            if best.is_none_or(|(_, _, bh)| h < bh) {
                best = Some((a, b, h));
            }
        }
    }
    best.map(|(a, b, _)| field.from_ints(&[a, b]))
}

/// One application of the 1-D Hutchinson map `W_i ↦ ⋃_j ⋃_t q·W_j + t`.
pub fn hutchinson_1d(windows: &[IntervalUnion], tstar: &[Vec<Vec<f64>>], q: f64) -> Vec<IntervalUnion> {
    (0..windows.len())
        .map(|i| {
            let mut parts = Vec::new();
            for (j, w) in windows.iter().enumerate() {
                for &t in &tstar[i][j] {
                    parts.extend(w.affine(q, t));
                }
            }
            IntervalUnion::new(parts)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IntervalSolve {
    pub windows: Vec<IntervalUnion>,
    pub iterations: usize,
    pub last_change: f64,
}

/// Hutchinson iteration from a common bounding interval until successive iterates are
/// within `tol` in the Hausdorff metric.
pub fn solve_intervals(
    tstar: &[Vec<Vec<f64>>],
    q: f64,
    max_iter: usize,
    tol: f64,
) -> Result<IntervalSolve, WindowError> {
    if q.abs() >= 1.0 {
        return Err(WindowError::NotContractive(q.abs()));
    }
    let n = tstar.len();
    let tmax = tstar
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, t| m.max(t.abs()));
    let r = tmax / (1.0 - q.abs()) + 1.0;
    let mut cur = vec![IntervalUnion::single(-r, r); n];
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let next = hutchinson_1d(&cur, tstar, q);
        if next.iter().map(IntervalUnion::len).sum::<usize>() > MAX_INTERVALS {
            return Err(WindowError::IterationCap {
                iterations: it,
                change,
            });
        }
        change = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| a.hausdorff(b))
            .fold(0.0, f64::max);
        cur = next;
        if change < tol {
            return Ok(IntervalSolve {
                windows: cur,
                iterations: it,
                last_change: change,
            });
        }
    }
    Err(WindowError::IterationCap {
        iterations: max_iter,
        change,
    })
}

/// One constant piece of the covering function.
#[derive(Clone, Debug, Serialize)]
pub struct CoverSegment {
    pub a: f64,
    pub b: f64,
    pub level: usize,
    pub a_exact: Option<FieldElement>,
    pub b_exact: Option<FieldElement>,
}

/// Covering function `m_c = Σ_i 1_{W_i}`: measure carried by each positive level.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CoveringProfile {
    pub levels: BTreeMap<usize, f64>,
    /// Exact step function (1-D internal space only).
    pub segments: Option<Vec<CoverSegment>>,
}

/// Fraction of mass that must sit on one level to call the covering constant.
pub const CONSTANT_COVER_FRACTION: f64 = 0.999;
/// The same for sampled profiles, where points near a fractal boundary are counted
/// in every window whose boundary they lie close to.
pub const SAMPLED_CONSTANT_COVER_FRACTION: f64 = 0.99;

impl CoveringProfile {
    pub fn total_mass(&self) -> f64 {
        self.levels.values().sum()
    }

    /// `∫ m_c = Σ level·measure`.
    pub fn integral(&self) -> f64 {
        self.levels.iter().map(|(&l, &m)| l as f64 * m).sum()
    }

    /// The covering degree when almost all of the mass is on a single level.
    pub fn constant_level(&self) -> Option<usize> {
        let total = self.total_mass();
        let fraction = if self.segments.is_some() {
            CONSTANT_COVER_FRACTION
        } else {
            SAMPLED_CONSTANT_COVER_FRACTION
        };
        self.levels
            .iter()
            .find(|(_, &m)| m >= fraction * total)
            .map(|(&l, _)| l)
    }
}

/// Exact step profile of the covering function of interval-union windows.
pub fn covering_profile_1d(windows: &[IntervalUnion], field: Option<&NumberField>) -> CoveringProfile {
    let mut events: Vec<(f64, i64)> = Vec::new();
    for w in windows {
        for &(a, b) in &w.intervals {
            events.push((a, 1));
            events.push((b, -1));
        }
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(y.1.cmp(&x.1)));
    let mut segments: Vec<CoverSegment> = Vec::new();
    let mut level: i64 = 0;
    let mut prev = f64::NAN;
    for (x, delta) in events {
        if level > 0 && x - prev > MERGE_TOL {
            let lvl = level as usize;
            match segments.last_mut() {
                Some(s) if s.level == lvl && (prev - s.b).abs() <= MERGE_TOL => s.b = x,
                _ => segments.push(CoverSegment {
                    a: prev,
                    b: x,
                    level: lvl,
                    a_exact: None,
                    b_exact: None,
                }),
            }
        }
        level += delta;
        prev = x;
    }
    let mut levels = BTreeMap::new();
    for s in &mut segments {
        *levels.entry(s.level).or_insert(0.0) += s.b - s.a;
        if let Some(f) = field {
            s.a_exact = snap_value(s.a, f);
            s.b_exact = snap_value(s.b, f);
        }
    }
    CoveringProfile {
        levels,
        segments: Some(segments),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesWindow {
    pub window: IntervalUnion,
    pub terms: usize,
    /// Length of the first omitted interval.
    pub truncation_bound: f64,
}

/// Window `W_1` of the maximal pure-point factor `(12, 13, 1, 0)` of the twisted Fibonacci
/// extension, from its explicit series `⋃_n σ^{4n}[-σ², -σ³] + σ(σ^{4n} - 1)`.
pub fn rho_tilde_w1_series(cutoff: f64) -> SeriesWindow {
    let sigma = (1.0 - 5f64.sqrt()) / 2.0;
    let (s2, s3) = (sigma.powi(2), sigma.powi(3));
    let mut parts = Vec::new();
    let mut n = 0;
    loop {
        let s4n = sigma.powi(4 * n);
        let len = s4n * (s2 - s3).abs();
        if len < cutoff {
            return SeriesWindow {
                window: IntervalUnion::new(parts),
                terms: n as usize,
                truncation_bound: len,
            };
        }
        let shift = sigma * (s4n - 1.0);
        parts.push((-s2 * s4n + shift, -s3 * s4n + shift));
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalisation_merges_touching() {
        let u = IntervalUnion::new(vec![(2.0, 3.0), (0.0, 1.0), (1.0, 1.5)]);
        assert_eq!(u.intervals, vec![(0.0, 1.5), (2.0, 3.0)]);
        assert!((u.measure() - 2.5).abs() < 1e-15);
        assert!(u.contains(1.2) && !u.contains(1.7) && u.contains(3.0));
    }

    #[test]
    fn hausdorff_sees_gaps() {
        let a = IntervalUnion::single(0.0, 4.0);
        let b = IntervalUnion::new(vec![(0.0, 1.0), (3.0, 4.0)]);
        assert!((a.hausdorff(&b) - 1.0).abs() < 1e-15);
        assert_eq!(b.hausdorff(&b), 0.0);
    }

    #[test]
    fn fibonacci_windows() {
        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        let sigma = 1.0 - tau;
        let tstar = vec![vec![vec![0.0], vec![0.0]], vec![vec![sigma], vec![]]];
        let sol = solve_intervals(&tstar, sigma, 500, 1e-13).unwrap();
        let wa = sol.windows[0].intervals.clone();
        let wb = sol.windows[1].intervals.clone();
        assert_eq!(wa.len(), 1);
        assert!((wa[0].0 - (tau - 2.0)).abs() < 1e-12 && (wa[0].1 - (tau - 1.0)).abs() < 1e-12);
        assert!((wb[0].0 + 1.0).abs() < 1e-12 && (wb[0].1 - (tau - 2.0)).abs() < 1e-12);
        let cover = covering_profile_1d(&sol.windows, None);
        assert_eq!(cover.constant_level(), Some(1));
    }

    #[test]
    fn non_contractive_rejected() {
        let tstar = vec![vec![vec![0.0]]];
        assert!(matches!(
            solve_intervals(&tstar, 1.5, 10, 1e-10),
            Err(WindowError::NotContractive(_))
        ));
    }

    #[test]
    fn series_measure() {
        let s = rho_tilde_w1_series(1e-14);
        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((s.window.measure() - (tau + 2.0) / 5.0).abs() < 1e-12);
        assert!(s.truncation_bound < 1e-14);
    }
}
