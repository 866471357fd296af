use super::intervals::CoveringProfile;
use crate::error::WindowError;
use crate::numberfield::EmbeddingData;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

/// One invariant block of the internal contraction: a real conjugate (1 coordinate)
/// or a complex pair (2 coordinates, acting as multiplication by the root).
#[derive(Clone, Copy, Debug)]
pub enum Block {
    Real { offset: usize, root: f64 },
    Complex { offset: usize, root: Complex64 },
}

impl Block {
    fn rate(&self) -> f64 {
        match *self {
            Block::Real { root, .. } => root.abs(),
            Block::Complex { root, .. } => root.norm(),
        }
    }

    /// Euclidean norm of the block's coordinates of `u`.
    fn norm(&self, u: &[f64]) -> f64 {
        match *self {
            Block::Real { offset, .. } => u[offset].abs(),
            Block::Complex { offset, .. } => u[offset].hypot(u[offset + 1]),
        }
    }

    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Block::Real { offset, .. } => (a[offset] - b[offset]).abs(),
            Block::Complex { offset, .. } => {
                (a[offset] - b[offset]).hypot(a[offset + 1] - b[offset + 1])
            }
        }
    }
}

pub fn blocks(emb: &EmbeddingData) -> Vec<Block> {
    let mut out = Vec::new();
    let mut offset = 0;
    for z in emb.internal_roots() {
        if z.im == 0.0 {
            out.push(Block::Real { offset, root: z.re });
            offset += 1;
        } else {
            out.push(Block::Complex { offset, root: z });
            offset += 2;
        }
    }
    out
}

fn apply_q(blocks: &[Block], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for b in blocks {
        match *b {
            Block::Real { offset, root } => out[offset] = root * y[offset],
            Block::Complex { offset, root } => {
                let z = root * Complex64::new(y[offset], y[offset + 1]);
                out[offset] = z.re;
                out[offset + 1] = z.im;
            }
        }
    }
    out
}

fn apply_q_inv_shifted(blocks: &[Block], y: &[f64], t: &[f64], out: &mut [f64]) {
    for b in blocks {
        match *b {
            Block::Real { offset, root } => out[offset] = (y[offset] - t[offset]) / root,
            Block::Complex { offset, root } => {
                let z = Complex64::new(y[offset] - t[offset], y[offset + 1] - t[offset + 1]) / root;
                out[offset] = z.re;
                out[offset + 1] = z.im;
            }
        }
    }
}

/// Product-of-intervals-and-disks bounds `W_i ⊂ B_i` invariant under the window IFS,
/// used for exact-address membership descent.
#[derive(Clone, Debug)]
pub struct IfsBounds {
    blocks: Vec<Block>,
    tstar: Vec<Vec<Vec<Vec<f64>>>>,
    pub centers: Vec<Vec<f64>>,
    /// `radii[i][k]`: half-width (real block) or radius (complex block) of block `k` for letter `i`.
    pub radii: Vec<Vec<f64>>,
    /// Support-function slabs `⟨u|y⟩ ≤ h_i(u)` over a fixed set of directions.
    dirs: Vec<Vec<f64>>,
    slabs: Vec<Vec<f64>>,
    depth: usize,
    /// `tolerance[L][k]`: resolution of block `k` expressed in level-`L` coordinates.
    tolerance: Vec<Vec<f64>>,
    /// `slab_tolerance[L][d]`: the same for slab direction `d`.
    slab_tolerance: Vec<Vec<f64>>,
}

/// Pieces of the address tree are refined until their bounds shrink by this factor.
const DESCENT_SCALE: f64 = 1e-13;
const NODE_BUDGET: usize = 200_000;

impl IfsBounds {
    pub fn new(emb: &EmbeddingData, tstar: Vec<Vec<Vec<Vec<f64>>>>) -> Self {
        let blocks = blocks(emb);
        let n = tstar.len();
        let m = emb.internal_dim();
        // centers: fixed point of the averaged IFS
        let mut centers = vec![vec![0.0; m]; n];
        for _ in 0..2000 {
            let next: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let mut acc = vec![0.0; m];
                    let mut count = 0.0;
                    for j in 0..n {
                        let qc = apply_q(&blocks, &centers[j]);
                        for t in &tstar[i][j] {
                            for k in 0..m {
                                acc[k] += qc[k] + t[k];
                            }
                            count += 1.0;
                        }
                    }
                    acc.iter().map(|x| x / count).collect()
                })
                .collect();
            let change = next
                .iter()
                .zip(&centers)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            centers = next;
            if change < 1e-15 {
                break;
            }
        }
        // invariant radii: h_i = max_{j,t} |Q c_j + t - c_i| + rate·h_j, per block
        let nb = blocks.len();
        let mut radii = vec![vec![0.0; nb]; n];
        let shifted: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let qc = apply_q(&blocks, &centers[j]);
                        tstar[i][j]
                            .iter()
                            .map(|t| qc.iter().zip(t).map(|(a, b)| a + b).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        for _ in 0..10_000 {
            let mut change: f64 = 0.0;
            let mut next = radii.clone();
            for i in 0..n {
                for (k, b) in blocks.iter().enumerate() {
                    let mut h: f64 = 0.0;
                    for j in 0..n {
                        for p in &shifted[i][j] {
                            h = h.max(b.dist(p, &centers[i]) + b.rate() * radii[j][k]);
                        }
                    }
                    change = change.max((h - radii[i][k]).abs());
                    next[i][k] = h;
                }
            }
            radii = next;
            if change < 1e-14 {
                break;
            }
        }
        let theta = blocks.iter().map(Block::rate).fold(0.0, f64::max);
        let depth = (DESCENT_SCALE.ln() / theta.ln()).ceil() as usize;
        let mut bounds = IfsBounds {
            blocks,
            tstar,
            centers,
            radii,
            dirs: Vec::new(),
            slabs: vec![Vec::new(); n],
            depth,
            tolerance: Vec::new(),
            slab_tolerance: Vec::new(),
        };
        let dirs = slab_directions(m);
        let per_dir: Vec<Vec<f64>> = dirs.iter().map(|u| bounds.support(u)).collect();
        for (i, slab) in bounds.slabs.iter_mut().enumerate() {
            *slab = per_dir.iter().map(|h| h[i] * (1.0 + 1e-12) + 1e-12).collect();
        }
        // pieces at level L are images of level-0 pieces under Q^L, so a fixed
        // resolution at level 0 grows like rate^-L per block
        let scale: Vec<f64> = (0..bounds.blocks.len())
            .map(|k| DESCENT_SCALE * bounds.radii.iter().map(|r| r[k]).fold(0.0, f64::max))
            .collect();
        bounds.tolerance = (0..=depth)
            .map(|l| {
                bounds
                    .blocks
                    .iter()
                    .zip(&scale)
                    .map(|(b, s)| s * b.rate().powi(-(l as i32)))
                    .collect()
            })
            .collect();
        bounds.slab_tolerance = bounds
            .tolerance
            .iter()
            .map(|tol| {
                dirs.iter()
                    .map(|u| {
                        bounds
                            .blocks
                            .iter()
                            .zip(tol)
                            .map(|(b, t)| b.norm(u) * t)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        bounds.dirs = dirs;
        bounds
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn in_bounds(&self, i: usize, y: &[f64]) -> bool {
        self.slack(i, y, 0).is_some()
    }

    /// Membership of `y` in `W_i`, decided at a resolution of `DESCENT_SCALE` times the
    /// window size by a depth-first search for an address whose pieces all contain `y`.
    /// `None` when the search exceeds its node budget.
    pub fn decide(&self, i: usize, y: &[f64]) -> Option<bool> {
        if !self.in_bounds(i, y) {
            return Some(false);
        }
        let mut stack: Vec<(usize, usize, Vec<f64>)> = vec![(0, i, y.to_vec())];
        let mut children: Vec<(f64, usize, Vec<f64>)> = Vec::new();
        let mut z = vec![0.0; y.len()];
        let mut nodes = 0usize;
        while let Some((level, a, p)) = stack.pop() {
            if level == self.depth {
                return Some(true);
            }
            nodes += 1;
            if nodes > NODE_BUDGET {
                return None;
            }
            children.clear();
            for (j, cell) in self.tstar[a].iter().enumerate() {
                for t in cell {
                    apply_q_inv_shifted(&self.blocks, &p, t, &mut z);
                    if let Some(slack) = self.slack(j, &z, level + 1) {
                        children.push((slack, j, z.clone()));
                    }
                }
            }
            // most central child last, so it is explored first
            children.sort_by(|x, y| y.0.total_cmp(&x.0));
            stack.extend(children.drain(..).map(|(_, j, z)| (level + 1, j, z)));
        }
        Some(false)
    }

    pub fn contains(&self, i: usize, y: &[f64]) -> bool {
        self.decide(i, y).unwrap_or(false)
    }

    /// Largest normalised block distance of `y` from the centre of `B_i`, if inside
    /// the bounds widened by the level-`level` resolution.
    fn slack(&self, i: usize, y: &[f64], level: usize) -> Option<f64> {
        let tol = &self.tolerance[level];
        let mut worst: f64 = 0.0;
        for (k, b) in self.blocks.iter().enumerate() {
            let d = b.dist(y, &self.centers[i]);
            if d > self.radii[i][k] + tol[k] {
                return None;
            }
            worst = worst.max(d / (self.radii[i][k] + tol[k]));
        }
        for ((u, h), t) in self.dirs.iter().zip(&self.slabs[i]).zip(&self.slab_tolerance[level]) {
            if dot(u, y) > h + t {
                return None;
            }
        }
        Some(worst)
    }

    /// Support function `max_{w ∈ W_i} ⟨u|w⟩` for every letter, from the recursion
    /// `h_i(u) = max_j max_t ⟨u|t⟩ + h_j(Qᵀu)`, closed with the ball bounds.
    pub fn support(&self, u: &[f64]) -> Vec<f64> {
        let n = self.tstar.len();
        let mut dirs = vec![u.to_vec()];
        while norm(dirs.last().unwrap()) > 1e-14 * norm(u) && dirs.len() < 10_000 {
            let next = apply_qt(&self.blocks, dirs.last().unwrap());
            dirs.push(next);
        }
        let last = dirs.last().unwrap();
        let mut h: Vec<f64> = (0..n)
            .map(|j| {
                let ball: f64 = self.radii[j].iter().map(|r| r * r).sum::<f64>().sqrt();
                dot(last, &self.centers[j]) + norm(last) * ball
            })
            .collect();
        for d in dirs.iter().rev().skip(1) {
            h = (0..n)
                .map(|i| {
                    let mut best = f64::NEG_INFINITY;
                    for (j, cell) in self.tstar[i].iter().enumerate() {
                        for t in cell {
                            best = best.max(dot(d, t) + h[j]);
                        }
                    }
                    best
                })
                .collect();
        }
        h
    }

    /// Axis-aligned box containing every window, from the support function.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.centers.first().map_or(0, Vec::len);
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for k in 0..m {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            hi[k] = self.support(&e).into_iter().fold(f64::NEG_INFINITY, f64::max);
            e[k] = -1.0;
            lo[k] = -self.support(&e).into_iter().fold(f64::NEG_INFINITY, f64::max);
        }
        let pad: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 1e-9 * (b - a)).collect();
        (
            lo.iter().zip(&pad).map(|(a, p)| a - p).collect(),
            hi.iter().zip(&pad).map(|(b, p)| b + p).collect(),
        )
    }
}

/// `±e_k` and `(±e_k ± e_l)/√2`.
fn slab_directions(m: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for k in 0..m {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; m];
            e[k] = s;
            out.push(e);
        }
        for l in k + 1..m {
            for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut e = vec![0.0; m];
                e[k] = a * std::f64::consts::FRAC_1_SQRT_2;
                e[l] = b * std::f64::consts::FRAC_1_SQRT_2;
                out.push(e);
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn apply_qt(blocks: &[Block], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for b in blocks {
        match *b {
            Block::Real { offset, root } => out[offset] = root * y[offset],
            Block::Complex { offset, root } => {
                let z = root.conj() * Complex64::new(y[offset], y[offset + 1]);
                out[offset] = z.re;
                out[offset + 1] = z.im;
            }
        }
    }
    out
}

/// Nearest-neighbour grid over a point cloud, for the dilation membership test.
#[derive(Clone, Debug)]
pub struct CloudIndex {
    points: Vec<Vec<f64>>,
    cell: f64,
    grid: HashMap<Vec<i64>, Vec<u32>>,
    pub epsilon: f64,
}

impl CloudIndex {
    /// `ε = factor · median nearest-neighbour distance`.
    pub fn new(points: Vec<Vec<f64>>, factor: f64) -> Result<Self, WindowError> {
        if points.is_empty() {
            return Err(WindowError::EmptyCloud(0));
        }
        let m = points[0].len();
        let (lo, hi) = bbox(&points);
        let extent: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a).max(1e-12)).product();
        let spacing = (extent / points.len() as f64).powf(1.0 / m as f64);
        let mut idx = CloudIndex {
            points,
            cell: spacing * 2.0,
            grid: HashMap::new(),
            epsilon: 0.0,
        };
        idx.rebuild();
        let step = (idx.points.len() / 2000).max(1);
        let mut nn: Vec<f64> = (0..idx.points.len())
            .step_by(step)
            .map(|k| idx.nearest_excluding(k))
            .collect();
        nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
        idx.epsilon = factor * nn[nn.len() / 2];
        idx.cell = idx.epsilon.max(1e-12);
        idx.rebuild();
        Ok(idx)
    }

    fn key(&self, y: &[f64]) -> Vec<i64> {
        y.iter().map(|x| (x / self.cell).floor() as i64).collect()
    }

    fn rebuild(&mut self) {
        let mut grid: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (k, p) in self.points.iter().enumerate() {
            grid.entry(self.key(p)).or_default().push(k as u32);
        }
        self.grid = grid;
    }

    fn neighbours(&self, y: &[f64]) -> impl Iterator<Item = &u32> {
        let base = self.key(y);
        let m = base.len();
        let count = 3usize.pow(m as u32);
        (0..count).flat_map(move |mut code| {
            let mut key = base.clone();
            for kk in key.iter_mut() {
                *kk += (code % 3) as i64 - 1;
                code /= 3;
            }
            self.grid.get(&key).into_iter().flatten()
        })
    }

    fn nearest_excluding(&self, k: usize) -> f64 {
        let y = &self.points[k];
        let mut best = f64::INFINITY;
        for &q in self.neighbours(y) {
            if q as usize != k {
                best = best.min(dist(y, &self.points[q as usize]));
            }
        }
        if best.is_finite() {
            best
        } else {
            self.cell
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.neighbours(y)
            .any(|&q| dist(y, &self.points[q as usize]) <= self.epsilon)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn bbox(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = points.first().map_or(0, Vec::len);
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for p in points {
        for k in 0..m {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloVolumes {
    pub volumes: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub samples: usize,
    pub box_volume: f64,
    /// Samples per letter whose membership search ran out of budget (counted as outside).
    pub undecided: Vec<u64>,
    pub covering: CoveringProfile,
}

const BLOCK: usize = 4096;

/// Uniform samples in `[lo, hi]` tested against every window; deterministic for a given seed.
pub fn monte_carlo_volumes<F>(
    lo: &[f64],
    hi: &[f64],
    n_letters: usize,
    samples: usize,
    seed: u64,
    member: F,
) -> MonteCarloVolumes
where
    F: Fn(usize, &[f64]) -> Option<bool> + Sync,
{
    let m = lo.len();
    let box_volume: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let nblocks = samples.div_ceil(BLOCK);
    let partials: Vec<(Vec<u64>, Vec<u64>, BTreeMap<usize, u64>)> = (0..nblocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(blk as u64));
            let count = BLOCK.min(samples - blk * BLOCK);
            let mut hits = vec![0u64; n_letters];
            let mut open = vec![0u64; n_letters];
            let mut levels = BTreeMap::new();
            let mut y = vec![0.0; m];
            for _ in 0..count {
                for k in 0..m {
                    y[k] = rng.gen_range(lo[k]..hi[k]);
                }
                let mut level = 0;
                for i in 0..n_letters {
                    match member(i, &y) {
                        Some(true) => {
                            hits[i] += 1;
                            level += 1;
                        }
                        Some(false) => {}
                        None => open[i] += 1,
                    }
                }
                if level > 0 {
                    *levels.entry(level).or_insert(0) += 1;
                }
            }
            (hits, open, levels)
        })
        .collect();
    let mut hits = vec![0u64; n_letters];
    let mut undecided = vec![0u64; n_letters];
    let mut level_hits: BTreeMap<usize, u64> = BTreeMap::new();
    for (h, o, l) in partials {
        for (a, b) in hits.iter_mut().zip(h) {
            *a += b;
        }
        for (a, b) in undecided.iter_mut().zip(o) {
            *a += b;
        }
        for (k, c) in l {
            *level_hits.entry(k).or_insert(0) += c;
        }
    }
    let n = samples as f64;
    let volumes = hits.iter().map(|&h| box_volume * h as f64 / n).collect();
    let standard_errors = hits
        .iter()
        .map(|&h| {
            let p = h as f64 / n;
            box_volume * (p * (1.0 - p) / n).sqrt()
        })
        .collect();
    let levels = level_hits
        .into_iter()
        .map(|(k, c)| (k, box_volume * c as f64 / n))
        .collect();
    MonteCarloVolumes {
        volumes,
        standard_errors,
        samples,
        box_volume,
        undecided,
        covering: CoveringProfile {
            levels,
            segments: None,
        },
    }
}

/// One Hutchinson step on point clouds: `cloud_i ↦ ⋃_j Q·cloud_j + T★_ij`.
pub fn hutchinson_cloud_step(
    emb: &EmbeddingData,
    clouds: &[Vec<Vec<f64>>],
    tstar: &[Vec<Vec<Vec<f64>>>],
) -> Vec<Vec<Vec<f64>>> {
    let bl = blocks(emb);
    (0..clouds.len())
        .map(|i| {
            let mut out = Vec::new();
            for (j, cloud) in clouds.iter().enumerate() {
                for p in cloud {
                    let qp = apply_q(&bl, p);
                    for t in &tstar[i][j] {
                        out.push(qp.iter().zip(t).map(|(a, b)| a + b).collect());
                    }
                }
            }
            out
        })
        .collect()
}
