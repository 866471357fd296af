//! Windows (Rauzy fractals) of the covering model sets: solutions of the window IFS
//! `W_i = ⋃_j ⋃_{t ∈ T_ij} Q W_j + t★`.

pub mod cloud;
pub mod intervals;

pub use cloud::{hutchinson_cloud_step, CloudIndex, IfsBounds, MonteCarloVolumes};
pub use intervals::{
    covering_profile_1d, hutchinson_1d, rho_tilde_w1_series, snap_value, solve_intervals,
    CoverSegment, CoveringProfile, IntervalSolve, IntervalUnion, SeriesWindow,
};

use crate::error::{Error, WindowError};
use crate::output::num;
use crate::svg::{Svg, PALETTE};
use crate::system::System;
use serde::Serialize;
use std::fmt::Write;

#[derive(Clone, Debug)]
pub struct WindowOptions {
    /// Hausdorff tolerance of the interval engine.
    pub tol: f64,
    pub max_iter: usize,
    /// Minimum number of star-mapped points per letter for clouds.
    pub cloud_points: usize,
    pub mc_samples: usize,
    pub mc_seed: u64,
    /// Dilation radius as a multiple of the median nearest-neighbour distance.
    pub epsilon_factor: f64,
    /// Also run the dilation-based volume estimate.
    pub dilation: bool,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            tol: 1e-13,
            max_iter: 2000,
            cloud_points: 20_000,
            mc_samples: 200_000,
            mc_seed: 0x5eed,
            epsilon_factor: 2.0,
            dilation: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum WindowShape {
    Intervals(Vec<IntervalUnion>),
    Clouds(Vec<Vec<Vec<f64>>>),
}

#[derive(Clone, Debug, Serialize)]
pub enum VolumeMethod {
    Exact,
    /// Monte-Carlo with exact IFS-address membership resolved to the given depth.
    MonteCarlo {
        samples: usize,
        depth: usize,
        box_volume: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationEstimate {
    pub epsilon: Vec<f64>,
    pub volumes: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub eta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowSolution {
    pub shape: WindowShape,
    pub letters: Vec<char>,
    pub volumes: Vec<f64>,
    /// Standard errors of the volumes (zero for the exact engine).
    pub volume_errors: Vec<f64>,
    pub eta: f64,
    pub covering: CoveringProfile,
    pub method: VolumeMethod,
    pub iterations: usize,
    pub dilation: Option<DilationEstimate>,
}

impl WindowSolution {
    pub fn is_exact(&self) -> bool {
        matches!(self.method, VolumeMethod::Exact)
    }

    /// `max_i |vol_i/v_i - η| / η`.
    pub fn max_relative_deviation(&self, v: &[f64]) -> f64 {
        self.volumes
            .iter()
            .zip(v)
            .map(|(vol, vi)| (vol / vi - self.eta).abs() / self.eta)
            .fold(0.0, f64::max)
    }

    /// Largest `|vol_i/v_i - η|` in units of its standard error, treating the sample hits
    /// as multinomial; infinite deviations for an exact solution with any mismatch.
    pub fn max_sigma_deviation(&self, v: &[f64]) -> f64 {
        let (n, b) = match self.method {
            VolumeMethod::MonteCarlo {
                samples,
                box_volume,
                ..
            } => (samples as f64, box_volume),
            VolumeMethod::Exact => return if self.max_relative_deviation(v) == 0.0 { 0.0 } else { f64::INFINITY },
        };
        let p: Vec<f64> = self.volumes.iter().map(|x| x / b).collect();
        (0..v.len())
            .map(|i| {
                let a = |j: usize| if j == i { 1.0 / v[i] - 1.0 } else { -1.0 };
                let m1: f64 = (0..p.len()).map(|j| a(j) * p[j]).sum();
                let m2: f64 = (0..p.len()).map(|j| a(j) * a(j) * p[j]).sum();
                let se = b * ((m2 - m1 * m1) / n).sqrt();
                (self.volumes[i] / v[i] - self.eta).abs() / se
            })
            .fold(0.0, f64::max)
    }

    pub fn intervals(&self) -> Option<&[IntervalUnion]> {
        match &self.shape {
            WindowShape::Intervals(w) => Some(w),
            WindowShape::Clouds(_) => None,
        }
    }

    pub fn clouds(&self) -> Option<&[Vec<Vec<f64>>]> {
        match &self.shape {
            WindowShape::Clouds(c) => Some(c),
            WindowShape::Intervals(_) => None,
        }
    }
}

/// Star images of a fixed-seed patch with at least `target` points per letter.
pub fn solve_cloud(system: &System, target: usize) -> Result<Vec<Vec<Vec<f64>>>, Error> {
    let patch = system.patch_with_counts(target)?;
    let clouds: Vec<Vec<Vec<f64>>> = (0..system.alphabet_size())
        .map(|i| patch.star_points(i, &system.ring, f64::INFINITY))
        .collect();
    if let Some(i) = clouds.iter().position(Vec::is_empty) {
        return Err(WindowError::EmptyCloud(i).into());
    }
    Ok(clouds)
}

pub fn solve_windows(system: &System, opts: &WindowOptions) -> Result<WindowSolution, Error> {
    let letters = system.rule.letters.clone();
    let tstar = system.tstar();
    if system.internal_dim() == 1 {
        let flat: Vec<Vec<Vec<f64>>> = tstar
            .iter()
            .map(|row| row.iter().map(|c| c.iter().map(|t| t[0]).collect()).collect())
            .collect();
        let q = system.embedding.contraction[(0, 0)];
        let mut sol = solve_intervals(&flat, q, opts.max_iter, opts.tol)?;
        for w in &mut sol.windows {
            w.snap(system.field());
        }
        let volumes: Vec<f64> = sol.windows.iter().map(IntervalUnion::measure).collect();
        let eta = volumes.iter().sum::<f64>() / system.pf.v.iter().sum::<f64>();
        let covering = covering_profile_1d(&sol.windows, Some(system.field()));
        return Ok(WindowSolution {
            shape: WindowShape::Intervals(sol.windows),
            letters,
            volume_errors: vec![0.0; volumes.len()],
            volumes,
            eta,
            covering,
            method: VolumeMethod::Exact,
            iterations: sol.iterations,
            dilation: None,
        });
    }
    let clouds = solve_cloud(system, opts.cloud_points)?;
    let bounds = IfsBounds::new(&system.embedding, tstar);
    let (lo, hi) = bounds.bounding_box();
    let n = system.alphabet_size();
    let mc = cloud::monte_carlo_volumes(&lo, &hi, n, opts.mc_samples, opts.mc_seed, |i, y| {
        bounds.decide(i, y)
    });
    let eta = mc.volumes.iter().sum::<f64>();
    let dilation = if opts.dilation {
        let idx = clouds
            .iter()
            .map(|c| CloudIndex::new(c.clone(), opts.epsilon_factor))
            .collect::<Result<Vec<_>, _>>()?;
        let dm = cloud::monte_carlo_volumes(&lo, &hi, n, opts.mc_samples, opts.mc_seed, |i, y| {
            Some(idx[i].contains(y))
        });
        Some(DilationEstimate {
            epsilon: idx.iter().map(|c| c.epsilon).collect(),
            eta: dm.volumes.iter().sum(),
            volumes: dm.volumes,
            standard_errors: dm.standard_errors,
        })
    } else {
        None
    };
    Ok(WindowSolution {
        shape: WindowShape::Clouds(clouds),
        letters,
        volumes: mc.volumes,
        volume_errors: mc.standard_errors,
        eta,
        covering: mc.covering,
        method: VolumeMethod::MonteCarlo {
            samples: mc.samples,
            depth: bounds.depth(),
            box_volume: mc.box_volume,
        },
        iterations: 0,
        dilation,
    })
}

#[derive(Clone, Debug)]
pub struct RenderStyle {
    pub palette: Vec<String>,
    pub width: f64,
    /// Upper bound on plotted points per letter (clouds are thinned evenly).
    pub max_points: usize,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            palette: PALETTE.iter().map(|s| s.to_string()).collect(),
            width: 640.0,
            max_points: 15_000,
        }
    }
}

const MARGIN: f64 = 40.0;

pub fn render_windows(sol: &WindowSolution, style: &RenderStyle) -> String {
    let colour = |i: usize| style.palette[i % style.palette.len().max(1)].clone();
    match &sol.shape {
        WindowShape::Intervals(ws) => {
            let (lo, hi) = ws
                .iter()
                .filter_map(IntervalUnion::hull)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| {
                    (a.min(c), b.max(d))
                });
            let (lo, hi) = (lo.floor(), hi.ceil());
            let row = 28.0;
            let height = 2.0 * MARGIN + row * ws.len() as f64;
            let sx = (style.width - 2.0 * MARGIN) / (hi - lo).max(1e-9);
            let mut svg = Svg::new(style.width, height);
            for (i, w) in ws.iter().enumerate() {
                let y = MARGIN + row * i as f64;
                svg.text(MARGIN - 8.0, y + row * 0.6, 12.0, "end", &sol.letters[i].to_string());
                for &(a, b) in &w.intervals {
                    svg.rect(MARGIN + (a - lo) * sx, y + 4.0, (b - a) * sx, row - 8.0, &colour(i));
                }
            }
            let axis_y = height - MARGIN + 6.0;
            svg.line(MARGIN, axis_y, style.width - MARGIN, axis_y, "black", 1.0);
            let mut t = lo;
            while t <= hi + 1e-9 {
                let x = MARGIN + (t - lo) * sx;
                svg.line(x, axis_y, x, axis_y + 5.0, "black", 1.0);
                svg.text(x, axis_y + 17.0, 10.0, "middle", &format!("{t}"));
                t += 1.0;
            }
            svg.finish()
        }
        WindowShape::Clouds(clouds) => {
            let all: Vec<&Vec<f64>> = clouds.iter().flatten().collect();
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in &all {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            for k in 0..2 {
                lo[k] = lo[k].floor();
                hi[k] = hi[k].ceil();
            }
            let scale = (style.width - 2.0 * MARGIN) / (hi[0] - lo[0]).max(1e-9);
            let height = 2.0 * MARGIN + (hi[1] - lo[1]) * scale;
            let px = |x: f64| MARGIN + (x - lo[0]) * scale;
            let py = |y: f64| height - MARGIN - (y - lo[1]) * scale;
            let mut svg = Svg::new(style.width, height);
            for (i, c) in clouds.iter().enumerate() {
                svg.open_group(&format!("fill-opacity=\"0.6\" id=\"letter-{}\"", sol.letters[i]));
                let step = c.len().div_ceil(style.max_points.max(1)).max(1);
                for p in c.iter().step_by(step) {
                    svg.circle(px(p[0]), py(p[1]), 0.7, &colour(i));
                }
                svg.close_group();
            }
            // axes through the origin with unit ticks
            svg.line(px(lo[0]), py(0.0), px(hi[0]), py(0.0), "black", 0.8);
            svg.line(px(0.0), py(lo[1]), px(0.0), py(hi[1]), "black", 0.8);
            let mut t = lo[0];
            while t <= hi[0] + 1e-9 {
                svg.line(px(t), py(0.0) - 4.0, px(t), py(0.0) + 4.0, "black", 0.8);
                t += 1.0;
            }
            let mut t = lo[1];
            while t <= hi[1] + 1e-9 {
                svg.line(px(0.0) - 4.0, py(t), px(0.0) + 4.0, py(t), "black", 0.8);
                t += 1.0;
            }
            svg.finish()
        }
    }
}

/// `letter,a,b` per interval, or `letter,x,y` (`letter,x1,…,xm` beyond two dimensions) per point.
pub fn windows_csv(sol: &WindowSolution) -> String {
    let mut out = String::new();
    match &sol.shape {
        WindowShape::Intervals(ws) => {
            out.push_str("letter,a,b\n");
            for (i, w) in ws.iter().enumerate() {
                for &(a, b) in &w.intervals {
                    let _ = writeln!(out, "{},{},{}", sol.letters[i], num(a), num(b));
                }
            }
        }
        WindowShape::Clouds(clouds) => {
            let m = clouds.iter().flatten().next().map_or(2, Vec::len);
            if m == 2 {
                out.push_str("letter,x,y\n");
            } else {
                let cols: Vec<String> = (1..=m).map(|k| format!("x{k}")).collect();
                let _ = writeln!(out, "letter,{}", cols.join(","));
            }
            for (i, c) in clouds.iter().enumerate() {
                for p in c {
                    let cols: Vec<String> = p.iter().map(|&x| num(x)).collect();
                    let _ = writeln!(out, "{},{}", sol.letters[i], cols.join(","));
                }
            }
        }
    }
    out
}
