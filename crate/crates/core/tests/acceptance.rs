use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectra_core::cocycle::{fibonacci_q, row_cosine_defect, window_ft, Cocycle, RieszOptions};
use spectra_core::diffraction::{enumerate_peaks, AmplitudeFormula, PeakOptions, SpectrumTable};
use spectra_core::fixtures::{list_fixtures, load_fixture};
use spectra_core::numberfield::FieldElement;
use spectra_core::oracle::{
    closed_form_check, compare_at, grid, rho_tilde_f1_series, strong_tuples, uniform_distribution_test,
};
use spectra_core::system::System;
use spectra_core::windows::{solve_windows, CoverSegment, WindowOptions};
use spectra_core::Error;
use std::collections::BTreeSet;
use std::time::Instant;

const TAU: f64 = 1.618_033_988_749_895;
const KNOWN_RED: &[usize] = &[10];
const DEEP: RieszOptions = RieszOptions { tol: 1e-12, n_max: 1000 };

type Outcome = Result<(bool, String), Error>;

fn close(x: f64, want: f64, tol: f64) -> bool {
    (x - want).abs() <= tol
}

fn pf_constants() -> Outcome {
    let trib = load_fixture("tribonacci")?;
    let pisa = load_fixture("pisa4")?;
    let e = &pisa.embedding;
    let mu = e.real_roots[1];
    let alpha = e.complex_roots[0];
    let pass = close(trib.lambda(), 1.839287, 1e-6)
        && close(pisa.lambda(), 1.927562, 1e-6)
        && close(mu, -0.774804, 1e-5)
        && (alpha - Complex64::new(-0.076379, 0.814704)).norm() <= 1e-5;
    Ok((
        pass,
        format!(
            "lambda(trib)={:.9} lambda(pisa4)={:.9} mu={:.7} alpha={:.7}{:+.7}i",
            trib.lambda(),
            pisa.lambda(),
            mu,
            alpha.re,
            alpha.im
        ),
    ))
}

fn fourier_generators() -> Outcome {
    let trib = load_fixture("tribonacci")?;
    let f = trib.field();
    let want_trib = f.inv(&f.from_ints(&[-1, -2, 3]))?;
    let pisa = load_fixture("pisa4")?;
    let g = pisa.field();
    let numerator = g.from_ints(&[10, 157, -103, 16]);
    let check = |s: &System, want: &dyn Fn(&FieldElement) -> bool| -> Result<[bool; 3], Error> {
        let e = &s.embedding;
        Ok([want(&e.theta_from_dual_basis()?), want(&e.theta_from_trace()?), want(&e.theta)])
    };
    let t = check(&trib, &|x| *x == want_trib)?;
    let p = check(&pisa, &|x| g.mul(x, &g.int(563)) == numerator)?;
    let pass = t.iter().chain(&p).all(|&b| b);
    Ok((
        pass,
        format!(
            "trib (dual, trace, stored) = {t:?}; pisa4 = {p:?}; theta(trib) = {}",
            trib.embedding.theta
        ),
    ))
}

fn pisa_density(lambda: f64, d: i32) -> f64 {
    let ld = lambda.powi(d);
    let d = d as f64;
    (ld - lambda) / (2.0 * ld - (d + 1.0) * lambda + (d - 1.0))
}

fn densities() -> Outcome {
    let trib = load_fixture("tribonacci")?.density_value();
    let pisa = load_fixture("pisa4")?.density_value();
    let mut worst: f64 = 0.0;
    for d in 2..=6 {
        let s = load_fixture(&format!("pisa_{d}"))?;
        worst = worst.max((pisa_density(s.lambda(), d) - s.density_value()).abs());
    }
    let pass = close(trib, 0.618420, 1e-6) && close(pisa, 0.566343, 1e-6) && worst < 1e-10;
    Ok((
        pass,
        format!("dens(trib)={trib:.9} dens(pisa4)={pisa:.9} pisa formula d=2..6 max err {worst:.2e}"),
    ))
}

fn fibonacci_closed_forms() -> Outcome {
    let g = grid(-5.0, 5.0, 101);
    let sinc = closed_form_check("fibonacci", &g)?.max_error;
    let s = load_fixture("fibonacci")?;
    let c = Cocycle::new(&s);
    let mut q: f64 = 0.0;
    for &y in &g {
        let ca = c.limit(&[y], RieszOptions::default())?.c[0];
        q = q.max((fibonacci_q(y, 80) - ca).norm());
    }
    Ok((sinc < 1e-8 && q < 1e-6, format!("sinc max err {sinc:.2e}; q_80 max err {q:.2e}")))
}

fn riesz_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut c0, mut rank, mut cosine, mut eig, mut n_used, mut unconverged) = (0f64, 0f64, 0f64, 0f64, 0, 0);
    for fx in list_fixtures() {
        let s = load_fixture(fx.name)?;
        let c = Cocycle::new(&s);
        let n = s.alphabet_size();
        let m = s.internal_dim();
        let at0 = c.limit(&vec![0.0; m], DEEP)?.c_matrix;
        for i in 0..n {
            for j in 0..n {
                c0 = c0.max((at0[(i, j)] - s.pf.v[i] * s.pf.u[j]).norm());
            }
        }
        let mm: DMatrix<Complex64> = s.matrix.to_dmatrix().map(|x| Complex64::new(x, 0.0));
        for _ in 0..1000 {
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let res = c.limit(&y, DEEP)?;
            rank = rank.max(res.rank_ratio());
            cosine = cosine.max(row_cosine_defect(&res.c_matrix, &s.pf.u));
            let lhs = &res.c_matrix * &mm;
            eig = eig.max((lhs - res.c_matrix.scale(s.lambda())).camax());
            n_used = n_used.max(res.n_used);
            unconverged += usize::from(!res.converged);
        }
    }
    let pass = c0 < 1e-10 && rank < 1e-6 && cosine < 1e-6 && eig < 1e-8;
    Ok((
        pass,
        format!(
            "12 fixtures x 1000 y: |C(0)-vu^T| {c0:.1e}, s2/s1 {rank:.1e}, cosine {cosine:.1e}, |CM-lC| {eig:.1e}; max n {n_used}, unconverged {unconverged}"
        ),
    ))
}

fn window_volumes() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let fib = solve_windows(&load_fixture("fibonacci")?, &WindowOptions::default())?;
    let fv = &fib.volumes;
    pass &= close(fv[0], 1.0, 1e-12) && close(fv[1], TAU - 1.0, 1e-12);
    parts.push(format!("fib vol=({:.12},{:.12})", fv[0], fv[1]));
    for fx in list_fixtures() {
        let s = load_fixture(fx.name)?;
        let sol = solve_windows(&s, &WindowOptions::default())?;
        if sol.is_exact() {
            let rel = sol.max_relative_deviation(&s.pf.v);
            pass &= rel < 1e-8;
            parts.push(format!("{} rel {rel:.1e}", fx.name));
        } else {
            let sig = sol.max_sigma_deviation(&s.pf.v);
            pass &= sig < 3.0;
            parts.push(format!("{} {sig:.2}sd", fx.name));
        }
    }
    Ok((pass, parts.join(", ")))
}

fn segments_at(segs: &[CoverSegment], want: &[(FieldElement, FieldElement, usize)]) -> bool {
    segs.len() == want.len()
        && segs.iter().zip(want).all(|(s, (a, b, l))| {
            s.level == *l && s.a_exact.as_ref() == Some(a) && s.b_exact.as_ref() == Some(b)
        })
}

fn covering() -> Outcome {
    let opts = WindowOptions::default();
    let mut ok = Vec::new();
    let mut describe = Vec::new();
    for (name, want) in [
        ("twisted_fib_ext", vec![(-1, [-1, 1], 2)]),
        ("rho_prime", vec![(-1, [-2, 1], 1), (0, [-1, 1], 2)]),
        ("fibonacci", vec![(0, [0, 0], 1)]),
    ] {
        let s = load_fixture(name)?;
        let sol = solve_windows(&s, &opts)?;
        let f = s.field();
        let segs = sol.covering.segments.clone().unwrap_or_default();
        let good = match name {
            "fibonacci" => {
                sol.covering.levels.len() == 1 && sol.covering.constant_level() == Some(1) && segs.len() == 1
            }
            _ => {
                let mut edges = Vec::new();
                let mut left = f.int(-1);
                for &(_, right, level) in &want {
                    let right = f.from_ints(&right);
                    edges.push((left.clone(), right.clone(), level));
                    left = right;
                }
                sol.covering.levels.len() == want.len() && segments_at(&segs, &edges)
            }
        };
        ok.push(good);
        let text: Vec<String> = segs
            .iter()
            .map(|g| {
                let e = |x: &Option<FieldElement>| x.as_ref().map_or("?".into(), |x| x.display_with("t"));
                format!("[{}, {}]:{}", e(&g.a_exact), e(&g.b_exact), g.level)
            })
            .collect();
        describe.push(format!("{name} {}", text.join(" ")));
    }
    Ok((ok.iter().all(|&b| b), describe.join("; ")))
}

fn rho_tilde_series() -> Outcome {
    let want = (TAU + 2.0) / 5.0;
    let s = load_fixture("rho_tilde")?;
    let sol = solve_windows(&s, &WindowOptions::default())?;
    let by_interval = sol.intervals().map_or(f64::NAN, |w| w[1].measure());
    let by_cocycle = window_ft(&Cocycle::new(&s).limit(&[0.0], DEEP)?, sol.eta)[1];
    let series = rho_tilde_f1_series(0.0);
    let grid_err = closed_form_check("rho_tilde", &grid(-5.0, 5.0, 101))?.max_error;
    let pass = close(by_interval, want, 1e-10) && (by_cocycle - want).norm() <= 1e-10 && grid_err < 1e-6;
    Ok((
        pass,
        format!(
            "f1(0): intervals {by_interval:.12}, cocycle {:.12}, series {:.12}, want {want:.12}; grid err {grid_err:.2e}",
            by_cocycle.re, series.re
        ),
    ))
}

fn formula_for(s: &System) -> Result<AmplitudeFormula, Error> {
    let opts = WindowOptions {
        cloud_points: 1,
        ..WindowOptions::default()
    };
    Ok(AmplitudeFormula::from_windows(&solve_windows(s, &opts)?))
}

fn oracle_equivalence() -> Outcome {
    let radii = [1e3, 1e4, 1e5];
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["fibonacci", "tribonacci", "pisa4", "twisted_fib_ext"] {
        let s = load_fixture(name)?;
        let formula = formula_for(&s)?;
        let tuples = strong_tuples(&s, &formula, 5)?;
        let patch = s.patch(1e5)?;
        let mut dev = [0f64; 3];
        for (slot, &r) in dev.iter_mut().zip(&radii) {
            for m in &tuples {
                *slot = slot.max(compare_at(&s, &patch, &formula, m, r)?.deviation);
            }
        }
        let ok = tuples.len() == 5 && dev[2] < 1e-2 && dev[1] <= 1.2 * dev[0] && dev[2] <= 1.2 * dev[1];
        pass &= ok;
        parts.push(format!("{name} {:.1e}/{:.1e}/{:.1e}", dev[0], dev[1], dev[2]));
    }
    Ok((pass, format!("max dev at r=1e3/1e4/1e5: {}", parts.join(", "))))
}

fn figure_table(name: &str) -> Result<(System, SpectrumTable), Error> {
    let s = load_fixture(name)?;
    let opts = PeakOptions {
        miller_box: vec![(-25, 25); 3],
        k_range: (0.0, 10.0),
        ..PeakOptions::symmetric(3, 25, 10.0)
    };
    let t = enumerate_peaks(&s, &formula_for(&s)?, &opts)?;
    Ok((s, t))
}

fn diffraction_figures(info: &mut Vec<String>) -> Outcome {
    let (trib, a) = figure_table("tribonacci")?;
    let (twisted, b) = figure_table("twisted_tribonacci")?;
    let ka: Vec<f64> = a.rows.iter().map(|r| r.k).collect();
    let kb: Vec<f64> = b.rows.iter().map(|r| r.k).collect();
    let unmatched = |x: &[f64], y: &[f64]| {
        x.iter()
            .filter(|&&k| {
                let i = y.partition_point(|&z| z < k - 1e-10);
                !(i < y.len() && (y[i] - k).abs() <= 1e-10)
            })
            .count()
    };
    let (only_a, only_b) = (unmatched(&ka, &kb), unmatched(&kb, &ka));
    let same_module = trib.field().minpoly() == twisted.field().minpoly() && trib.embedding.theta == twisted.embedding.theta;
    let dens = trib.density_value();
    let zero = |t: &SpectrumTable| t.rows.first().filter(|r| r.k == 0.0).map_or(f64::NAN, |r| r.intensity);
    let zero_ok = close(zero(&a), dens * dens, 1e-10) && close(zero(&b), dens * dens, 1e-10);
    info.push(format!(
        "Fourier module identical (same minimal polynomial and theta): {same_module}; k=0 intensity = dens^2 to 1e-10 in both: {zero_ok}"
    ));
    let label = |m: &[i64]| format!("({})", m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    let top: Vec<_> = a.strongest(11).into_iter().filter(|r| r.k != 0.0).take(10).collect();
    let by_miller = |t: &SpectrumTable, m: &[i64]| t.rows.iter().find(|r| r.miller == m).map_or(0.0, |r| r.intensity);
    let smaller = top.iter().filter(|r| by_miller(&b, &r.miller) <= r.intensity).count();
    info.push(format!(
        "10 strongest Tribonacci peaks: {}",
        top.iter().map(|r| label(&r.miller)).collect::<Vec<_>>().join(" ")
    ));
    info.push(format!("twisted intensity <= Tribonacci intensity on {smaller}/10 of them"));
    let common: BTreeSet<&Vec<i64>> = a.rows.iter().map(|r| &r.miller).collect();
    let shared = b.rows.iter().filter(|r| common.contains(&r.miller)).count();
    info.push(format!(
        "peaks above the 1e-6 floor: Tribonacci {}, twisted {}, shared {shared}",
        a.rows.len(),
        b.rows.len()
    ));
    let pass = same_module && zero_ok && only_a == 0 && only_b == 0;
    Ok((
        pass,
        format!("floor-thresholded supports over k in [0,10], box +-25: {only_a} peaks only in Tribonacci, {only_b} only in twisted"),
    ))
}

fn uniform_distribution() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["fibonacci", "twisted_fib_ext"] {
        let s = load_fixture(name)?;
        let sol = solve_windows(&s, &WindowOptions::default())?;
        let patch = s.patch_with_counts(100_000)?;
        for r in uniform_distribution_test(&s, &patch, &sol, 10, 100_000)? {
            pass &= r.max_deviation < 0.05 && r.outside == 0;
            parts.push(format!("{}:{} {:.3}", name, r.letter, r.max_deviation));
        }
    }
    Ok((pass, format!("max bin deviation {}", parts.join(", "))))
}

fn main() {
    let mut failed = Vec::new();
    let mut info = Vec::new();
    let criteria: Vec<(usize, &str, Box<dyn FnOnce(&mut Vec<String>) -> Outcome>)> = vec![
        (1, "PF constants", Box::new(|_| pf_constants())),
        (2, "Fourier-module generators", Box::new(|_| fourier_generators())),
        (3, "densities", Box::new(|_| densities())),
        (4, "Fibonacci closed forms", Box::new(|_| fibonacci_closed_forms())),
        (5, "Riesz-product structure", Box::new(|_| riesz_structure())),
        (6, "window volumes", Box::new(|_| window_volumes())),
        (7, "covering function", Box::new(|_| covering())),
        (8, "rho-tilde series", Box::new(|_| rho_tilde_series())),
        (9, "oracle equivalence", Box::new(|_| oracle_equivalence())),
        (10, "diffraction figures", Box::new(diffraction_figures)),
        (11, "uniform distribution", Box::new(|_| uniform_distribution())),
    ];
    for (id, title, run) in criteria {
        let start = Instant::now();
        info.clear();
        let (pass, detail) = run(&mut info).unwrap_or_else(|e| (false, format!("error: {e}")));
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {title}: {detail} [{:.1}s]", start.elapsed().as_secs_f64());
        for line in &info {
            println!("             info: {line}");
        }
        if !pass {
            failed.push(id);
        }
    }
    let unexpected: Vec<usize> = failed.iter().copied().filter(|id| !KNOWN_RED.contains(id)).collect();
    println!("acceptance: {} of 11 passed; known red {KNOWN_RED:?}", 11 - failed.len());
    if !unexpected.is_empty() {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
