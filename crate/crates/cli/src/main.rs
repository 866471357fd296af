use clap::{Args, Parser, Subcommand};
use serde_json::json;
use spectra_core::cocycle::{Cocycle, RieszOptions};
use spectra_core::diffraction::{enumerate_peaks, AmplitudeFormula, PeakOptions};
use spectra_core::fixtures::{fixture_text, list_fixtures};
use spectra_core::numberfield::FieldElement;
use spectra_core::oracle::{compare_at, declared_tolerance, smoke, uniform_distribution_test};
use spectra_core::output::json as to_json;
use spectra_core::rule::parse_rule;
use spectra_core::substitution::is_primitive;
use spectra_core::system::System;
use spectra_core::windows::{render_windows, solve_windows, windows_csv, RenderStyle, WindowOptions};
use spectra_core::Error;
use num_complex::Complex64;
use std::path::{Path, PathBuf};

macro_rules! out {
    ($($t:tt)*) => {
        emit(format_args!($($t)*))
    };
}

macro_rules! outln {
    ($($t:tt)*) => {{
        emit(format_args!($($t)*));
        emit(format_args!("\n"));
    }};
}

/// Writes to stdout, ending the process quietly when the reader has gone away.
fn emit(args: std::fmt::Arguments) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_fmt(args) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: io: {e}");
        std::process::exit(4);
    }
}
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spectra", version, about = "Diffraction of inflation tilings via internal cocycles")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SPECTRA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rule file utilities.
    Rule {
        #[command(subcommand)]
        action: RuleAction,
    },
    /// Number field data: minimal polynomial, conjugates, ϑ, densities.
    Field {
        rule: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Solve the window IFS.
    Windows(WindowsArgs),
    /// Evaluate the matrix Riesz product C(y).
    Cocycle(CocycleArgs),
    /// Peak table of the pure point diffraction.
    Diffract(DiffractArgs),
    /// Compare cocycle amplitudes with brute-force exponential sums.
    Verify(VerifyArgs),
    /// List the bundled rule files, or print one.
    Fixtures { name: Option<String> },
}

#[derive(Subcommand)]
enum RuleAction {
    /// Parse and validate a rule file.
    Check { rule: PathBuf },
}

#[derive(Args)]
struct WindowsArgs {
    rule: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Hausdorff tolerance of the interval engine.
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Monte-Carlo samples for window volumes (internal dimension ≥ 2).
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Minimum number of star-mapped points per letter in the clouds.
    #[arg(long, default_value_t = 20_000)]
    points: usize,
    /// Also report the dilated-cloud volume estimate.
    #[arg(long)]
    dilation: bool,
}

#[derive(Args)]
struct CocycleArgs {
    rule: PathBuf,
    /// Internal-space point, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    y: Vec<f64>,
    /// Fixed number of factors instead of iterating to tolerance.
    #[arg(long, conflicts_with = "tol")]
    n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 200)]
    n_max: usize,
}

#[derive(Args)]
struct DiffractArgs {
    rule: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    kmax: f64,
    #[arg(long, default_value_t = 0.0)]
    kmin: f64,
    /// Half-width of the Miller index box.
    #[arg(long = "box", default_value_t = 25)]
    half_width: i64,
    /// Real weights h_i, comma separated (default all 1).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    weights: Option<Vec<f64>>,
    /// Intensity floor relative to the k = 0 peak.
    #[arg(long, default_value_t = 1e-6)]
    floor: f64,
    /// Number of peaks labelled in the SVG.
    #[arg(long, default_value_t = 12)]
    labels: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Monte-Carlo samples used to certify the covering degree (internal dimension ≥ 2).
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
}

#[derive(Args)]
struct VerifyArgs {
    rule: PathBuf,
    /// Miller tuple, comma separated; repeat for several. Defaults to the five strongest peaks.
    #[arg(long = "k", allow_negative_numbers = true)]
    k: Vec<String>,
    /// Patch radius.
    #[arg(long, default_value_t = 1e4)]
    r: f64,
    /// Histogram bins for the uniform-distribution test (1-D internal space).
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Reads a rule file, falling back to a bundled fixture of that name.
fn read_rule(path: &Path) -> Result<String, Error> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) => match path.to_str().and_then(fixture_text) {
            Some(text) if !path.exists() => Ok(text.to_string()),
            _ => Err(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into()),
        },
    }
}

fn load(path: &Path) -> Result<System, Error> {
    System::from_text(&read_rule(path)?)
}

fn write(path: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    if let Some(p) = path {
        std::fs::write(p, content)?;
    }
    Ok(())
}

fn strings(v: &[FieldElement]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Rule {
            action: RuleAction::Check { rule },
        } => rule_check(&rule),
        Command::Field { rule, json } => field(&rule, json),
        Command::Windows(a) => windows(a),
        Command::Cocycle(a) => cocycle(a),
        Command::Diffract(a) => diffract(a),
        Command::Verify(a) => verify(a),
        Command::Fixtures { name } => fixtures(name),
    }
}

fn rule_check(path: &Path) -> Result<u8, Error> {
    let rule = parse_rule(&read_rule(path)?)?;
    let system = System::new(rule.clone())?;
    let report = json!({
        "name": rule.name,
        "rule": rule.to_string(),
        "letters": rule.letters,
        "matrix": system.matrix.entries,
        "primitive": is_primitive(&system.matrix),
        "lambda": system.lambda(),
        "minimal_polynomial": system.embedding.minpoly().to_string(),
        "lengths": strings(&system.lengths),
        "seed": {
            "power": system.seed.power,
            "left": rule.letter(system.seed.left).to_string(),
            "right": rule.letter(system.seed.right).to_string(),
        },
    });
    out!("{}", to_json(&report));
    Ok(0)
}

fn field(path: &Path, as_json: bool) -> Result<u8, Error> {
    let s = load(path)?;
    let emb = &s.embedding;
    let dual_row = emb.theta_from_dual_basis()?;
    let trace = emb.theta_from_trace()?;
    if dual_row != trace {
        eprintln!("error: dual-basis and trace routes disagree: {dual_row} vs {trace}");
        return Ok(3);
    }
    let theta = &emb.theta;
    let conjugates: Vec<[f64; 2]> = emb
        .real_roots
        .iter()
        .skip(1)
        .map(|&x| [x, 0.0])
        .chain(emb.complex_roots.iter().flat_map(|z| [[z.re, z.im], [z.re, -z.im]]))
        .collect();
    let det = emb.basis.determinant();
    if as_json {
        let report = json!({
            "system": s.name(),
            "minimal_polynomial": emb.minpoly().to_string(),
            "lambda": s.lambda(),
            "conjugates": conjugates,
            "det_basis": det,
            "theta": theta.to_string(),
            "theta_value": s.field().value(theta),
            "density": s.density.to_string(),
            "density_value": s.density_value(),
            "lengths": strings(&s.lengths),
            "frequencies": strings(&s.frequencies),
            "contraction_rate": emb.theta_rate,
        });
        out!("{}", to_json(&report));
        return Ok(0);
    }
    outln!("minimal polynomial = {}", emb.minpoly());
    outln!("lambda = {:.15}", s.lambda());
    for [re, im] in &conjugates {
        if *im == 0.0 {
            outln!("conjugate = {re:.15}");
        } else {
            let sign = if *im > 0.0 { '+' } else { '-' };
            outln!("conjugate = {re:.15} {sign} {:.15}i", im.abs());
        }
    }
    outln!("det B = {det:.15}");
    outln!("theta = {theta} = {:.15}", s.field().value(theta));
    outln!("density = {} = {:.15}", s.density, s.density_value());
    outln!("lengths = [{}]", strings(&s.lengths).join(", "));
    outln!("frequencies = [{}]", strings(&s.frequencies).join(", "));
    outln!("contraction rate = {:.15}", emb.theta_rate);
    Ok(0)
}

fn windows(a: WindowsArgs) -> Result<u8, Error> {
    let s = load(&a.rule)?;
    let opts = WindowOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        cloud_points: a.points,
        mc_samples: a.samples,
        mc_seed: a.seed,
        dilation: a.dilation,
        ..WindowOptions::default()
    };
    let sol = solve_windows(&s, &opts)?;
    let v = &s.pf.v;
    let ok = if sol.is_exact() {
        sol.max_relative_deviation(v) < 1e-8
    } else {
        sol.max_sigma_deviation(v) < 3.0
    };
    write(&a.svg, &render_windows(&sol, &RenderStyle::default()))?;
    write(&a.csv, &windows_csv(&sol))?;
    let summary = json!({
        "system": s.name(),
        "letters": sol.letters,
        "volumes": sol.volumes,
        "volume_errors": sol.volume_errors,
        "frequencies": v,
        "eta": sol.eta,
        "max_relative_deviation": sol.max_relative_deviation(v),
        "volume_check": ok,
        "method": sol.method,
        "covering": sol.covering,
        "constant_covering": sol.covering.constant_level(),
        "intervals": sol.intervals(),
        "dilation": sol.dilation,
    });
    let text = to_json(&summary);
    write(&a.json, &text)?;
    out!("{text}");
    Ok(if ok { 0 } else { 3 })
}

fn cocycle(a: CocycleArgs) -> Result<u8, Error> {
    let s = load(&a.rule)?;
    let cc = Cocycle::new(&s);
    let opts = match a.n {
        Some(n) => RieszOptions { tol: 0.0, n_max: n },
        None => RieszOptions {
            tol: a.tol.unwrap_or(1e-10),
            n_max: a.n_max,
        },
    };
    let res = cc.limit(&a.y, opts)?;
    out!("{}", to_json(&res));
    Ok(if a.n.is_some() || res.converged { 0 } else { 3 })
}

fn formula_for(s: &System, samples: usize) -> Result<AmplitudeFormula, Error> {
    let opts = WindowOptions {
        mc_samples: samples,
        cloud_points: 1,
        ..WindowOptions::default()
    };
    Ok(AmplitudeFormula::from_windows(&solve_windows(s, &opts)?))
}

fn diffract(a: DiffractArgs) -> Result<u8, Error> {
    let s = load(&a.rule)?;
    let formula = formula_for(&s, a.samples)?;
    let mut opts = PeakOptions::symmetric(s.embedding.degree(), a.half_width, a.kmax);
    opts.k_range = (a.kmin, a.kmax);
    opts.floor = a.floor;
    if let Some(w) = &a.weights {
        if w.len() != s.alphabet_size() {
            eprintln!("error: expected {} weights, got {}", s.alphabet_size(), w.len());
            return Ok(2);
        }
        opts.weights = Some(w.iter().map(|&x| Complex64::new(x, 0.0)).collect());
    }
    let table = enumerate_peaks(&s, &formula, &opts)?;
    if table.rows.is_empty() {
        eprintln!("warning: no peaks above the floor");
    }
    write(&a.csv, &table.to_csv())?;
    write(&a.svg, &table.to_svg(a.labels))?;
    write(&a.json, &table.to_json())?;
    if a.csv.is_none() && a.json.is_none() {
        out!("{}", table.to_csv());
    } else {
        eprintln!("{} peaks", table.rows.len());
    }
    Ok(0)
}

fn verify(a: VerifyArgs) -> Result<u8, Error> {
    let s = load(&a.rule)?;
    let formula = formula_for(&s, 20_000)?;
    let tuples: Vec<Vec<i64>> = a
        .k
        .iter()
        .map(|t| {
            t.split(',')
                .map(|x| x.trim().parse::<i64>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()
        .map_err(|e| spectra_core::error::OracleError::UnknownSystem(format!("bad Miller index: {e}")))?;
    let (reports, max_deviation) = if tuples.is_empty() {
        let sm = smoke(&s, &formula, a.r, 5)?;
        (sm.reports, sm.max_deviation)
    } else {
        let patch = s.patch(a.r)?;
        let reps = tuples
            .iter()
            .map(|m| compare_at(&s, &patch, &formula, m, a.r))
            .collect::<Result<Vec<_>, _>>()?;
        let m = reps.iter().map(|r| r.deviation).fold(0.0, f64::max);
        (reps, m)
    };
    let tolerance = declared_tolerance(&s, a.r);
    let uniform = if s.internal_dim() == 1 {
        let sol = solve_windows(&s, &WindowOptions::default())?;
        let points = (a.r * s.letter_densities().iter().copied().fold(f64::INFINITY, f64::min)) as usize;
        let patch = s.patch(a.r)?;
        Some(uniform_distribution_test(&s, &patch, &sol, a.bins, points.max(1))?)
    } else {
        None
    };
    let passed = max_deviation < tolerance;
    let report = json!({
        "system": s.name(),
        "r": a.r,
        "tolerance": tolerance,
        "tolerance_note": "engineering choice: max(1e-2 (1e5/r)^(1/4), r^(-alpha)), alpha = -ln(theta)/ln(lambda)",
        "max_deviation": max_deviation,
        "passed": passed,
        "reports": reports,
        "uniform_distribution": uniform,
    });
    let text = to_json(&report);
    write(&a.json, &text)?;
    out!("{text}");
    Ok(if passed { 0 } else { 3 })
}

fn fixtures(name: Option<String>) -> Result<u8, Error> {
    match name {
        None => {
            for f in list_fixtures() {
                let rule = parse_rule(f.text)?;
                outln!("{:<20} {}", f.name, rule);
            }
            Ok(0)
        }
        Some(n) => match fixture_text(&n) {
            Some(t) => {
                out!("{t}");
                Ok(0)
            }
            None => {
                eprintln!("error: no fixture named {n}");
                Ok(2)
            }
        },
    }
}
