use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_rigidity::dynamics::{parallel_transport, CurveOnM, IntegratorConfig};
use finsler_rigidity::error::{Error, Result};
use finsler_rigidity::geometry::{evaluate_metric, SlitTangentPoint};
use finsler_rigidity::rigidity::MapSpec;
use finsler_rigidity::run::{default_seed, r2_csv, run, Analysis, RunConfig, RunOutput, SEED_ENV};
use finsler_rigidity::zoo::r2::{r2_orbit_trace, r2_rank_map, R2Grid};
use finsler_rigidity::zoo::{catalog, MetricSpec};

#[derive(Parser)]
#[command(name = "finsler-rigidity", version, about = "Affine-rigidity diagnostics for Finsler metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank map, holonomy orbit and classification (all three with --full).
    Analyze(RunArgs),
    /// Dimension of the horizontal distribution's orbit tangent space at sample points.
    RankMap(RunArgs),
    /// Sampled holonomy orbit and transitivity verdict.
    Holonomy(RunArgs),
    /// Affinity and homothety checks of candidate maps.
    Classify(RunArgs),
    /// Parallel transport of one fiber vector along a curve.
    Transport(TransportArgs),
    /// Rank profile and orbit traces of the planar subspace-field example.
    R2Example(R2Args),
    /// Catalog of built-in metrics.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
}

#[derive(Subcommand)]
enum ZooAction {
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML or JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Metric, e.g. `sphere`, `euclidean:3`, `randers:0.5,0`, `poincare`, `funk`, `product:sphere,line`.
    #[arg(long)]
    metric: Option<String>,
    /// Custom Riemannian metric: n² row-major coefficient expressions in x1…xn, `;`-separated.
    #[arg(long, conflicts_with = "metric")]
    coeffs: Option<String>,
    /// Chart half-width for `--coeffs`.
    #[arg(long, default_value_t = 1.0, requires = "coeffs")]
    half_width: f64,
    /// Run all analyses (only meaningful for `analyze`).
    #[arg(long)]
    full: bool,
    /// Master seed; defaults to the environment variable or 0.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    parallelism: Option<usize>,
    /// Grid counts, `9` or `9x9`.
    #[arg(long)]
    grid: Option<String>,
    /// Additional random sample points.
    #[arg(long)]
    random_points: Option<usize>,
    /// Relative singular-value threshold.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    bracket_depth: Option<usize>,
    #[arg(long)]
    word_length: Option<usize>,
    #[arg(long)]
    word_count: Option<usize>,
    #[arg(long)]
    time_bound: Option<f64>,
    /// Number of holonomy orbit points.
    #[arg(long)]
    orbit_count: Option<usize>,
    /// Loop family: coordinate-rectangles, geodesic-polygons or random-piecewise.
    #[arg(long)]
    loops: Option<String>,
    /// Loop base point, comma separated.
    #[arg(long)]
    base: Option<String>,
    /// Candidate map, repeatable: `scale:c`, `rotate:θ[:i,j]`, `shear:s`, `affine:…`, `expr:e1;e2`.
    #[arg(long = "map")]
    maps: Vec<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the rank map CSV here.
    #[arg(long)]
    rank_csv: Option<PathBuf>,
    /// Write the orbit points CSV here.
    #[arg(long)]
    orbit_csv: Option<PathBuf>,
    /// Print the JSON report to stdout instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TransportArgs {
    #[arg(long, default_value = "sphere")]
    metric: String,
    /// `circle:c1,c2:r[:cw]`, `rectangle:p1,p2:a,b` or `polygon:v1;v2;…` (closed).
    #[arg(long)]
    curve: String,
    /// Initial fiber vector, comma separated.
    #[arg(long)]
    y0: String,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
}

#[derive(Args)]
struct R2Args {
    /// Grid counts, `41x41`.
    #[arg(long, default_value = "41x41")]
    grid: String,
    /// Rank CSV (`x,y,rank`); stdout if absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Start points of orbit traces, repeatable: `x,y`.
    #[arg(long = "trace")]
    traces: Vec<String>,
    #[arg(long, default_value_t = 40)]
    steps: usize,
    /// Trace CSV (`trace,x,y`).
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Analyze(a) => {
            let analysis = a.full.then_some(Analysis::Full);
            analyze(&a, analysis)
        }
        Command::RankMap(a) => analyze(&a, Some(Analysis::RankMap)),
        Command::Holonomy(a) => analyze(&a, Some(Analysis::Holonomy)),
        Command::Classify(a) => analyze(&a, Some(Analysis::Classify)),
        Command::Transport(a) => transport(&a),
        Command::R2Example(a) => r2_example(&a),
        Command::Zoo {
            action: ZooAction::List { json },
        } => {
            let cat = catalog();
            if json {
                println!("{}", serde_json::to_string_pretty(&cat).expect("catalog serializes"));
            } else {
                for e in cat {
                    println!("{:<20} {:<28} dim {}  {}", e.name, e.cli_form, e.dimension, e.parameters);
                }
            }
            Ok(())
        }
    }
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad number '{t}' in '{s}'")))
        })
        .collect()
}

fn grid_counts(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad grid '{s}' (expected e.g. 9x9)")))
        })
        .collect()
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        RunConfig::from_json(&text)
    } else {
        toml::from_str(&text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }
}

fn build_config(a: &RunArgs, analysis: Option<Analysis>) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => read_config(p)?,
        None => RunConfig {
            seed: default_seed(),
            ..Default::default()
        },
    };
    if let Some(an) = analysis {
        c.analysis = an;
    }
    if let Some(m) = &a.metric {
        c.metric = MetricSpec::parse(m)?;
    }
    if let Some(text) = &a.coeffs {
        let coefficients: Vec<String> = text.split(';').map(|t| t.trim().to_string()).collect();
        let n = (coefficients.len() as f64).sqrt().round() as usize;
        if n * n != coefficients.len() {
            return Err(Error::InvalidParameter(format!(
                "--coeffs needs n² entries, got {}",
                coefficients.len()
            )));
        }
        c.metric = MetricSpec::RiemannianCustom {
            n,
            coefficients,
            half_width: a.half_width,
        };
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(p) = a.parallelism {
        c.parallelism = p;
    }
    if let Some(g) = &a.grid {
        c.sample_plan.grid = grid_counts(g)?;
    }
    if let Some(r) = a.random_points {
        c.sample_plan.random_points = r;
    }
    if let Some(t) = a.tau {
        c.tau = t;
    }
    if let Some(d) = a.bracket_depth {
        c.budget.bracket_depth = d;
    }
    if let Some(l) = a.word_length {
        c.budget.word_length = l;
    }
    if let Some(w) = a.word_count {
        c.budget.word_count = w;
    }
    if let Some(t) = a.time_bound {
        c.budget.time_bound = t;
    }
    if let Some(n) = a.orbit_count {
        c.orbit.count = n;
    }
    if let Some(l) = &a.loops {
        c.orbit.loops = serde_json::from_value(serde_json::Value::String(l.replace('-', "_")))
            .map_err(|_| Error::InvalidParameter(format!("unknown loop family '{l}'")))?;
    }
    if let Some(b) = &a.base {
        c.orbit.base = Some(floats(b)?);
    }
    if !a.maps.is_empty() {
        c.classify.maps = a.maps.iter().map(|s| MapSpec::parse(s)).collect::<Result<_>>()?;
    }
    if let Some(r) = a.rtol {
        c.integrator.rel_tol = r;
    }
    if let Some(t) = a.atol {
        c.integrator.abs_tol = t;
    }
    if a.out.is_some() {
        c.output.report = a.out.clone();
    }
    if a.rank_csv.is_some() {
        c.output.rank_csv = a.rank_csv.clone();
    }
    if a.orbit_csv.is_some() {
        c.output.orbit_csv = a.orbit_csv.clone();
    }
    Ok(c)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
}

fn analyze(a: &RunArgs, analysis: Option<Analysis>) -> Result<()> {
    let cfg = build_config(a, analysis)?;
    let out = run(&cfg)?;
    let json = out.report.to_json();
    if let Some(p) = &cfg.output.report {
        write(p, &json)?;
    }
    if let (Some(p), Some(csv)) = (&cfg.output.rank_csv, out.rank_csv()) {
        write(p, &csv)?;
    }
    if let (Some(p), Some(csv)) = (&cfg.output.orbit_csv, out.orbit_csv()) {
        write(p, &csv)?;
    }
    if a.json {
        println!("{json}");
    } else if cfg.analysis == Analysis::RankMap && cfg.output.rank_csv.is_none() {
        print!("{}", out.rank_csv().unwrap_or_default());
        print_summary(&out, true);
    } else {
        print_summary(&out, false);
    }
    Ok(())
}

/// Human-readable summary, on stderr when stdout carries CSV.
fn print_summary(out: &RunOutput, to_stderr: bool) {
    macro_rules! println {
        ($($t:tt)*) => {
            if to_stderr { eprintln!($($t)*) } else { std::println!($($t)*) }
        };
    }
    let r = &out.report.rigidity;
    println!("metric: {} (n = {})", r.metric.name, r.metric.dimension);
    if let Some(c) = &r.criterion_2 {
        println!(
            "rank map: {} points, {} failed, certified fraction {:.3}, max r_lo {} of {}, vertical mismatches {}: {}",
            c.points,
            c.failures,
            c.certified_fraction,
            c.max_r_lo,
            c.r_hi,
            c.vertical_mismatches,
            if c.passed { "pass" } else { "fail" }
        );
    }
    if let Some(o) = &r.criterion_1 {
        println!(
            "holonomy: {} points, dimension {} (agreement {:.2}), covering {:.3e} / {:.3e}, {:?}",
            o.points, o.dimension, o.agreement, o.covering, o.covering_threshold, o.verdict
        );
    }
    for t in &r.transformations {
        println!(
            "map {}: affinity residual {:.2e}, factor {:.6}, affinity {}, homothety {}, isometry {}",
            t.map, t.affinity.max, t.homothety_factor, t.is_affinity, t.is_homothety, t.is_isometry
        );
    }
    for e in &r.exhibits {
        println!("exhibit: {e}");
    }
    println!("criterion (3): {}", r.criterion_3);
    println!("overall: {}", r.overall);
    println!("wall time: {:.2} s", out.report.wall_time);
}

fn transport(a: &TransportArgs) -> Result<()> {
    let m = MetricSpec::parse(&a.metric)?.build()?;
    let curve = CurveOnM::parse(&a.curve, m.dimension())?;
    let y0 = floats(&a.y0)?;
    let mut cfg = IntegratorConfig::default();
    if let Some(r) = a.rtol {
        cfg.rel_tol = r;
    }
    if let Some(t) = a.atol {
        cfg.abs_tol = t;
    }
    cfg.validate()?;
    let y1 = parallel_transport(&m, &curve, &y0, &cfg)?;
    let f0 = evaluate_metric(&m, &SlitTangentPoint::new(curve.start(), y0.clone())?)?;
    let f1 = evaluate_metric(&m, &SlitTangentPoint::new(curve.end(), y1.clone())?)?;
    let report = serde_json::json!({
        "metric": m.name,
        "curve": a.curve,
        "y0": y0,
        "y1": y1,
        "f0": f0,
        "f1": f1,
        "f_drift": (f1 - f0).abs(),
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(())
}

fn r2_example(a: &R2Args) -> Result<()> {
    let g = grid_counts(&a.grid)?;
    let grid = match g.as_slice() {
        [nx, ny] => R2Grid {
            nx: *nx,
            ny: *ny,
            ..Default::default()
        },
        [k] => R2Grid {
            nx: *k,
            ny: *k,
            ..Default::default()
        },
        _ => return Err(Error::InvalidParameter(format!("bad grid '{}'", a.grid))),
    };
    if !a.traces.is_empty() && a.csv.is_none() && a.trace_csv.is_none() {
        return Err(Error::InvalidParameter("--trace needs --csv or --trace-csv".into()));
    }
    let map = r2_rank_map(&grid)?;
    let csv = r2_csv(&map);
    match &a.csv {
        Some(p) => write(p, &csv)?,
        None => print!("{csv}"),
    }
    if !a.traces.is_empty() {
        let seed = a.seed.unwrap_or(0);
        let mut out = String::from("trace,x,y\n");
        for (i, t) in a.traces.iter().enumerate() {
            let p = floats(t)?;
            if p.len() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: p.len() });
            }
            for q in r2_orbit_trace([p[0], p[1]], a.steps, 4, seed.wrapping_add(i as u64))? {
                out.push_str(&format!("{i},{},{}\n", q[0], q[1]));
            }
        }
        match &a.trace_csv {
            Some(p) => write(p, &out)?,
            None => print!("{out}"),
        }
    }
    Ok(())
}
