//! `orderk` command-line experiments.
//!
//! Exit codes: 0 success, 1 failed check or I/O error, 2 invalid
//! configuration, 3 genericity failure, 4 guaranteed inequality violated, 5 window too
//! small, 6 non-generic input where a generic one is needed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use orderk::angles::{monotonicity_report, structure_angles, samples_to_csv, zone_angles, AnglesError, Structure};
use orderk::counterexample::{build_counterexample, verify_counterexample, CounterexampleError, CounterexampleParams};
use orderk::distributions::{
    empirical_density, fit_report, self_consistency_l1, DensityKind, DistError, FitReport, DEFAULT_BINS,
    THRESHOLD_FACTOR,
};
use orderk::events::{enumerate_events, EventsError};
use orderk::exactgeom::{parse_rational, ExactPoint};
use orderk::pointsets::{self, PointSetError};
use orderk::tilings::{
    all_aurenhammer_sites, all_iglesias_sites, brillouin_tessellation, check_orthogonal_dual, delaunay_mosaic,
    iglesias_mosaic, lifted_hull_oracle, viewport, voronoi_tessellation, Tiling, TilingError,
};
use orderk::{EventSet, WindowedSet};

#[derive(Parser, Debug, Serialize)]
#[command(name = "orderk", version, about = "Order-k tilings and their angles")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the normalized configuration as JSON and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Generate a point set and write it as JSON.
    Gen(GenArgs),
    /// Extreme angles over a range of orders, with monotonicity checks.
    Extremes(ExtremesArgs),
    /// All angles of one structure at one order, as CSV.
    Angles(AnglesArgs),
    /// Angle histograms and fits against the closed-form densities.
    Distribution(DistributionArgs),
    /// Explicit tiling as JSON and/or SVG.
    Tiling(TilingArgs),
    /// Build and verify the non-monotone Delaunay example.
    Counterexample(CounterexampleArgs),
    /// Run one verification suite.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GenKind {
    /// The integer lattice.
    Zsquare,
    /// Lattice with a small random shear, no four points cocircular.
    Lattice,
    /// Integer lattice with each point moved by at most tau.
    Perturbed,
    /// n0 random points per unit cell, repeated periodically.
    Periodic,
    /// Poisson process on the unit torus, repeated periodically.
    Poisson,
    /// n uniform points in the unit square, as a finite set.
    Uniform,
    /// Near-equilateral triangle plus its barycenter, as a finite set.
    Barycenter,
    /// Perturbed lattice with two satellites (needs --k).
    Counterexample,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    kind: GenKind,
    #[arg(long, default_value_t = 15)]
    copies: usize,
    #[arg(long, default_value_t = 50)]
    n0: usize,
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value_t = 400.0)]
    rho: f64,
    /// Exact rational "p/q".
    #[arg(long, value_parser = exact_rational, default_value = "1/5")]
    tau: String,
    /// Exact rational "p/q".
    #[arg(long, value_parser = exact_rational, default_value = "1/100")]
    eps: String,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ExtremesArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 30)]
    k_max: usize,
    /// Comma-separated subset of del,vor,bri,igl.
    #[arg(long, value_delimiter = ',', default_value = "del,vor,bri,igl")]
    structures: Vec<Structure>,
    /// Also print changes the theory does not constrain.
    #[arg(long)]
    observe: bool,
    /// CSV destination (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct AnglesArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    structure: Structure,
    #[arg(long)]
    k: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DistributionArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value = "del")]
    structure: Structure,
    /// Comma-separated orders.
    #[arg(long, value_delimiter = ',', default_value = "2,6,15,30")]
    k: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Pool the angles of Brillouin zones 1..=max(k) of the site nearest the
    /// origin instead of structure angles.
    #[arg(long)]
    zone: bool,
    /// Output prefix; writes <prefix>_<structure>_k<k>.csv and <prefix>_fit.json.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct TilingArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    structure: Structure,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_parser = exact_rational, default_value = "1/5")]
    tau: String,
    #[arg(long, value_parser = exact_rational, default_value = "1/100")]
    eps: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON destination (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Suite {
    Monotonicity,
    Duality,
    Oracle,
    Distributions,
    Counterexample,
}

#[derive(Args, Debug, Serialize)]
struct CheckArgs {
    #[arg(long)]
    suite: Suite,
    /// Point set (monotonicity, duality, distributions).
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Order, or largest order of a range.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Number of points for the oracle suite.
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exact_rational(s: &str) -> Result<String, String> {
    if s.contains(['.', 'e', 'E']) {
        return Err(format!("{s:?}: give an exact rational like 1/5, not a decimal"));
    }
    parse_rational(s).map(|r| r.to_string()).map_err(|e| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Fail { code, msg: msg.into() }
    }
    fn config(msg: impl Into<String>) -> Self {
        Fail::new(2, msg)
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::new(1, e.to_string())
    }
}

impl From<EventsError> for Fail {
    fn from(e: EventsError) -> Self {
        let code = match e {
            EventsError::WindowTooSmall { .. } | EventsError::ZoneRegionTooSmall { .. } => 5,
            EventsError::EmptySet => 2,
            _ => 1,
        };
        Fail::new(code, e.to_string())
    }
}

impl From<PointSetError> for Fail {
    fn from(e: PointSetError) -> Self {
        match e {
            PointSetError::GenericityFailure { .. } => Fail::new(3, e.to_string()),
            PointSetError::InvalidParams(_) | PointSetError::Format(_) | PointSetError::Json(_) => Fail::config(e.to_string()),
            PointSetError::Events(ev) => ev.into(),
            _ => Fail::new(1, e.to_string()),
        }
    }
}

impl From<AnglesError> for Fail {
    fn from(e: AnglesError) -> Self {
        let code = match e {
            AnglesError::NonGenericUnsupported { .. } => 6,
            AnglesError::OrderOutOfRange { .. } => 5,
            AnglesError::DepthUnpopulated(_) => 1,
        };
        Fail::new(code, e.to_string())
    }
}

impl From<TilingError> for Fail {
    fn from(e: TilingError) -> Self {
        let code = match e {
            TilingError::NonGenericUnsupported { .. } => 6,
            TilingError::OrderOutOfRange { .. } => 5,
        };
        Fail::new(code, e.to_string())
    }
}

impl From<DistError> for Fail {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Angles(a) => a.into(),
            DistError::NoBins | DistError::Domain(_) => Fail::config(e.to_string()),
            _ => Fail::new(1, e.to_string()),
        }
    }
}

impl From<CounterexampleError> for Fail {
    fn from(e: CounterexampleError) -> Self {
        match e {
            CounterexampleError::InvalidParams(_) => Fail::config(e.to_string()),
            CounterexampleError::PointSet(p) => p.into(),
            CounterexampleError::Events(ev) => ev.into(),
            CounterexampleError::Angles(a) => a.into(),
            CounterexampleError::ConstructionFailure(_) => Fail::new(1, e.to_string()),
        }
    }
}

type Run = Result<(), Fail>;

fn rational(s: &str) -> Result<num_rational::BigRational, Fail> {
    parse_rational(s).map_err(|e| Fail::config(e.to_string()))
}

fn load(path: &Path) -> Result<WindowedSet, Fail> {
    Ok(WindowedSet::load(path)?)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Run {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn events_for(set: &WindowedSet, k_max: usize) -> Result<EventSet, Fail> {
    if k_max == 0 {
        return Err(Fail::config("orders start at 1"));
    }
    Ok(enumerate_events(set, k_max - 1)?)
}

fn cmd_gen(a: &GenArgs) -> Run {
    let tau = rational(&a.tau)?;
    let set = match a.kind {
        GenKind::Zsquare => pointsets::integer_lattice(a.copies)?,
        GenKind::Lattice => pointsets::non_cocircular_lattice(a.copies, a.seed)?,
        GenKind::Perturbed => pointsets::perturbed_lattice(a.copies, &tau, a.seed)?,
        GenKind::Periodic => pointsets::random_periodic(a.n0, a.copies, a.seed)?,
        GenKind::Poisson => pointsets::poisson_torus(a.rho, a.copies, a.seed)?,
        GenKind::Uniform => pointsets::uniform_finite(a.n, a.seed),
        GenKind::Barycenter => pointsets::finite_example_triangle_barycenter(),
        GenKind::Counterexample => {
            let k = a.k.ok_or_else(|| Fail::config("counterexample needs --k"))?;
            let params = CounterexampleParams { k, tau, eps: rational(&a.eps)?, seed: a.seed };
            build_counterexample(&params)?.set
        }
    };
    set.save(&a.output)?;
    let generic = if set.finite || set.len() <= 400 {
        let cap = if set.finite { set.len().saturating_sub(3) } else { 5 };
        match pointsets::genericity_report(&set, cap) {
            Ok(r) => format!("generic to depth {cap}: {}", r.is_generic),
            Err(e) => format!("genericity not checked: {e}"),
        }
    } else {
        "genericity certified by the generator where it promises it".into()
    };
    println!("{}: {} points; {generic}", set.tag, set.len());
    Ok(())
}

fn cmd_extremes(a: &ExtremesArgs) -> Run {
    if a.k_min == 0 || a.k_min > a.k_max {
        return Err(Fail::config(format!("bad order range {}..={}", a.k_min, a.k_max)));
    }
    let set = load(&a.input)?;
    let es = events_for(&set, a.k_max)?;
    let report = monotonicity_report(&es, a.k_min..=a.k_max)?;
    write_or_print(a.output.as_deref(), &report.to_csv(&a.structures))?;
    for c in &report.checks {
        eprintln!("{}: {}{}", c.name, if c.passed { "ok" } else { "VIOLATED" }, if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) });
    }
    if a.observe {
        for o in &report.observations {
            eprintln!("observation: {o}");
        }
    }
    if !report.passed() {
        if set.finite {
            eprintln!("note: finite sets are not coarsely dense; monotonicity is not guaranteed");
        } else {
            return Err(Fail::new(4, "a guaranteed monotonicity inequality failed"));
        }
    }
    Ok(())
}

fn cmd_angles(a: &AnglesArgs) -> Run {
    let set = load(&a.input)?;
    let es = events_for(&set, a.k)?;
    let samples = structure_angles(&es, a.structure, a.k)?;
    write_or_print(a.output.as_deref(), &samples_to_csv(&samples))
}

fn nearest_origin(set: &WindowedSet) -> Option<usize> {
    let o = ExactPoint::origin();
    (0..set.len()).min_by(|&i, &j| set.points[i].dist2(&o).cmp(&set.points[j].dist2(&o)))
}

#[derive(Serialize)]
struct FitRow {
    structure: String,
    k: usize,
    #[serde(flatten)]
    fit: FitReport,
    threshold: f64,
    within: bool,
}

fn cmd_distribution(a: &DistributionArgs) -> Run {
    let set = load(&a.input)?;
    let k_max = a.k.iter().copied().max().ok_or_else(|| Fail::config("no orders given"))?;
    let kind = DensityKind::for_structure(if a.zone { Structure::Bri } else { a.structure });
    let mut rows = Vec::new();
    let mut jobs: Vec<(String, usize, Vec<f64>)> = Vec::new();
    if a.zone {
        let site = nearest_origin(&set).ok_or_else(|| Fail::config("empty point set"))?;
        let es = events_for(&set, k_max)?;
        let mut pooled = Vec::new();
        for k in 1..=k_max {
            pooled.extend(zone_angles(&es, site, k)?);
        }
        jobs.push(("zone".into(), k_max, pooled));
    } else {
        let es = events_for(&set, k_max)?;
        for &k in &a.k {
            let v = structure_angles(&es, a.structure, k)?.into_iter().map(|s| s.value).collect();
            jobs.push((a.structure.to_string(), k, v));
        }
    }
    for (name, k, samples) in jobs {
        let hist = empirical_density(&samples, a.bins)?;
        let path = PathBuf::from(format!("{}_{name}_k{k}.csv", a.output.display()));
        fs::write(&path, hist.to_csv(Some(kind)))?;
        let fit = fit_report(&hist, kind);
        let threshold = THRESHOLD_FACTOR * self_consistency_l1(kind, fit.n as usize, a.bins, 20, 99)?;
        let within = fit.l1 < threshold;
        eprintln!("{name} k={k}: n={} l1={:.4} ks={:.4} threshold={threshold:.4} {}", fit.n, fit.l1, fit.ks, if within { "fits" } else { "outside threshold" });
        rows.push(FitRow { structure: name, k, fit, threshold, within });
    }
    let json = serde_json::to_string_pretty(&rows).expect("fit rows serialize");
    fs::write(format!("{}_fit.json", a.output.display()), json + "\n")?;
    Ok(())
}

fn build_tiling(es: &EventSet, m: Structure, k: usize) -> Result<Tiling, Fail> {
    Ok(match m {
        Structure::Del => delaunay_mosaic(es, k)?,
        Structure::Igl => iglesias_mosaic(es, k)?,
        Structure::Vor => voronoi_tessellation(es, k)?,
        Structure::Bri => brillouin_tessellation(es, k)?,
    })
}

fn cmd_tiling(a: &TilingArgs) -> Run {
    if a.json.is_none() && a.svg.is_none() {
        return Err(Fail::config("give --json and/or --svg"));
    }
    let set = load(&a.input)?;
    let es = events_for(&set, a.k)?;
    let t = build_tiling(&es, a.structure, a.k)?;
    if let Some(p) = &a.json {
        fs::write(p, t.to_json() + "\n")?;
    }
    if let Some(p) = &a.svg {
        let window = (!set.finite).then_some(&set.inner_window);
        fs::write(p, t.to_svg(viewport(&t, window)))?;
    }
    eprintln!("{}_{}: {} vertices, {} edges, {} tiles", a.structure, a.k, t.vertices.len(), t.edges.len(), t.tiles.len());
    Ok(())
}

fn cmd_counterexample(a: &CounterexampleArgs) -> Run {
    let params = CounterexampleParams { k: a.k, tau: rational(&a.tau)?, eps: rational(&a.eps)?, seed: a.seed };
    let cx = build_counterexample(&params)?;
    let report = verify_counterexample(&cx)?;
    write_or_print(a.output.as_deref(), &(report.to_json() + "\n"))?;
    if !report.pass {
        return Err(Fail::new(1, "counterexample did not verify"));
    }
    Ok(())
}

fn check_result(ok: bool, lines: Vec<String>) -> Run {
    for l in &lines {
        println!("{l}");
    }
    if ok { Ok(()) } else { Err(Fail::new(1, "check failed")) }
}

fn cmd_check(a: &CheckArgs) -> Run {
    let input = || a.input.as_deref().ok_or_else(|| Fail::config("this suite needs --input")).and_then(load);
    match a.suite {
        Suite::Monotonicity => {
            let set = input()?;
            let es = events_for(&set, a.k)?;
            if set.finite {
                return Err(Fail::config("monotonicity needs a periodic or windowed set; finite sets are not coarsely dense"));
            }
            let r = monotonicity_report(&es, 2.min(a.k)..=a.k)?;
            let lines = r.checks.iter().map(|c| format!("{}: {}", c.name, if c.passed { "ok" } else { "FAIL" })).collect();
            check_result(r.passed(), lines)
        }
        Suite::Duality => {
            let set = input()?;
            let es = events_for(&set, a.k)?;
            let mut ok = true;
            let mut lines = Vec::new();
            for k in 1..=a.k {
                for (p, d) in [(Structure::Del, Structure::Vor), (Structure::Igl, Structure::Bri)] {
                    let r = check_orthogonal_dual(&build_tiling(&es, p, k)?, &build_tiling(&es, d, k)?);
                    ok &= r.passed();
                    lines.push(format!("{p}_{k} / {d}_{k}: {} edges matched, {} violations", r.matched, r.violations.len()));
                }
            }
            check_result(ok, lines)
        }
        Suite::Oracle => {
            let set = pointsets::uniform_finite(a.n, a.seed);
            let es = events_for(&set, a.k)?;
            let del = delaunay_mosaic(&es, a.k)?.canonical_tiles();
            let del_o = lifted_hull_oracle(&all_aurenhammer_sites(&set.points, a.k), Structure::Del, a.k).canonical_tiles();
            let igl = iglesias_mosaic(&es, a.k)?.canonical_tiles();
            let igl_o = lifted_hull_oracle(&all_iglesias_sites(&set.points, a.k), Structure::Igl, a.k).canonical_tiles();
            check_result(
                del == del_o && igl == igl_o,
                vec![
                    format!("del_{}: {} tiles, oracle {}, equal {}", a.k, del.len(), del_o.len(), del == del_o),
                    format!("igl_{}: {} tiles, oracle {}, equal {}", a.k, igl.len(), igl_o.len(), igl == igl_o),
                ],
            )
        }
        Suite::Distributions => {
            let set = input()?;
            let es = events_for(&set, a.k)?;
            let mut ok = true;
            let mut lines = Vec::new();
            for m in [Structure::Del, Structure::Vor, Structure::Bri] {
                let kind = DensityKind::for_structure(m);
                let samples: Vec<f64> = structure_angles(&es, m, a.k)?.into_iter().map(|s| s.value).collect();
                let fit = fit_report(&empirical_density(&samples, DEFAULT_BINS)?, kind);
                let thr = THRESHOLD_FACTOR * self_consistency_l1(kind, fit.n as usize, DEFAULT_BINS, 20, 99)?;
                ok &= fit.l1 < thr;
                lines.push(format!("{m}_{} vs {kind}: l1 {:.4}, threshold {thr:.4}", a.k, fit.l1));
            }
            check_result(ok, lines)
        }
        Suite::Counterexample => {
            let cx = build_counterexample(&CounterexampleParams::new(a.k, a.seed))?;
            let r = verify_counterexample(&cx)?;
            check_result(
                r.pass,
                vec![format!(
                    "omega(del_{}) = {:.9} > omega(del_{}) = {:.9}; bounds {:.6} / {:.6}",
                    r.k, r.omega_del_k, r.k + 1, r.omega_del_k1, r.bound_14, r.bound_15
                )],
            )
        }
    }
}

fn run(cli: &Cli) -> Run {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Fail::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Fail::new(1, e.to_string()))?;
    }
    if cli.dry_run {
        println!("{}", serde_json::to_string_pretty(cli).expect("config serializes"));
        return Ok(());
    }
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Extremes(a) => cmd_extremes(a),
        Command::Angles(a) => cmd_angles(a),
        Command::Distribution(a) => cmd_distribution(a),
        Command::Tiling(a) => cmd_tiling(a),
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::Check(a) => cmd_check(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
