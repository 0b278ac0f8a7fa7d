//! Command-line interface for the bifurcation-conjugacy toolkit: traces
//! fixed-point branches, classifies bifurcations at the origin, tabulates
//! conjugacies, runs the verification suites, and drives the orbit
//! experiments.
//!
//! Exit codes: `0` on success, `1` when any verification report fails,
//! `2` on input or validation errors (including malformed flags).
//!
//! All emitted numbers use `.` as the decimal separator and 17 significant
//! digits so doubles round-trip exactly; lines end with LF. Given the same
//! arguments (including `--seed`), output is byte-identical across runs.
//! The environment variable `BIFCONJ_THREADS` caps worker parallelism.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bifconj::conjugacy::{
    build_conjugacy_with, eval_conjugacy, pointwise_defect, BuildOptions, SequenceOptions,
};
use bifconj::estimates::run_suite;
use bifconj::experiments::{
    compute_alignment, h_sweep, orbit_closeness_experiment, portrait_orbits, SweepConfig,
};
use bifconj::fixedpoints::{classify_bifurcation_with_tol, trace_branches};
use bifconj::maps::{make_pf_normal_form, make_tc_normal_form, CatalogMap, NormalForm, Tail};
use bifconj::{BifKind, Error, HalfPlane, Region, Result};

/// Parsed invocation: one subcommand plus its validated parameters.
#[derive(Parser)]
#[command(
    name = "bifconj",
    version,
    about = "Bifurcation analysis of one-step maps: branches, classification, \
             conjugacies, verification suites, and orbit experiments",
    after_help = "Exit codes: 0 success, 1 failed verification report, \
                  2 input/validation error.\n\
                  BIFCONJ_THREADS caps worker parallelism."
)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace fixed-point branches of a catalog map over a parameter range
    /// and emit CSV rows `alpha,x,multiplier,stability,branch_id`.
    Branches(BranchesArgs),
    /// Classify the bifurcation of a catalog map at (x, alpha) = (0, 0)
    /// and emit a JSON record {verdict, conditions, discriminant}.
    Classify(ClassifyArgs),
    /// Build the conjugacy between the zero-tail normal form and a tailed
    /// one, then emit CSV rows `x,Jx,id_minus_J,residual` over a grid.
    Conjugacy(ConjugacyArgs),
    /// Run a named verification suite and emit one JSON report per line;
    /// exits 1 if any report fails.
    Verify(VerifyArgs),
    /// Align the fourth-order Runge-Kutta step to the exact model flow,
    /// emit the normalized orbit difference as CSV rows `n,delta`, and
    /// print a JSON summary {sup, rho, alpha_tilde, series_residuals}.
    Section5(Section5Args),
    /// Run a step-size sweep from a key=value config file and write CSV
    /// rows `h,alpha,sup,slope_so_far`.
    Sweep(SweepArgs),
    /// Iterate planar model orbits under the exact flow and emit CSV rows
    /// `point_id,n,x,y`.
    Portrait(PortraitArgs),
}

#[derive(Args)]
struct BranchesArgs {
    /// Catalog map name (example21, example25, example26, example27,
    /// wiggins-counterexample, tc-phi, pf-phi, section5-phi, section5-rk4).
    #[arg(long)]
    map: String,
    /// Order parameter for maps that take one (1..=8).
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Step size.
    #[arg(long)]
    h: f64,
    /// Lower end of the parameter range.
    #[arg(long, allow_negative_numbers = true)]
    alpha_min: f64,
    /// Upper end of the parameter range.
    #[arg(long, allow_negative_numbers = true)]
    alpha_max: f64,
    /// Number of parameter samples.
    #[arg(long, default_value_t = 201)]
    n_alpha: usize,
    /// Lower end of the state window scanned for fixed points.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    x_min: f64,
    /// Upper end of the state window scanned for fixed points.
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    x_max: f64,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Catalog map name (see `branches --help` for the list).
    #[arg(long)]
    map: String,
    /// Order parameter for maps that take one (1..=8).
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Step size at which the map is classified.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Zero-test tolerance for the derivative conditions.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConjugacyArgs {
    /// Bifurcation kind: tc or pf.
    #[arg(long)]
    kind: String,
    /// Step size.
    #[arg(long)]
    h: f64,
    /// Bifurcation parameter.
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Closeness order; also the default hp_power tail order.
    #[arg(long)]
    p: u32,
    /// Tail of the target normal form: zero, hp_power:p, or sin
    /// (plain `hp_power` uses the order from --p). The source map always
    /// carries the zero tail.
    #[arg(long, default_value = "hp_power")]
    tail: String,
    /// Region of the construction: inner or outer.
    #[arg(long)]
    region: String,
    /// Half-plane override: lower or upper (chosen from kind, region, and
    /// the sign of alpha when absent).
    #[arg(long)]
    half_plane: Option<String>,
    /// Number of grid points.
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Build even when (h, alpha) leaves the normal-form validity box;
    /// the dynamical preconditions are still enforced numerically.
    #[arg(long)]
    allow_outside_box: bool,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name: tc-envelopes, pf-envelopes, tc-bounds, pf-bounds,
    /// optimality, huls, zn-decay, alpha-monotonicity, rk-conditions,
    /// or all.
    #[arg(long)]
    suite: String,
    /// Sampling seed; identical seeds give byte-identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Section5Args {
    /// Step size.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Bifurcation parameter (|alpha * h| must stay below 1/2).
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    alpha: f64,
    /// Initial state of the compared orbits (must be <= 0).
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    x0: f64,
    /// Number of orbit steps.
    #[arg(long = "N", default_value_t = 3000)]
    n_steps: usize,
    /// Offset added to the aligned parameter of the discrete orbit;
    /// 0 keeps the alignment exact.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    perturb: f64,
    /// CSV output file for the `n,delta` rows.
    #[arg(long, short, default_value = "section5.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Config file in flat key=value form; keys: kind, p, h (comma list),
    /// alpha (comma list), region, tail, optional half_plane and grid.
    #[arg(long)]
    config: PathBuf,
    /// CSV output file.
    #[arg(long, short, default_value = "sweep.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct PortraitArgs {
    /// Step size.
    #[arg(long)]
    h: f64,
    /// Bifurcation parameter.
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Number of steps per orbit.
    #[arg(long, default_value_t = 600)]
    n_steps: usize,
    /// Initial point as `x,y`; repeat the flag for several orbits.
    #[arg(long = "point", required = true, allow_hyphen_values = true)]
    points: Vec<String>,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Outcome of a dispatched subcommand that ran to completion.
enum RunStatus {
    Clean,
    ReportFailures(usize),
}

fn main() -> ExitCode {
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    // Malformed flags exit 2 through the parser itself.
    let config = RunConfig::parse();
    match dispatch(&config.command) {
        Ok(RunStatus::Clean) => ExitCode::SUCCESS,
        Ok(RunStatus::ReportFailures(n)) => {
            eprintln!("{n} verification report(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Applies the `BIFCONJ_THREADS` cap to the global worker pool.
fn init_threads() -> std::result::Result<(), String> {
    match std::env::var("BIFCONJ_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("BIFCONJ_THREADS must be a positive integer, got '{v}'"))?;
            if n == 0 {
                return Err("BIFCONJ_THREADS must be at least 1".to_string());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(e.to_string()),
    }
}

fn dispatch(command: &Command) -> Result<RunStatus> {
    match command {
        Command::Branches(args) => branches(args),
        Command::Classify(args) => classify(args),
        Command::Conjugacy(args) => conjugacy(args),
        Command::Verify(args) => verify(args),
        Command::Section5(args) => section5(args),
        Command::Sweep(args) => sweep(args),
        Command::Portrait(args) => portrait(args),
    }
}

/// One float, 17 significant digits, `.` decimal — doubles round-trip
/// exactly through this form.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `content` to `path`, or to stdout when no path is given.
fn emit(path: &Option<PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| {
            Error::InvalidInput(format!("cannot write {}: {e}", p.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_kind(s: &str) -> Result<BifKind> {
    match s {
        "tc" => Ok(BifKind::Tc),
        "pf" => Ok(BifKind::Pf),
        other => Err(Error::InvalidInput(format!(
            "unknown kind '{other}' (expected tc or pf)"
        ))),
    }
}

fn parse_region(s: &str) -> Result<Region> {
    match s {
        "inner" => Ok(Region::Inner),
        "outer" => Ok(Region::Outer),
        other => Err(Error::InvalidInput(format!(
            "unknown region '{other}' (expected inner or outer)"
        ))),
    }
}

fn parse_half_plane(s: &str) -> Result<HalfPlane> {
    match s {
        "lower" => Ok(HalfPlane::Lower),
        "upper" => Ok(HalfPlane::Upper),
        other => Err(Error::InvalidInput(format!(
            "unknown half-plane '{other}' (expected lower or upper)"
        ))),
    }
}

fn branches(args: &BranchesArgs) -> Result<RunStatus> {
    let map = CatalogMap::from_name(&args.map, args.p)?;
    let diagram = trace_branches(
        &map,
        args.h,
        (args.alpha_min, args.alpha_max),
        args.n_alpha,
        (args.x_min, args.x_max),
    )?;
    let mut csv = String::from("alpha,x,multiplier,stability,branch_id\n");
    for branch in &diagram.branches {
        for pt in &branch.points {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt_f(pt.alpha),
                fmt_f(pt.x),
                fmt_f(pt.multiplier),
                pt.stability,
                branch.id
            );
        }
    }
    emit(&args.output, &csv)?;
    Ok(RunStatus::Clean)
}

fn classify(args: &ClassifyArgs) -> Result<RunStatus> {
    let map = CatalogMap::from_name(&args.map, args.p)?;
    let class = classify_bifurcation_with_tol(&map, args.h, args.tol)?;
    let json = serde_json::to_string(&class).map_err(|e| {
        Error::InvalidInput(format!("cannot serialize classification: {e}"))
    })?;
    emit(&args.output, &format!("{json}\n"))?;
    Ok(RunStatus::Clean)
}

/// Builds the two conjugated normal forms: the target carries the requested
/// tail, the source the zero tail; both use K = 1 and the kind's canonical
/// leading sign.
fn conjugacy_forms(kind: BifKind, tail: Tail) -> Result<(NormalForm, NormalForm)> {
    let make = |tail: Tail| match kind {
        BifKind::Tc => make_tc_normal_form(tail, 1.0, 1.0),
        BifKind::Pf => make_pf_normal_form(tail, 1.0, -1.0),
    };
    Ok((make(tail)?, make(Tail::Zero)?))
}

/// The half-plane on which the requested region exists: the transcritical
/// inner region lives on the side carrying the nonzero branch, which flips
/// with the sign of alpha; everything else defaults to the lower side.
fn default_half_plane(kind: BifKind, region: Region, alpha: f64) -> HalfPlane {
    match (kind, region) {
        (BifKind::Tc, Region::Inner) if alpha < 0.0 => HalfPlane::Upper,
        _ => HalfPlane::Lower,
    }
}

fn conjugacy(args: &ConjugacyArgs) -> Result<RunStatus> {
    let kind = parse_kind(&args.kind)?;
    let region = parse_region(&args.region)?;
    if !(1..=8).contains(&args.p) {
        return Err(Error::InvalidInput(format!(
            "order parameter p must lie in 1..=8, got {}",
            args.p
        )));
    }
    let tail = if args.tail == "hp_power" {
        Tail::HpPower(args.p)
    } else {
        Tail::from_name(&args.tail)?
    };
    if args.grid < 2 {
        return Err(Error::InvalidInput(format!(
            "grid must be at least 2, got {}",
            args.grid
        )));
    }
    let half = match &args.half_plane {
        Some(s) => parse_half_plane(s)?,
        None => default_half_plane(kind, region, args.alpha),
    };
    let (target, source) = conjugacy_forms(kind, tail)?;
    let options = if args.allow_outside_box {
        BuildOptions {
            z0: None,
            seq: SequenceOptions {
                allow_outside_box: true,
                ..SequenceOptions::default()
            },
        }
    } else {
        BuildOptions::default()
    };
    let j = build_conjugacy_with(&target, &source, args.h, args.alpha, region, half, &options)?;
    let (lo, hi) = j.interval();
    let mut csv = String::from("x,Jx,id_minus_J,residual\n");
    for i in 0..args.grid {
        let t = i as f64 / (args.grid - 1) as f64;
        let x = lo + t * (hi - lo);
        let jx = eval_conjugacy(&j, x)?;
        let defect = pointwise_defect(&j, x)?;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_f(x),
            fmt_f(jx),
            fmt_f(x - jx),
            fmt_f(defect)
        );
    }
    emit(&args.output, &csv)?;
    Ok(RunStatus::Clean)
}

fn verify(args: &VerifyArgs) -> Result<RunStatus> {
    let reports = run_suite(&args.suite, args.seed)?;
    let mut lines = String::new();
    let mut failures = 0usize;
    for report in &reports {
        if !report.passed {
            failures += 1;
        }
        let json = serde_json::to_string(report).map_err(|e| {
            Error::InvalidInput(format!("cannot serialize report: {e}"))
        })?;
        lines.push_str(&json);
        lines.push('\n');
    }
    emit(&args.output, &lines)?;
    if failures > 0 {
        Ok(RunStatus::ReportFailures(failures))
    } else {
        Ok(RunStatus::Clean)
    }
}

fn section5(args: &Section5Args) -> Result<RunStatus> {
    let alignment = compute_alignment(args.h, args.alpha)?;
    let diff =
        orbit_closeness_experiment(args.h, args.x0, args.alpha, args.n_steps, args.perturb)?;
    let mut csv = String::from("n,delta\n");
    for (n, delta) in diff.values.iter().enumerate() {
        let _ = writeln!(csv, "{n},{}", fmt_f(*delta));
    }
    emit(&Some(args.output.clone()), &csv)?;
    let summary = serde_json::json!({
        "sup": diff.sup,
        "rho": alignment.rho,
        "alpha_tilde": alignment.alpha_tilde,
        "series_residuals": alignment.series_check,
    });
    println!("{summary}");
    Ok(RunStatus::Clean)
}

fn sweep(args: &SweepArgs) -> Result<RunStatus> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        Error::InvalidInput(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let config = SweepConfig::parse(&text)?;
    let table = h_sweep(&config)?;
    for (h, alpha, message) in &table.failures {
        eprintln!("cell (h = {h:e}, alpha = {alpha:e}) failed: {message}");
    }
    if table.degenerate {
        eprintln!("sweep is degenerate (identical tails): all sups at rounding level, no fit");
    }
    let mut csv = String::from("h,alpha,sup,slope_so_far\n");
    for row in &table.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_f(row.h),
            fmt_f(row.alpha),
            fmt_f(row.sup),
            fmt_f(row.slope_so_far)
        );
    }
    emit(&Some(args.output.clone()), &csv)?;
    Ok(RunStatus::Clean)
}

fn portrait(args: &PortraitArgs) -> Result<RunStatus> {
    let mut points = Vec::with_capacity(args.points.len());
    for raw in &args.points {
        let (xs, ys) = raw.split_once(',').ok_or_else(|| {
            Error::InvalidInput(format!("point '{raw}' is not of the form x,y"))
        })?;
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("invalid {what} coordinate '{s}' in '{raw}'"))
            })
        };
        points.push((parse(xs, "x")?, parse(ys, "y")?));
    }
    let rows = portrait_orbits(args.h, args.alpha, &points, args.n_steps)?;
    let mut csv = String::from("point_id,n,x,y\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.point_id,
            row.n,
            fmt_f(row.x),
            fmt_f(row.y)
        );
    }
    emit(&args.output, &csv)?;
    Ok(RunStatus::Clean)
}
