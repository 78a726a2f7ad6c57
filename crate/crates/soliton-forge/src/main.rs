//! soliton-forge: construct expanding-soliton profiles from the degenerate
//! boundary, sweep the two-parameter families, invert the asymptotic-cone
//! map, and run the degree certificates — with reproducible, versioned output.

mod output;
mod validate;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use soliton_core::cone_map::{converge_with_cone, decay_constant, integrate_with_cone, ConeSlopes};
use soliton_core::degree::{degree_s1r3, degree_s2r2, invert_F, SearchBox};
use soliton_core::geometry::{bianchi_residual, curvature, trace_residual};
use soliton_core::integrator::{integrate, IntegrationParams, SolitonSolution};
use soliton_core::profile_ode::{rhs, InitialConditions, Topology};
use soliton_core::SolitonError;

use output::{Summary, TrajectoryRow};

#[derive(Parser)]
#[command(
    name = "soliton-forge",
    version,
    about = "Cohomogeneity-one expanding soliton construction and certification",
    after_help = "Exit codes: 0 success, 2 bad configuration, 3 numerical failure, 4 validation failure.\n\
                  SOLITON_FORGE_THREADS caps worker threads (0 or unset = auto)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one profile; emit the trajectory table and a summary record
    Solve(SolveArgs),
    /// Evaluate cone data over an (orbit size × f0) grid, one summary row each
    Sweep(SweepArgs),
    /// Multistart Newton inversion of the slope map for a target (a'∞, b'∞)
    Invert(InvertArgs),
    /// Degree certificates: signed count / winding (s1r3), winding + non-surjectivity (s2r2)
    Degree(DegreeArgs),
    /// Run every documented invariant on a canned grid; nonzero exit on failure
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    S1r3,
    S2r2,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::S1r3 => Topology::S1xR3,
            TopologyArg::S2r2 => Topology::S2xR2,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    /// s1r3 (circle fiber collapsing) or s2r2 (sphere fiber staying)
    #[arg(long)]
    topology: Option<TopologyArg>,
    /// Circle length at the axis (s1r3 only)
    #[arg(long)]
    a0: Option<f64>,
    /// Sphere radius at the axis (s2r2 only)
    #[arg(long)]
    b0: Option<f64>,
    /// Potential concavity at the axis, f''(0) ≤ 0
    #[arg(long, allow_negative_numbers = true)]
    f0: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Integrate exactly this far (one attempt).  Without it the range grows
    /// until the cone estimators converge.
    #[arg(long)]
    rmax: Option<f64>,
    /// Confirm a run of the f0 = 0 Einstein profile (no cone summary)
    #[arg(long)]
    einstein: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    /// Flat key=value file supplying defaults; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    topology: Option<TopologyArg>,
    /// Orbit-size grid, min:max:count or min:max:count:log
    #[arg(long)]
    orbit_grid: Option<String>,
    /// f0 grid (negative values), min:max:count or min:max:count:log
    #[arg(long, allow_hyphen_values = true)]
    f0_grid: Option<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct InvertArgs {
    #[arg(long)]
    topology: Option<TopologyArg>,
    /// Target circle slope a'∞
    #[arg(long)]
    target_a: Option<f64>,
    /// Target sphere slope b'∞
    #[arg(long)]
    target_b: Option<f64>,
    /// Search box orbit_lo:orbit_hi:mf0_lo:mf0_hi (mf0 = −f0 > 0)
    #[arg(long = "box")]
    search_box: Option<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DegreeArgs {
    #[arg(long)]
    topology: Option<TopologyArg>,
    /// Target sphere slope for the s1r3 signed-count sweep (default 1)
    #[arg(long)]
    target_b: Option<f64>,
    /// s1r3: the mf0 part is the sweep range (default 1:1:1e-3:1e2);
    /// s2r2: full certificate box (default 0.2:5:0.1:20)
    #[arg(long = "box")]
    search_box: Option<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
}

// --- error / exit mapping ---------------------------------------------------

enum CliError {
    Config(String),
    Numerical(SolitonError),
    Validation(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Validation(n) => write!(f, "validation: {n} check(s) failed"),
        }
    }
}

impl From<SolitonError> for CliError {
    fn from(e: SolitonError) -> Self {
        match e {
            // bad parameters are a configuration problem, not a solver one
            SolitonError::InvalidParameters(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

// --- config file ------------------------------------------------------------

const KNOWN_KEYS: [&str; 15] = [
    "topology", "a0", "b0", "f0", "rtol", "atol", "rmax", "einstein", "out", "format",
    "orbit-grid", "f0-grid", "target-a", "target-b", "box",
];

struct FileConfig(BTreeMap<String, String>);

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(CliError::Config(format!(
                        "config line {}: expected key=value, got {line:?}",
                        i + 1
                    )));
                };
                let key = k.trim().to_string();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(CliError::Config(format!(
                        "config line {}: unknown key {key:?}",
                        i + 1
                    )));
                }
                map.insert(key, v.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str())
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("config key {key}: not a number: {v:?}"))
                })
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(v) => Err(CliError::Config(format!(
                "config key {key}: expected true/false, got {v:?}"
            ))),
        }
    }

    fn topology(&self) -> Result<Option<Topology>, CliError> {
        match self.raw("topology") {
            None => Ok(None),
            Some("s1r3") => Ok(Some(Topology::S1xR3)),
            Some("s2r2") => Ok(Some(Topology::S2xR2)),
            Some(v) => Err(CliError::Config(format!(
                "config key topology: expected s1r3 or s2r2, got {v:?}"
            ))),
        }
    }

    fn format(&self) -> Result<Option<FormatArg>, CliError> {
        match self.raw("format") {
            None => Ok(None),
            Some("csv") => Ok(Some(FormatArg::Csv)),
            Some("json") => Ok(Some(FormatArg::Json)),
            Some(v) => Err(CliError::Config(format!(
                "config key format: expected csv or json, got {v:?}"
            ))),
        }
    }
}

// --- shared plumbing --------------------------------------------------------

fn require<T>(v: Option<T>, what: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("{what} is required")))
}

fn build_params(
    rtol: Option<f64>,
    atol: Option<f64>,
    rmax: Option<f64>,
) -> IntegrationParams {
    let mut p = IntegrationParams::default();
    if let Some(r) = rtol {
        p.rel_tol = r;
        p.abs_tol = p.abs_tol.min(r);
    }
    if let Some(a) = atol {
        p.abs_tol = a;
    }
    p.r_max = rmax;
    p
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let err = |m: String| CliError::Config(format!("grid {spec:?}: {m}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 && parts.len() != 4 {
        return Err(err("expected min:max:count or min:max:count:log".into()));
    }
    let min: f64 = parts[0].parse().map_err(|_| err(format!("bad min {:?}", parts[0])))?;
    let max: f64 = parts[1].parse().map_err(|_| err(format!("bad max {:?}", parts[1])))?;
    let count: usize =
        parts[2].parse().map_err(|_| err(format!("bad count {:?}", parts[2])))?;
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(v) => return Err(err(format!("trailing token must be \"log\", got {v:?}"))),
    };
    if count == 0 {
        return Err(err("count must be >= 1".into()));
    }
    if !(min < max) {
        return Err(err("min must be < max".into()));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    if log {
        if min * max <= 0.0 {
            return Err(err("log spacing needs both endpoints on one side of 0".into()));
        }
        let sgn = min.signum();
        let (lo, hi) = (min.abs(), max.abs());
        Ok((0..count)
            .map(|i| sgn * lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
            .collect())
    } else {
        Ok((0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect())
    }
}

fn parse_box(spec: &str) -> Result<SearchBox, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::Config(format!(
            "box {spec:?}: expected orbit_lo:orbit_hi:mf0_lo:mf0_hi"
        )));
    }
    let mut v = [0.0f64; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| {
            CliError::Config(format!("box {spec:?}: bad number {part:?}"))
        })?;
    }
    Ok(SearchBox::new(v[0], v[1], v[2], v[3])?)
}

fn orbit_for(
    topology: Topology,
    a0: Option<f64>,
    b0: Option<f64>,
    cfg: &FileConfig,
) -> Result<f64, CliError> {
    match topology {
        Topology::S1xR3 => {
            if b0.is_some() {
                return Err(CliError::Config(
                    "s1r3 takes --a0 (axis circle length); --b0 is for s2r2".into(),
                ));
            }
            require(a0.or(cfg.f64("a0")?), "--a0")
        }
        Topology::S2xR2 => {
            if a0.is_some() {
                return Err(CliError::Config(
                    "s2r2 takes --b0 (axis sphere radius); --a0 is for s1r3".into(),
                ));
            }
            require(b0.or(cfg.f64("b0")?), "--b0")
        }
    }
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        // a closed pipe (`... | head`) is a normal way to stop reading
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Config(format!("cannot write stdout: {e}"))),
    }
}

fn emit(out: Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(&path, text).map_err(|e| {
            CliError::Config(format!("cannot write {}: {e}", path.display()))
        }),
        None => write_stdout(text),
    }
}

fn run_profile(ic: &InitialConditions, params: &IntegrationParams) -> Result<SolitonSolution, CliError> {
    let sol = if ic.f0 == 0.0 {
        integrate(ic, params)?
    } else if params.r_max.is_some() {
        integrate_with_cone(ic, params)?
    } else {
        converge_with_cone(ic, params)?
    };
    Ok(sol)
}

fn summarize(sol: &SolitonSolution) -> Summary {
    let decay = if sol.ic.f0 < 0.0 { decay_constant(sol).ok() } else { None };
    Summary {
        topology: sol.ic.topology,
        orbit_size: sol.ic.orbit_size,
        f0: sol.ic.f0,
        k: sol.k,
        a_slope: sol.slopes.as_ref().map(|s| s.a_slope),
        b_slope: sol.slopes.as_ref().map(|s| s.b_slope),
        err_estimate: sol.slopes.as_ref().map(|s| s.err_estimate),
        r0: sol.r0,
        decay_constant: decay,
        r_used: sol.last().r,
        max_trace_residual: sol.diagnostics.max_trace_residual,
        max_bianchi_residual: sol.diagnostics.max_bianchi_residual,
    }
}

fn trajectory_rows(sol: &SolitonSolution) -> Result<Vec<TrajectoryRow>, CliError> {
    sol.samples
        .iter()
        .map(|s| {
            let second = rhs(s)?;
            let frame = curvature(s, &second)?;
            Ok(TrajectoryRow {
                r: s.r,
                a: s.a,
                da: s.da,
                b: s.b,
                db: s.db,
                f: s.f,
                df: s.df,
                scalar: frame.scalar,
                trace_residual: trace_residual(s, &frame),
                bianchi_residual: bianchi_residual(s, &frame, &sol.ic),
            })
        })
        .collect()
}

// --- commands ---------------------------------------------------------------

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.config.as_ref())?;
    let topology: Topology =
        require(args.topology.map(Topology::from).or(cfg.topology()?), "--topology")?;
    let orbit = orbit_for(topology, args.a0, args.b0, &cfg)?;
    let f0 = require(args.f0.or(cfg.f64("f0")?), "--f0")?;
    let einstein = args.einstein || cfg.flag("einstein")?;
    if f0 == 0.0 && !einstein {
        return Err(CliError::Config(
            "f0 = 0 is the Einstein profile, which never closes up to a soliton; \
             pass --einstein to integrate it anyway"
                .into(),
        ));
    }
    if f0 != 0.0 && einstein {
        return Err(CliError::Config("--einstein requires f0 = 0".into()));
    }
    let params = build_params(
        args.rtol.or(cfg.f64("rtol")?),
        args.atol.or(cfg.f64("atol")?),
        args.rmax.or(cfg.f64("rmax")?),
    );
    let ic = InitialConditions::new(topology, orbit, f0)?;
    let sol = run_profile(&ic, &params)?;
    let summary = summarize(&sol);
    let rows = trajectory_rows(&sol)?;
    let text = match args.format.or(cfg.format()?).unwrap_or(FormatArg::Csv) {
        FormatArg::Csv => output::csv_solve(&summary, &rows),
        FormatArg::Json => output::json_solve(&summary, &rows),
    };
    emit(args.out.or_else(|| cfg.raw("out").map(PathBuf::from)), &text)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.config.as_ref())?;
    let topology: Topology =
        require(args.topology.map(Topology::from).or(cfg.topology()?), "--topology")?;
    let orbits = parse_grid(&require(
        args.orbit_grid.or_else(|| cfg.raw("orbit-grid").map(String::from)),
        "--orbit-grid",
    )?)?;
    let f0s = parse_grid(&require(
        args.f0_grid.or_else(|| cfg.raw("f0-grid").map(String::from)),
        "--f0-grid",
    )?)?;
    if orbits.iter().any(|&o| o <= 0.0) {
        return Err(CliError::Config("orbit sizes must be positive".into()));
    }
    if f0s.iter().any(|&f| f >= 0.0) {
        return Err(CliError::Config(
            "sweep covers soliton families only: every f0 must be negative".into(),
        ));
    }
    let params = build_params(
        args.rtol.or(cfg.f64("rtol")?),
        args.atol.or(cfg.f64("atol")?),
        args.rmax.or(cfg.f64("rmax")?),
    );
    let mut ics = Vec::new();
    for &o in &orbits {
        for &f in &f0s {
            ics.push(InitialConditions::new(topology, o, f)?);
        }
    }
    let rows: Result<Vec<Summary>, CliError> = ics
        .par_iter()
        .map(|ic| Ok(summarize(&run_profile(ic, &params)?)))
        .collect();
    let rows = rows?;
    let text = match args.format.or(cfg.format()?).unwrap_or(FormatArg::Csv) {
        FormatArg::Csv => output::csv_sweep(&rows),
        FormatArg::Json => output::json_sweep(&rows),
    };
    emit(args.out.or_else(|| cfg.raw("out").map(PathBuf::from)), &text)
}

fn cmd_invert(args: InvertArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.config.as_ref())?;
    let topology: Topology =
        require(args.topology.map(Topology::from).or(cfg.topology()?), "--topology")?;
    let target_a = require(args.target_a.or(cfg.f64("target-a")?), "--target-a")?;
    let target_b = require(args.target_b.or(cfg.f64("target-b")?), "--target-b")?;
    let search_box = parse_box(&require(
        args.search_box.or_else(|| cfg.raw("box").map(String::from)),
        "--box",
    )?)?;
    let params = build_params(args.rtol.or(cfg.f64("rtol")?), args.atol.or(cfg.f64("atol")?), None);
    let target = ConeSlopes { a_slope: target_a, b_slope: target_b, err_estimate: 0.0 };
    // an empty preimage set is an answer (degree-zero evidence), not a failure
    let preimages = match invert_F(&target, topology, &search_box, &params) {
        Ok(p) => p,
        Err(SolitonError::NoneFound) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let text = match args.format.or(cfg.format()?).unwrap_or(FormatArg::Json) {
        FormatArg::Csv => output::csv_invert((target_a, target_b), &preimages),
        FormatArg::Json => output::json_invert((target_a, target_b), &preimages),
    };
    emit(args.out.or_else(|| cfg.raw("out").map(PathBuf::from)), &text)
}

fn cmd_degree(args: DegreeArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.config.as_ref())?;
    let topology: Topology =
        require(args.topology.map(Topology::from).or(cfg.topology()?), "--topology")?;
    let params = build_params(args.rtol.or(cfg.f64("rtol")?), args.atol.or(cfg.f64("atol")?), None);
    let box_spec = args.search_box.or_else(|| cfg.raw("box").map(String::from));
    let reports = match topology {
        Topology::S1xR3 => {
            let bx = parse_box(box_spec.as_deref().unwrap_or("1:1:1e-3:1e2"))?;
            let target = args.target_b.or(cfg.f64("target-b")?).unwrap_or(1.0);
            vec![degree_s1r3(target, (bx.mf0_lo, bx.mf0_hi), &params)?]
        }
        Topology::S2xR2 => {
            let bx = parse_box(box_spec.as_deref().unwrap_or("0.2:5:0.1:20"))?;
            degree_s2r2(&bx, &params)?
        }
    };
    let text = match args.format.or(cfg.format()?).unwrap_or(FormatArg::Json) {
        FormatArg::Csv => output::csv_degree(&reports),
        FormatArg::Json => output::json_degree(&reports),
    };
    emit(args.out.or_else(|| cfg.raw("out").map(PathBuf::from)), &text)
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let rows = validate::run_all();
    let mut table = String::new();
    for r in &rows {
        table.push_str(&format!(
            "{} {} — {}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.metric
        ));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    table.push_str(&format!(
        "validate: {}/{} checks passed\n",
        rows.len() - failed,
        rows.len()
    ));
    write_stdout(&table)?;
    if let Some(out) = args.out {
        let text = match args.format.unwrap_or(FormatArg::Csv) {
            FormatArg::Csv => output::csv_validate(&rows),
            FormatArg::Json => output::json_validate(&rows),
        };
        emit(Some(out), &text)?;
    }
    if failed > 0 {
        return Err(CliError::Validation(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("SOLITON_FORGE_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(0) => {} // auto
            Ok(n) => {
                // best effort — a pool may already exist under test harnesses
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Err(_) => {
                eprintln!(
                    "soliton-forge: configuration: SOLITON_FORGE_THREADS must be a \
                     nonnegative integer, got {v:?}"
                );
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Invert(a) => cmd_invert(a),
        Command::Degree(a) => cmd_degree(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("soliton-forge: {e}");
            ExitCode::from(e.code())
        }
    }
}
